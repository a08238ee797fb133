"""Text file formats for forms, varieties, maps and certificates.

Tensor file::

    # comments start with '#'
    p k n_1 ... n_k axes:1,3
    <coefficients, row-major over the listed axes, whitespace separated>

The writer puts one line per run of the last listed axis. Axes are 1-based.

Variety file: a header ``variety p k n_1 ... n_k codim:d`` followed by d
tensor blocks, each with its own tensor header.

Map file: a header ``map p k n_1 ... n_k h:<h>`` followed by one line per
point, ``x_1 ; x_2 ; ... | v_1 ... v_h``, coordinates of each x_i separated
by spaces. The writer emits points in canonical order.

Certificates are JSON with sorted keys and two-space indentation.

Writers are canonical, so serialize -> parse -> serialize is byte-identical.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import ParseError
from .field import check_prime
from .forms import MultilinearForm, Point, SpaceSignature
from .variety import Variety


class _Lines:
    """Non-comment lines with their 1-based line numbers."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.items: list[tuple[int, str]] = []
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].rstrip()
            if line.strip():
                self.items.append((n, line))
        self.pos = 0

    def next(self, what: str) -> tuple[int, str]:
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else 1
            raise ParseError(f"unexpected end of input, expected {what}", last + 1, 1, self.source)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def done(self) -> bool:
        return self.pos >= len(self.items)


def _int(tok: str, line: int, col: int, source: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", line, col, source) from None


def _signature_fields(fields: list[str], line: int, source: str,
                      offset: int = 0) -> tuple[SpaceSignature, int]:
    """Parse 'p k n_1 .. n_k' from the front of ``fields``; return signature and fields used."""
    if len(fields) < offset + 2:
        raise ParseError("header needs p and k", line, 1, source)
    p = _int(fields[offset], line, 1, source, "p")
    k = _int(fields[offset + 1], line, 1, source, "k")
    try:
        check_prime(p)
    except Exception as exc:
        raise ParseError(str(exc), line, 1, source) from None
    if k < 1 or len(fields) < offset + 2 + k:
        raise ParseError(f"header declares k = {k} but lists fewer dimensions", line, 1, source)
    dims = tuple(_int(t, line, 1, source, "dimension") for t in fields[offset + 2: offset + 2 + k])
    if any(n < 1 for n in dims):
        raise ParseError("dimensions must be positive", line, 1, source)
    return SpaceSignature(p, dims), offset + 2 + k


def _tagged(field: str, tag: str, line: int, source: str) -> str:
    if not field.startswith(tag + ":"):
        raise ParseError(f"expected '{tag}:...', got {field!r}", line, 1, source)
    return field[len(tag) + 1:]


def _parse_tensor_block(lines: _Lines, sig: SpaceSignature | None = None) -> MultilinearForm:
    src = lines.source
    n, header = lines.next("tensor header")
    fields = header.split()
    hsig, used = _signature_fields(fields, n, src)
    if sig is not None and hsig != sig:
        raise ParseError("tensor signature differs from the enclosing header", n, 1, src)
    if len(fields) != used + 1:
        raise ParseError("tensor header must end with axes:<list>", n, 1, src)
    axes_txt = _tagged(fields[used], "axes", n, src)
    try:
        axes = tuple(int(a) - 1 for a in axes_txt.split(","))
    except ValueError:
        raise ParseError(f"bad axes list {axes_txt!r}", n, 1, src) from None
    if not axes or list(axes) != sorted(set(axes)) or axes[0] < 0 or axes[-1] >= hsig.k:
        raise ParseError("axes must be distinct, increasing and within 1..k", n, 1, src)
    shape = tuple(hsig.dims[a] for a in axes)
    need = int(np.prod(shape))
    vals = []
    while len(vals) < need:
        ln, line = lines.next(f"{need - len(vals)} more coefficients")
        col = 0
        for tok in line.split():
            col = line.index(tok, col)
            if len(vals) >= need:
                raise ParseError("too many coefficients", ln, col + 1, src)
            vals.append(_int(tok, ln, col + 1, src, "coefficient"))
            col += len(tok)
    return MultilinearForm(hsig, axes, np.array(vals, dtype=np.int64).reshape(shape))


def parse_tensor(text: str, source: str = "<tensor>") -> MultilinearForm:
    lines = _Lines(text, source)
    form = _parse_tensor_block(lines)
    if not lines.done():
        n, _ = lines.items[lines.pos]
        raise ParseError("trailing content after tensor", n, 1, source)
    return form


def _sig_text(sig: SpaceSignature) -> str:
    return f"{sig.p} {sig.k} " + " ".join(str(n) for n in sig.dims)


def format_tensor(form: MultilinearForm) -> str:
    out = [f"{_sig_text(form.sig)} axes:" + ",".join(str(a + 1) for a in form.axes)]
    flat = form.coeffs.reshape(-1, form.coeffs.shape[-1])
    out += [" ".join(str(int(c)) for c in row) for row in flat]
    return "\n".join(out) + "\n"


def parse_variety(text: str, source: str = "<variety>") -> Variety:
    lines = _Lines(text, source)
    n, header = lines.next("variety header")
    fields = header.split()
    if not fields or fields[0] != "variety":
        raise ParseError("variety file must start with 'variety'", n, 1, source)
    sig, used = _signature_fields(fields, n, source, offset=1)
    if len(fields) != used + 1:
        raise ParseError("variety header must end with codim:<d>", n, 1, source)
    d = _int(_tagged(fields[used], "codim", n, source), n, 1, source, "codimension")
    forms = tuple(_parse_tensor_block(lines, sig) for _ in range(d))
    if not lines.done():
        ln, _ = lines.items[lines.pos]
        raise ParseError("more tensor blocks than the declared codimension", ln, 1, source)
    return Variety(sig, forms)


def format_variety(v: Variety) -> str:
    out = f"variety {_sig_text(v.sig)} codim:{v.codimension}\n"
    return out + "".join(format_tensor(f) for f in v.constraints)


def parse_vector(text: str, n: int | None = None, p: int | None = None, what: str = "vector",
                 source: str = "<argument>", line: int = 1) -> tuple[int, ...]:
    toks = text.replace(",", " ").split()
    vals = tuple(_int(t, line, 1, source, what) for t in toks)
    if n is not None and len(vals) != n:
        raise ParseError(f"{what} needs {n} entries, got {len(vals)}", line, 1, source)
    if p is not None:
        vals = tuple(v % p for v in vals)
    return vals


def parse_point(text: str, sig: SpaceSignature, source: str = "<argument>", line: int = 1) -> Point:
    parts = text.split(";")
    if len(parts) != sig.k:
        raise ParseError(f"point needs {sig.k} ';'-separated coordinates, got {len(parts)}",
                         line, 1, source)
    return tuple(parse_vector(part, n, sig.p, "coordinate", source, line)
                 for part, n in zip(parts, sig.dims))


def format_point(x: Point) -> str:
    return " ; ".join(" ".join(str(c) for c in xi) for xi in x)


def parse_map(text: str, source: str = "<map>") -> tuple[SpaceSignature, int, dict]:
    lines = _Lines(text, source)
    n, header = lines.next("map header")
    fields = header.split()
    if not fields or fields[0] != "map":
        raise ParseError("map file must start with 'map'", n, 1, source)
    sig, used = _signature_fields(fields, n, source, offset=1)
    if len(fields) != used + 1:
        raise ParseError("map header must end with h:<h>", n, 1, source)
    h = _int(_tagged(fields[used], "h", n, source), n, 1, source, "codomain dimension")
    table: dict = {}
    while not lines.done():
        ln, line = lines.next("map entry")
        if "|" not in line:
            raise ParseError("map entry needs 'point | value'", ln, 1, source)
        left, right = line.split("|", 1)
        x = parse_point(left, sig, source, ln)
        v = parse_vector(right, h, sig.p, "value", source, ln)
        if x in table:
            raise ParseError(f"point {format_point(x)} listed twice", ln, 1, source)
        table[x] = v
    return sig, h, table


def format_map(sig: SpaceSignature, h: int, table: dict) -> str:
    out = [f"map {_sig_text(sig)} h:{h}"]
    for x in sorted(table, key=sig.index_of):
        out.append(f"{format_point(x)} | " + " ".join(str(c) for c in table[x]))
    return "\n".join(out) + "\n"


def format_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def parse_json(text: str, source: str = "<json>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno, source) from None


def read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory and rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mlext-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
