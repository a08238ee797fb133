"""Multilinear and multiaffine forms on products G_1 x ... x G_k of F_p-spaces.

Points are tuples of coordinate vectors, ``((x_11, .., x_1n1), (x_21, ..), ..)``.
Whole-space enumeration follows lexicographic order of the flattened
coordinate vector: the first coordinate of G_1 varies slowest and the last
coordinate of G_k fastest. Everything that searches or reports in "canonical
order" uses this order.

Axes are 0-based internally; the text formats in :mod:`mlext.formats` are 1-based.
"""

from __future__ import annotations

import contextlib
import contextvars
import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, SignatureMismatch
from .field import FieldElement, check_prime

Point = tuple  # tuple[tuple[int, ...], ...]

DEFAULT_CAP = 2 ** 24
_cap_override: contextvars.ContextVar[int | None] = contextvars.ContextVar(
    "mlext_cap", default=None)


def enumeration_cap() -> int:
    override = _cap_override.get()
    if override is not None:
        return override
    env = os.environ.get("MLEXT_CAP")
    return int(env) if env else DEFAULT_CAP


@contextlib.contextmanager
def cap_limit(cap: int):
    token = _cap_override.set(int(cap))
    try:
        yield
    finally:
        _cap_override.reset(token)


def check_cap(size: int) -> None:
    cap = enumeration_cap()
    if size > cap:
        raise CapExceeded(size, cap)


@lru_cache(maxsize=None)
def _vectors(p: int, n: int) -> np.ndarray:
    grid = np.indices((p,) * n, dtype=np.int64).reshape(n, -1).T
    grid.setflags(write=False)
    return grid


@lru_cache(maxsize=64)
def _points(p: int, dims: tuple[int, ...]) -> np.ndarray:
    total = sum(dims)
    if total == 0:
        arr = np.zeros((1, 0), dtype=np.int64)
    else:
        arr = np.indices((p,) * total, dtype=np.int64).reshape(total, -1).T
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpaceSignature:
    """The product space G_1 x ... x G_k with G_i = F_p^{n_i}.

    ``dims = ()`` is allowed only as the degenerate 0-ary space produced by
    slicing every coordinate; it has exactly one point, ``()``.
    """

    p: int
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        check_prime(self.p)
        if any(n < 1 for n in self.dims):
            raise ValueError(f"every dimension must be >= 1, got {self.dims}")

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def size(self) -> int:
        return self.p ** self.total_dim

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.dims:
            out.append(acc)
            acc += n
        return tuple(out)

    def space_size(self, axes: Sequence[int]) -> int:
        return self.p ** sum(self.dims[a] for a in axes)

    def vectors(self, axis: int) -> np.ndarray:
        """All vectors of G_axis in lexicographic order."""
        return _vectors(self.p, self.dims[axis])

    def points(self) -> np.ndarray:
        """All points as rows of an (N, total_dim) array, canonical order."""
        check_cap(self.size)
        return _points(self.p, self.dims)

    def iter_points(self) -> Iterator[Point]:
        check_cap(self.size)
        for row in _points(self.p, self.dims):
            yield self.point_from_row(row)

    def point_from_row(self, row) -> Point:
        out, off = [], 0
        for n in self.dims:
            out.append(tuple(int(v) for v in row[off:off + n]))
            off += n
        return tuple(out)

    def row_from_point(self, x: Point) -> np.ndarray:
        self.validate_point(x)
        if not self.dims:
            return np.zeros(0, dtype=np.int64)
        return np.array([v for xi in x for v in xi], dtype=np.int64)

    def rows_from_points(self, xs: Sequence[Point]) -> np.ndarray:
        if not xs:
            return np.zeros((0, self.total_dim), dtype=np.int64)
        return np.array([[v for xi in x for v in xi] for x in xs], dtype=np.int64)

    def vector_index(self, axis: int, v: Sequence[int]) -> int:
        idx = 0
        for c in v:
            idx = idx * self.p + int(c)
        return idx

    def index_of(self, x: Point) -> int:
        idx = 0
        for i, xi in enumerate(x):
            idx = idx * (self.p ** self.dims[i]) + self.vector_index(i, xi)
        return idx

    def point_of_index(self, idx: int) -> Point:
        out = []
        for n in reversed(self.dims):
            digits = []
            for _ in range(n):
                idx, r = divmod(idx, self.p)
                digits.append(r)
            out.append(tuple(reversed(digits)))
        return tuple(reversed(out))

    def validate_point(self, x: Point) -> None:
        if len(x) != self.k or any(len(xi) != n for xi, n in zip(x, self.dims)):
            raise SignatureMismatch(f"point {x!r} does not match dims {self.dims}")
        for xi in x:
            for c in xi:
                if not 0 <= int(c) < self.p:
                    raise SignatureMismatch(f"coordinate {c} of {x!r} is not reduced mod {self.p}")

    def normalize_point(self, x) -> Point:
        pt = tuple(tuple(int(c) % self.p for c in xi) for xi in x)
        self.validate_point(pt)
        return pt

    def zero_point(self) -> Point:
        return tuple((0,) * n for n in self.dims)

    def sub(self, axes: Sequence[int]) -> "SpaceSignature":
        return SpaceSignature(self.p, tuple(self.dims[a] for a in axes))

    def block(self, rows: np.ndarray, axis: int) -> np.ndarray:
        off = self.offsets[axis]
        return rows[:, off:off + self.dims[axis]]


def merge_point(k: int, parts: Mapping[int, tuple]) -> Point:
    """Assemble a full point from a mapping axis -> coordinate vector."""
    if sorted(parts) != list(range(k)):
        raise SignatureMismatch(f"partial point covers axes {sorted(parts)}, need all of 0..{k - 1}")
    return tuple(tuple(parts[i]) for i in range(k))


def split_point(x: Point, axes: Sequence[int]) -> Point:
    return tuple(x[a] for a in axes)


def scale_coordinate(x: Point, axis: int, lam: int, p: int) -> Point:
    return tuple(tuple((lam * c) % p for c in xi) if i == axis else xi
                 for i, xi in enumerate(x))


def scale_point(x: Point, lams: Sequence[int], p: int) -> Point:
    return tuple(tuple((lam * c) % p for c in xi) for xi, lam in zip(x, lams))


def add_points(x: Point, y: Point, p: int) -> Point:
    return tuple(tuple((a + b) % p for a, b in zip(xi, yi)) for xi, yi in zip(x, y))


def differing_axes(x: Point, y: Point) -> list[int]:
    return [i for i, (a, b) in enumerate(zip(x, y)) if a != b]


def ominus(x: Point, y: Point, p: int) -> Point:
    """The point equal to x except in the single differing coordinate d, where it is x_d - y_d."""
    if len(x) != len(y):
        raise SignatureMismatch("points have different arity")
    diff = differing_axes(x, y)
    if len(diff) != 1:
        raise ValueError(f"ominus needs points differing in exactly one coordinate, "
                         f"they differ in {len(diff)}")
    d = diff[0]
    return tuple(tuple((a - b) % p for a, b in zip(x[d], y[d])) if i == d else xi
                 for i, xi in enumerate(x))


def _subscripts(n: int) -> list[int]:
    return list(range(n))


class MultilinearForm:
    """A form linear in each coordinate of ``axes``, constant in the others.

    ``coeffs[i_1, ..., i_r]`` multiplies ``x_{a_1}[i_1] * ... * x_{a_r}[i_r]``
    for ``axes = (a_1 < ... < a_r)``.
    """

    __slots__ = ("sig", "axes", "coeffs")

    def __init__(self, sig: SpaceSignature, axes: Sequence[int], coeffs):
        axes = tuple(int(a) for a in axes)
        if not axes:
            raise ValueError("a multilinear form needs at least one axis")
        if list(axes) != sorted(set(axes)) or axes[0] < 0 or axes[-1] >= sig.k:
            raise ValueError(f"axes {axes} must be distinct, ascending, within 0..{sig.k - 1}")
        arr = np.asarray(coeffs, dtype=np.int64) % sig.p
        shape = tuple(sig.dims[a] for a in axes)
        if arr.shape != shape:
            try:
                arr = arr.reshape(shape)
            except ValueError:
                raise SignatureMismatch(f"coefficient shape {arr.shape} does not match {shape}") from None
        arr = arr.copy()
        arr.setflags(write=False)
        self.sig = sig
        self.axes = axes
        self.coeffs = arr

    @classmethod
    def zero(cls, sig: SpaceSignature, axes: Sequence[int]) -> "MultilinearForm":
        return cls(sig, axes, np.zeros(tuple(sig.dims[a] for a in axes), dtype=np.int64))

    @classmethod
    def dot(cls, sig: SpaceSignature, axes: Sequence[int] = (0, 1)) -> "MultilinearForm":
        """The diagonal form sum_i x_{a}[i] y_{b}[i] ... on equal-dimension axes."""
        n = min(sig.dims[a] for a in axes)
        c = np.zeros(tuple(sig.dims[a] for a in axes), dtype=np.int64)
        for i in range(n):
            c[(i,) * len(axes)] = 1
        return cls(sig, axes, c)

    @property
    def p(self) -> int:
        return self.sig.p

    @property
    def arity(self) -> int:
        return len(self.axes)

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def _check_same(self, other: "MultilinearForm") -> None:
        if self.sig != other.sig or self.axes != other.axes:
            raise SignatureMismatch("forms live on different signatures or axes")

    def __add__(self, other: "MultilinearForm") -> "MultilinearForm":
        self._check_same(other)
        return MultilinearForm(self.sig, self.axes, self.coeffs + other.coeffs)

    def __sub__(self, other: "MultilinearForm") -> "MultilinearForm":
        self._check_same(other)
        return MultilinearForm(self.sig, self.axes, self.coeffs - other.coeffs)

    def __neg__(self) -> "MultilinearForm":
        return MultilinearForm(self.sig, self.axes, -self.coeffs)

    def scale(self, c: int) -> "MultilinearForm":
        return MultilinearForm(self.sig, self.axes, int(c) * self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, MultilinearForm):
            return NotImplemented
        return (self.sig == other.sig and self.axes == other.axes
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.sig, self.axes, self.coeffs.tobytes()))

    def __repr__(self):
        return (f"MultilinearForm(p={self.p}, axes={self.axes}, "
                f"coeffs={self.coeffs.tolist()})")

    def evaluate(self, x: Point) -> int:
        self.sig.validate_point(x)
        t = self.coeffs
        for a in reversed(self.axes):
            t = t @ np.asarray(x[a], dtype=np.int64)
        return int(t) % self.p

    def values(self, rows: np.ndarray) -> np.ndarray:
        """Vectorised evaluation at every row of an (N, total_dim) point array."""
        rows = np.asarray(rows, dtype=np.int64)
        r = len(self.axes)
        n_idx = r
        operands: list = [self.coeffs, _subscripts(r)]
        for j, a in enumerate(self.axes):
            operands += [self.sig.block(rows, a), [n_idx, j]]
        out = np.einsum(*operands, [n_idx])
        return out % self.p

    def slice(self, fixed: Mapping[int, Sequence[int]]) -> "MultilinearForm":
        """Substitute fixed coordinate vectors for some (not all) of the axes."""
        fixed_here = {a: v for a, v in fixed.items() if a in self.axes}
        if not fixed_here:
            return self
        remaining = [a for a in self.axes if a not in fixed_here]
        if not remaining:
            raise ValueError("slicing every axis leaves a scalar; use evaluate")
        t = self.coeffs
        for pos in reversed(range(len(self.axes))):
            a = self.axes[pos]
            if a in fixed_here:
                v = np.asarray(fixed_here[a], dtype=np.int64)
                if v.shape != (self.sig.dims[a],):
                    raise SignatureMismatch(f"fixed vector for axis {a} has wrong length")
                t = np.tensordot(t, v, axes=([pos], [0]))
        return MultilinearForm(self.sig, remaining, t)

    def partial_value(self, fixed: Mapping[int, Sequence[int]]) -> "MultilinearForm | int":
        """Like :meth:`slice` but returns the scalar when every axis is fixed."""
        if all(a in fixed for a in self.axes):
            t = self.coeffs
            for a in reversed(self.axes):
                t = t @ np.asarray(fixed[a], dtype=np.int64)
            return int(t) % self.p
        return self.slice(fixed)

    def outer(self, other: "MultilinearForm") -> "MultilinearForm":
        """Pointwise product of forms on disjoint axes."""
        if self.sig != other.sig:
            raise SignatureMismatch("outer product needs a shared signature")
        if set(self.axes) & set(other.axes):
            raise ValueError("outer product needs disjoint axes")
        axes = tuple(sorted(self.axes + other.axes))
        t = np.multiply.outer(self.coeffs, other.coeffs)
        order = self.axes + other.axes
        perm = [order.index(a) for a in axes]
        return MultilinearForm(self.sig, axes, np.transpose(t, perm))

    def reindex(self, new_sig: SpaceSignature, axis_map: Mapping[int, int]) -> "MultilinearForm":
        """Move the form onto another signature, sending axis ``a`` to ``axis_map[a]``."""
        new_axes = [axis_map[a] for a in self.axes]
        order = sorted(range(len(new_axes)), key=lambda i: new_axes[i])
        return MultilinearForm(new_sig, sorted(new_axes), np.transpose(self.coeffs, order))

    def flattening(self, left: Sequence[int]) -> np.ndarray:
        """Matrix with rows indexed by the ``left`` axes and columns by the rest."""
        pos_left = [self.axes.index(a) for a in left]
        pos_right = [i for i in range(len(self.axes)) if i not in pos_left]
        t = np.transpose(self.coeffs, pos_left + pos_right)
        nl = int(np.prod([self.coeffs.shape[i] for i in pos_left]))
        return t.reshape(nl, -1)


def combine(forms: Sequence[MultilinearForm], weights: Sequence[int]) -> MultilinearForm:
    """The linear combination sum_i weights[i] * forms[i] (shared axes)."""
    if not forms:
        raise ValueError("combine needs at least one form")
    acc = np.zeros_like(forms[0].coeffs)
    for f, w in zip(forms, weights):
        forms[0]._check_same(f)
        acc = acc + int(w) * f.coeffs
    return MultilinearForm(forms[0].sig, forms[0].axes, acc)


class MultiaffineForm:
    """Sum of multilinear forms on distinct axis subsets plus a constant."""

    def __init__(self, sig: SpaceSignature, parts: Sequence[MultilinearForm] = (),
                 constant: int = 0):
        self.sig = sig
        merged: dict[tuple[int, ...], MultilinearForm] = {}
        for f in parts:
            if f.sig != sig:
                raise SignatureMismatch("part lives on another signature")
            merged[f.axes] = merged[f.axes] + f if f.axes in merged else f
        self.parts = dict(sorted(merged.items()))
        self.constant = int(constant) % sig.p

    def evaluate(self, x: Point) -> int:
        self.sig.validate_point(x)
        return (self.constant + sum(f.evaluate(x) for f in self.parts.values())) % self.sig.p

    def values(self, rows: np.ndarray) -> np.ndarray:
        out = np.full(len(rows), self.constant, dtype=np.int64)
        for f in self.parts.values():
            out += f.values(rows)
        return out % self.sig.p

    def multilinear_part(self) -> MultilinearForm:
        full = tuple(range(self.sig.k))
        return self.parts.get(full, MultilinearForm.zero(self.sig, full))


class MultilinearMapH:
    """A multilinear map G_1 x ... x G_k -> H = F_p^h given by h component forms."""

    def __init__(self, sig: SpaceSignature, components: Sequence[MultilinearForm]):
        full = tuple(range(sig.k))
        for c in components:
            if c.sig != sig or c.axes != full:
                raise SignatureMismatch("each component must be a form on all axes")
        self.sig = sig
        self.components = tuple(components)

    @property
    def codim_h(self) -> int:
        return len(self.components)

    @classmethod
    def zero(cls, sig: SpaceSignature, h: int) -> "MultilinearMapH":
        full = tuple(range(sig.k))
        return cls(sig, [MultilinearForm.zero(sig, full) for _ in range(h)])

    def evaluate(self, x: Point) -> tuple[int, ...]:
        return tuple(c.evaluate(x) for c in self.components)

    __call__ = evaluate

    def values(self, rows: np.ndarray) -> np.ndarray:
        if not self.components:
            return np.zeros((len(rows), 0), dtype=np.int64)
        return np.stack([c.values(rows) for c in self.components], axis=1)

    def __eq__(self, other):
        if not isinstance(other, MultilinearMapH):
            return NotImplemented
        return self.sig == other.sig and self.components == other.components

    def __hash__(self):
        return hash((self.sig, self.components))

    def __repr__(self):
        return f"MultilinearMapH(p={self.sig.p}, dims={self.sig.dims}, h={self.codim_h})"


def evaluate(form, x: Point):
    """Evaluate a multilinear form, multiaffine form, or H-valued map at ``x``."""
    if isinstance(form, (MultilinearForm, MultiaffineForm, MultilinearMapH)):
        return form.evaluate(x)
    raise TypeError(f"cannot evaluate {type(form).__name__}")


def evaluate_element(form: MultilinearForm | MultiaffineForm, x: Point) -> FieldElement:
    return FieldElement(form.evaluate(x), form.sig.p)


def multilinear_part(form: MultiaffineForm) -> MultilinearForm:
    return form.multilinear_part()


def slice_form(form: MultilinearForm, fixed: Mapping[int, Sequence[int]]) -> MultilinearForm:
    if set(fixed) >= set(form.axes):
        raise ValueError("fixing every axis of the form leaves a scalar; use evaluate")
    return form.slice(fixed)


def basis_vector(n: int, i: int) -> tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(n))


def all_vectors(p: int, n: int) -> list[tuple[int, ...]]:
    return list(product(range(p), repeat=n))


def form_record(form: MultilinearForm) -> dict:
    """JSON-ready description: 1-based axes and row-major coefficients."""
    return {"axes": [a + 1 for a in form.axes],
            "coeffs": [int(c) for c in form.coeffs.reshape(-1)]}


def form_from_record(sig: SpaceSignature, rec: Mapping) -> MultilinearForm:
    axes = tuple(int(a) - 1 for a in rec["axes"])
    shape = tuple(sig.dims[a] for a in axes)
    return MultilinearForm(sig, axes, np.asarray(rec["coeffs"], dtype=np.int64).reshape(shape))
