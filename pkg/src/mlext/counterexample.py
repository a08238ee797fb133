"""A bilinear map on the hyperbola variety that does not extend globally.

Over F_p^2 x F_p^2 take B = {x1 y1 - x2 y2 = 0}. For x, y nonzero with
x1, x2, y1 nonzero, the point is (lam s, s; t, lam t) with lam = x1 / x2, and
phi takes the value f(lam) x2 y1 there. Every other point of B has x = 0,
y = 0, or x2 y1 = 0 or x1 = 0; phi vanishes on all of them.

phi is bilinear on B for every f : F_p* -> F_p, and it is the restriction of
a global bilinear map exactly when f(lam) = c lam for a constant c.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .extend import GlobalExtension, PartialMultilinearMap, check_multilinear, global_extension
from .field import check_prime, inv_mod, solve_mod_p
from .forms import MultilinearForm, SpaceSignature
from .variety import Variety


def hyperbola_form(p: int) -> MultilinearForm:
    sig = SpaceSignature(p, (2, 2))
    return MultilinearForm(sig, (0, 1), [[1, 0], [0, p - 1]])


def classify(x: tuple, y: tuple, p: int) -> str | int:
    """'Z' for x = 0 or y = 0, the scalar lam for B_lam, 'W' for the remaining points."""
    if not any(x) or not any(y):
        return "Z"
    if x[0] and x[1] and y[0]:
        return x[0] * inv_mod(x[1], p) % p
    return "W"


@dataclass
class HyperbolaInstance:
    p: int
    f_table: tuple[int, ...]      # f(1), ..., f(p - 1)
    B: Variety
    phi: PartialMultilinearMap
    classes: dict                 # class label -> number of points

    def f(self, lam: int) -> int:
        return self.f_table[lam - 1]


def build_instance(p: int, f_table: Sequence[int] | Mapping[int, int]) -> HyperbolaInstance:
    check_prime(p)
    if isinstance(f_table, Mapping):
        f_table = [f_table[lam] for lam in range(1, p)]
    f_table = tuple(int(v) % p for v in f_table)
    if len(f_table) != p - 1:
        raise ValueError(f"f needs {p - 1} values, got {len(f_table)}")
    rho = hyperbola_form(p)
    B = Variety(rho.sig, (rho,))
    table, classes = {}, {}
    for pt in B.points():
        x, y = pt
        c = classify(x, y, p)
        classes[c] = classes.get(c, 0) + 1
        if isinstance(c, int):
            if y[1] != c * y[0] % p:
                raise AssertionError(f"{pt} is not of the form (lam s, s; t, lam t)")
            table[pt] = (f_table[c - 1] * x[1] * y[0] % p,)
        else:
            table[pt] = (0,)
    if sum(classes.values()) != len(table):
        raise AssertionError("point classes do not partition B")
    return HyperbolaInstance(p, f_table, B, PartialMultilinearMap(B, 1, table), classes)


def global_extension_exists(inst: HyperbolaInstance) -> GlobalExtension:
    """Exact decision by elimination; the rank pair certifies inconsistency."""
    return global_extension(inst.phi)


@dataclass(frozen=True)
class DiagonalVerdict:
    extendable: bool
    coefficients: tuple[int, int, int, int] | None  # g(s, t) = a + b s + c t + d s t


def diagonal_biaffine_extendable(inst: HyperbolaInstance) -> DiagonalVerdict:
    """Whether psi(x, x) = phi(x, 1; 1, x) is the diagonal of a biaffine map on F_p x F_p."""
    p = inst.p
    rows, rhs = [], []
    for x in range(p):
        rows.append([1, x, x, x * x % p])
        rhs.append(inst.phi.table[((x, 1), (1, x))][0])
    sol, _, _ = solve_mod_p(np.array(rows, dtype=np.int64), np.array(rhs, dtype=np.int64), p)
    if sol is None:
        return DiagonalVerdict(False, None)
    return DiagonalVerdict(True, tuple(int(c) for c in sol))


@dataclass
class ScanResult:
    p: int
    total: int
    extendable: list
    non_extendable: list
    diagonal_non_extendable: int
    all_bilinear: bool

    @property
    def non_extendable_count(self) -> int:
        return len(self.non_extendable)


def all_f_tables(p: int):
    return itertools.product(range(p), repeat=p - 1)


def scan(p: int) -> ScanResult:
    """Classify every f : F_p* -> F_p."""
    ext, non, diag_non, bil = [], [], 0, True
    for f in all_f_tables(p):
        inst = build_instance(p, f)
        if not check_multilinear(inst.phi):
            bil = False
        if global_extension_exists(inst).exists:
            ext.append(f)
        else:
            non.append(f)
        if not diagonal_biaffine_extendable(inst).extendable:
            diag_non += 1
    return ScanResult(p, len(ext) + len(non), ext, non, diag_non, bil)
