"""Prime-field scalars, exact rationals, and dense linear algebra over F_p.

Heavy kernels elsewhere work on numpy integer arrays reduced mod p; the
:class:`FieldElement` type is the user-facing scalar.
"""

from __future__ import annotations

import os
from fractions import Fraction
from functools import total_ordering

import numpy as np

from .errors import ModulusMismatch

Rational = Fraction

DEFAULT_PRIME_CAP = 13


def prime_cap() -> int:
    return int(os.environ.get("MLEXT_PRIME_CAP", DEFAULT_PRIME_CAP))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def check_prime(p: int) -> int:
    if not is_prime(p):
        raise ValueError(f"modulus {p} is not prime")
    cap = prime_cap()
    if p > cap:
        raise ValueError(f"prime {p} exceeds the configured cap {cap} (MLEXT_PRIME_CAP)")
    return p


@total_ordering
class FieldElement:
    __slots__ = ("value", "p")

    def __init__(self, value: int, p: int):
        self.p = p
        self.value = int(value) % p

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise ModulusMismatch(f"cannot combine F_{self.p} and F_{other.p} elements")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other) % self.p
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(o - self.value, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * o, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * fp_mul_inv(FieldElement(o, self.p))

    def __pow__(self, n: int):
        if n < 0:
            return fp_mul_inv(self) ** (-n)
        return FieldElement(pow(self.value, n, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.p == other.p and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.p
        return NotImplemented

    def __lt__(self, other):
        return self.value < self._coerce(other)

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"F{self.p}({self.value})"


def fp_add(a: FieldElement, b: FieldElement) -> FieldElement:
    if a.p != b.p:
        raise ModulusMismatch(f"cannot add F_{a.p} and F_{b.p} elements")
    return FieldElement(a.value + b.value, a.p)


def fp_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    if a.p != b.p:
        raise ModulusMismatch(f"cannot multiply F_{a.p} and F_{b.p} elements")
    return FieldElement(a.value * b.value, a.p)


def fp_mul_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroDivisionError(f"0 has no inverse in F_{a.p}")
    return FieldElement(pow(a.value, -1, a.p), a.p)


def inv_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse in F_{p}")
    return pow(a, -1, p)


def elements(p: int) -> list[FieldElement]:
    return [FieldElement(v, p) for v in range(p)]


# ---------------------------------------------------------------------------
# dense linear algebra mod p


def rref_mod_p(a, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` over F_p and its pivot columns."""
    m = np.array(a, dtype=np.int64) % p
    if m.ndim != 2:
        raise ValueError("rref_mod_p expects a 2-d array")
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = (m[r] * inv_mod(int(m[r, c]), p)) % p
        col = m[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            m[nzr] = (m[nzr] - np.outer(col[nzr], m[r])) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank_mod_p(a, p: int) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    return len(rref_mod_p(a, p)[1])


def nullspace_mod_p(a, p: int) -> np.ndarray:
    """Basis (one vector per row) of {v : a v = 0} over F_p."""
    a = np.asarray(a, dtype=np.int64)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    r, pivots = rref_mod_p(a, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = (-r[row, f]) % p
    return basis


def solve_mod_p(a, b, p: int) -> tuple[np.ndarray | None, int, int]:
    """One solution of ``a x = b`` over F_p, plus (rank a, rank [a|b]).

    The solution is ``None`` exactly when the two ranks differ.
    """
    a = np.asarray(a, dtype=np.int64) % p
    b = np.asarray(b, dtype=np.int64).reshape(-1) % p
    rows, cols = a.shape
    aug = np.concatenate([a, b[:, None]], axis=1)
    r, pivots = rref_mod_p(aug, p)
    rank_aug = len(pivots)
    rank_a = len([c for c in pivots if c < cols])
    if rank_aug != rank_a:
        return None, rank_a, rank_aug
    x = np.zeros(cols, dtype=np.int64)
    for row, pc in enumerate(pivots):
        x[pc] = r[row, cols]
    return x, rank_a, rank_aug


def rank_factorization(m, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(left, right)`` with ``m = left @ right`` mod p and inner size = rank."""
    m = np.asarray(m, dtype=np.int64) % p
    r, pivots = rref_mod_p(m, p)
    rank = len(pivots)
    left = m[:, pivots] if rank else np.zeros((m.shape[0], 0), dtype=np.int64)
    right = r[:rank]
    return left, right


def independent_mod_p(vectors, p: int) -> bool:
    vectors = np.asarray(vectors)
    if len(vectors) == 0:
        return True
    return rank_mod_p(vectors, p) == len(vectors)
