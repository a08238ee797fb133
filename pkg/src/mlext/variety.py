"""Multilinear varieties: joint zero sets of multilinear forms."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import SignatureMismatch
from .forms import MultilinearForm, Point, SpaceSignature


@dataclass(frozen=True)
class Variety:
    sig: SpaceSignature
    constraints: tuple[MultilinearForm, ...] = ()
    empty: bool = False  # set when slicing hit a violated fully-fixed constraint

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            if c.sig != self.sig:
                raise SignatureMismatch("constraint lives on another signature")

    @property
    def codimension(self) -> int:
        return len(self.constraints)

    def contains(self, x: Point) -> bool:
        self.sig.validate_point(x)
        if self.empty:
            return False
        return all(c.evaluate(x) == 0 for c in self.constraints)

    __contains__ = contains

    def mask(self, rows: np.ndarray | None = None) -> np.ndarray:
        if rows is None:
            rows = self.sig.points()
        if self.empty:
            return np.zeros(len(rows), dtype=bool)
        m = np.ones(len(rows), dtype=bool)
        for c in self.constraints:
            m &= c.values(rows) == 0
        return m

    def point_rows(self) -> np.ndarray:
        rows = self.sig.points()
        return rows[self.mask(rows)]

    def points(self) -> list[Point]:
        return [self.sig.point_from_row(r) for r in self.point_rows()]

    def count(self) -> int:
        return int(self.mask().sum())

    def with_constraints(self, *forms: MultilinearForm) -> "Variety":
        return Variety(self.sig, self.constraints + tuple(forms), self.empty)

    def intersect(self, other: "Variety") -> "Variety":
        if other.sig != self.sig:
            raise SignatureMismatch("cannot intersect varieties on different signatures")
        return Variety(self.sig, self.constraints + other.constraints, self.empty or other.empty)

    def slice(self, fixed: Mapping[int, Sequence[int]]) -> "Variety":
        return slice_variety(self, fixed)


def membership(v: Variety, x: Point) -> bool:
    return v.contains(x)


def count_points(v: Variety) -> int:
    return v.count()


def slice_variety(v: Variety, fixed: Mapping[int, Sequence[int]]) -> Variety:
    """Fix the coordinates in ``fixed`` and return the variety on the remaining ones.

    Remaining axes keep their relative order and are renumbered from 0.
    Constraints that become identically zero are dropped; a fully fixed
    constraint that does not vanish marks the result empty.
    """
    fixed = {int(a): tuple(int(c) % v.sig.p for c in vec) for a, vec in fixed.items()}
    for a, vec in fixed.items():
        if not 0 <= a < v.sig.k or len(vec) != v.sig.dims[a]:
            raise SignatureMismatch(f"fixed coordinate {a} does not match the signature")
    remaining = [a for a in range(v.sig.k) if a not in fixed]
    sub = v.sig.sub(remaining)
    axis_map = {a: i for i, a in enumerate(remaining)}
    out: list[MultilinearForm] = []
    empty = v.empty
    for c in v.constraints:
        val = c.partial_value(fixed)
        if isinstance(val, int):
            if val != 0:
                empty = True
            continue
        if val.is_zero():
            continue
        out.append(val.reindex(sub, axis_map))
    return Variety(sub, tuple(out), empty)


def lift_forms(forms: Sequence[MultilinearForm], full_sig: SpaceSignature,
               axes: Sequence[int]) -> list[MultilinearForm]:
    """Inverse of the renumbering done by :func:`slice_variety`."""
    axis_map = {i: a for i, a in enumerate(axes)}
    return [f.reindex(full_sig, axis_map) for f in forms]


def varsize_bound(v: Variety) -> Fraction:
    """The lower bound f^(-k d) |G| on the size of a non-empty variety."""
    return Fraction(v.sig.size, v.sig.p ** (v.sig.k * v.codimension))


def varsize_margin(v: Variety) -> tuple[int, Fraction, bool]:
    n = v.count()
    bound = varsize_bound(v)
    return n, bound, n >= bound
