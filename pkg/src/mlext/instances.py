"""Random instance generators and searched configurations used by tests and the CLI."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import MlextError
from .extend import (OrthogonalPoint, PartialMultilinearMap, find_orthogonal_point,
                     random_multilinear_map)
from .forms import MultiaffineForm, MultilinearForm, MultilinearMapH, Point, SpaceSignature
from .paths import GoodSequence, PointGraph, good_sequence
from .variety import Variety


def random_form(sig: SpaceSignature, axes: Sequence[int], rng: np.random.Generator,
                nonzero: bool = False) -> MultilinearForm:
    shape = [sig.dims[a] for a in axes]
    while True:
        f = MultilinearForm(sig, axes, rng.integers(0, sig.p, size=shape))
        if not nonzero or not f.is_zero():
            return f


def random_multiaffine(sig: SpaceSignature, rng: np.random.Generator) -> MultiaffineForm:
    parts = []
    for r in range(1, sig.k + 1):
        for axes in itertools.combinations(range(sig.k), r):
            if rng.random() < 0.7 or r == sig.k:
                parts.append(random_form(sig, axes, rng))
    return MultiaffineForm(sig, parts, int(rng.integers(0, sig.p)))


def random_axes(k: int, rng: np.random.Generator, full_prob: float = 0.5) -> tuple[int, ...]:
    if rng.random() < full_prob:
        return tuple(range(k))
    r = int(rng.integers(1, k + 1))
    return tuple(sorted(rng.choice(k, size=r, replace=False).tolist()))


def random_variety(sig: SpaceSignature, codim: int, rng: np.random.Generator,
                   full_prob: float = 0.5) -> Variety:
    forms = [random_form(sig, random_axes(sig.k, rng, full_prob), rng) for _ in range(codim)]
    return Variety(sig, tuple(forms))


def random_global_map(sig: SpaceSignature, h: int, rng: np.random.Generator) -> MultilinearMapH:
    return MultilinearMapH(sig, [random_form(sig, tuple(range(sig.k)), rng) for _ in range(h)])


@dataclass
class SplittingConfig:
    B: Variety
    rho: MultilinearForm
    x: tuple
    y: tuple
    z: tuple
    w: tuple
    u: tuple
    v: tuple


def search_splitting_configuration(B: Variety, rho: MultilinearForm, rng: np.random.Generator,
                                   limit: int = 2000) -> SplittingConfig | None:
    """Search (x, y), (z, w), (u, v) meeting the splitting hypotheses (k = 2).

    Candidates are visited in a random order; at most ``limit`` choices of the
    first two pairs are tried.
    """
    sig, p = rho.sig, rho.p
    if sig.k != 2 or rho.axes != (0, 1):
        return None
    v1, v2 = sig.vectors(0), sig.vectors(1)
    table = (v1 @ rho.coeffs @ v2.T) % p
    inB = B.mask(sig.points()).reshape(len(v1), len(v2))
    ones = np.argwhere((table == 1) & inB)
    if len(ones) < 3:
        return None
    ones = ones[rng.permutation(len(ones))]
    # (a, b) is compatible with (c, d) when both cross pairs have rho = 0 and lie in B
    cross_ok = (table == 0) & inB
    a, b = ones[:, 0], ones[:, 1]
    compat = cross_ok[a[:, None], b[None, :]] & cross_ok[a[None, :], b[:, None]]
    tried = 0
    for i in range(len(ones)):
        for j in np.nonzero(compat[i])[0]:
            tried += 1
            third = np.nonzero(compat[i] & compat[j])[0]
            if len(third):
                t = third[0]
                vec = lambda arr, r: tuple(int(c) for c in arr[r])
                return SplittingConfig(B, rho, vec(v1, a[i]), vec(v2, b[i]), vec(v1, a[j]),
                                       vec(v2, b[j]), vec(v1, a[t]), vec(v2, b[t]))
            if tried >= limit:
                return None
    return None


@dataclass
class OrthogonalInstance:
    B: Variety
    rho: MultilinearForm
    z: Point
    x: Point
    seq: GoodSequence
    e: OrthogonalPoint
    phi: PartialMultilinearMap


def search_orthogonal_instance(sig: SpaceSignature, rng: np.random.Generator, codim: int = 0,
                               mode: str = "basic", tries: int = 50,
                               global_phi: bool = False) -> OrthogonalInstance | None:
    """Random rho, B, z, x with a good sequence z -> x and an orthogonal point.

    phi is a random multilinear map on B n {rho = 0}; with ``global_phi`` it is
    the restriction of a random global map instead.
    """
    for _ in range(tries):
        rho = random_form(sig, tuple(range(sig.k)), rng, nonzero=True)
        B = random_variety(sig, codim, rng, full_prob=0.3)
        graph = PointGraph(sig, B.constraints, rho)
        members = graph.members()
        if len(members) < 2:
            continue
        rows = sig.points()
        ones = members[graph.rho_values[members] == 1]
        if len(ones) == 0:
            continue
        z = sig.point_from_row(rows[ones[rng.integers(len(ones))]])
        x = sig.point_from_row(rows[members[rng.integers(len(members))]])
        try:
            seq = good_sequence(sig, B.constraints, rho, z, x,
                                seed=int(rng.integers(1 << 30)), graph=graph)
            e = find_orthogonal_point(rho, B.constraints, [seq], z, mode)
        except MlextError:
            continue
        b0 = B.with_constraints(rho)
        if global_phi:
            phi = PartialMultilinearMap.restrict(b0, random_global_map(sig, 1, rng))
        else:
            phi = random_multilinear_map(b0, 1, rng)
        return OrthogonalInstance(B, rho, z, x, seq, e, phi)
    return None
