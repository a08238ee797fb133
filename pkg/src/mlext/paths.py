"""Connectivity in the point graph and construction of good sequences.

The point graph joins two points of G_1 x ... x G_k when they differ in
exactly one coordinate. We only ever look at its induced subgraph on

    {x : beta_j(x) = 0 for all j, rho(x) != 0},

which is held as a boolean mask over canonical point indices. Breadth-first
search expands neighbours by ascending coordinate, then by ascending
replacement vector; a nonzero ``seed`` shuffles both orders reproducibly.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotConnected, PathTooLong, PreconditionFailed
from .field import inv_mod
from .forms import MultilinearForm, Point, SpaceSignature, differing_axes, scale_coordinate


def default_s_bound(k: int) -> int:
    return (2 * k + 1) * (2 ** k - 1) + 1


def diameter_bound(k: int) -> int:
    return (2 * k + 1) * (2 ** k - 1)


class PointGraph:
    def __init__(self, sig: SpaceSignature, betas: Sequence[MultilinearForm],
                 rho: MultilinearForm | None):
        self.sig = sig
        self.betas = tuple(betas)
        self.rho = rho
        rows = sig.points()
        mask = np.ones(len(rows), dtype=bool)
        for b in self.betas:
            mask &= b.values(rows) == 0
        if rho is not None:
            self.rho_values = rho.values(rows)
            mask &= self.rho_values != 0
        else:
            self.rho_values = None
        self.mask = mask
        self.counts = [sig.p ** n for n in sig.dims]
        strides, acc = [], 1
        for c in reversed(self.counts):
            strides.append(acc)
            acc *= c
        self.strides = list(reversed(strides))

    def __contains__(self, idx: int) -> bool:
        return bool(self.mask[idx])

    def members(self) -> np.ndarray:
        return np.nonzero(self.mask)[0]

    def neighbors(self, idx: int, rng: random.Random | None = None):
        axes = list(range(self.sig.k))
        if rng is not None:
            rng.shuffle(axes)
        for i in axes:
            stride, count = self.strides[i], self.counts[i]
            cur = (idx // stride) % count
            values = list(range(count))
            if rng is not None:
                rng.shuffle(values)
            base = idx - cur * stride
            for v in values:
                if v == cur:
                    continue
                n = base + v * stride
                if self.mask[n]:
                    yield n

    def bfs(self, start: int, seed: int = 0) -> "BfsTree":
        if not self.mask[start]:
            raise PreconditionFailed("BFS start point is outside the constrained set")
        rng = random.Random(seed) if seed else None
        parent = {start: -1}
        dist = {start: 0}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self.neighbors(u, rng):
                if w not in parent:
                    parent[w] = u
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return BfsTree(start, parent, dist)

    def labels(self) -> np.ndarray:
        """Component label per point (-1 outside the set), numbered in canonical order."""
        lab = np.full(len(self.mask), -1, dtype=np.int64)
        nxt = 0
        for s in self.members():
            if lab[s] >= 0:
                continue
            lab[s] = nxt
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in self.neighbors(u):
                    if lab[w] < 0:
                        lab[w] = nxt
                        queue.append(w)
            nxt += 1
        return lab


@dataclass
class BfsTree:
    root: int
    parent: dict
    dist: dict

    def path_to(self, target: int) -> list[int]:
        if target not in self.parent:
            raise KeyError(target)
        out = [target]
        while self.parent[out[-1]] != -1:
            out.append(self.parent[out[-1]])
        return out[::-1]

    @property
    def eccentricity(self) -> int:
        return max(self.dist.values())


@dataclass(frozen=True)
class ComponentSummary:
    size: int
    eccentricity: int
    label: int


def connected_component(sig: SpaceSignature, betas: Sequence[MultilinearForm],
                        rho: MultilinearForm | None, start: Point) -> ComponentSummary:
    graph = PointGraph(sig, betas, rho)
    idx = sig.index_of(start)
    if not graph.mask[idx]:
        raise PreconditionFailed("start point violates the constraints or has rho = 0")
    tree = graph.bfs(idx)
    label = int(min(tree.parent))
    return ComponentSummary(len(tree.parent), tree.eccentricity, label)


@dataclass(frozen=True)
class ConnectivityReport:
    size: int
    components: int
    connected: bool
    diameter: int | None  # None unless connected and non-empty


def connectivity(sig: SpaceSignature, betas: Sequence[MultilinearForm],
                 rho: MultilinearForm | None, diameter: bool = True) -> ConnectivityReport:
    graph = PointGraph(sig, betas, rho)
    members = graph.members()
    if len(members) == 0:
        return ConnectivityReport(0, 0, True, None)
    lab = graph.labels()
    ncomp = int(lab.max()) + 1
    diam = None
    if ncomp == 1 and diameter:
        diam = max(graph.bfs(int(m)).eccentricity for m in members)
    return ConnectivityReport(len(members), ncomp, ncomp == 1, diam)


@dataclass(frozen=True)
class GoodSequence:
    points: tuple[Point, ...]
    scalars: tuple[int, ...]
    s_bound: int

    @property
    def s(self) -> int:
        return len(self.points) - 1

    def steps(self) -> list[int]:
        """Coordinate changed at each step."""
        return [differing_axes(a, b)[0] for a, b in zip(self.points, self.points[1:])]

    def violations(self, sig: SpaceSignature, betas: Sequence[MultilinearForm],
                   rho: MultilinearForm, z: Point, y: Point) -> list[str]:
        out = []
        for i, (a, b) in enumerate(zip(self.points, self.points[1:])):
            if len(differing_axes(a, b)) != 1:
                out.append(f"points {i} and {i + 1} do not differ in exactly one coordinate")
        if self.points[0] != z:
            out.append("first point is not z")
        if any(lam % sig.p == 0 for lam in self.scalars):
            out.append("zero scalar")
        target = tuple(tuple((lam * c) % sig.p for c in yi) for yi, lam in zip(y, self.scalars))
        if self.points[-1] != target:
            out.append("last point is not the coordinatewise scaling of y")
        if self.s > self.s_bound:
            out.append(f"length {self.s} exceeds bound {self.s_bound}")
        r0 = rho.evaluate(self.points[0])
        for i, q in enumerate(self.points):
            if rho.evaluate(q) != r0:
                out.append(f"rho not constant at point {i}")
            for j, b in enumerate(betas):
                if b.evaluate(q) != 0:
                    out.append(f"beta {j} nonzero at point {i}")
        return out


def rescale_path(path: Sequence[Point], rho: MultilinearForm, p: int) -> tuple[list[Point], list[int]]:
    """Make rho constant along a path by rescaling trailing coordinates.

    Returns the deduplicated sequence and the accumulated per-coordinate
    scalars, so that the last point is the target scaled coordinatewise.
    """
    pts = list(path)
    k = len(pts[0])
    scal = [1] * k
    for t in range(len(pts) - 1):
        diff = differing_axes(pts[t], pts[t + 1])
        if not diff:
            continue
        c = diff[0]
        lam = rho.evaluate(pts[t]) * inv_mod(rho.evaluate(pts[t + 1]), p) % p
        if lam == 1:
            continue
        for j in range(t + 1, len(pts)):
            pts[j] = scale_coordinate(pts[j], c, lam, p)
        scal[c] = scal[c] * lam % p
    out = [pts[0]]
    for q in pts[1:]:
        if q != out[-1]:
            out.append(q)
    return out, scal


def sequence_from_path(sig: SpaceSignature, path_idx: Sequence[int], rho: MultilinearForm,
                       s_bound: int) -> GoodSequence:
    pts = [sig.point_of_index(i) for i in path_idx]
    seq, scal = rescale_path(pts, rho, sig.p)
    if len(seq) - 1 > s_bound:
        raise PathTooLong(f"shortest path has {len(seq) - 1} steps, above the bound {s_bound}")
    return GoodSequence(tuple(seq), tuple(scal), s_bound)


def good_sequence(sig: SpaceSignature, betas: Sequence[MultilinearForm], rho: MultilinearForm,
                  z: Point, y: Point, s_bound: int | None = None, seed: int = 0,
                  graph: PointGraph | None = None) -> GoodSequence:
    if s_bound is None:
        s_bound = default_s_bound(sig.k)
    graph = graph or PointGraph(sig, betas, rho)
    zi, yi = sig.index_of(z), sig.index_of(y)
    for name, idx in (("z", zi), ("y", yi)):
        if not graph.mask[idx]:
            raise PreconditionFailed(f"{name} violates the constraints or has rho = 0")
    tree = graph.bfs(zi, seed)
    if yi not in tree.parent:
        lab = graph.labels()
        raise NotConnected("no path between z and y inside the constrained set",
                           int(lab[zi]), int(lab[yi]))
    return sequence_from_path(sig, tree.path_to(yi), rho, s_bound)
