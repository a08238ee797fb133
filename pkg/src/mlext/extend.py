"""Partial multilinear maps on varieties and their unique extension.

A map phi on a variety D is multilinear when, for any x, y in D differing in a
single coordinate with x (-) y in D, phi(x (-) y) = phi(x) - phi(y), and each
single-coordinate restriction respects scalar multiplication.

:func:`qr_extend` extends phi from B0 = B n {rho = 0} to B. For x in B \\ B0
it walks a good sequence z = q^0, ..., q^s = (lam_i x_i) inside B \\ B0 and
sets

    phi_ext(x) = rho(x) * (sum_i phi(q^{i+1} (-) q^i) + h0).

Any multilinear extension must satisfy this formula, so it is unique if it
exists; the audit recomputes every value along differently ordered BFS paths
and rejects the result if two paths disagree or multilinearity fails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AuditFailed, MultilinearityViolation, NotConnected, NotFound, PreconditionFailed
from .field import inv_mod, nullspace_mod_p, solve_mod_p
from .forms import (MultilinearForm, MultilinearMapH, Point, SpaceSignature, _vectors,
                    ominus, scale_coordinate)
from .paths import GoodSequence, PointGraph, default_s_bound, sequence_from_path
from .variety import Variety

Vector = tuple


def vadd(a: Vector, b: Vector, p: int) -> Vector:
    return tuple((x + y) % p for x, y in zip(a, b))


def vsub(a: Vector, b: Vector, p: int) -> Vector:
    return tuple((x - y) % p for x, y in zip(a, b))


def vscale(c: int, a: Vector, p: int) -> Vector:
    return tuple((c * x) % p for x in a)


@dataclass
class PartialMultilinearMap:
    domain: Variety
    codim_h: int
    table: dict

    @property
    def sig(self) -> SpaceSignature:
        return self.domain.sig

    @property
    def p(self) -> int:
        return self.domain.sig.p

    def __call__(self, x: Point) -> Vector:
        try:
            return self.table[x]
        except KeyError:
            raise PreconditionFailed(f"point {x} is outside the domain of the map") from None

    def __contains__(self, x: Point) -> bool:
        return x in self.table

    @classmethod
    def restrict(cls, domain: Variety, big: MultilinearMapH) -> "PartialMultilinearMap":
        rows = domain.point_rows()
        vals = big.values(rows)
        table = {domain.sig.point_from_row(r): tuple(int(c) for c in v) for r, v in zip(rows, vals)}
        return cls(domain, big.codim_h, table)

    @classmethod
    def from_array(cls, domain: Variety, codim_h: int, values: np.ndarray,
                   mask: np.ndarray | None = None) -> "PartialMultilinearMap":
        """Build from an (N, h) array over canonical indices of the whole space."""
        rows = domain.sig.points()
        if mask is None:
            mask = domain.mask(rows)
        idx = np.nonzero(mask)[0]
        table = {domain.sig.point_from_row(rows[i]): tuple(int(c) for c in values[i]) for i in idx}
        return cls(domain, codim_h, table)

    def as_array(self) -> tuple[np.ndarray, np.ndarray]:
        """(values (N, h), mask (N,)) over canonical indices of the whole space."""
        n = self.sig.size
        vals = np.zeros((n, self.codim_h), dtype=np.int64)
        mask = np.zeros(n, dtype=bool)
        for x, v in self.table.items():
            i = self.sig.index_of(x)
            vals[i] = v
            mask[i] = True
        return vals, mask

    def validate_domain(self) -> None:
        pts = set(self.domain.points())
        if pts != set(self.table):
            missing = len(pts - set(self.table))
            extra = len(set(self.table) - pts)
            raise PreconditionFailed(
                f"table keys differ from the domain ({missing} missing, {extra} extra)")

    def restrict_to(self, sub: Variety) -> "PartialMultilinearMap":
        pts = sub.points()
        table = {}
        for x in pts:
            if x not in self.table:
                raise PreconditionFailed(f"{x} lies in the requested subvariety but not in the domain")
            table[x] = self.table[x]
        return PartialMultilinearMap(sub, self.codim_h, table)

    def disagreements(self, other: "PartialMultilinearMap | MultilinearMapH") -> list[Point]:
        out = []
        for x, v in self.table.items():
            if isinstance(other, MultilinearMapH):
                if other.evaluate(x) != v:
                    out.append(x)
            elif x in other.table and other.table[x] != v:
                out.append(x)
        return out


# ---------------------------------------------------------------------------
# multilinearity


def _axis_tables(p: int, n: int):
    vecs = _vectors(p, n)
    count = len(vecs)
    weights = p ** np.arange(n - 1, -1, -1)
    sub = ((vecs[:, None, :] - vecs[None, :, :]) % p) @ weights          # [cur, v] -> idx(cur - v)
    scal = ((np.arange(p)[None, :, None] * vecs[:, None, :]) % p) @ weights  # [cur, lam]
    return count, sub, scal


@dataclass(frozen=True)
class MultilinearityCheck:
    ok: bool
    kind: str | None = None          # "ominus" or "scalar"
    x: Point | None = None
    y: Point | None = None           # second point (ominus) or None
    scalar: int | None = None
    axis: int | None = None

    def __bool__(self):
        return self.ok


def _index_structure(sig: SpaceSignature):
    counts = [sig.p ** n for n in sig.dims]
    strides, acc = [], 1
    for c in reversed(counts):
        strides.append(acc)
        acc *= c
    return counts, list(reversed(strides))


def check_multilinear_arrays(sig: SpaceSignature, vals: np.ndarray,
                             mask: np.ndarray) -> MultilinearityCheck:
    p = sig.p
    counts, strides = _index_structure(sig)
    dom = np.nonzero(mask)[0]
    failures = []
    for d in range(sig.k):
        count, sub, scal = _axis_tables(p, sig.dims[d])
        cur = (dom // strides[d]) % count
        base = dom - cur * strides[d]
        for v in range(count):
            y = base + v * strides[d]
            zz = base + sub[cur, v] * strides[d]
            ok = (cur != v) & mask[y] & mask[zz]
            if not ok.any():
                continue
            xs, ys, zs = dom[ok], y[ok], zz[ok]
            bad = ((vals[zs] - vals[xs] + vals[ys]) % p).any(axis=1)
            if bad.any():
                i = int(np.argmax(bad))
                failures.append((int(xs[i]), "ominus", int(ys[i]), None, d))
        for lam in range(p):
            y = base + scal[cur, lam] * strides[d]
            inside = mask[y]
            bad = inside & ((vals[y] - lam * vals[dom]) % p).any(axis=1)
            if bad.any():
                i = int(np.argmax(bad))
                failures.append((int(dom[i]), "scalar", None, lam, d))
    if not failures:
        return MultilinearityCheck(True)
    xi, kind, yi, lam, d = min(failures, key=lambda t: (t[0], t[4], t[1]))
    return MultilinearityCheck(False, kind, sig.point_of_index(xi),
                               None if yi is None else sig.point_of_index(yi), lam, d)


def check_multilinear(phi: PartialMultilinearMap) -> MultilinearityCheck:
    """Exhaustive check of the ominus law and the single-coordinate scalar law."""
    vals, mask = phi.as_array()
    return check_multilinear_arrays(phi.sig, vals, mask)


def multilinear_constraints(domain: Variety) -> tuple[np.ndarray, list[Point]]:
    """Linear system whose solutions are exactly the multilinear maps on ``domain``.

    Returns the constraint matrix (one column per domain point, canonical order)
    and the list of domain points.
    """
    sig = domain.sig
    p = sig.p
    rows_all = sig.points()
    mask = domain.mask(rows_all)
    dom = np.nonzero(mask)[0]
    col = np.full(len(mask), -1, dtype=np.int64)
    col[dom] = np.arange(len(dom))
    counts, strides = _index_structure(sig)
    eqs = []
    for d in range(sig.k):
        count, sub, scal = _axis_tables(p, sig.dims[d])
        cur = (dom // strides[d]) % count
        base = dom - cur * strides[d]
        for v in range(count):
            y = base + v * strides[d]
            zz = base + sub[cur, v] * strides[d]
            ok = (cur != v) & mask[y] & mask[zz] & (dom < y)
            for a, b, c in zip(dom[ok], y[ok], zz[ok]):
                eq: dict = {}
                for i, s in ((c, 1), (a, -1), (b, 1)):
                    eq[col[i]] = eq.get(col[i], 0) + s
                eqs.append(eq)
        for lam in range(p):
            if lam == 1:
                continue
            y = base + scal[cur, lam] * strides[d]
            ok = mask[y]
            for a, b in zip(dom[ok], y[ok]):
                eq = {}
                eq[col[b]] = eq.get(col[b], 0) + 1
                eq[col[a]] = eq.get(col[a], 0) - lam
                eqs.append(eq)
    mat = np.zeros((len(eqs), len(dom)), dtype=np.int64)
    for i, eq in enumerate(eqs):
        for c, v in eq.items():
            mat[i, c] = (mat[i, c] + v) % p
    if len(mat):
        mat = np.unique(mat[mat.any(axis=1)], axis=0)
    pts = [sig.point_from_row(rows_all[i]) for i in dom]
    return mat, pts


def multilinear_map_basis(domain: Variety) -> tuple[np.ndarray, list[Point]]:
    mat, pts = multilinear_constraints(domain)
    if len(mat) == 0:
        return np.eye(len(pts), dtype=np.int64), pts
    return nullspace_mod_p(mat, domain.sig.p), pts


def random_multilinear_map(domain: Variety, codim_h: int, rng: np.random.Generator,
                           basis: tuple[np.ndarray, list[Point]] | None = None) -> PartialMultilinearMap:
    """Uniformly random element of the space of multilinear maps domain -> F_p^h."""
    p = domain.sig.p
    b, pts = basis if basis is not None else multilinear_map_basis(domain)
    coeff = rng.integers(0, p, size=(codim_h, len(b)))
    vals = (coeff @ b) % p if len(b) else np.zeros((codim_h, len(pts)), dtype=np.int64)
    table = {x: tuple(int(vals[j, i]) for j in range(codim_h)) for i, x in enumerate(pts)}
    return PartialMultilinearMap(domain, codim_h, table)


@dataclass(frozen=True)
class GlobalExtension:
    exists: bool
    witness: MultilinearMapH | None
    rank_a: tuple[int, ...]      # per codomain coordinate
    rank_aug: tuple[int, ...]


def global_extension(phi: PartialMultilinearMap) -> GlobalExtension:
    """Decide whether some global multilinear map agrees with phi on its whole domain.

    Agreement is linear in the prod(n_i) coefficients of each component, so
    the question is solvability of a linear system over F_p.
    """
    sig, p = phi.sig, phi.p
    pts = sorted(phi.table, key=sig.index_of)
    index_tuples = list(itertools.product(*[range(n) for n in sig.dims]))
    a = np.zeros((len(pts), len(index_tuples)), dtype=np.int64)
    for r, x in enumerate(pts):
        for c, idx in enumerate(index_tuples):
            prod = 1
            for i, j in enumerate(idx):
                prod *= x[i][j]
            a[r, c] = prod % p
    comps, ranks_a, ranks_aug, ok = [], [], [], True
    for h in range(phi.codim_h):
        b = np.array([phi.table[x][h] for x in pts], dtype=np.int64)
        if len(pts):
            sol, ra, raug = solve_mod_p(a, b, p)
        else:
            sol, ra, raug = np.zeros(len(index_tuples), dtype=np.int64), 0, 0
        ranks_a.append(ra)
        ranks_aug.append(raug)
        if sol is None:
            ok = False
            continue
        comps.append(MultilinearForm(sig, tuple(range(sig.k)), sol.reshape(sig.dims)))
    witness = MultilinearMapH(sig, comps) if ok else None
    return GlobalExtension(ok, witness, tuple(ranks_a), tuple(ranks_aug))


# ---------------------------------------------------------------------------
# point searches


def find_point_with_value_one(rho: MultilinearForm, betas: Sequence[MultilinearForm] = (),
                              gammas: Sequence[MultilinearForm] = ()) -> Point:
    """First point in canonical order with rho = 1 and every beta, gamma zero."""
    sig = rho.sig
    rows = sig.points()
    mask = rho.values(rows) == 1
    for f in list(betas) + list(gammas):
        mask &= f.values(rows) == 0
    hits = np.nonzero(mask)[0]
    if hits.size == 0:
        raise NotFound("no point with rho = 1 on the zero set of the given forms")
    return sig.point_from_row(rows[hits[0]])


def proper_subsets(k: int) -> list[tuple[int, ...]]:
    return [s for r in range(1, k) for s in itertools.combinations(range(k), r)]


def nonempty_subsets(axes: Sequence[int]) -> list[tuple[int, ...]]:
    return [s for r in range(1, len(axes) + 1) for s in itertools.combinations(axes, r)]


@dataclass
class OrthogonalPoint:
    e: Point
    checked_conditions: dict
    witnesses: dict = field(default_factory=dict)  # (c1, c2, tau) -> (u, v)


def _orthogonality_forms(rho: MultilinearForm, betas: Sequence[MultilinearForm],
                         seq_points: Iterable[Point]) -> tuple[list, list]:
    """Forms that must vanish at e for conditions (ii) and (iii)."""
    k = rho.sig.k
    cond2: dict = {}
    cond3: dict = {}
    pts = list(dict.fromkeys(seq_points))
    for q in pts:
        for I in proper_subsets(k):
            fixed = {a: q[a] for a in range(k) if a not in I}
            f = rho.slice(fixed)
            if not f.is_zero():
                cond2[hash(f)] = f
        for b in betas:
            for J in nonempty_subsets(b.axes):
                fixed = {a: q[a] for a in b.axes if a not in J}
                f = b.slice(fixed) if fixed else b
                if not f.is_zero():
                    cond3[hash(f)] = f
    return list(cond2.values()), list(cond3.values())


def _unit_vectors_with_product_one(p: int, k: int) -> list[tuple[int, ...]]:
    out = []
    for head in itertools.product(range(1, p), repeat=k - 1):
        prod = 1
        for t in head:
            prod = prod * t % p
        out.append(head + (inv_mod(prod, p),))
    return out


def _plane_table(form: MultilinearForm, c1: int, c2: int,
                 fixed: Mapping[int, Sequence[int]]) -> np.ndarray:
    """Values of ``form`` on G_c1 x G_c2 with the other coordinates fixed."""
    sig, p = form.sig, form.p
    n1, n2 = sig.p ** sig.dims[c1], sig.p ** sig.dims[c2]
    f = form.partial_value(fixed)
    if isinstance(f, int):
        return np.full((n1, n2), f, dtype=np.int64)
    v1, v2 = sig.vectors(c1), sig.vectors(c2)
    if f.axes == (c1, c2) or f.axes == tuple(sorted((c1, c2))):
        m = f.coeffs if c1 < c2 else f.coeffs.T
        return (v1 @ m @ v2.T) % p
    if f.axes == (c1,):
        return np.repeat(((v1 @ f.coeffs) % p)[:, None], n2, axis=1)
    return np.repeat(((v2 @ f.coeffs) % p)[None, :], n1, axis=0)


def splitting_partner(rho: MultilinearForm, betas: Sequence[MultilinearForm], z: Point, e: Point,
                      c1: int, c2: int, tau: Sequence[int]) -> tuple[tuple, tuple] | None:
    """Search (u, v) making the nine-point configuration needed for cancellation.

    With w_j = z_j + tau_j e_j off the pair and e'_c = tau_c e_c, require
    rho(u, v, w) = 1 and every other value of rho and of each beta at points
    of {z_c1, e'_c1, u} x {z_c2, e'_c2, v} x {w} involving u or v to vanish.
    """
    sig, p = rho.sig, rho.p
    fixed = {j: tuple((z[j][i] + tau[j] * e[j][i]) % p for i in range(sig.dims[j]))
             for j in range(sig.k) if j not in (c1, c2)}
    e1 = tuple((tau[c1] * c) % p for c in e[c1])
    e2 = tuple((tau[c2] * c) % p for c in e[c2])
    z1i, e1i = sig.vector_index(c1, z[c1]), sig.vector_index(c1, e1)
    z2i, e2i = sig.vector_index(c2, z[c2]), sig.vector_index(c2, e2)
    tr = _plane_table(rho, c1, c2, fixed)
    row_ok = (tr[:, z2i] == 0) & (tr[:, e2i] == 0)
    col_ok = (tr[z1i, :] == 0) & (tr[e1i, :] == 0)
    pair_ok = tr == 1
    for b in betas:
        tb = _plane_table(b, c1, c2, fixed)
        row_ok &= (tb[:, z2i] == 0) & (tb[:, e2i] == 0)
        col_ok &= (tb[z1i, :] == 0) & (tb[e1i, :] == 0)
        pair_ok &= tb == 0
    ok = row_ok[:, None] & col_ok[None, :] & pair_ok
    hits = np.argwhere(ok)
    if hits.size == 0:
        return None
    iu, iv = hits[0]
    return (tuple(int(c) for c in sig.vectors(c1)[iu]), tuple(int(c) for c in sig.vectors(c2)[iv]))


def condition_iv(rho: MultilinearForm, betas: Sequence[MultilinearForm],
                 z: Point, e: Point) -> dict | None:
    sig = rho.sig
    out = {}
    for c1, c2 in itertools.combinations(range(sig.k), 2):
        for tau in _unit_vectors_with_product_one(sig.p, sig.k):
            uv = splitting_partner(rho, betas, z, e, c1, c2, tau)
            if uv is None:
                return None
            out[(c1, c2, tau)] = uv
    return out


def find_orthogonal_point(rho: MultilinearForm, betas: Sequence[MultilinearForm],
                          sequences: Sequence[GoodSequence | Sequence[Point]], z: Point,
                          mode: str = "basic") -> OrthogonalPoint:
    """First point e (canonical order) orthogonal to the given sequences.

    basic: rho(e) = -1, mixed slices of rho with every sequence point vanish,
    and every beta_j(e_J, q_{I_j \\ J}) vanishes for nonempty J in I_j.
    strong: additionally the splitting partner (u, v) exists for every pair
    of coordinates and every tau with product 1.
    """
    if mode not in ("basic", "strong"):
        raise ValueError(f"unknown mode {mode!r}")
    sig, p = rho.sig, rho.p
    pts: list[Point] = [z]
    for s in sequences:
        pts.extend(s.points if isinstance(s, GoodSequence) else s)
    rows = sig.points()
    mask = rho.values(rows) == p - 1
    c2, c3 = _orthogonality_forms(rho, betas, pts)
    for f in c2 + c3:
        if not mask.any():
            break
        mask &= f.values(rows) == 0
    cond = {"i": True, "ii": len(c2), "iii": len(c3), "iv": None}
    for idx in np.nonzero(mask)[0]:
        e = sig.point_from_row(rows[idx])
        if mode == "basic":
            return OrthogonalPoint(e, cond)
        wit = condition_iv(rho, betas, z, e)
        if wit is not None:
            return OrthogonalPoint(e, dict(cond, iv=True), wit)
    raise NotFound(f"no {mode} orthogonal point exists")


# ---------------------------------------------------------------------------
# extension


@dataclass
class ExtensionResult:
    map: PartialMultilinearMap
    audit: dict


def _extension_value(phi_table: dict, seq: GoodSequence, rho_x: int, h0: Vector, p: int) -> Vector:
    acc = tuple(h0)
    for a, b in zip(seq.points, seq.points[1:]):
        d = ominus(b, a, p)
        try:
            acc = vadd(acc, phi_table[d], p)
        except KeyError:
            raise AuditFailed(f"difference point {d} is outside the domain of phi") from None
    return vscale(rho_x, acc, p)


def qr_extend(B: Variety, rho: MultilinearForm, phi: PartialMultilinearMap, z: Point,
              h0: Sequence[int], seed: int = 0, audit_seed: int | None = None,
              s_bound: int | None = None, audit_sample: int | None = None,
              check: bool = True) -> ExtensionResult:
    """Unique multilinear extension of phi from B n {rho = 0} to B with phi_ext(z) = h0."""
    sig, p = B.sig, B.sig.p
    h = phi.codim_h
    h0 = tuple(int(c) % p for c in h0)
    if len(h0) != h:
        raise PreconditionFailed(f"h0 has length {len(h0)}, codomain has dimension {h}")
    if s_bound is None:
        s_bound = default_s_bound(sig.k)
    b0 = B.with_constraints(rho)
    if set(phi.table) != set(b0.points()):
        raise PreconditionFailed("phi must be defined exactly on B n {rho = 0}")
    if check:
        mc = check_multilinear(phi)
        if not mc:
            raise MultilinearityViolation("input map is not multilinear", {"check": mc})
    graph = PointGraph(sig, B.constraints, rho)
    members = graph.members()
    if members.size == 0:
        return ExtensionResult(PartialMultilinearMap(B, h, dict(phi.table)),
                               {"trivial": True, "extended_points": 0})
    if not B.contains(z) or rho.evaluate(z) == 0:
        raise PreconditionFailed("z must lie in B with rho(z) != 0")
    rz = rho.evaluate(z)
    z1, h01 = z, h0
    if rz != 1:
        inv = inv_mod(rz, p)
        z1 = scale_coordinate(z, 0, inv, p)
        h01 = vscale(inv, h0, p)
    zi = sig.index_of(z1)
    rows = sig.points()

    def run(sd: int, targets) -> tuple[dict, dict]:
        tree = graph.bfs(zi, sd)
        vals, seqs = {}, {}
        for t in targets:
            if t not in tree.parent:
                lab = graph.labels()
                raise NotConnected(f"point {sig.point_of_index(int(t))} is not reachable from z",
                                   int(lab[zi]), int(lab[t]))
            seq = sequence_from_path(sig, tree.path_to(int(t)), rho, s_bound)
            rx = int(graph.rho_values[t])
            vals[int(t)] = _extension_value(phi.table, seq, rx, h01, p)
            seqs[int(t)] = seq
        return vals, seqs

    vals, seqs = run(seed, members)
    table = dict(phi.table)
    for t, v in vals.items():
        table[sig.point_from_row(rows[t])] = v
    out = PartialMultilinearMap(B, h, table)

    audit_seed = seed + 1 if audit_seed is None else audit_seed
    sample = members if audit_sample is None else members[:: max(1, len(members) // audit_sample)]
    vals2, seqs2 = run(audit_seed, sample)
    for t, v in vals2.items():
        if vals[t] != v:
            raise AuditFailed("two good sequences give different values", {
                "point": sig.point_of_index(t), "values": (vals[t], v),
                "sequences": (seqs[t].points, seqs2[t].points)})
    if out.table[z] != h0:
        raise AuditFailed("extension does not send z to h0")
    mc = check_multilinear(out)
    if not mc:
        raise MultilinearityViolation("extension is not multilinear", {"check": mc})
    audit = {"trivial": False, "extended_points": int(members.size), "audited_points": len(vals2),
             "seeds": (seed, audit_seed), "max_s": max(s.s for s in seqs.values()),
             "multilinear": True}
    return ExtensionResult(out, audit)
