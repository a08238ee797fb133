"""Exact bias, analytic rank, matrix rank and partition-rank bounds.

Bias of a multilinear form alpha on axes A = (a_1, ..., a_r) is the average of
omega^alpha over G_A. Averaging over the last axis first, the inner average is
1 when the induced linear form on G_{a_r} vanishes and 0 otherwise, so the
bias is the fraction of prefixes x_{a_1..a_{r-1}} whose slice form is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import BudgetExhausted, PreconditionFailed
from .field import rank_factorization, rank_mod_p
from .forms import MultiaffineForm, MultilinearForm, SpaceSignature, _vectors, check_cap
from .variety import Variety

LOG_TOL = 1e-12


@dataclass(frozen=True)
class BiasValue:
    value: Fraction

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class AnalyticRank:
    bias: Fraction
    exact: Fraction | None  # set when bias is an integral power of 1/f
    approx: float           # math.inf when bias == 0

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def __float__(self):
        return self.approx


def _slice_zero_count(form: MultilinearForm) -> tuple[int, int]:
    """(#prefixes with vanishing last-axis slice, #prefixes)."""
    p = form.p
    dims = form.coeffs.shape
    if len(dims) == 1:
        return (1 if form.is_zero() else 0), 1
    t = form.coeffs.reshape(1, *dims)
    for n in dims[:-1]:
        vecs = _vectors(p, n)
        # t: (prefixes, n, rest...) -> (prefixes * p^n, rest...)
        t = np.tensordot(t, vecs, axes=([1], [1]))          # (prefixes, rest..., p^n)
        t = np.moveaxis(t, -1, 1) % p                        # (prefixes, p^n, rest...)
        t = t.reshape(-1, *t.shape[2:])
    zero_rows = int((~t.any(axis=1)).sum())
    return zero_rows, t.shape[0]


def bias(form: MultilinearForm) -> BiasValue:
    check_cap(form.sig.space_size(form.axes[:-1]))
    zeros, total = _slice_zero_count(form)
    return BiasValue(Fraction(zeros, total))


def _exact_log(b: Fraction, f: int) -> Fraction | None:
    if b <= 0:
        return None
    num, den = b.numerator, b.denominator
    if num != 1:
        return None
    r = 0
    while den % f == 0:
        den //= f
        r += 1
    return Fraction(r) if den == 1 else None


def analytic_rank(form: MultilinearForm) -> AnalyticRank:
    b = bias(form).value
    f = form.p
    if b == 0:
        return AnalyticRank(b, None, math.inf)
    exact = _exact_log(b, f)
    approx = float(exact) if exact is not None else -math.log(b.numerator / b.denominator) / math.log(f)
    return AnalyticRank(b, exact, approx)


def matrix_rank(form: MultilinearForm) -> int:
    if form.arity != 2:
        raise PreconditionFailed(f"matrix_rank needs a bilinear form, got arity {form.arity}")
    return rank_mod_p(form.coeffs, form.p)


# ---------------------------------------------------------------------------
# character sums from value distributions


def value_counts(form: MultilinearForm | MultiaffineForm) -> np.ndarray:
    rows = form.sig.points()
    return np.bincount(form.values(rows), minlength=form.sig.p)


def character_sum_sq(counts: Sequence[int], p: int):
    """|sum_a counts[a] omega^a|^2, exact for p in {2, 3}, float otherwise."""
    c = [int(v) for v in counts]
    if p == 2:
        return Fraction((c[0] - c[1]) ** 2)
    if p == 3:
        # omega + omega^2 = -1
        return Fraction(c[0] ** 2 + c[1] ** 2 + c[2] ** 2 - c[0] * c[1] - c[1] * c[2] - c[0] * c[2])
    re = sum(c[a] * math.cos(2 * math.pi * a / p) for a in range(p))
    im = sum(c[a] * math.sin(2 * math.pi * a / p) for a in range(p))
    return re * re + im * im


def character_average(counts: Sequence[int], p: int) -> complex:
    n = sum(counts)
    s = sum(int(counts[a]) * complex(math.cos(2 * math.pi * a / p), math.sin(2 * math.pi * a / p))
            for a in range(p))
    return s / n


def mlbias_holds(form: MultiaffineForm) -> tuple[bool, object, Fraction]:
    """Check |E chi(alpha)| <= E chi(alpha_lin) and return (holds, |E|^2, E_lin).

    For p in {2, 3} the comparison is made on squares, in exact rationals.
    """
    p = form.sig.p
    counts = value_counts(form)
    n = int(counts.sum())
    lhs_sq = character_sum_sq(counts, p)
    rhs = bias(form.multilinear_part()).value
    if isinstance(lhs_sq, Fraction):
        lhs_sq = lhs_sq / (n * n)
        return lhs_sq <= rhs * rhs, lhs_sq, rhs
    lhs_sq = lhs_sq / (n * n)
    return lhs_sq <= float(rhs) ** 2 + 1e-9, lhs_sq, rhs


# ---------------------------------------------------------------------------
# partition rank


@dataclass(frozen=True)
class PartitionDecomposition:
    target: MultilinearForm
    terms: tuple[tuple[MultilinearForm, MultilinearForm], ...] = ()

    def __len__(self):
        return len(self.terms)

    def reconstruct(self) -> MultilinearForm:
        acc = MultilinearForm.zero(self.target.sig, self.target.axes)
        for beta, gamma in self.terms:
            acc = acc + beta.outer(gamma)
        return acc

    def verify(self) -> bool:
        """Coefficient-level and pointwise agreement with the target."""
        if self.reconstruct() != self.target:
            return False
        rows = self.target.sig.points()
        got = np.zeros(len(rows), dtype=np.int64)
        for beta, gamma in self.terms:
            got = got + beta.values(rows) * gamma.values(rows)
        return bool(np.array_equal(got % self.target.p, self.target.values(rows)))

    def factors(self) -> list[MultilinearForm]:
        return [f for term in self.terms for f in term]


@dataclass(frozen=True)
class PartitionRankBounds:
    lower: int
    upper: int
    witness: PartitionDecomposition
    exact: int | None = None
    budget_exhausted: bool = False
    method: str = ""


def _bipartitions(axes: tuple[int, ...]):
    """Unordered splits {I, J} of the axes, I holding the first axis."""
    first, rest = axes[0], axes[1:]
    for r in range(len(rest) + 1):
        for extra in combinations(rest, r):
            left = (first,) + extra
            right = tuple(a for a in axes if a not in left)
            if right:
                yield left, right


def _form_from_flat(sig: SpaceSignature, axes: tuple[int, ...], vec) -> MultilinearForm:
    return MultilinearForm(sig, axes, np.asarray(vec).reshape(tuple(sig.dims[a] for a in axes)))


def flattening_decomposition(form: MultilinearForm) -> PartitionDecomposition:
    """Best decomposition obtained by factoring a single flattening matrix.

    Every split {I, J} of the axes gives sum over rank(flattening) terms of the
    form beta(x_I) gamma(x_J); the split with the smallest rank wins, ties
    broken by enumeration order.
    """
    sig, axes, p = form.sig, form.axes, form.p
    if form.is_zero():
        return PartitionDecomposition(form, ())
    best = None
    for left, right in _bipartitions(axes):
        m = form.flattening(left)
        r = rank_mod_p(m, p)
        if best is None or r < best[0]:
            best = (r, left, right, m)
    r, left, right, m = best
    lmat, rmat = rank_factorization(m, p)
    terms = tuple((_form_from_flat(sig, left, lmat[:, i]), _form_from_flat(sig, right, rmat[i]))
                  for i in range(r))
    return PartitionDecomposition(form, terms)


def _rank_one_terms(form: MultilinearForm, budget: int):
    """Distinct nonzero products beta(x_I) gamma(x_J) over every split {I, J}.

    Returns ``(arr, origin)``: ``arr`` holds one flattened coefficient tensor
    per row, ``origin[i] = (left, right, u, w)`` rebuilds the two factors.
    """
    sig, axes, p = form.sig, form.axes, form.p
    splits = []
    total = 0
    for left, right in _bipartitions(axes):
        nl = int(np.prod([sig.dims[a] for a in left]))
        nr = int(np.prod([sig.dims[a] for a in right]))
        total += (p ** nl - 1) * (p ** nr - 1)
        splits.append((left, right, nl, nr))
    if total > budget:
        raise BudgetExhausted(f"{total} rank-one candidates exceed the budget {budget}")
    blocks, origin = [], []
    for left, right, nl, nr in splits:
        lv = _vectors(p, nl)[1:]
        rv = _vectors(p, nr)[1:]
        outer = (lv[:, None, :, None] * rv[None, :, None, :]) % p   # (Lu, Rw, nl, nr)
        left_shape = tuple(sig.dims[a] for a in left)
        right_shape = tuple(sig.dims[a] for a in right)
        t = outer.reshape(len(lv) * len(rv), *left_shape, *right_shape)
        order = left + right
        perm = [0] + [1 + order.index(a) for a in axes]
        t = np.transpose(t, perm).reshape(len(lv) * len(rv), -1)
        blocks.append(t)
        for u in lv:
            for w in rv:
                origin.append((left, right, u, w))
    arr = np.concatenate(blocks).astype(np.uint8)
    _, first = np.unique(arr, axis=0, return_index=True)
    first.sort()
    return arr[first], [origin[i] for i in first]


def exhaustive_partition_rank(form: MultilinearForm, budget: int = 200_000,
                              upper: int | None = None) -> tuple[int, PartitionDecomposition]:
    """Exact partition rank by meet-in-the-middle over sums of rank-one terms.

    ``budget`` bounds both the number of rank-one candidates and the size of
    every intermediate sum table; :class:`BudgetExhausted` is raised beyond it.
    """
    if form.is_zero():
        return 0, PartitionDecomposition(form, ())
    if upper is None:
        upper = len(flattening_decomposition(form))
    p, sig = form.p, form.sig
    ones, origin = _rank_one_terms(form, budget)
    target = form.coeffs.reshape(-1).astype(np.int64)
    width = target.size

    def keys(arr):
        arr = np.ascontiguousarray(arr % p, dtype=np.uint8)
        return [row.tobytes() for row in arr]

    # tables[j]: sums of at most j rank-one terms -> indices of those terms
    zero = np.zeros(width, dtype=np.uint8).tobytes()
    tables: list[dict[bytes, tuple[int, ...]]] = [{zero: ()}]
    ones64 = ones.astype(np.int64)

    def grow():
        prev = tables[-1]
        nxt = dict(prev)
        for k_prev, combo in prev.items():
            base = np.frombuffer(k_prev, dtype=np.uint8).astype(np.int64)
            for i, kk in enumerate(keys(base + ones64)):
                if kk not in nxt:
                    nxt[kk] = combo + (i,)
            if len(nxt) > budget:
                raise BudgetExhausted(f"sum table exceeds the budget {budget}")
        tables.append(nxt)

    for r in range(1, upper):
        a, b = r // 2, r - r // 2
        while len(tables) <= b:
            grow()
        items = list(tables[a].items())
        base = np.array([np.frombuffer(k, dtype=np.uint8) for k, _ in items], dtype=np.int64)
        for (k_a, combo_a), rest in zip(items, keys(target[None, :] - base)):
            hit = tables[b].get(rest)
            if hit is not None:
                terms = []
                for i in combo_a + hit:
                    left, right, u, w = origin[i]
                    terms.append((_form_from_flat(sig, left, u), _form_from_flat(sig, right, w)))
                return len(terms), PartitionDecomposition(form, tuple(terms))
    return upper, flattening_decomposition(form)


def _in_exact_regime(form: MultilinearForm) -> bool:
    return form.arity == 3 and form.p == 2 and all(form.sig.dims[a] <= 2 for a in form.axes)


def partition_rank_bounds(form: MultilinearForm, budget: int = 200_000,
                          exact_search: bool | None = None) -> PartitionRankBounds:
    """Lower bound from analytic rank, upper bound with a verified witness.

    Bilinear forms delegate to matrix rank. For higher arity the upper bound
    comes from the cheapest flattening; inside the exact regime (or when
    ``exact_search`` is forced) a meet-in-the-middle search tightens it.
    """
    if form.is_zero():
        return PartitionRankBounds(0, 0, PartitionDecomposition(form, ()), exact=0, method="zero")
    if form.arity == 1:
        # a nonzero linear form admits no decomposition with both sides nonempty
        return PartitionRankBounds(1, 1, PartitionDecomposition(form, ()), exact=None, method="linear")
    ar = analytic_rank(form)
    if ar.is_exact:
        lower = int(ar.exact)
    else:
        lower = math.ceil(ar.approx - 1e-9)
    lower = max(lower, 1)
    flat = flattening_decomposition(form)
    if form.arity == 2:
        r = matrix_rank(form)
        return PartitionRankBounds(lower, r, flat, exact=r, method="matrix-rank")
    if exact_search is None:
        exact_search = _in_exact_regime(form)
    if not exact_search:
        return PartitionRankBounds(lower, len(flat), flat, exact=None, method="flattening")
    try:
        value, dec = exhaustive_partition_rank(form, budget, upper=len(flat))
    except BudgetExhausted:
        return PartitionRankBounds(lower, len(flat), flat, exact=None,
                                   budget_exhausted=True, method="flattening")
    return PartitionRankBounds(lower, value, dec, exact=value, method="exhaustive")


# ---------------------------------------------------------------------------
# zero-set containment


@dataclass(frozen=True)
class ContainmentCertificate:
    targets: tuple[MultilinearForm, ...]
    decompositions: tuple[PartitionDecomposition, ...]
    gammas: tuple[MultilinearForm, ...]
    checked_points: int
    verified: bool


def containment_from_decomposition(targets: Sequence[MultilinearForm],
                                   budget: int = 200_000) -> ContainmentCertificate:
    """Forms on strictly smaller axis sets whose joint zeros are zeros of every target.

    The gamma list holds both factors of every decomposition term.
    """
    decs = []
    for j, alpha in enumerate(targets):
        b = partition_rank_bounds(alpha, budget)
        if not b.witness.verify():
            raise BudgetExhausted(f"no verified decomposition for target {j}")
        decs.append(b.witness)
    gammas = tuple(f for d in decs for f in d.factors())
    checked, ok = 0, True
    if targets:
        sig = targets[0].sig
        rows = sig.points()
        zero = Variety(sig, gammas).mask(rows)
        sub = rows[zero]
        checked = len(sub)
        ok = all(not t.values(sub).any() for t in targets)
    return ContainmentCertificate(tuple(targets), tuple(decs), gammas, checked, ok)
