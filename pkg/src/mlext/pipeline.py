"""From a multilinear map on a variety to a global multilinear map.

The pipeline walks a chain of down-sets P[k] = F_1 > F_2 > ... > {emptyset},
removing one maximal set S per stage (largest sets first, ties broken
lexicographically). A stage eliminates every constraint supported exactly on
S:

1. the S-supported constraints are recombined into high-bias forms alpha and
   the complementary forms rho;
2. each rho_i is removed by extending every S-slice of the current map with
   :func:`~mlext.extend.qr_extend`, anchored at a point z_S sent to 0, at the
   cost of new constraints on the remaining coordinates;
3. each alpha is replaced by the factors of a partition decomposition, which
   live on strictly smaller axis sets.

After the last stage the domain is the whole space and the map is global.
The agreement variety is the intersection of every intermediate domain.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AuditFailed, MlextError, MultilinearityViolation, PreconditionFailed
from .extend import PartialMultilinearMap, check_multilinear, find_point_with_value_one, qr_extend
from .field import independent_mod_p
from .forms import (MultilinearForm, MultilinearMapH, Point, SpaceSignature, combine,
                    form_from_record, form_record)
from .rank import bias, containment_from_decomposition
from .variety import Variety

CERTIFICATE_FORMAT = "mlext-certificate/1"


def removal_schedule(k: int) -> list[tuple[int, ...]]:
    """Nonempty subsets of range(k), largest first, ties in lexicographic order."""
    sets = [s for r in range(1, k + 1) for s in itertools.combinations(range(k), r)]
    return sorted(sets, key=lambda s: (-len(s), s))


def downsets(k: int) -> list[list[tuple[int, ...]]]:
    """F_1, ..., F_{2^k - 1}: the down-set in force before each removal."""
    order = removal_schedule(k)
    out = []
    for i in range(len(order)):
        out.append([()] + sorted(order[i:], key=lambda s: (len(s), s)))
    return out


def _dedupe(forms: Sequence[MultilinearForm]) -> list[MultilinearForm]:
    out: list[MultilinearForm] = []
    for f in forms:
        if not f.is_zero() and f not in out:
            out.append(f)
    return out


def high_bias_split(forms: Sequence[MultilinearForm], t: int = 1):
    """Greedy maximal independent family of combinations with bias >= f^-t.

    Candidates are the nonzero coefficient vectors with leading entry 1,
    visited by decreasing exact bias and then in canonical order. Returns
    (lambdas, mus, biases) where mus complete lambdas to a basis of F^s with
    standard basis vectors.
    """
    s = len(forms)
    if s == 0:
        return [], [], {}
    p = forms[0].p
    thr = Fraction(1, p ** t)
    cands, biases = [], {}
    for lam in itertools.product(range(p), repeat=s):
        nz = [c for c in lam if c]
        if not nz or nz[0] != 1:
            continue
        b = bias(combine(list(forms), lam)).value
        biases[lam] = b
        if b >= thr:
            cands.append((-b, lam))
    cands.sort()
    lambdas: list[tuple[int, ...]] = []
    for _, lam in cands:
        if independent_mod_p(lambdas + [lam], p):
            lambdas.append(lam)
    mus = []
    for j in range(s):
        e = tuple(1 if i == j else 0 for i in range(s))
        if independent_mod_p(lambdas + mus + [e], p):
            mus.append(e)
    return lambdas, mus, biases


@dataclass
class StageRecord:
    removed: tuple[int, ...]
    downset: list[tuple[int, ...]]
    s: int = 0
    lambdas: list = field(default_factory=list)
    mus: list = field(default_factory=list)
    demoted: list = field(default_factory=list)
    anchors: list = field(default_factory=list)          # z_S per rho_i
    slice_constraints: list = field(default_factory=list)  # B^{s-n}
    slice_codims: list = field(default_factory=list)     # codim of B^i, i = 1..s-n
    gammas: list = field(default_factory=list)
    domain: Variety | None = None
    extended_slices: int = 0

    def to_dict(self) -> dict:
        return {
            "removed": [a + 1 for a in self.removed],
            "downset": [[a + 1 for a in s] for s in self.downset],
            "s": self.s,
            "lambdas": [list(v) for v in self.lambdas],
            "mus": [list(v) for v in self.mus],
            "demoted": [list(v) for v in self.demoted],
            "anchors": [[list(c) for c in z] for z in self.anchors],
            "slice_constraints": [form_record(f) for f in self.slice_constraints],
            "slice_codims": list(self.slice_codims),
            "gammas": [form_record(f) for f in self.gammas],
            "domain": None if self.domain is None else [form_record(f) for f in self.domain.constraints],
            "extended_slices": self.extended_slices,
        }


@dataclass
class StepResult:
    gammas: list
    slice_constraints: list
    psi: PartialMultilinearMap
    record: StageRecord


class StageFailure(MlextError):
    def __init__(self, stage: int, cause: MlextError):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {type(cause).__name__}: {cause}")


def _on(sub: SpaceSignature, axes: Sequence[int], forms: Sequence[MultilinearForm]) -> list:
    amap = {a: i for i, a in enumerate(axes)}
    return [f.reindex(sub, amap) for f in forms]


def _remove_rhos(phi, S, comp, rhos, alphas, inside, outside, others, seed, record):
    b_forms: list[MultilinearForm] = []
    psi = phi
    for i, rho_i in enumerate(rhos):
        try:
            psi, b_forms = _remove_one(psi, i, S, comp, rhos, alphas, inside, outside, others,
                                       b_forms, seed, record)
        except MlextError as exc:
            exc.rho_index = i
            raise
    return psi, b_forms


def _remove_one(psi, i, S, comp, rhos, alphas, inside, outside, others, b_forms, seed, record):
    sig = psi.sig
    subS = sig.sub(S)
    rho_i = rhos[i]
    later = rhos[i + 1:]
    z = find_point_with_value_one(_on(subS, S, [rho_i])[0],
                                  _on(subS, S, later + alphas + inside), ())
    record.anchors.append(z)
    fixed_z = {a: z[j] for j, a in enumerate(S)}
    new = []
    for b in outside:
        here = {a: v for a, v in fixed_z.items() if a in b.axes}
        new.append(b.slice(here) if here else b)
    b_forms = _dedupe(b_forms + new)
    record.slice_codims.append(len(b_forms))
    rest = Variety(sig, tuple(later + alphas + others))
    rho_s = _on(subS, S, [rho_i])[0]
    if comp:
        comp_sig = sig.sub(comp)
        xcs = Variety(comp_sig, tuple(_on(comp_sig, comp, b_forms))).points()
    else:
        xcs = [()]
    table = {}
    for xc in xcs:
        fixed = {a: xc[j] for j, a in enumerate(comp)}
        bslice = rest.slice(fixed) if fixed else Variety(subS, tuple(_on(subS, S, rest.constraints)))
        b0 = bslice.with_constraints(rho_s)

        def full(y: Point) -> Point:
            parts = dict(fixed)
            parts.update({a: y[j] for j, a in enumerate(S)})
            return tuple(parts[a] for a in range(sig.k))

        tau_table = {y: psi.table[full(y)] for y in b0.points()}
        tau = PartialMultilinearMap(b0, psi.codim_h, tau_table)
        res = qr_extend(bslice, rho_s, tau, z, (0,) * psi.codim_h, seed=seed)
        for y, v in res.map.table.items():
            table[full(y)] = v
        record.extended_slices += 1
    dom = Variety(sig, tuple(b_forms + later + alphas + others))
    psi = PartialMultilinearMap(dom, psi.codim_h, table)
    mc = check_multilinear(psi)
    if not mc:
        raise MultilinearityViolation(f"slice extensions for rho_{i + 1} do not glue multilinearly",
                                      {"check": mc})
    return psi, b_forms


def extend_step(downset: Sequence[Sequence[int]], S: Sequence[int], phi: PartialMultilinearMap,
                threshold_t: int = 1, seed: int = 0, on_failure: str = "demote",
                budget: int = 200_000) -> StepResult:
    """Remove every constraint supported on the maximal set S of the down-set.

    With ``on_failure="demote"`` a rho_i whose slice extension fails is moved
    into the alpha family (to be replaced by decomposition factors) and the
    step restarts; with ``"raise"`` the failure propagates.
    """
    sig = phi.sig
    S = tuple(sorted(S))
    F = {tuple(sorted(s)) for s in downset}
    for c in phi.domain.constraints:
        if c.axes not in F:
            raise PreconditionFailed(f"constraint on axes {c.axes} lies outside the down-set")
    comp = tuple(a for a in range(sig.k) if a not in S)
    record = StageRecord(S, sorted(F, key=lambda s: (len(s), s)))
    on_S = [c for c in phi.domain.constraints if c.axes == S]
    others = [c for c in phi.domain.constraints if c.axes != S]
    record.s = len(on_S)
    if not on_S:
        record.domain = phi.domain
        return StepResult([], [], phi, record)
    inside = [c for c in others if set(c.axes) < set(S)]
    outside = [c for c in others if not set(c.axes) <= set(S)]
    lambdas, mus, _ = high_bias_split(on_S, threshold_t)
    record.lambdas, record.mus = list(lambdas), list(mus)
    while True:
        alphas = [combine(on_S, lam) for lam in lambdas]
        rhos = [combine(on_S, mu) for mu in mus]
        attempt = StageRecord(S, record.downset, record.s, record.lambdas, record.mus, record.demoted)
        try:
            psi, b_forms = _remove_rhos(phi, S, comp, rhos, alphas, inside, outside, others,
                                        seed, attempt)
            break
        except MlextError as exc:
            if on_failure != "demote":
                raise
            i = exc.rho_index
            record.demoted.append(mus[i])
            lambdas = lambdas + [mus[i]]
            mus = mus[:i] + mus[i + 1:]
    record = attempt
    cert = containment_from_decomposition(_dedupe(alphas), budget)
    if not cert.verified:
        raise AuditFailed("decomposition factors do not cut out the alpha zero set")
    gammas = _dedupe(cert.gammas)
    dom = Variety(sig, tuple(_dedupe(b_forms + gammas + others)))
    table = {x: psi.table[x] for x in dom.points()}
    out = PartialMultilinearMap(dom, phi.codim_h, table)
    record.slice_constraints = list(b_forms)
    record.gammas = gammas
    record.domain = dom
    return StepResult(gammas, b_forms, out, record)


def global_map_from_table(phi: PartialMultilinearMap) -> MultilinearMapH:
    """Read coefficients of a map defined on the whole space off basis points."""
    sig = phi.sig
    comps = []
    for h in range(phi.codim_h):
        coeffs = np.zeros(sig.dims, dtype=np.int64)
        for idx in itertools.product(*[range(n) for n in sig.dims]):
            x = tuple(tuple(1 if j == i else 0 for j in range(n)) for i, n in zip(idx, sig.dims))
            coeffs[idx] = phi.table[x][h]
        comps.append(MultilinearForm(sig, tuple(range(sig.k)), coeffs))
    return MultilinearMapH(sig, comps)


@dataclass
class ExtensionCertificate:
    sig: SpaceSignature
    codim_h: int
    parameters: dict
    input_domain: Variety
    stages: list
    final_map: MultilinearMapH | None
    agreement: Variety | None
    agreement_points: int | None = None
    domain_points: int | None = None
    verified: bool = False
    failure: StageFailure | None = None

    @property
    def complete(self) -> bool:
        return self.failure is None

    @property
    def proper(self) -> bool | None:
        if self.agreement_points is None:
            return None
        return self.agreement_points < self.domain_points

    def to_dict(self) -> dict:
        agreement = None
        if self.agreement is not None:
            agreement = {
                "constraints": [form_record(f) for f in self.agreement.constraints],
                "codimension": self.agreement.codimension,
                "points": self.agreement_points,
                "domain_points": self.domain_points,
                "proper": self.proper,
                "verified": self.verified,
            }
        failure = None
        if self.failure is not None:
            failure = {"stage": self.failure.stage, "error": type(self.failure.cause).__name__,
                       "message": str(self.failure.cause)}
        return {
            "format": CERTIFICATE_FORMAT,
            "signature": {"p": self.sig.p, "dims": list(self.sig.dims)},
            "codim_h": self.codim_h,
            "parameters": dict(self.parameters),
            "input_domain": [form_record(f) for f in self.input_domain.constraints],
            "stages": [s.to_dict() for s in self.stages],
            "final_map": (None if self.final_map is None
                          else [form_record(f) for f in self.final_map.components]),
            "agreement": agreement,
            "status": "complete" if self.failure is None else "failed",
            "failure": failure,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def run_pipeline(phi: PartialMultilinearMap, threshold_t: int = 1, seed: int = 0,
                 on_failure: str = "demote", budget: int = 200_000) -> ExtensionCertificate:
    """Global multilinear map agreeing with phi on a multilinear subvariety of its domain."""
    sig = phi.sig
    params = {"threshold_t": threshold_t, "seed": seed, "on_failure": on_failure, "budget": budget}
    mc = check_multilinear(phi)
    if not mc:
        raise MultilinearityViolation("input map is not multilinear", {"check": mc})
    stages: list[StageRecord] = []
    domains = [phi.domain]
    cur = phi
    schedule = removal_schedule(sig.k)
    for i, (S, F) in enumerate(zip(schedule, downsets(sig.k))):
        try:
            step = extend_step(F, S, cur, threshold_t, seed, on_failure, budget)
        except MlextError as exc:
            fail = StageFailure(i + 1, exc)
            return ExtensionCertificate(sig, phi.codim_h, params, phi.domain, stages, None, None,
                                        failure=fail)
        stages.append(step.record)
        domains.append(step.psi.domain)
        cur = step.psi
    if cur.domain.constraints:
        raise AuditFailed("constraints survived every stage")
    Phi = global_map_from_table(cur)
    rows = sig.points()
    vals = Phi.values(rows)
    for x, v in cur.table.items():
        if tuple(int(c) for c in vals[sig.index_of(x)]) != v:
            raise AuditFailed(f"final table is not the global map at {x}")
    agreement = Variety(sig, tuple(_dedupe([c for d in domains for c in d.constraints])))
    amask = agreement.mask(rows)
    ok = True
    for r in rows[amask]:
        x = sig.point_from_row(r)
        if phi.table[x] != tuple(int(c) for c in vals[sig.index_of(x)]):
            ok = False
            break
    cert = ExtensionCertificate(sig, phi.codim_h, params, phi.domain, stages, Phi, agreement,
                                int(amask.sum()), len(phi.table), ok)
    if not ok:
        raise AuditFailed("global map disagrees with phi on the agreement variety", {"certificate": cert})
    return cert


def replay(certificate: dict, phi: PartialMultilinearMap) -> bool:
    """Rerun the pipeline with the recorded parameters and compare bit for bit."""
    params = certificate["parameters"]
    again = run_pipeline(phi, params["threshold_t"], params["seed"],
                         params["on_failure"], params["budget"])
    if json.dumps(again.to_dict(), sort_keys=True) != json.dumps(certificate, sort_keys=True):
        return False
    if certificate["final_map"] is None:
        return True
    sig = phi.sig
    Phi = MultilinearMapH(sig, [form_from_record(sig, r) for r in certificate["final_map"]])
    records = certificate["agreement"]["constraints"]
    agreement = Variety(sig, tuple(form_from_record(sig, r) for r in records))
    return all(Phi.evaluate(x) == phi.table[x] for x in agreement.points())
