import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlext.counterexample import build_instance
from mlext.errors import (AuditFailed, MultilinearityViolation, NotConnected, NotFound,
                          PreconditionFailed)
from mlext.extend import (PartialMultilinearMap, check_multilinear, find_orthogonal_point,
                          find_point_with_value_one, global_extension, qr_extend,
                          random_multilinear_map)
from mlext.forms import MultilinearForm, MultilinearMapH, SpaceSignature
from mlext.instances import random_form, random_global_map, random_variety
from mlext.paths import connectivity
from mlext.variety import Variety

from test_paths import find_disconnected
from oracles import all_bilinear_values, eval_form, is_multilinear_table, space


def x1y2_instance(p=2):
    sig = SpaceSignature(p, (2, 2))
    rho = MultilinearForm.dot(sig)
    Phi = MultilinearMapH(sig, [MultilinearForm(sig, (0, 1), [[0, 1], [0, 0]])])
    B = Variety(sig)
    phi = PartialMultilinearMap.restrict(B.with_constraints(rho), Phi)
    return sig, rho, Phi, B, phi


# ---------------------------------------------------------------------------
# multilinearity


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(2, 3), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_restrictions_of_global_maps_are_multilinear(p, k, d, seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, tuple(int(rng.integers(1, 3)) for _ in range(k)))
    B = random_variety(sig, d, rng)
    phi = PartialMultilinearMap.restrict(B, random_global_map(sig, 2, rng))
    assert check_multilinear(phi)
    ge = global_extension(phi)
    assert ge.exists and not phi.disagreements(ge.witness)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_counterexample_maps_are_bilinear(p):
    rng = np.random.default_rng(p)
    for _ in range(3):
        inst = build_instance(p, rng.integers(0, p, size=p - 1))
        assert check_multilinear(inst.phi)


def test_perturbed_value_is_detected_with_the_pair():
    sig, rho, Phi, B, phi = x1y2_instance(3)
    x = ((1, 2), (1, 1))
    assert x in phi.table
    table = dict(phi.table)
    table[x] = ((table[x][0] + 1) % 3,)
    bad = PartialMultilinearMap(phi.domain, 1, table)
    mc = check_multilinear(bad)
    assert not mc
    assert x in (mc.x, mc.y) or mc.kind == "scalar"
    assert mc.kind in ("ominus", "scalar")


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(0, 2**32 - 1), st.booleans())
def test_checker_agrees_with_direct_oracle(p, seed, perturb):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, (2, 2))
    B = random_variety(sig, 1, rng)
    phi = random_multilinear_map(B, 1, rng)
    table = dict(phi.table)
    if perturb:
        pts = list(table)
        x = pts[int(rng.integers(len(pts)))]
        table[x] = ((table[x][0] + int(rng.integers(1, p))) % p,)
    got = bool(check_multilinear(PartialMultilinearMap(B, 1, table)))
    assert got == is_multilinear_table(table, p)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(0, 2**32 - 1))
def test_random_multilinear_maps_are_multilinear(p, seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, (2, 2))
    B = random_variety(sig, 1, rng)
    phi = random_multilinear_map(B, 2, rng)
    assert is_multilinear_table(phi.table, p)


# ---------------------------------------------------------------------------
# point searches


def test_find_point_with_value_one_examples():
    s1 = SpaceSignature(2, (1, 1))
    assert find_point_with_value_one(MultilinearForm(s1, (0, 1), [[1]])) == ((1,), (1,))
    with pytest.raises(NotFound):
        find_point_with_value_one(MultilinearForm.zero(s1, (0, 1)))
    sig = SpaceSignature(3, (2, 2))
    rho = MultilinearForm.dot(sig)
    gamma = MultilinearForm(sig, (0,), [0, 1])
    want = next(x for x in space(3, (2, 2)) if x[0][1] == 0 and eval_form(rho, x) == 1)
    assert find_point_with_value_one(rho, [], [gamma]) == want


def test_orthogonal_point_only_condition_i():
    sig = SpaceSignature(3, (1, 1))
    rho = MultilinearForm(sig, (0, 1), [[1]])
    e = find_orthogonal_point(rho, [], [], sig.zero_point())
    assert e.e == ((1,), (2,))


def test_orthogonal_point_minus_one_is_one_over_f2():
    sig = SpaceSignature(2, (2, 2))
    rho = MultilinearForm.dot(sig)
    e = find_orthogonal_point(rho, [], [], sig.zero_point())
    assert rho.evaluate(e.e) == 1


def test_orthogonal_point_not_found_when_sequences_span():
    sig = SpaceSignature(2, (2, 2))
    rho = MultilinearForm.dot(sig)
    spanning = [((1, 0), (1, 0)), ((0, 1), (0, 1))]
    with pytest.raises(NotFound):
        find_orthogonal_point(rho, [], [spanning], spanning[0])


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(0, 2**32 - 1))
def test_orthogonal_point_conditions(p, seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, (3, 3))
    rho = random_form(sig, (0, 1), rng, nonzero=True)
    try:
        z = find_point_with_value_one(rho)
    except NotFound:
        return
    try:
        e = find_orthogonal_point(rho, [], [], z).e
    except NotFound:
        return
    assert eval_form(rho, e) == p - 1
    assert eval_form(rho, (e[0], z[1])) == 0
    assert eval_form(rho, (z[0], e[1])) == 0


# ---------------------------------------------------------------------------
# extension


def test_qr_extend_recovers_the_global_map():
    sig, rho, Phi, B, phi = x1y2_instance()
    z = ((1, 0), (1, 0))
    ext = qr_extend(B, rho, phi, z, (0,))
    for x in space(2, (2, 2)):
        assert ext.map.table[x] == Phi.evaluate(x)


def test_qr_extend_with_other_anchor_value():
    sig, rho, Phi, B, phi = x1y2_instance()
    z = ((1, 0), (1, 0))
    ext = qr_extend(B, rho, phi, z, (1,))
    for x in space(2, (2, 2)):
        want = (Phi.evaluate(x)[0] + (1 - Phi.evaluate(z)[0]) * eval_form(rho, x)) % 2
        assert ext.map.table[x] == (want,)


def test_qr_extend_trivial_when_rho_vanishes_on_B():
    sig = SpaceSignature(3, (2, 2))
    rho = MultilinearForm(sig, (0, 1), [[1, 0], [0, 0]])
    B = Variety(sig, (MultilinearForm(sig, (0,), [1, 0]),))
    Phi = random_global_map(sig, 1, np.random.default_rng(0))
    phi = PartialMultilinearMap.restrict(B.with_constraints(rho), Phi)
    ext = qr_extend(B, rho, phi, ((0, 1), (1, 0)), (0,))
    assert ext.audit["trivial"] and ext.map.table == phi.table


def test_qr_extend_rejects_non_multilinear_input():
    sig, rho, Phi, B, phi = x1y2_instance(3)
    table = dict(phi.table)
    x = ((1, 2), (1, 1))
    table[x] = ((table[x][0] + 1) % 3,)
    with pytest.raises(MultilinearityViolation):
        qr_extend(B, rho, PartialMultilinearMap(phi.domain, 1, table), ((1, 0), (1, 0)), (0,))


def test_qr_extend_rejects_bad_anchor():
    sig, rho, Phi, B, phi = x1y2_instance()
    with pytest.raises(PreconditionFailed):
        qr_extend(B, rho, phi, ((1, 0), (0, 1)), (0,))


def test_qr_extend_reports_disconnection():
    rng = np.random.default_rng(11)
    sig, betas, rho, comps = find_disconnected()
    B = Variety(sig, tuple(betas))
    phi = random_multilinear_map(B.with_constraints(rho), 1, rng)
    z = min(comps[0])
    with pytest.raises(NotConnected):
        qr_extend(B, rho, phi, z, (0,))


def extensions_by_enumeration(phi, z, h0, p):
    """Every global bilinear map on F_p^2 x F_p^2 extending phi with value h0 at z."""
    pts = list(phi.table) + [z]
    vals, coeffs = all_bilinear_values(p, pts)
    want = np.array([v[0] for v in phi.table.values()] + [h0[0]])
    return coeffs[(vals == want[None, :]).all(axis=1)]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(0, 2**32 - 1), st.integers(0, 4))
def test_qr_extend_succeeds_exactly_when_an_extension_exists(p, seed, bfs_seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, (2, 2))
    rho = random_form(sig, (0, 1), rng, nonzero=True)
    B = Variety(sig)
    phi = random_multilinear_map(B.with_constraints(rho), 1, rng)
    z = find_point_with_value_one(rho)
    h0 = (int(rng.integers(p)),)
    found = extensions_by_enumeration(phi, z, h0, p)
    assert len(found) <= 1
    try:
        ext = qr_extend(B, rho, phi, z, h0, seed=bfs_seed)
    except NotConnected:
        assert not connectivity(sig, [], rho).connected
        return
    except AuditFailed:
        assert len(found) == 0
        return
    assert len(found) == 1
    table = ext.map.table
    assert set(table) == set(space(p, (2, 2)))
    assert all(table[x] == v for x, v in phi.table.items())
    assert table[z] == h0
    assert is_multilinear_table(table, p)
    a, b, c, d = (int(t) for t in found[0])
    for (x1, x2), (y1, y2) in table:
        want = (a * x1 * y1 + b * x1 * y2 + c * x2 * y1 + d * x2 * y2) % p
        assert table[((x1, x2), (y1, y2))] == (want,)
    again = qr_extend(B, rho, phi, z, h0, seed=bfs_seed + 17)
    assert again.map.table == table
