import itertools

import numpy as np
import pytest

from mlext.counterexample import (build_instance, classify, diagonal_biaffine_extendable,
                                  global_extension_exists, scan)
from mlext.extend import check_multilinear

from oracles import all_bilinear_values, space


def oracle_extendable(inst):
    pts = list(inst.phi.table)
    vals, coeffs = all_bilinear_values(inst.p, pts)
    want = np.array([inst.phi.table[x][0] for x in pts])
    return bool((vals == want[None, :]).all(axis=1).any())


def oracle_phi(p, f, x, y):
    """The map written out case by case from its definition."""
    x1, x2 = x
    y1, y2 = y
    if (x1 * y1 - x2 * y2) % p:
        return None
    if x1 and x2 and y1 and y2:
        lam = x1 * pow(x2, -1, p) % p
        return f[lam - 1] * x2 * y1 % p
    return 0


@pytest.mark.parametrize("p", [2, 3, 5])
def test_table_matches_definition(p):
    f = [(3 * i + 1) % p for i in range(p - 1)]
    inst = build_instance(p, f)
    for x, y in space(p, (2, 2)):
        want = oracle_phi(p, f, x, y)
        if want is None:
            assert (x, y) not in inst.phi.table
        else:
            assert inst.phi.table[(x, y)] == (want,)


def test_classes_at_p5():
    inst = build_instance(5, [1, 2, 3, 4])
    assert sum(inst.classes.values()) == len(inst.phi.table) == 145
    assert inst.classes["Z"] == 49 and inst.classes["W"] == 32
    assert all(inst.classes[lam] == 16 for lam in range(1, 5))
    assert classify((0, 0), (1, 1), 5) == "Z"
    assert classify((2, 1), (1, 2), 5) == 2
    assert classify((1, 0), (0, 1), 5) == "W"


def test_special_points():
    inst = build_instance(5, {1: 3, 2: 0, 3: 1, 4: 4})
    assert inst.phi.table[((0, 0), (3, 1))] == (0,)
    # (lam s, s; t, lam t) with lam = 2, s = 3, t = 4: f(2) s t = 0
    assert inst.phi.table[((1, 3), (4, 3))] == (0,)
    # lam = 4, s = 2, t = 1: f(4) s t = 4 * 2 = 3
    assert inst.phi.table[((3, 2), (1, 4))] == (3,)


def test_zero_table_extends_by_zero():
    g = global_extension_exists(build_instance(5, [0, 0, 0, 0]))
    assert g.exists and all(c.is_zero() for c in g.witness.components)


@pytest.mark.parametrize("p", [2, 3])
def test_full_scan_against_enumeration(p):
    r = scan(p)
    assert r.all_bilinear
    assert r.total == p ** (p - 1)
    for f in itertools.product(range(p), repeat=p - 1):
        inst = build_instance(p, f)
        assert check_multilinear(inst.phi)
        assert (f in r.extendable) == oracle_extendable(inst)
        linear = all(f[lam - 1] == f[0] * lam % p for lam in range(1, p))
        assert (f in r.extendable) == linear
    assert len(r.extendable) == p


def test_p5_sample_against_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(40):
        f = tuple(int(v) for v in rng.integers(0, 5, size=4))
        inst = build_instance(5, f)
        g = global_extension_exists(inst)
        assert g.exists == oracle_extendable(inst)
        if not g.exists:
            assert g.rank_a[0] < g.rank_aug[0]


@pytest.mark.parametrize("p", [7, 11, 13])
def test_constant_table_is_not_extendable_for_larger_primes(p):
    inst = build_instance(p, [1] * (p - 1))
    assert check_multilinear(inst.phi)
    g = global_extension_exists(inst)
    assert not g.exists and g.rank_a == (3,) and g.rank_aug == (4,)


def test_diagonal_biaffine_verdict():
    assert diagonal_biaffine_extendable(build_instance(3, [0, 0])).extendable
    d = diagonal_biaffine_extendable(build_instance(5, [1, 2, 3, 4]))
    assert d.extendable
    a, b, c, e = d.coefficients
    for x in range(5):
        want = build_instance(5, [1, 2, 3, 4]).phi.table[((x, 1), (1, x))][0]
        assert (a + b * x + c * x + e * x * x) % 5 == want
