import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlext.errors import ModulusMismatch
from mlext.field import (FieldElement, check_prime, elements, fp_add, fp_mul, fp_mul_inv, inv_mod,
                         nullspace_mod_p, rank_factorization, rank_mod_p, rref_mod_p, solve_mod_p)

from oracles import image_rank

primes = st.sampled_from([2, 3, 5, 7, 11, 13])


@pytest.mark.parametrize("p,a,b,want", [(5, 3, 4, 2), (2, 1, 1, 0), (3, 0, 2, 2)])
def test_fp_add_examples(p, a, b, want):
    assert fp_add(FieldElement(a, p), FieldElement(b, p)) == FieldElement(want, p)


@pytest.mark.parametrize("p,a,want", [(5, 2, 3), (7, 3, 5), (2, 1, 1)])
def test_fp_mul_inv_examples(p, a, want):
    assert fp_mul_inv(FieldElement(a, p)).value == want


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        fp_mul_inv(FieldElement(0, 5))
    with pytest.raises(ZeroDivisionError):
        inv_mod(7, 7)


def test_modulus_mismatch():
    with pytest.raises(ModulusMismatch):
        fp_add(FieldElement(1, 3), FieldElement(1, 5))
    with pytest.raises(ModulusMismatch):
        FieldElement(1, 3) * FieldElement(1, 5)


def test_check_prime_rejects_composites_and_large_primes():
    assert check_prime(13) == 13
    for bad in (0, 1, 4, 9):
        with pytest.raises(ValueError):
            check_prime(bad)
    with pytest.raises(ValueError):
        check_prime(17)


@given(primes, st.integers(), st.integers(), st.integers())
def test_field_axioms(p, a, b, c):
    x, y, z = FieldElement(a, p), FieldElement(b, p), FieldElement(c, p)
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == 0
    assert fp_mul(x, y) == fp_mul(y, x)
    if x:
        assert x * fp_mul_inv(x) == 1
        assert (y / x) * x == y


@given(primes)
def test_multiplicative_group_is_cyclic_of_order_p_minus_1(p):
    for x in elements(p)[1:]:
        assert x ** (p - 1) == 1


@settings(max_examples=60)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_rank_matches_image_size(p, r, c, seed):
    m = np.random.default_rng(seed).integers(0, p, size=(r, c))
    assert rank_mod_p(m, p) == image_rank(m, p)


@settings(max_examples=60)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_rref_nullspace_and_factorization(p, r, c, seed):
    m = np.random.default_rng(seed).integers(0, p, size=(r, c))
    red, piv = rref_mod_p(m, p)
    assert all(red[i, pc] == 1 for i, pc in enumerate(piv))
    ns = nullspace_mod_p(m, p)
    assert ns.shape[0] == c - len(piv)
    assert not ((m @ ns.T) % p).any()
    left, right = rank_factorization(m, p)
    assert np.array_equal((left @ right) % p, m % p)
    assert left.shape[1] == len(piv)


@settings(max_examples=60)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_solve_mod_p(p, r, c, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, p, size=(r, c))
    x0 = rng.integers(0, p, size=c)
    b = (a @ x0) % p
    x, ra, raug = solve_mod_p(a, b, p)
    assert ra == raug and np.array_equal((a @ x) % p, b)
    b2 = rng.integers(0, p, size=r)
    x, ra, raug = solve_mod_p(a, b2, p)
    consistent = any(np.array_equal((a @ np.array(v)) % p, b2 % p)
                     for v in np.ndindex(*([p] * c)))
    assert (x is not None) == consistent == (ra == raug)
