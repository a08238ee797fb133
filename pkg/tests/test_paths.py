import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlext.errors import NotConnected, PreconditionFailed
from mlext.forms import MultilinearForm, SpaceSignature
from mlext.instances import random_form, random_variety
from mlext.paths import (connected_component, connectivity, default_s_bound, diameter_bound,
                         good_sequence)

from oracles import eval_form, space


def nx_graph(sig, betas, rho):
    """Point graph built from scratch: vertices by direct evaluation, edges by comparison."""
    p = sig.p
    verts = [x for x in space(p, sig.dims)
             if eval_form(rho, x) != 0 and all(eval_form(b, x) == 0 for b in betas)]
    g = nx.Graph()
    g.add_nodes_from(verts)
    for a, b in itertools.combinations(verts, 2):
        if sum(ai != bi for ai, bi in zip(a, b)) == 1:
            g.add_edge(a, b)
    return g


def check_good_sequence(seq, sig, betas, rho, z, y):
    """Mechanical check of the four defining properties."""
    p = sig.p
    pts = seq.points
    for a, b in zip(pts, pts[1:]):
        assert sum(ai != bi for ai, bi in zip(a, b)) == 1
    assert pts[0] == z
    assert all(lam % p for lam in seq.scalars)
    assert pts[-1] == tuple(tuple(lam * c % p for c in yi) for yi, lam in zip(y, seq.scalars))
    assert seq.s <= default_s_bound(sig.k)
    r0 = eval_form(rho, z)
    for q in pts:
        assert eval_form(rho, q) == r0
        assert all(eval_form(b, q) == 0 for b in betas)


def test_bounds():
    assert diameter_bound(2) == 15
    assert default_s_bound(2) == 16
    assert diameter_bound(3) == 49


def test_dot_form_component():
    sig = SpaceSignature(2, (2, 2))
    rho = MultilinearForm.dot(sig)
    comp = connected_component(sig, [], rho, ((1, 0), (1, 0)))
    assert comp.size == 6
    rep = connectivity(sig, [], rho)
    assert rep.connected and rep.size == 6
    assert rep.diameter == nx.diameter(nx_graph(sig, [], rho))
    assert rep.diameter <= 15


def test_single_point_component():
    sig = SpaceSignature(2, (1,))
    rho = MultilinearForm(sig, (0,), [1])
    comp = connected_component(sig, [], rho, ((1,),))
    assert comp.size == 1 and comp.eccentricity == 0


def test_start_outside_set():
    sig = SpaceSignature(2, (2, 2))
    with pytest.raises(PreconditionFailed):
        connected_component(sig, [], MultilinearForm.dot(sig), ((0, 0), (1, 0)))


def test_trivial_sequence():
    sig = SpaceSignature(3, (2, 2))
    rho = MultilinearForm.dot(sig)
    z = ((1, 0), (1, 0))
    seq = good_sequence(sig, [], rho, z, z)
    assert seq.points == (z,) and seq.s == 0 and seq.scalars == (1, 1)


def test_dot_form_sequence():
    sig = SpaceSignature(2, (2, 2))
    rho = MultilinearForm.dot(sig)
    z, y = ((1, 0), (1, 0)), ((0, 1), (0, 1))
    seq = good_sequence(sig, [], rho, z, y)
    check_good_sequence(seq, sig, [], rho, z, y)
    assert seq.violations(sig, [], rho, z, y) == []


def find_disconnected():
    rng = np.random.default_rng(11)
    sig = SpaceSignature(2, (2, 2))
    while True:
        rho = random_form(sig, (0, 1), rng, nonzero=True)
        betas = list(random_variety(sig, 1, rng, full_prob=0.0).constraints)
        g = nx_graph(sig, betas, rho)
        comps = list(nx.connected_components(g))
        if len(comps) >= 2:
            return sig, betas, rho, comps


def test_disconnected_instance():
    sig, betas, rho, comps = find_disconnected()
    rep = connectivity(sig, betas, rho)
    assert not rep.connected and rep.components == len(comps) and rep.diameter is None
    z, y = min(comps[0]), min(comps[1])
    with pytest.raises(NotConnected) as info:
        good_sequence(sig, betas, rho, z, y)
    assert info.value.source_component != info.value.target_component


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(2, 3), st.integers(0, 2), st.integers(0, 2**32 - 1))
def test_connectivity_matches_networkx(p, k, d, seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, tuple(int(rng.integers(1, 3)) for _ in range(k)))
    rho = random_form(sig, tuple(range(k)), rng, nonzero=True)
    betas = list(random_variety(sig, d, rng, full_prob=0.3).constraints)
    g = nx_graph(sig, betas, rho)
    rep = connectivity(sig, betas, rho)
    assert rep.size == g.number_of_nodes()
    if g.number_of_nodes():
        assert rep.components == nx.number_connected_components(g)
        if rep.connected:
            assert rep.diameter == nx.diameter(g)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(2, 3), st.integers(0, 2**32 - 1), st.integers(0, 5))
def test_sequences_are_good_for_every_seed(p, k, seed, bfs_seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, tuple(int(rng.integers(1, 3)) for _ in range(k)))
    rho = random_form(sig, tuple(range(k)), rng, nonzero=True)
    betas = list(random_variety(sig, 1, rng, full_prob=0.3).constraints)
    g = nx_graph(sig, betas, rho)
    for comp in nx.connected_components(g):
        comp = sorted(comp)
        z, y = comp[0], comp[-1]
        seq = good_sequence(sig, betas, rho, z, y, seed=bfs_seed)
        check_good_sequence(seq, sig, betas, rho, z, y)
        assert seq.s <= nx.shortest_path_length(g, z, y)
