import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlext.counterexample import build_instance
from mlext.errors import MultilinearityViolation
from mlext.extend import PartialMultilinearMap
from mlext.forms import MultilinearForm, MultilinearMapH, SpaceSignature, form_from_record
from mlext.instances import random_form, random_global_map
from mlext.pipeline import (downsets, extend_step, high_bias_split, removal_schedule, replay,
                            run_pipeline)
from mlext.variety import Variety

from oracles import eval_form, space


def agreement_holds(cert, phi):
    """Recheck from the serialized certificate alone, by direct evaluation."""
    d = cert.to_dict()
    sig = phi.sig
    Phi = [form_from_record(sig, r) for r in d["final_map"]]
    cons = [form_from_record(sig, r) for r in d["agreement"]["constraints"]]
    n = 0
    for x in space(sig.p, sig.dims):
        if all(eval_form(c, x) == 0 for c in cons):
            n += 1
            assert x in phi.table
            if tuple(eval_form(f, x) for f in Phi) != phi.table[x]:
                return False, n
    return True, n


def test_schedule():
    assert removal_schedule(2) == [(0, 1), (0,), (1,)]
    assert removal_schedule(3)[:3] == [(0, 1, 2), (0, 1), (0, 2)]
    assert downsets(2)[0] == [(), (0,), (1,), (0, 1)]
    assert downsets(2)[2] == [(), (1,)]


def test_high_bias_split():
    sig = SpaceSignature(2, (2, 2))
    dot = MultilinearForm.dot(sig)
    lambdas, mus, biases = high_bias_split([dot], 1)
    assert lambdas == [] and mus == [(1,)]
    lambdas, mus, biases = high_bias_split([dot, dot], 1)
    assert (1, 1) in lambdas and biases[(1, 1)] == 1
    assert len(lambdas) + len(mus) == 2


def test_step_without_constraints_is_identity():
    sig = SpaceSignature(2, (2, 2))
    Phi = random_global_map(sig, 1, np.random.default_rng(0))
    phi = PartialMultilinearMap.restrict(Variety(sig), Phi)
    step = extend_step(downsets(2)[0], (0, 1), phi)
    assert step.gammas == [] and step.psi is phi


def test_step_removes_a_rank_two_constraint():
    sig = SpaceSignature(2, (2, 2))
    dot = MultilinearForm.dot(sig)
    B = Variety(sig, (dot,))
    phi = PartialMultilinearMap.restrict(B, random_global_map(sig, 1, np.random.default_rng(4)))
    step = extend_step(downsets(2)[0], (0, 1), phi)
    assert step.record.lambdas == [] and step.record.mus == [(1,)]
    assert all(c.axes != (0, 1) for c in step.psi.domain.constraints)
    for x, v in step.psi.table.items():
        if x in phi.table:
            assert phi.table[x] == v


def test_step_with_equal_constraints_uses_the_alpha_branch():
    sig = SpaceSignature(2, (2, 2))
    dot = MultilinearForm.dot(sig)
    B = Variety(sig, (dot, dot))
    phi = PartialMultilinearMap.restrict(B, random_global_map(sig, 1, np.random.default_rng(5)))
    step = extend_step(downsets(2)[0], (0, 1), phi)
    assert len(step.record.lambdas) >= 1
    assert all(c.axes != (0, 1) for c in step.psi.domain.constraints)


def test_whole_space_returns_the_map():
    sig = SpaceSignature(3, (2, 2))
    Phi0 = random_global_map(sig, 2, np.random.default_rng(2))
    phi = PartialMultilinearMap.restrict(Variety(sig), Phi0)
    cert = run_pipeline(phi)
    assert cert.final_map == Phi0
    assert cert.agreement.codimension == 0 and cert.agreement_points == sig.size


def test_spec_instance_and_replay():
    sig = SpaceSignature(2, (2, 2))
    B = Variety(sig, (MultilinearForm(sig, (0, 1), [[1, 0], [0, 0]]),))
    x2y2 = MultilinearMapH(sig, [MultilinearForm(sig, (0, 1), [[0, 0], [0, 1]])])
    phi = PartialMultilinearMap.restrict(B, x2y2)
    cert = run_pipeline(phi)
    assert cert.verified and cert.agreement_points >= 1
    ok, n = agreement_holds(cert, phi)
    assert ok and n == cert.agreement_points
    d = json.loads(cert.to_json())
    assert replay(d, phi)
    d["final_map"][0]["coeffs"][0] ^= 1
    assert not replay(d, phi)


def test_counterexample_agreement_is_proper():
    inst = build_instance(5, [1, 1, 1, 1])
    cert = run_pipeline(inst.phi)
    assert cert.complete and cert.verified and cert.proper
    ok, n = agreement_holds(cert, inst.phi)
    assert ok and 1 <= n < len(inst.phi.table)


def test_non_multilinear_input_is_rejected():
    sig = SpaceSignature(3, (1, 1))
    B = Variety(sig)
    table = {x: (1,) for x in B.points()}
    with pytest.raises(MultilinearityViolation):
        run_pipeline(PartialMultilinearMap(B, 1, table))


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(2, 3), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_pipeline_agreement_on_random_instances(p, k, m, seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature(p, tuple(int(rng.integers(1, 3)) for _ in range(k)))
    cons = []
    for _ in range(m):
        r = int(rng.integers(1, k + 1))
        axes = tuple(sorted(rng.choice(k, size=r, replace=False).tolist()))
        cons.append(random_form(sig, axes, rng))
    B = Variety(sig, tuple(cons))
    phi = PartialMultilinearMap.restrict(B, random_global_map(sig, 1, rng))
    cert = run_pipeline(phi, seed=int(rng.integers(10)))
    assert cert.complete and cert.verified
    ok, n = agreement_holds(cert, phi)
    assert ok and n == cert.agreement_points >= 1
