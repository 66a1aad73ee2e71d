import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from flownet.errors import NodeInfeasible, SingularSystem
from flownet.instances import random_network
from flownet.network import RoutingMatrix, load_network
from flownet.stability import (
    Verdict,
    check_necessary_condition,
    classify,
    membership_margin,
    node_slack,
    node_slacks,
)

from conftest import FOUR, two_phase_node


def scipy_margin(spec, z):
    """max delta s.t. C P u >= z + delta, 1^T u^(k) <= 1, u >= 0, via HiGHS."""
    n, p = spec.n, spec.p
    CP = spec.capacity[:, None] * spec.P
    A = np.hstack([-CP, np.ones((n, 1))])
    rows = [np.concatenate([np.isin(np.arange(p), np.arange(sl.start, sl.stop)).astype(float), [0]])
            for sl in spec.phase_slices if sl.stop > sl.start]
    A = np.vstack([A] + rows) if rows else A
    b = np.concatenate([-z, np.ones(len(rows))])
    c = np.zeros(p + 1)
    c[-1] = -1
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * p + [(None, None)], method="highs")
    return -res.fun


def test_zero_demand_margin_two_phases():
    cert = membership_margin(two_phase_node(), np.zeros(2))
    assert cert.margin == pytest.approx(0.5)
    np.testing.assert_allclose(cert.witness, [0.5, 0.5], atol=1e-12)
    assert cert.verdict is Verdict.INTERIOR


def test_boundary_and_webster_verdicts():
    spec = two_phase_node()
    assert membership_margin(spec, np.array([0.5, 0.5])).verdict is Verdict.BOUNDARY
    assert membership_margin(spec, np.array([0.3, 0.2])).verdict is Verdict.INTERIOR
    assert check_necessary_condition(spec, np.ones(2), RoutingMatrix.zeros(2)).verdict is Verdict.OUTSIDE
    assert check_necessary_condition(spec, np.zeros(2), RoutingMatrix.zeros(2)).verdict is Verdict.INTERIOR


def test_classify_tolerance():
    assert classify(2e-7) is Verdict.INTERIOR
    assert classify(5e-8) is Verdict.BOUNDARY
    assert classify(-2e-7) is Verdict.OUTSIDE


def test_four_junction_pieces_are_interior(four_inputs):
    spec, demand = four_inputs
    for pc in demand.pieces:
        cert = check_necessary_condition(spec, pc.lam, pc.routing)
        assert cert.interior
        assert cert.margin == pytest.approx(scipy_margin(spec, cert.demand), abs=1e-9)
        assert np.all(node_slacks(spec, cert.demand) > 0)


def test_singular_routing_propagates():
    spec = two_phase_node()
    R = np.array([[0, 1.0], [1.0, 0]])
    with pytest.raises(SingularSystem):
        check_necessary_condition(spec, np.array([1.0, 0.0]), R)


def test_node_slack_examples():
    spec = two_phase_node()
    assert node_slack(spec, np.zeros(2), spec.node_index["v"]) == pytest.approx(1.0)
    assert node_slack(spec, np.array([0.3, 0.2]), spec.node_index["v"]) == pytest.approx(0.5)
    with pytest.raises(NodeInfeasible):
        node_slack(spec, np.array([0.7, 0.6]), spec.node_index["v"])


def test_orthogonal_node_slack_closed_form():
    spec = load_network(FOUR / "network.json")
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.uniform(0, 0.3, spec.n)
        for k, sl in enumerate(spec.phase_slices):
            if sl.stop == sl.start:
                continue
            Pk = spec.local_phase_matrix(k)
            cells = spec.node_cells[k]
            ratio = a[cells] / spec.capacity[cells]
            need = sum(ratio[Pk[:, q] > 0].max() for q in range(Pk.shape[1]))
            assert node_slack(spec, a, k) == pytest.approx(1 - need, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["orthogonal", "general", "single"]))
def test_margin_matches_scipy_and_witness(seed, kind):
    rng = np.random.default_rng(seed)
    spec = random_network(rng, n_nodes=int(rng.integers(1, 4)), kind=kind)
    z = rng.uniform(0, 0.6, spec.n)
    cert = membership_margin(spec, z)
    assert cert.margin == pytest.approx(scipy_margin(spec, z), abs=1e-9)
    CP = spec.capacity[:, None] * spec.P
    assert np.all(CP @ cert.witness >= z + cert.margin - 1e-9)
    for sl in spec.phase_slices:
        assert cert.witness[sl].sum() <= 1 + 1e-9
    # monotone in z
    bigger = z + rng.uniform(0, 0.2, spec.n)
    assert membership_margin(spec, bigger).margin <= cert.margin + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_node_slack_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    spec = random_network(rng, n_nodes=2, kind="general")
    a = rng.uniform(0, 0.3, spec.n)
    for k in range(spec.m):
        cells = spec.node_cells[k]
        if cells.size == 0:
            continue
        CP = spec.capacity[cells, None] * spec.local_phase_matrix(k)
        ref = linprog(np.ones(CP.shape[1]), A_ub=-CP, b_ub=-a[cells], bounds=(0, None), method="highs")
        if ref.fun > 1 + 1e-9:
            with pytest.raises(NodeInfeasible):
                node_slack(spec, a, k)
        else:
            assert node_slack(spec, a, k) == pytest.approx(1 - ref.fun, abs=1e-9)
