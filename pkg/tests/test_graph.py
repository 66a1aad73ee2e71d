import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flownet.errors import SingularSystem
from flownet.graph import (
    aggregate_demand,
    is_in_connected,
    is_out_connected,
    reachability_matrix,
    reachable,
)


def closure_by_powers(R):
    """Reachability by brute-force boolean matrix powers."""
    n = R.shape[0]
    A = (R > 0).astype(int)
    reach = np.eye(n, dtype=int)
    power = np.eye(n, dtype=int)
    for _ in range(n):
        power = np.minimum(power @ A, 1)
        reach = np.minimum(reach + power, 1)
    return reach.astype(bool)


def neumann(R, lam, terms=200):
    a = np.zeros_like(lam)
    term = lam.copy()
    for _ in range(terms + 1):
        a += term
        term = R.T @ term
    return a


def test_reachability_examples():
    R = np.array([[0, 0.5], [0, 0]])
    assert reachable(R, 0, 0) and reachable(R, 1, 1)
    assert reachable(R, 0, 1)
    assert not reachable(R, 1, 0)


def test_four_junction_entry_reaches_turn_cell(four_inputs):
    spec, demand = four_inputs
    R = demand.pieces[0].routing.matrix
    i, j = spec.cell_index["v1_1"], spec.cell_index["v2_2"]
    assert reachable(R, i, j)
    assert np.array_equal(reachability_matrix(R), closure_by_powers(R))


def test_connectedness_examples(four_inputs):
    assert is_out_connected(np.zeros(3), np.eye(3))
    # cell 1 feeds cell 2, which feeds it back: no deficit anywhere
    R = np.array([[0, 1.0], [1.0, 0]])
    assert not is_out_connected(np.array([1.0, 0.0]), R)
    assert is_in_connected(np.ones(2), np.zeros((2, 2)))
    assert not is_in_connected(np.array([1.0, 0.0]), np.zeros((2, 2)))
    spec, demand = four_inputs
    for pc in demand.pieces:
        assert is_out_connected(pc.lam, pc.routing)
        assert is_in_connected(pc.lam, pc.routing)


def test_aggregate_demand_examples(four_inputs):
    lam = np.array([0.3, 0.7])
    assert np.array_equal(aggregate_demand(lam, np.zeros((2, 2))), lam)
    np.testing.assert_allclose(aggregate_demand(np.array([1.0, 0.0]), np.array([[0, 0.5], [0, 0]])), [1.0, 0.5])
    spec, demand = four_inputs
    pc = demand.pieces[0]
    R = pc.routing.matrix
    a = aggregate_demand(pc.lam, pc.routing)
    assert np.all(a >= pc.lam)
    assert np.max(np.abs((np.eye(spec.n) - R.T) @ a - pc.lam)) <= 1e-10 * max(1.0, pc.lam.max())
    np.testing.assert_allclose(a, neumann(R, pc.lam), atol=1e-8)


def test_aggregate_demand_needs_out_connected_routing():
    with pytest.raises(SingularSystem):
        aggregate_demand(np.array([1.0, 0.0]), np.array([[0, 1.0], [1.0, 0]]))


@st.composite
def substochastic(draw):
    n = draw(st.integers(1, 7))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    R = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
    np.fill_diagonal(R, 0.0)
    rows = R.sum(axis=1, keepdims=True)
    # every row keeps at least 10% as exit flow, so rho(R) <= 0.9
    target = rng.uniform(0.0, 0.9, (n, 1))
    R = np.where(rows > 0, R / np.where(rows > 0, rows, 1) * target, 0.0)
    lam = rng.uniform(0, 2, n) * (rng.random(n) < 0.7)
    return R, lam


@settings(max_examples=100, deadline=None)
@given(substochastic())
def test_aggregate_demand_matches_neumann_series(case):
    R, lam = case
    a = aggregate_demand(lam, R)
    np.testing.assert_allclose(a, neumann(R, lam), atol=1e-8)
    assert np.all(a >= lam - 1e-15)


@settings(max_examples=100, deadline=None)
@given(substochastic())
def test_reachability_is_closure(case):
    R, _ = case
    M = reachability_matrix(R)
    assert np.array_equal(M, closure_by_powers(R))
    assert np.all(np.diag(M))
    # transitivity
    assert np.array_equal(np.minimum(M.astype(int) @ M.astype(int), 1).astype(bool), M)
