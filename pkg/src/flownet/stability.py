"""Linear-programming certificates for the stability region

    Z = { z >= 0 : z <= C P u for some u in U },

where U is the product over nodes of {u >= 0, 1^T u <= 1}.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NodeInfeasible, SolverError
from .graph import aggregate_demand
from .lp import simplex_max
from .network import NetworkSpec

VERDICT_TOL = 1e-7
CHECK_TOL = 1e-9


class Verdict(str, Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


def classify(margin: float, tol: float = VERDICT_TOL) -> Verdict:
    if margin > tol:
        return Verdict.INTERIOR
    if margin < -tol:
        return Verdict.OUTSIDE
    return Verdict.BOUNDARY


@dataclass
class StabilityCertificate:
    margin: float
    witness: np.ndarray
    verdict: Verdict
    demand: np.ndarray | None = None

    @property
    def interior(self) -> bool:
        return self.verdict is Verdict.INTERIOR


def membership_margin(spec: NetworkSpec, z) -> StabilityCertificate:
    """Largest delta with C P u >= z + delta * 1 for some allocation u in U.

    A positive margin certifies z in int(Z); -margin bounds the infinity-norm
    distance from z to Z from above when the margin is negative.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("membership_margin needs z >= 0")
    n, p = spec.n, spec.p
    CP = spec.capacity[:, None] * spec.P
    shift = float(z.max()) if n else 0.0

    # variables [u_1..u_p, d] with delta = d - shift, so the origin is feasible
    node_rows = [sl for sl in spec.phase_slices if sl.stop > sl.start]
    A = np.zeros((n + len(node_rows), p + 1))
    A[:n, :p] = -CP
    A[:n, p] = 1.0
    for r, sl in enumerate(node_rows):
        A[n + r, sl] = 1.0
    b = np.concatenate([shift - z, np.ones(len(node_rows))])
    c = np.zeros(p + 1)
    c[p] = 1.0
    res = simplex_max(c, A, b)

    u = np.clip(res.x[:p], 0.0, None)
    delta = res.x[p] - shift
    _verify_allocation(spec, u)
    if n and np.min(CP @ u - z - delta) < -CHECK_TOL:
        raise SolverError("membership LP witness fails re-substitution")
    return StabilityCertificate(margin=float(delta), witness=u, verdict=classify(delta))


def _verify_allocation(spec: NetworkSpec, u: np.ndarray):
    for sl in spec.phase_slices:
        if u[sl].sum() > 1 + CHECK_TOL:
            raise SolverError("LP witness leaves the allocation set")


def check_necessary_condition(spec: NetworkSpec, lam, routing) -> StabilityCertificate:
    a = aggregate_demand(lam, routing)
    cert = membership_margin(spec, np.clip(a, 0.0, None))
    cert.demand = a
    return cert


def node_min_allocation(spec: NetworkSpec, a, k: int) -> tuple[float, np.ndarray]:
    """min 1^T nu s.t. C^(k) P^(k) nu >= a^(k), nu >= 0; returns (value, nu).

    Solved through its dual, max a^T y s.t. (C P)^T y <= 1, y >= 0, whose
    slack basis is feasible; nu is read off the dual's multipliers.
    """
    cells = spec.node_cells[k]
    p_k = spec.phase_slices[k].stop - spec.phase_slices[k].start
    if cells.size == 0 or p_k == 0:
        return 0.0, np.zeros(p_k)
    a_k = np.clip(np.asarray(a, dtype=float)[cells], 0.0, None)
    CP_k = spec.capacity[cells, None] * spec.local_phase_matrix(k)
    res = simplex_max(a_k, CP_k.T, np.ones(p_k))
    nu = np.clip(res.duals, 0.0, None)
    if np.min(CP_k @ nu - a_k) < -CHECK_TOL * max(1.0, a_k.max()):
        raise SolverError(f"node {spec.nodes[k]!r}: covering LP multipliers fail re-substitution")
    return res.value, nu


def node_slack(spec: NetworkSpec, a, k: int) -> float:
    """b_k = 1 - min{1^T nu : nu >= 0, C^(k) P^(k) nu >= a^(k)}."""
    value, _ = node_min_allocation(spec, a, k)
    if value > 1 + CHECK_TOL:
        raise NodeInfeasible(
            f"node {spec.nodes[k]!r}: covering its demand needs {value:.6g} > 1 of the cycle"
        )
    return 1.0 - value


def node_slacks(spec: NetworkSpec, a) -> np.ndarray:
    return np.array([node_slack(spec, a, k) for k in range(spec.m)])
