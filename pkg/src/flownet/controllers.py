"""Feedback allocation policies: GPA, MaxPressure and static allocations.

All allocations are flat vectors over the global phases (see NetworkSpec).
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverStall
from .network import NetworkSpec

ARMIJO = 1e-4
MAX_ITER = 10_000

KINDS = ("gpa", "max_pressure", "static")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "gpa"
    epsilon_reg: float = 1e-9
    solver_tol: float = 1e-10
    # flat vector over all phases, or a map node -> fractions over that node's phases
    static_u: tuple[float, ...] | Mapping[str, list[float]] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"controller kind must be one of {KINDS}, got {self.kind!r}")
        if not self.epsilon_reg >= 0:
            raise ValueError("epsilon_reg must be >= 0")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be > 0")
        if self.kind == "static" and self.static_u is None:
            raise ValueError("static controller needs static_u")


def service_rate(spec: NetworkSpec, u) -> np.ndarray:
    """zeta = C P u."""
    return spec.capacity * (spec.P @ np.asarray(u, dtype=float))


def gpa_orthogonal(spec: NetworkSpec, x) -> np.ndarray:
    """Closed-form GPA for orthogonal phases:
    u_q = (sum of x over phase q) / (xi_k + sum of x over the node's incoming cells).
    """
    if not spec.is_orthogonal:
        raise ValueError("gpa_orthogonal requires orthogonal phases")
    x = np.asarray(x, dtype=float)
    load = np.bincount(spec.head_idx, weights=x, minlength=spec.m)
    denom = (spec.xi + load)[spec.phase_node]
    return (spec.P.T @ x) / denom


def node_objective(x, c, P, xi: float, nu) -> float:
    """sum_i x_i log (C P nu)_i + xi log(1 - 1^T nu), with 0 log(.) = 0."""
    nu = np.asarray(nu, dtype=float)
    active = x > 0
    s = c[active] * (P[active] @ nu)
    tot = nu.sum()
    if tot >= 1.0 or np.any(s <= 0) or np.any(nu < 0):
        return -np.inf
    return float(x[active] @ np.log(s) + xi * np.log1p(-tot))


def _newton_step(H, g, nu):
    # Newton direction in the variables nu_q * y_q, which keeps the barrier block O(t)
    Hs = -H * nu[:, None] * nu[None, :]
    try:
        return nu * np.linalg.solve(Hs, nu * g)
    except np.linalg.LinAlgError:
        return nu * np.linalg.lstsq(Hs, nu * g, rcond=None)[0]


def solve_node_gpa(x, c, P, xi: float, tol: float = 1e-10, max_iter: int = MAX_ITER) -> np.ndarray:
    """Maximize node_objective over {nu >= 0, 1^T nu < 1}.

    Log-barrier path following from nu = 1/(2p): for a decreasing weight t the
    barrier problem (objective + t sum log nu) is centred by damped Newton
    ascent with Armijo backtracking by halving. Stops once the projected
    gradient of the original objective has infinity norm <= tol, or at the
    rounding floor of that gradient when tol lies below it. When the maximizer
    is not unique the central path picks the middle of the optimal face.
    """
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    p = P.shape[1]
    loaded = x > 0
    out = np.zeros(p)
    # phases serving no loaded cell only cost clearance: they stay at zero
    live = (P[loaded] != 0).any(axis=0)
    if not live.any():
        return out
    xa = x[loaded]
    ca = np.asarray(c, dtype=float)[loaded]
    # identical phases only matter through their sum: solve on distinct columns, split evenly
    cols, inverse, counts = np.unique(
        P[np.ix_(loaded, live)].T, axis=0, return_inverse=True, return_counts=True
    )
    Pa = np.ascontiguousarray(cols.T)
    q = Pa.shape[1]
    eps = np.finfo(float).eps

    def barrier_value(nu, t):
        s = Pa @ nu
        tot = nu.sum()
        if tot >= 1.0 or np.any(s <= 0) or np.any(nu <= 0):
            return -np.inf
        return float(xa @ np.log(ca * s) + xi * np.log1p(-tot) + t * np.log(nu).sum())

    nu = np.full(q, 1.0 / (2 * p))
    t = 1e-2 * (xa.sum() + xi) / q
    iters = 0
    while True:
        f = barrier_value(nu, t)
        # last-digit noise in f must not block steps that are tiny but correct
        noise = 1e-14 * (1.0 + abs(f) + xa.sum())
        for _ in range(100):
            s = Pa @ nu
            slack = 1.0 - nu.sum()
            g = Pa.T @ (xa / s) - xi / slack + t / nu
            H = -(Pa.T * (xa / s**2)) @ Pa - xi / slack**2
            H[np.diag_indices(q)] -= t / nu**2
            d = _newton_step(H, g, nu)
            gain = g @ d
            if not gain > 0 or np.max(np.abs(d) / nu) <= 1e-15:
                break
            step = 1.0
            while True:
                trial = nu + step * d
                ft = barrier_value(trial, t)
                if ft >= f + ARMIJO * step * gain - noise:
                    break
                step *= 0.5
                if step < 1e-30:
                    break
            iters += 1
            if iters >= max_iter:
                raise SolverStall(f"GPA solver did not reach tolerance {tol:g} in {max_iter} iterations")
            if step < 1e-30 or np.array_equal(trial, nu):
                break
            nu, f = trial, ft
        s = Pa @ nu
        slack = 1.0 - nu.sum()
        g = Pa.T @ (xa / s) - xi / slack
        pg = float(np.max(np.abs(np.maximum(nu + g, 0.0) - nu)))
        floor = 64 * eps * (float(np.max(Pa.T @ (xa / s))) + xi / slack * (1.0 + 1.0 / slack))
        if pg <= max(tol, floor):
            break
        if t < 1e-300:
            raise SolverStall(f"GPA solver stuck at projected gradient {pg:.3g} > {tol:g}")
        t *= 1e-3
    out[live] = (nu / counts)[inverse.ravel()]
    return out


def gpa_node(spec: NetworkSpec, x, k: int, cfg: ControllerConfig) -> np.ndarray:
    cells = spec.node_cells[k]
    P_k = spec.local_phase_matrix(k)
    x_k = np.asarray(x, dtype=float)[cells] + cfg.epsilon_reg
    return solve_node_gpa(x_k, spec.capacity[cells], P_k, spec.xi[k], tol=cfg.solver_tol)


def gpa_general(spec: NetworkSpec, x, cfg: ControllerConfig | None = None) -> np.ndarray:
    """GPA by numerical maximization at every node (any phase structure)."""
    cfg = cfg or ControllerConfig()
    u = np.zeros(spec.p)
    for k, sl in enumerate(spec.phase_slices):
        if sl.stop > sl.start:
            u[sl] = gpa_node(spec, x, k, cfg)
    return u


def gpa(spec: NetworkSpec, x, cfg: ControllerConfig | None = None) -> np.ndarray:
    """GPA using the closed form at orthogonal nodes and the solver elsewhere."""
    cfg = cfg or ControllerConfig()
    x = np.asarray(x, dtype=float)
    load = np.bincount(spec.head_idx, weights=x, minlength=spec.m)
    u = (spec.P.T @ x) / (spec.xi + load)[spec.phase_node] if spec.p else np.zeros(0)
    for k, sl in enumerate(spec.phase_slices):
        if sl.stop > sl.start and not spec.node_is_orthogonal[k]:
            u[sl] = gpa_node(spec, x, k, cfg)
    return u


def phase_pressures(spec: NetworkSpec, x, routing) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    R = getattr(routing, "matrix", routing)
    return spec.P.T @ (x - R @ x)


def max_pressure(spec: NetworkSpec, x, routing) -> np.ndarray:
    """Full weight on a maximal-pressure phase per node; idle if no pressure is positive.
    Ties go to the lowest phase index.
    """
    s = phase_pressures(spec, x, routing)
    u = np.zeros(spec.p)
    for sl in spec.phase_slices:
        if sl.stop > sl.start:
            q = int(np.argmax(s[sl]))
            if s[sl][q] > 0:
                u[sl.start + q] = 1.0
    return u


def static_allocation(spec: NetworkSpec, u) -> np.ndarray:
    if isinstance(u, Mapping):
        flat = np.zeros(spec.p)
        for node, fr in u.items():
            if node not in spec.node_index:
                raise ValueError(f"static allocation names unknown node {node!r}")
            sl = spec.phase_slices[spec.node_index[node]]
            if len(fr) != sl.stop - sl.start:
                raise ValueError(f"static allocation for node {node!r} needs {sl.stop - sl.start} fractions")
            flat[sl] = fr
        u = flat
    u = np.asarray(u, dtype=float)
    if u.shape != (spec.p,) or np.any(u < 0):
        raise ValueError("static allocation must be a nonnegative vector over all phases")
    for k, sl in enumerate(spec.phase_slices):
        if u[sl].sum() > 1 + 1e-12:
            raise ValueError(f"static allocation at node {spec.nodes[k]!r} sums above 1")
    return u


class Controller:
    """Callable x, routing -> allocation, with per-spec precomputation."""

    def __init__(self, spec: NetworkSpec, cfg: ControllerConfig | None = None):
        self.spec = spec
        self.cfg = cfg = cfg or ControllerConfig()
        self.kind = cfg.kind
        if cfg.kind == "static":
            self._static = static_allocation(spec, cfg.static_u)
        self._PT = np.ascontiguousarray(spec.P.T)
        self._general_nodes = [
            k for k, sl in enumerate(spec.phase_slices)
            if sl.stop > sl.start and not spec.node_is_orthogonal[k]
        ]
        # all-orthogonal GPA: zeta_i = c_i (sum of x over i's phase) / (xi + load at i's head)
        self._fused = cfg.kind == "gpa" and not self._general_nodes
        if self._fused:
            same_head = spec.head_idx[:, None] == spec.head_idx[None, :]
            self._num = np.ascontiguousarray(spec.capacity[:, None] * (spec.P @ spec.P.T))
            self._den = np.ascontiguousarray(same_head.astype(float))
            xi_cell = spec.xi[spec.head_idx] if spec.n else np.zeros(0)
            self._xi_cell = np.ascontiguousarray(xi_cell)

    def rates(self, x, routing=None) -> np.ndarray:
        """Service rates zeta = C P u for the allocation this controller picks at x."""
        if self._fused:
            return (self._num @ x) / (self._xi_cell + self._den @ x)
        return self.spec.capacity * (self.spec.P @ self(x, routing))

    def __call__(self, x, routing=None) -> np.ndarray:
        if self.kind == "gpa":
            spec = self.spec
            load = np.bincount(spec.head_idx, weights=x, minlength=spec.m)
            u = (self._PT @ x) / (spec.xi + load)[spec.phase_node]
            for k in self._general_nodes:
                u[spec.phase_slices[k]] = gpa_node(spec, x, k, self.cfg)
            return u
        if self.kind == "max_pressure":
            return max_pressure(self.spec, x, routing)
        return self._static.copy()
