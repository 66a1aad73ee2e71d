"""Lyapunov diagnostics for GPA-controlled networks.

With a = (I - R^T)^{-1} lambda and per-node slacks b_k,

    V(x) = sum_i x_i log(zeta_i / a_i) + sum_k xi_k log((1 - 1^T u^(k)) / b_k)

evaluated at the GPA allocation u, has gradient w(x) = log(zeta(x) / a) and
decreases along closed-loop trajectories at rate W(x) >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controllers import Controller, ControllerConfig
from .dynamics import EMPTY_THRESHOLD
from .errors import NotInterior, SingularSubsystem, SingularSystem, Unstable
from .graph import aggregate_demand
from .network import NetworkSpec, RoutingMatrix, build_network
from .stability import check_necessary_condition, node_slacks


@dataclass(frozen=True)
class LyapunovContext:
    a: np.ndarray
    b: np.ndarray
    lam: np.ndarray | None = None
    routing: np.ndarray | None = None  # R as a dense matrix
    margin: float = float("nan")


def _matrix(routing) -> np.ndarray:
    return routing.matrix if isinstance(routing, RoutingMatrix) else np.asarray(routing, dtype=float)


def build_context(spec: NetworkSpec, lam, routing) -> LyapunovContext:
    """Aggregate demand and node slacks; requires a in the interior of Z."""
    lam = np.asarray(lam, dtype=float)
    cert = check_necessary_condition(spec, lam, routing)
    if not cert.interior:
        raise NotInterior(
            f"aggregate demand is not interior to the stability region "
            f"(margin {cert.margin:.3g}, verdict {cert.verdict.value})"
        )
    b = node_slacks(spec, cert.demand)
    if np.any(b <= 0):
        raise NotInterior("some node slack b_k is not positive")
    return LyapunovContext(a=cert.demand, b=b, lam=lam, routing=_matrix(routing).copy(), margin=cert.margin)


def _controller(spec: NetworkSpec, cfg: ControllerConfig | None) -> Controller:
    cfg = cfg or ControllerConfig()
    if cfg.kind != "gpa":
        cfg = ControllerConfig(epsilon_reg=cfg.epsilon_reg, solver_tol=cfg.solver_tol)
    return Controller(spec, cfg)


def H_tilde(spec: NetworkSpec, ctx: LyapunovContext, x, u) -> float:
    """H~(x, u) with the convention 0 log(.) = 0."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    zeta = spec.capacity * (spec.P @ u)
    pos = x > 0
    with np.errstate(divide="ignore"):
        cell = float(x[pos] @ np.log(zeta[pos] / ctx.a[pos])) if pos.any() else 0.0
    node = 0.0
    for k, sl in enumerate(spec.phase_slices):
        if sl.stop > sl.start:
            node += spec.xi[k] * np.log((1.0 - u[sl].sum()) / ctx.b[k])
    return cell + float(node)


def V_value(spec: NetworkSpec, ctx: LyapunovContext, x, cfg: ControllerConfig | None = None, u=None) -> float:
    """V(x) = H~(x, u) at the GPA allocation u (computed unless supplied)."""
    x = np.asarray(x, dtype=float)
    if u is None:
        u = _controller(spec, cfg)(x)
    return H_tilde(spec, ctx, x, u)


def gradient_w(spec: NetworkSpec, ctx: LyapunovContext, x, cfg: ControllerConfig | None = None, zeta=None) -> np.ndarray:
    """w(x) = log(zeta(x) / a); -inf where zeta_i = 0 < a_i."""
    if zeta is None:
        zeta = _controller(spec, cfg).rates(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(zeta, dtype=float) / ctx.a)


@dataclass
class Reduction:
    I: np.ndarray
    J: np.ndarray
    lam_tilde: np.ndarray
    R_tilde: np.ndarray


def reduce_empty(R, lam, x, threshold: float = EMPTY_THRESHOLD) -> Reduction:
    """Eliminate the empty cells I = {x_i <= threshold} from (lambda, R)."""
    R = _matrix(R)
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    I = np.flatnonzero(x <= threshold)
    J = np.flatnonzero(x > threshold)
    RT = R.T
    if I.size == 0:
        return Reduction(I, J, lam.copy(), R.copy())
    A = np.eye(I.size) - RT[np.ix_(I, I)]
    try:
        # (I - R_II^T)^{-1} [lambda_I | R^T_IJ]
        S = np.linalg.solve(A, np.column_stack([lam[I], RT[np.ix_(I, J)]]))
    except np.linalg.LinAlgError:
        raise SingularSubsystem("I - R_II^T is singular for the current empty set") from None
    lam_t = lam[J] + RT[np.ix_(J, I)] @ S[:, 0]
    RT_t = RT[np.ix_(J, J)] + RT[np.ix_(J, I)] @ S[:, 1:]
    return Reduction(I, J, lam_t, RT_t.T.copy())


@dataclass
class DriftReport:
    V: float
    W: float
    w: np.ndarray
    zeta_gap: np.ndarray
    X_star_residual: float
    I: np.ndarray
    J: np.ndarray
    lam_tilde: np.ndarray
    R_tilde: np.ndarray


def x_star_residual(x, zeta, a) -> float:
    """Distance proxy to X* = {zeta >= a, x^T (zeta - a) = 0} in the infinity norm."""
    gap = np.asarray(zeta, dtype=float) - np.asarray(a, dtype=float)
    shortfall = float(np.max(np.clip(-gap, 0.0, None), initial=0.0))
    return max(shortfall, abs(float(np.asarray(x, dtype=float) @ gap)))


def drift_W(
    spec: NetworkSpec,
    ctx: LyapunovContext,
    routing,
    lam,
    x,
    threshold: float = EMPTY_THRESHOLD,
    cfg: ControllerConfig | None = None,
    u=None,
) -> DriftReport:
    """W = -w_J^T (lambda~ - (I - R~^T) zeta_J), plus V, w and the X* residual."""
    x = np.asarray(x, dtype=float)
    if u is None:
        u = _controller(spec, cfg)(x)
    zeta = spec.capacity * (spec.P @ np.asarray(u, dtype=float))
    red = reduce_empty(routing, lam, x, threshold)
    w = gradient_w(spec, ctx, x, zeta=zeta)
    J = red.J
    if J.size:
        flow = red.lam_tilde - (zeta[J] - red.R_tilde.T @ zeta[J])
        W = float(-(w[J] @ flow))
    else:
        W = 0.0
    return DriftReport(
        V=H_tilde(spec, ctx, x, u),
        W=W,
        w=w,
        zeta_gap=zeta - ctx.a,
        X_star_residual=x_star_residual(x, zeta, ctx.a),
        I=red.I,
        J=J,
        lam_tilde=red.lam_tilde,
        R_tilde=red.R_tilde,
    )


def oracle_F(
    spec: NetworkSpec,
    ctx: LyapunovContext,
    routing,
    x,
    threshold: float = EMPTY_THRESHOLD,
    cfg: ControllerConfig | None = None,
    u=None,
) -> float:
    """sum_j lambda~_j F_j with F = (I - R~)^{-1} diag((I - R~) w_J) (e^{w_J} - 1).

    Independent of drift_W's formula; lambda is recovered as (I - R^T) a.
    """
    R = _matrix(routing)
    x = np.asarray(x, dtype=float)
    lam = ctx.a - R.T @ ctx.a
    if u is None:
        u = _controller(spec, cfg)(x)
    zeta = spec.capacity * (spec.P @ np.asarray(u, dtype=float))
    red = reduce_empty(R, lam, x, threshold)
    if red.J.size == 0:
        return 0.0
    wJ = gradient_w(spec, ctx, x, zeta=zeta)[red.J]
    M = np.eye(red.J.size) - red.R_tilde
    F = np.linalg.solve(M, (M @ wJ) * np.expm1(wJ))
    return float(red.lam_tilde @ F)


def equilibrium_single_cell_phases(spec: NetworkSpec, ctx: LyapunovContext) -> np.ndarray:
    """Unique equilibrium when every phase holds one cell: per node solve
    (C^(k) - a^(k) 1^T) x^(k) = xi_k a^(k).
    """
    if not spec.has_single_cell_phases:
        raise ValueError("equilibrium_single_cell_phases needs every phase to hold exactly one cell")
    x = np.zeros(spec.n)
    a = np.asarray(ctx.a, dtype=float)
    for k, cells in enumerate(spec.node_cells):
        if cells.size == 0:
            continue
        a_k, c_k = a[cells], spec.capacity[cells]
        if np.sum(a_k / c_k) >= 1.0 - 1e-12:
            raise SingularSystem(f"node {spec.nodes[k]!r}: demand saturates the cycle")
        A = np.diag(c_k) - np.outer(a_k, np.ones(cells.size))
        x[cells] = np.linalg.solve(A, spec.xi[k] * a_k)
    return x


@dataclass(frozen=True)
class WebsterRow:
    rho1: float
    rho2: float
    lost_fraction: float
    webster_T: float
    x_star: tuple[float, float]


def webster_check(rho1: float, rho2: float, L: float) -> WebsterRow:
    """GPA equilibrium lost-time fraction next to Webster's cycle length
    T = (1.5 L + 5) / (1 - rho1 - rho2), for one node with two single-cell phases.
    """
    if rho1 < 0 or rho2 < 0:
        raise ValueError("flow ratios must be nonnegative")
    if not L > 0:
        raise ValueError("lost time L must be positive")
    if rho1 + rho2 >= 1:
        raise Unstable(f"rho1 + rho2 = {rho1 + rho2:g} >= 1: no stabilizing allocation exists")
    spec = build_network([("e1", "o1", "v", 1.0), ("e2", "o2", "v", 1.0)], {"v": [["e1"], ["e2"]]}, 1.0)
    lam = np.array([rho1, rho2])
    a = aggregate_demand(lam, np.zeros((2, 2)))
    ctx = LyapunovContext(a=a, b=np.array([1.0 - rho1 - rho2]), lam=lam, routing=np.zeros((2, 2)))
    x = equilibrium_single_cell_phases(spec, ctx)
    xi = float(spec.xi[spec.node_index["v"]])
    lost = xi / (x.sum() + xi)
    return WebsterRow(rho1, rho2, float(lost), (1.5 * L + 5.0) / (1.0 - rho1 - rho2), (float(x[0]), float(x[1])))


class TrajectoryDiagnostics:
    """Per-sample V, W and X* residual for simulate(); one context per demand piece.

    Pieces whose aggregate demand is not interior yield NaN diagnostics.
    """

    def __init__(self, spec: NetworkSpec, demand, threshold: float = EMPTY_THRESHOLD):
        self.spec = spec
        self.demand = demand
        self.threshold = threshold
        self._ctx: dict[int, LyapunovContext | None] = {}

    def context(self, k: int) -> LyapunovContext | None:
        if k not in self._ctx:
            pc = self.demand.pieces[k]
            try:
                self._ctx[k] = build_context(self.spec, pc.lam, pc.routing)
            except (NotInterior, SingularSystem):
                self._ctx[k] = None
        return self._ctx[k]

    def __call__(self, t, x, u, zeta, z, k) -> dict:
        ctx = self.context(k)
        if ctx is None:
            return {"V": float("nan"), "W": float("nan"), "X_star_residual": float("nan")}
        pc = self.demand.pieces[k]
        rep = drift_W(self.spec, ctx, pc.routing, pc.lam, x, self.threshold, u=u)
        return {"V": rep.V, "W": rep.W, "X_star_residual": rep.X_star_residual}
