"""Closed-loop integration of x' = lambda - (I - R^T) z with 0 <= z <= zeta(x) and
x^T (zeta(x) - z) = 0.

Empty cells (x_i <= threshold) pass flow through: their outflows solve the
reduced linear system z_I = (I - R_II^T)^{-1} (lambda_I + R_IJ^T zeta_J). Any
empty cell whose required outflow exceeds its service rate is moved to the
nonempty set (its queue must grow) and the system is re-solved.

Integration is explicit Euler. A cell that would cross zero inside a step only
releases what it holds, with the cut passed on downstream, so volumes stay
nonnegative and the discrete mass balance is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .controllers import Controller, service_rate
from .errors import SingularSubsystem
from .network import DemandProfile, NetworkSpec, RoutingMatrix

EMPTY_THRESHOLD = 1e-9
DEFAULT_DT = 1e-3
DEFAULT_STRIDE = 100


@dataclass
class FlowResolution:
    z: np.ndarray
    active_empty: np.ndarray  # indices of cells held at zero (the set I)


def _routing_T(routing) -> np.ndarray:
    return (routing.matrix if isinstance(routing, RoutingMatrix) else np.asarray(routing)).T


def resolve_flows(spec: NetworkSpec, routing, lam, x, zeta, threshold: float = EMPTY_THRESHOLD) -> FlowResolution:
    RT = _routing_T(routing)
    return _resolve(RT, np.asarray(lam, float), np.asarray(x, float), np.asarray(zeta, float), threshold)


def _resolve(RT, lam, x, zeta, threshold) -> FlowResolution:
    nonempty = x > threshold
    if nonempty.all():
        return FlowResolution(zeta.copy(), np.empty(0, dtype=int))
    for _ in range(x.size + 1):
        I = np.flatnonzero(~nonempty)
        J = np.flatnonzero(nonempty)
        if I.size == 0:
            return FlowResolution(zeta.copy(), I)
        A = np.eye(I.size) - RT[np.ix_(I, I)]
        rhs = lam[I] + RT[np.ix_(I, J)] @ zeta[J]
        try:
            z_I = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            raise SingularSubsystem("I - R_II^T is singular for the current empty set") from None
        over = z_I > zeta[I] + 1e-12 * np.maximum(1.0, zeta[I])
        if over.any():
            nonempty[I[np.argmax(over)]] = True
            continue
        z = zeta.copy()
        z[I] = np.clip(z_I, 0.0, zeta[I])
        return FlowResolution(z, I)
    raise AssertionError("active-set resolution exceeded n passes")


class _FlowMap:
    """Cache of z = G zeta + h for each empty set seen under one (lambda, R) piece.

    Valid while no empty cell is asked to carry more than its service rate;
    otherwise the caller falls back to the full active-set resolution.
    """

    def __init__(self, RT: np.ndarray, lam: np.ndarray, threshold: float, zeta_bound: float):
        self.RT, self.lam, self.threshold = RT, lam, threshold
        self.n = lam.size
        # nonempty rows of G are the identity, so z - zeta is zero there
        self.tol = 1e-12 * max(1.0, zeta_bound)
        self._maps: dict[bytes, tuple[np.ndarray, np.ndarray] | None] = {}

    def _build(self, empty: np.ndarray):
        I = np.flatnonzero(empty)
        J = np.flatnonzero(~empty)
        A = np.eye(I.size) - self.RT[np.ix_(I, I)]
        try:
            Ainv = np.linalg.inv(A)
        except np.linalg.LinAlgError:
            return None
        G = np.eye(self.n)
        G[I, :] = 0.0
        G[np.ix_(I, J)] = Ainv @ self.RT[np.ix_(I, J)]
        h = np.zeros(self.n)
        h[I] = Ainv @ self.lam[I]
        return np.ascontiguousarray(G), h

    def __call__(self, x: np.ndarray, zeta: np.ndarray) -> np.ndarray:
        empty = x <= self.threshold
        key = empty.tobytes()
        m = self._maps.get(key, False)
        if m is False:
            m = self._maps[key] = self._build(empty)
        if m is not None:
            z = m[0] @ zeta
            z += m[1]
            if (z - zeta).max() <= self.tol:
                np.maximum(z, 0.0, out=z)
                np.minimum(z, zeta, out=z)
                return z
        return _resolve(self.RT, self.lam, x, zeta, self.threshold).z


def _limit_outflow(x, lam, M, z, h, x_new):
    """Cut the realized outflow of cells the step would drive negative.

    A cell that empties inside the step releases only what it holds plus what
    arrives; the cut propagates downstream through M = I - R^T until no cell is
    negative. Returns (realized z, next state); 0 <= z <= the requested z.
    """
    z = z.copy()
    for _ in range(4 * x.size + 8):
        neg = x_new < 0
        if not neg.any():
            break
        z[neg] = np.maximum(z[neg] + x_new[neg] / h, 0.0)
        x_new = x + h * lam - h * (M @ z)
    np.maximum(x_new, 0.0, out=x_new)
    return z, x_new


def step(spec: NetworkSpec, routing, lam, x, controller, dt: float, threshold: float = EMPTY_THRESHOLD):
    """One Euler step with outflow limiting; returns (x_next, FlowResolution, u).

    The FlowResolution holds the flows at x; a cell that would overshoot zero
    within the step releases only its content, so x_next >= 0 without adding mass.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    u = controller(x, routing)
    zeta = service_rate(spec, u)
    RT = _routing_T(routing)
    res = _resolve(RT, lam, x, zeta, threshold)
    M = np.eye(x.size) - RT
    x_next = x + dt * lam - dt * (M @ res.z)
    if x_next.min() < 0:
        _, x_next = _limit_outflow(x, lam, M, res.z, dt, x_next)
    return x_next, res, u


@dataclass
class PieceIntegral:
    """Flow integrals over the part of one demand piece inside the horizon."""

    index: int
    start: float
    end: float
    inflow: np.ndarray  # integral of lambda
    outflow: np.ndarray  # integral of z
    arrival: np.ndarray  # integral of lambda + R^T z

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class Trajectory:
    spec: NetworkSpec
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    zeta: np.ndarray
    piece: np.ndarray
    cum_inflow: np.ndarray  # integral of 1^T lambda since t = 0
    cum_exit: np.ndarray  # integral of sum_i z_i (1 - sum_j R_ij)
    cum_outflow: np.ndarray  # per-cell integral of z
    cum_arrival: np.ndarray  # per-cell integral of lambda + R^T z
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    pieces: list[PieceIntegral] = field(default_factory=list)

    def __len__(self):
        return self.t.size

    def total_volume(self) -> np.ndarray:
        return self.x.sum(axis=1)


Diagnostics = Callable[[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray, int], dict]


def simulate(
    spec: NetworkSpec,
    demand: DemandProfile,
    controller,
    x0,
    horizon: float,
    dt: float = DEFAULT_DT,
    sample_stride: int = DEFAULT_STRIDE,
    threshold: float = EMPTY_THRESHOLD,
    diagnostics: Diagnostics | None = None,
) -> Trajectory:
    """Fixed-step Euler with outflow limiting; demand piece boundaries are hit exactly.

    A sample is taken every `sample_stride` steps and at the final time. Each
    sample holds the state and the allocation/outflows evaluated at that state.
    """
    if not horizon > 0 or not dt > 0:
        raise ValueError("horizon and dt must be positive")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    if not callable(controller):
        raise TypeError("controller must be callable as controller(x, routing)")
    if isinstance(controller, Controller):
        rates = controller.rates
    else:
        def rates(x, routing):
            return service_rate(spec, controller(x, routing))

    n = spec.n
    x = np.array(x0, dtype=float)
    if x.shape != (n,) or np.any(x < 0):
        raise ValueError("x0 must be a nonnegative vector over cells")

    rec = {k: [] for k in ("t", "x", "u", "z", "zeta", "piece", "cin", "cex", "cz", "carr")}
    diag_rows: list[dict] = []
    integrals: list[PieceIntegral] = []
    # running integral of z; the other integrals are linear in it within a piece
    cum_z = np.zeros(n)
    base_in, base_ex, base_arr = 0.0, 0.0, np.zeros(n)

    def record(t, x, zeta, z, k, t0, cz0, pc):
        u = controller(x, pc.routing)
        dz = cum_z - cz0
        rec["t"].append(t)
        rec["x"].append(x.copy())
        rec["u"].append(np.asarray(u, dtype=float).copy())
        rec["z"].append(z.copy())
        rec["zeta"].append(zeta.copy())
        rec["piece"].append(k)
        rec["cin"].append(base_in + float(pc.lam.sum()) * (t - t0))
        rec["cex"].append(base_ex + float(pc.routing.exit_fraction() @ dz))
        rec["cz"].append(cum_z.copy())
        rec["carr"].append(base_arr + pc.lam * (t - t0) + pc.routing.matrix.T @ dz)
        if diagnostics is not None:
            diag_rows.append(diagnostics(t, x, u, zeta, z, k))

    zeta_bound = float(np.max(spec.capacity * spec.P.sum(axis=1), initial=0.0))
    starts = [pc.start for pc in demand.pieces]
    count = 0
    t_end, k_end, pc_end = 0.0, 0, demand.pieces[0]
    for k, pc in enumerate(demand.pieces):
        t0 = pc.start
        t1 = min(starts[k + 1], horizon) if k + 1 < len(starts) else horizon
        if t0 >= horizon:
            break
        if t1 <= t0:
            continue
        lam = pc.lam
        routing = pc.routing
        RT = np.ascontiguousarray(routing.matrix.T)
        M = np.ascontiguousarray(np.eye(n) - RT)
        flows = _FlowMap(RT, lam, threshold, zeta_bound)
        cz0 = cum_z.copy()
        span = t1 - t0
        n_full = int(math.floor(span / dt + 1e-9))
        rest = span - n_full * dt
        n_steps = n_full + (1 if rest > 1e-12 * max(1.0, span) else 0)
        for j in range(n_steps):
            h = dt if j < n_full else rest
            zeta = rates(x, routing)
            if x.min() > threshold:
                z = zeta
            else:
                z = flows(x, zeta)
            if count % sample_stride == 0:
                record(t0 + j * dt, x, zeta, z, k, t0, cz0, pc)
            x_new = x + h * lam
            x_new -= h * (M @ z)
            if x_new.min() < 0:
                z, x_new = _limit_outflow(x, lam, M, z, h, x_new)
            x = x_new
            cum_z += h * z
            count += 1
        dz = cum_z - cz0
        integrals.append(PieceIntegral(k, t0, t1, lam * span, dz.copy(), lam * span + RT @ dz))
        base_in += float(lam.sum()) * span
        base_ex += float(routing.exit_fraction() @ dz)
        base_arr = base_arr + lam * span + RT @ dz
        t_end, k_end, pc_end = t1, k, pc

    # integrals are complete at the horizon: record with a zero offset into the last piece
    zeta = rates(x, pc_end.routing)
    z = _resolve(np.ascontiguousarray(pc_end.routing.matrix.T), pc_end.lam, x, zeta, threshold).z
    if not rec["t"] or rec["t"][-1] < t_end:
        record(float(t_end), x, zeta, z, k_end, float(t_end), cum_z.copy(), pc_end)

    diag = {}
    if diag_rows:
        for key in diag_rows[0]:
            diag[key] = np.array([row[key] for row in diag_rows])
    return Trajectory(
        spec=spec,
        t=np.array(rec["t"]),
        x=np.array(rec["x"]),
        u=np.array(rec["u"]).reshape(len(rec["t"]), spec.p),
        z=np.array(rec["z"]),
        zeta=np.array(rec["zeta"]),
        piece=np.array(rec["piece"], dtype=int),
        cum_inflow=np.array(rec["cin"]),
        cum_exit=np.array(rec["cex"]),
        cum_outflow=np.array(rec["cz"]),
        cum_arrival=np.array(rec["carr"]),
        diagnostics=diag,
        pieces=integrals,
    )
