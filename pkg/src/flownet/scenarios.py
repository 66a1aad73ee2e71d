"""Scenario files, runs, trajectory CSV and plots.

A scenario is a JSON file naming a network and a demand file (paths relative to
the scenario file) together with controller and integration settings.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .controllers import Controller, ControllerConfig
from .dynamics import DEFAULT_DT, DEFAULT_STRIDE, EMPTY_THRESHOLD, Trajectory, simulate
from .errors import NotInterior, ParseError, SingularSystem, ValidationError
from .graph import aggregate_demand, is_in_connected, is_out_connected
from .lyapunov import TrajectoryDiagnostics, build_context, drift_W
from .network import (
    DemandProfile,
    NetworkSpec,
    load_demand,
    load_network,
    validate,
    validate_demand,
)
from .stability import StabilityCertificate, Verdict, check_necessary_condition, membership_margin, node_slacks

SCENARIO_KEYS = {
    "name", "network", "demand", "controller", "x0", "horizon", "dt",
    "sample_stride", "empty_threshold", "diagnostics", "outputs",
}


@dataclass(frozen=True)
class DiagnosticsConfig:
    lyapunov: bool = True
    average_inflow: bool = True


@dataclass(frozen=True)
class OutputsConfig:
    trajectory_csv: Path | None = None
    report: Path | None = None
    plots: Path | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    network_file: Path
    demand_file: Path
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    x0: Mapping[str, float] = field(default_factory=dict)
    horizon: float = 100.0
    dt: float = DEFAULT_DT
    sample_stride: int = DEFAULT_STRIDE
    empty_threshold: float = EMPTY_THRESHOLD
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    name: str = "scenario"

    def __post_init__(self):
        if not (self.horizon > 0 and self.dt > 0):
            raise ParseError("horizon and dt must be positive")
        if self.dt > self.horizon:
            raise ParseError("dt must not exceed the horizon")
        if self.sample_stride < 1:
            raise ParseError("sample_stride must be >= 1")
        if not self.empty_threshold >= 0:
            raise ParseError("empty_threshold must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Path | str = ".", source: str = "scenario") -> "ScenarioConfig":
        base = Path(base_dir)
        unknown = set(data) - SCENARIO_KEYS
        if unknown:
            raise ParseError(f"{source}: unknown keys {sorted(unknown)}")

        def where(key):
            return f"{source}: key {key!r}"

        for key in ("network", "demand"):
            if key not in data:
                raise ParseError(f"{source}: missing key {key!r}")
        try:
            ctrl = dict(data.get("controller", {}))
            static_u = ctrl.pop("static_u", None)
            kind = str(ctrl.pop("kind", "gpa")).lower().replace("-", "_").replace("maxpressure", "max_pressure")
            if kind == "static" and not isinstance(static_u, (Mapping, list)):
                raise ParseError(f"{where('controller.static_u')}: expected a map node -> phase fractions")
            if isinstance(static_u, list):
                static_u = tuple(float(v) for v in static_u)
            controller = ControllerConfig(
                kind=kind,
                epsilon_reg=float(ctrl.pop("epsilon_reg", 1e-9)),
                solver_tol=float(ctrl.pop("solver_tol", 1e-10)),
                static_u=static_u if kind == "static" else None,
            )
            if ctrl:
                raise ParseError(f"{where('controller')}: unknown keys {sorted(ctrl)}")
        except ValueError as e:
            raise ParseError(f"{where('controller')}: {e}") from None
        diag = data.get("diagnostics", {})
        outs = data.get("outputs", {})

        def out_path(key):
            v = outs.get(key)
            return None if v is None else base / v

        try:
            return cls(
                network_file=base / data["network"],
                demand_file=base / data["demand"],
                controller=controller,
                x0={str(k): float(v) for k, v in data.get("x0", {}).items()},
                horizon=float(data.get("horizon", 100.0)),
                dt=float(data.get("dt", DEFAULT_DT)),
                sample_stride=int(data.get("sample_stride", DEFAULT_STRIDE)),
                empty_threshold=float(data.get("empty_threshold", EMPTY_THRESHOLD)),
                diagnostics=DiagnosticsConfig(
                    lyapunov=bool(diag.get("lyapunov", True)),
                    average_inflow=bool(diag.get("average_inflow", True)),
                ),
                outputs=OutputsConfig(out_path("trajectory_csv"), out_path("report"), out_path("plots")),
                name=str(data.get("name", "scenario")),
            )
        except ParseError as e:
            raise ParseError(f"{source}: {e}") from None
        except (TypeError, ValueError, AttributeError) as e:
            raise ParseError(f"{source}: {e}") from None

    @classmethod
    def load(cls, path: Path | str) -> "ScenarioConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as e:
            raise ParseError(f"{path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON ({e})") from None
        if not isinstance(data, Mapping):
            raise ParseError(f"{path}: expected a JSON object")
        return cls.from_dict(data, base_dir=path.parent, source=str(path))

    def with_outputs(self, out_dir: Path | str) -> "ScenarioConfig":
        out = Path(out_dir)
        return replace(self, outputs=OutputsConfig(out / "trajectory.csv", out / "report.json", out / "plots"))


def load_inputs(network_file, demand_file) -> tuple[NetworkSpec, DemandProfile]:
    """Parse and validate a network/demand pair; raises ValidationError with file context."""
    spec = load_network(network_file)
    rep = validate(spec)
    if not rep.ok:
        raise ValidationError(rep, context=str(network_file))
    demand = load_demand(spec, demand_file)
    rep = validate_demand(spec, demand)
    if not rep.ok:
        raise ValidationError(rep, context=str(demand_file))
    return spec, demand


def controller_for(spec: NetworkSpec, cfg: ScenarioConfig) -> Controller:
    try:
        return Controller(spec, cfg.controller)
    except ValueError as e:
        raise ParseError(f"controller: {e}") from None


# --- average inflow ----------------------------------------------------------


@dataclass
class AverageInflowTrace:
    t: np.ndarray
    lam_bar: np.ndarray  # samples x cells
    margin: np.ndarray  # membership margin of (I - R^T)^{-1} lam_bar, R of the current piece
    piece: np.ndarray


def average_inflow(demand: DemandProfile, t: float) -> np.ndarray:
    """lam_bar(t) = (1/t) * integral of lambda over [0, t]; lambda(0) at t = 0."""
    if t <= 0:
        return demand.pieces[0].lam.copy()
    total = np.zeros_like(demand.pieces[0].lam)
    starts = demand.starts()
    for k, pc in enumerate(demand.pieces):
        lo = starts[k]
        hi = starts[k + 1] if k + 1 < len(starts) else math.inf
        if lo >= t:
            break
        total += pc.lam * (min(hi, t) - lo)
    return total / t


def average_inflow_tracker(trajectory: Trajectory, demand: DemandProfile) -> AverageInflowTrace:
    spec = trajectory.spec
    cache: dict[tuple[int, bytes], float] = {}
    lam_bar = np.array([average_inflow(demand, float(t)) for t in trajectory.t])
    margins = np.empty(trajectory.t.size)
    for s, (k, lb) in enumerate(zip(trajectory.piece, lam_bar)):
        key = (int(k), lb.tobytes())
        if key not in cache:
            try:
                a = aggregate_demand(lb, demand.pieces[k].routing)
                cache[key] = membership_margin(spec, np.clip(a, 0.0, None)).margin
            except SingularSystem:
                cache[key] = math.nan
        margins[s] = cache[key]
    return AverageInflowTrace(trajectory.t.copy(), lam_bar, margins, trajectory.piece.copy())


def first_outside_scale(spec: NetworkSpec, demand: DemandProfile, step: float = 0.05, limit: float = 100.0) -> float:
    """Smallest factor on the grid 1, 1 + step, ... at which every piece's
    aggregate demand is certified Outside the stability region."""
    if not step > 0:
        raise ValueError("step must be positive")
    s = 1.0
    while s <= limit:
        scaled = demand.scaled(s)
        if all(
            check_necessary_condition(spec, pc.lam, pc.routing).verdict is Verdict.OUTSIDE
            for pc in scaled.pieces
        ):
            return s
        s = round(s + step, 12)
    raise ValueError(f"demand stays inside the stability region up to scale {limit:g}")


def final_quarter_slope(t, values) -> float:
    """Least-squares slope of values over the last quarter of the time span."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = t >= t[0] + 0.75 * (t[-1] - t[0])
    if keep.sum() < 2:
        raise ValueError("need at least two samples in the final quarter")
    return float(np.polyfit(t[keep], v[keep], 1)[0])


# --- runs --------------------------------------------------------------------


@dataclass
class PieceReport:
    index: int
    start: float
    end: float
    verdict: str
    margin: float
    avg_outflow: dict[str, float]
    avg_arrival: dict[str, float]
    aggregate_demand: dict[str, float]


@dataclass
class RunSummary:
    name: str
    trajectory: Trajectory
    terminal_t: float
    terminal_x: dict[str, float]
    max_x_inf: float
    terminal_V: float
    terminal_X_star_residual: float
    pieces: list[PieceReport]
    initial_volume: float
    terminal_volume: float
    lam_bar: AverageInflowTrace | None = None

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else v

        return {
            "name": self.name,
            "samples": len(self.trajectory),
            "terminal_t": self.terminal_t,
            "terminal_x": self.terminal_x,
            "max_x_inf": self.max_x_inf,
            "terminal_V": num(self.terminal_V),
            "terminal_X_star_residual": num(self.terminal_X_star_residual),
            "initial_volume": self.initial_volume,
            "terminal_volume": self.terminal_volume,
            "pieces": [
                {
                    "index": p.index,
                    "start": p.start,
                    "end": p.end,
                    "verdict": p.verdict,
                    "margin": p.margin,
                    "avg_outflow": p.avg_outflow,
                    "avg_arrival": p.avg_arrival,
                    "aggregate_demand": p.aggregate_demand,
                }
                for p in self.pieces
            ],
        }


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> RunSummary:
    spec, demand = load_inputs(cfg.network_file, cfg.demand_file)
    for cid in cfg.x0:
        if cid not in spec.cell_index:
            raise ParseError(f"x0: unknown cell {cid!r}")
    x0 = spec.vector(cfg.x0)
    if np.any(x0 < 0):
        raise ParseError("x0: volumes must be nonnegative")
    controller = controller_for(spec, cfg)
    diag = TrajectoryDiagnostics(spec, demand, cfg.empty_threshold) if cfg.diagnostics.lyapunov else None
    traj = simulate(
        spec, demand, controller, x0, cfg.horizon, cfg.dt, cfg.sample_stride,
        threshold=cfg.empty_threshold, diagnostics=diag,
    )
    ids = [c.id for c in spec.cells]
    reports = []
    for pi in traj.pieces:
        pc = demand.pieces[pi.index]
        try:
            cert = check_necessary_condition(spec, pc.lam, pc.routing)
            verdict, margin, a = cert.verdict.value, cert.margin, cert.demand
        except SingularSystem:
            verdict, margin, a = "Singular", math.nan, np.full(spec.n, math.nan)
        reports.append(PieceReport(
            index=pi.index,
            start=pi.start,
            end=pi.end,
            verdict=verdict,
            margin=margin,
            avg_outflow=dict(zip(ids, (pi.outflow / pi.duration).tolist())),
            avg_arrival=dict(zip(ids, (pi.arrival / pi.duration).tolist())),
            aggregate_demand=dict(zip(ids, a.tolist())),
        ))
    V = traj.diagnostics.get("V")
    res = traj.diagnostics.get("X_star_residual")
    summary = RunSummary(
        name=cfg.name,
        trajectory=traj,
        terminal_t=float(traj.t[-1]),
        terminal_x=dict(zip(ids, traj.x[-1].tolist())),
        max_x_inf=float(traj.x.max()),
        terminal_V=float(V[-1]) if V is not None else math.nan,
        terminal_X_star_residual=float(res[-1]) if res is not None else math.nan,
        pieces=reports,
        initial_volume=float(traj.x[0].sum()),
        terminal_volume=float(traj.x[-1].sum()),
        lam_bar=average_inflow_tracker(traj, demand) if cfg.diagnostics.average_inflow else None,
    )
    if write:
        write_outputs(summary, cfg)
    return summary


def write_outputs(summary: RunSummary, cfg: ScenarioConfig) -> list[Path]:
    written = []
    out = cfg.outputs
    csv_path = out.trajectory_csv
    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(summary.trajectory, csv_path, cfg=cfg)
        written += [csv_path, meta_path(csv_path)]
    if out.report is not None:
        out.report.parent.mkdir(parents=True, exist_ok=True)
        report = summary.to_dict()
        if summary.lam_bar is not None:
            report["average_inflow_margin"] = {
                "t": summary.lam_bar.t.tolist(),
                "margin": [None if math.isnan(m) else m for m in summary.lam_bar.margin.tolist()],
            }
        out.report.write_text(json.dumps(report, indent=2) + "\n")
        written.append(out.report)
    if out.plots is not None and csv_path is not None:
        written += emit_plots(csv_path, out.plots)
    return written


# --- trajectory CSV ----------------------------------------------------------


def meta_path(csv_path: Path | str) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".meta.json")


def trajectory_header(spec: NetworkSpec) -> list[str]:
    ids = [c.id for c in spec.cells]
    return (
        ["t"]
        + [f"x.{c}" for c in ids]
        + [f"u.{node}.{q}" for node, q in spec.phase_labels()]
        + [f"z.{c}" for c in ids]
        + ["V", "W"]
    )


def _running_arrival(traj: Trajectory) -> np.ndarray:
    """Average arrival rate since the start of the current demand piece, per sample."""
    out = np.empty_like(traj.x)
    cum0 = np.zeros(traj.x.shape[1])
    starts = {}
    for pi in traj.pieces:
        starts[pi.index] = (pi.start, cum0.copy())
        cum0 = cum0 + pi.arrival
    for s in range(len(traj)):
        t0, c0 = starts[int(traj.piece[s])]
        span = traj.t[s] - t0
        if span > 0:
            out[s] = (traj.cum_arrival[s] - c0) / span
        else:
            # instantaneous arrival lambda + R^T z at the piece start
            nxt = min(s + 1, len(traj) - 1)
            dt = traj.t[nxt] - traj.t[s]
            out[s] = (traj.cum_arrival[nxt] - traj.cum_arrival[s]) / dt if dt > 0 else 0.0
    return out


def write_trajectory_csv(traj: Trajectory, path: Path | str, cfg: ScenarioConfig | None = None) -> Path:
    """One row per sample; floats written with repr so reruns are byte-identical."""
    spec = traj.spec
    path = Path(path)
    nan = np.full(len(traj), math.nan)
    V = traj.diagnostics.get("V", nan)
    W = traj.diagnostics.get("W", nan)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(spec))
        for s in range(len(traj)):
            row = [traj.t[s], *traj.x[s], *traj.u[s], *traj.z[s], V[s], W[s]]
            w.writerow([repr(float(v)) for v in row])
    meta = {
        "cells": {c.id: c.head for c in spec.cells},
        "capacity": {c.id: c.capacity for c in spec.cells},
        "phases": {k: [list(q) for q in spec.phases[k]] for k in spec.nodes if spec.phases.get(k)},
        "avg_arrival": {c.id: col.tolist() for c, col in zip(spec.cells, _running_arrival(traj).T)},
    }
    if cfg is not None:
        meta["network"] = str(Path(cfg.network_file).resolve())
        meta["demand"] = str(Path(cfg.demand_file).resolve())
        meta["empty_threshold"] = cfg.empty_threshold
    meta_path(path).write_text(json.dumps(meta, indent=1) + "\n")
    return path


@dataclass
class TrajectoryTable:
    header: list[str]
    data: np.ndarray  # samples x columns
    meta: dict

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.header.index(name)]

    def columns(self, prefix: str) -> list[str]:
        return [h for h in self.header if h.startswith(prefix)]

    def __len__(self):
        return self.data.shape[0]


def read_trajectory_csv(path: Path | str) -> TrajectoryTable:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if not header or header[0] != "t":
        raise ParseError(f"{path}: first column must be 't'")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, len(header))
    except ValueError as e:
        raise ParseError(f"{path}: malformed row ({e})") from None
    mp = meta_path(path)
    meta = json.loads(mp.read_text()) if mp.exists() else {}
    return TrajectoryTable(header, data, meta)


# --- plots -------------------------------------------------------------------


def _panels(table: TrajectoryTable) -> list[tuple[str, list[str], list[str]]]:
    """(node, cells, u-columns) per node with phases, in column order."""
    cells_of: dict[str, list[str]] = {}
    heads = table.meta.get("cells", {})
    for col in table.columns("x."):
        cid = col[2:]
        cells_of.setdefault(heads.get(cid, "all"), []).append(cid)
    nodes: list[str] = []
    for col in table.columns("u."):
        node = col[2:].rsplit(".", 1)[0]
        if node not in nodes:
            nodes.append(node)
    if not heads:
        return [("all", cells_of.get("all", []), table.columns("u."))]
    return [(k, cells_of.get(k, []), [c for c in table.columns("u.") if c[2:].rsplit(".", 1)[0] == k]) for k in nodes]


def emit_plots(trajectory_csv: Path | str, out_dir: Path | str) -> list[Path]:
    """volumes.png and controls.png, one panel per node; dashed lines are the
    average arrival rates over capacity.
    """
    table = read_trajectory_csv(trajectory_csv)
    if len(table) == 0:
        raise ParseError(f"{trajectory_csv}: trajectory has no samples")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    panels = _panels(table)
    t = table.column("t")
    marker = "o" if len(table) == 1 else None
    cap = table.meta.get("capacity", {})
    arrival = table.meta.get("avg_arrival", {})
    paths = []
    for kind in ("volumes", "controls"):
        fig, axes = plt.subplots(len(panels), 1, figsize=(8, 2.4 * len(panels)), sharex=True, squeeze=False)
        for ax, (node, cells, ucols) in zip(axes[:, 0], panels):
            if kind == "volumes":
                for cid in cells:
                    ax.plot(t, table.column(f"x.{cid}"), marker=marker, label=cid)
                ax.set_ylabel("volume")
            else:
                for col in ucols:
                    ax.plot(t, table.column(col), marker=marker, label=f"phase {col.rsplit('.', 1)[1]}")
                for cid in cells:
                    if cid in arrival:
                        ax.plot(t, np.asarray(arrival[cid]) / cap.get(cid, 1.0), "--", lw=0.9, label=f"avg arrival {cid}")
                ax.set_ylabel("allocation")
            ax.set_title(f"node {node}", fontsize=9)
            ax.legend(fontsize=7, loc="upper right", ncol=2)
        axes[-1, 0].set_xlabel("t")
        fig.tight_layout()
        path = out / f"{kind}.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        paths.append(path)
    return paths


# --- check / lyapunov reports ----------------------------------------------


@dataclass
class PieceCertificate:
    index: int
    start: float
    out_connected: bool
    in_connected: bool
    certificate: StabilityCertificate | None
    slacks: np.ndarray | None
    error: str | None = None


def check_pieces(spec: NetworkSpec, demand: DemandProfile) -> list[PieceCertificate]:
    out = []
    for k, pc in enumerate(demand.pieces):
        oc = is_out_connected(pc.lam, pc.routing)
        ic = is_in_connected(pc.lam, pc.routing)
        try:
            cert = check_necessary_condition(spec, pc.lam, pc.routing)
        except SingularSystem as e:
            out.append(PieceCertificate(k, pc.start, oc, ic, None, None, str(e)))
            continue
        slacks = node_slacks(spec, cert.demand) if cert.interior else None
        out.append(PieceCertificate(k, pc.start, oc, ic, cert, slacks))
    return out


def format_check(spec: NetworkSpec, results: list[PieceCertificate]) -> str:
    ids = [c.id for c in spec.cells]
    lines = []
    for r in results:
        lines.append(f"piece {r.index} (t >= {r.start:g})")
        lines.append(f"  out-connected: {'yes' if r.out_connected else 'no'}")
        lines.append(f"  in-connected:  {'yes' if r.in_connected else 'no'}")
        if r.certificate is None:
            lines.append(f"  aggregate demand unavailable: {r.error}")
            continue
        cert = r.certificate
        lines.append(f"  verdict: {cert.verdict.value}")
        lines.append(f"  margin:  {cert.margin:.9g}")
        lines.append("  aggregate demand a:")
        for cid, a in zip(ids, cert.demand):
            lines.append(f"    {cid:<12} {a:.9g}")
        lines.append("  witness allocation u:")
        for (node, q), u in zip(spec.phase_labels(), cert.witness):
            lines.append(f"    {node:<8} phase {q:<3} {u:.9g}")
        if r.slacks is not None:
            lines.append("  node slack b_k:")
            for k, node in enumerate(spec.nodes):
                if spec.phase_slices[k].stop > spec.phase_slices[k].start:
                    lines.append(f"    {node:<8} {r.slacks[k]:.9g}")
        else:
            lines.append("  node slack b_k: n/a (demand not interior)")
    return "\n".join(lines)


def lyapunov_table(spec: NetworkSpec, demand: DemandProfile, table: TrajectoryTable, threshold: float) -> TrajectoryTable:
    """Append V, W, X* residual and w.<cell> for every sample of a trajectory table."""
    ids = [c.id for c in spec.cells]
    xcols = [f"x.{c}" for c in ids]
    ucols = [f"u.{node}.{q}" for node, q in spec.phase_labels()]
    missing = [c for c in xcols + ucols if c not in table.header]
    if missing:
        raise ParseError(f"trajectory does not match the network: missing columns {missing[:3]}")
    X = np.column_stack([table.column(c) for c in xcols])
    U = np.column_stack([table.column(c) for c in ucols]) if ucols else np.zeros((len(table), 0))
    t = table.column("t")
    ctxs: dict[int, Any] = {}
    new_cols = ["V.diag", "W.diag", "X_star_residual"] + [f"w.{c}" for c in ids]
    rows = np.full((len(table), len(new_cols)), math.nan)
    for s in range(len(table)):
        k = demand.index_at(float(t[s]))
        if k not in ctxs:
            pc = demand.pieces[k]
            try:
                ctxs[k] = build_context(spec, pc.lam, pc.routing)
            except (NotInterior, SingularSystem):
                ctxs[k] = None
        ctx = ctxs[k]
        if ctx is None:
            continue
        pc = demand.pieces[k]
        rep = drift_W(spec, ctx, pc.routing, pc.lam, X[s], threshold, u=U[s])
        rows[s] = [rep.V, rep.W, rep.X_star_residual, *rep.w]
    header = [h for h in table.header if h not in new_cols] + new_cols
    keep = [table.header.index(h) for h in table.header if h not in new_cols]
    return TrajectoryTable(header, np.hstack([table.data[:, keep], rows]), table.meta)


def write_table(table: TrajectoryTable, path: Path | str) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        for row in table.data:
            w.writerow([repr(float(v)) for v in row])
    return path
