"""flownet command line.

Exit codes: 0 success, 2 invalid input (parse or validation), 3 solver failure.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .errors import InputError, NotInterior, ParseError, SolverError
from .lyapunov import build_context, drift_W, equilibrium_single_cell_phases
from .network import NetworkSpec
from .scenarios import (
    ScenarioConfig,
    check_pieces,
    emit_plots,
    format_check,
    load_inputs,
    lyapunov_table,
    read_trajectory_csv,
    run_scenario,
    write_table,
)

EXIT_INPUT = 2
EXIT_SOLVER = 3


class _Group(click.Group):
    """Maps library exceptions onto exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (InputError, ValueError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INPUT)
        except SolverError as e:
            click.echo(f"solver failure ({type(e).__name__}): {e}", err=True)
            sys.exit(EXIT_SOLVER)


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Dynamical flow networks with phase-constrained service."""


@main.command()
@click.argument("network", type=click.Path(dir_okay=False))
@click.argument("demand", type=click.Path(dir_okay=False))
def check(network, demand):
    """Stability certificate for every demand piece: connectedness, aggregate
    demand, interior margin, witness allocation and node slacks."""
    spec, dem = load_inputs(network, demand)
    click.echo(format_check(spec, check_pieces(spec, dem)))


@main.command()
@click.argument("scenario", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Write trajectory.csv, report.json and plots/ here.")
@click.option("--no-plots", is_flag=True, help="Skip plot emission.")
def simulate(scenario, out_dir, no_plots):
    """Run a scenario file and write its outputs."""
    cfg = ScenarioConfig.load(scenario)
    if out_dir:
        cfg = cfg.with_outputs(out_dir)
    if no_plots:
        cfg = replace(cfg, outputs=replace(cfg.outputs, plots=None))
    summary = run_scenario(cfg)
    click.echo(f"scenario {summary.name}: {len(summary.trajectory)} samples up to t = {summary.terminal_t:g}")
    click.echo(f"  max |x|_inf            {summary.max_x_inf:.6g}")
    click.echo(f"  volume initial/final   {summary.initial_volume:.6g} / {summary.terminal_volume:.6g}")
    click.echo(f"  terminal V             {_fmt(summary.terminal_V)}")
    click.echo(f"  terminal X* residual   {_fmt(summary.terminal_X_star_residual)}")
    for p in summary.pieces:
        gap = max((p.avg_outflow[c] - p.avg_arrival[c] for c in p.avg_outflow), default=0.0, key=abs)
        click.echo(
            f"  piece {p.index} [{p.start:g}, {p.end:g}): {p.verdict}, margin {p.margin:.4g}, "
            f"largest avg outflow - avg arrival {gap:.3g}"
        )
    for path in (cfg.outputs.trajectory_csv, cfg.outputs.report, cfg.outputs.plots):
        if path is not None:
            click.echo(f"  wrote {path}")


def _fmt(v: float) -> str:
    return "n/a" if v is None or math.isnan(v) else f"{v:.6g}"


@main.command()
@click.argument("network", type=click.Path(dir_okay=False))
@click.argument("demand", type=click.Path(dir_okay=False))
@click.option("--piece", default=0, show_default=True, help="Demand piece to use.")
def equilibrium(network, demand, piece):
    """Unique equilibrium for networks whose phases each hold one cell."""
    spec, dem = load_inputs(network, demand)
    if not 0 <= piece < len(dem.pieces):
        raise ParseError(f"--piece must be in [0, {len(dem.pieces)})")
    pc = dem.pieces[piece]
    ctx = build_context(spec, pc.lam, pc.routing)
    x = equilibrium_single_cell_phases(spec, ctx)
    click.echo(f"{'cell':<12} {'x*':>14} {'a':>14}")
    for c, xv, av in zip(spec.cells, x, ctx.a):
        click.echo(f"{c.id:<12} {xv:>14.9g} {av:>14.9g}")
    click.echo("lost-time fraction at equilibrium:")
    for k, node in enumerate(spec.nodes):
        cells = spec.node_cells[k]
        if cells.size:
            xi = spec.xi[k]
            click.echo(f"  {node:<10} {xi / (x[cells].sum() + xi):.9g}")


@main.command()
@click.argument("source", type=click.Path(dir_okay=False))
@click.option("--scenario", "scenario_file", type=click.Path(dir_okay=False), help="Scenario for a trajectory CSV without metadata.")
@click.option("--state", "state_file", type=click.Path(dir_okay=False), help="JSON map cell -> volume (scenario input only).")
@click.option("--piece", default=0, show_default=True, help="Demand piece for a single state.")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), help="Where to write the augmented CSV.")
def lyapunov(source, scenario_file, state_file, piece, out_file):
    """V, W, w and the X* residual for one state or every sample of a trajectory.

    SOURCE is a scenario JSON (evaluated at x0, or at --state) or a trajectory
    CSV written by `simulate`, which gains V.diag, W.diag, X_star_residual and
    w.<cell> columns.
    """
    src = Path(source)
    if src.suffix.lower() == ".csv":
        table = read_trajectory_csv(src)
        if scenario_file:
            cfg = ScenarioConfig.load(scenario_file)
            network, demand, thr = cfg.network_file, cfg.demand_file, cfg.empty_threshold
        elif "network" in table.meta:
            network, demand = table.meta["network"], table.meta["demand"]
            thr = table.meta.get("empty_threshold", 1e-9)
        else:
            raise ParseError(f"{src}: no metadata sidecar; pass --scenario")
        spec, dem = load_inputs(network, demand)
        out = lyapunov_table(spec, dem, table, thr)
        dest = Path(out_file) if out_file else src.with_name(src.stem + ".lyapunov.csv")
        write_table(out, dest)
        V = out.column("V.diag")
        res = out.column("X_star_residual")
        click.echo(f"{len(out)} samples; final V {_fmt(V[-1])}, final X* residual {_fmt(res[-1])}")
        click.echo(f"wrote {dest}")
        return

    cfg = ScenarioConfig.load(src)
    spec, dem = load_inputs(cfg.network_file, cfg.demand_file)
    values = dict(cfg.x0)
    if state_file:
        try:
            values = {str(k): float(v) for k, v in json.loads(Path(state_file).read_text()).items()}
        except (OSError, ValueError, AttributeError) as e:
            raise ParseError(f"{state_file}: {e}") from None
    for cid in values:
        if cid not in spec.cell_index:
            raise ParseError(f"state: unknown cell {cid!r}")
    x = spec.vector(values)
    if not 0 <= piece < len(dem.pieces):
        raise ParseError(f"--piece must be in [0, {len(dem.pieces)})")
    pc = dem.pieces[piece]
    try:
        ctx = build_context(spec, pc.lam, pc.routing)
    except NotInterior as e:
        raise NotInterior(f"piece {piece}: {e}") from None
    rep = drift_W(spec, ctx, pc.routing, pc.lam, x, cfg.empty_threshold, cfg=cfg.controller)
    _print_state_report(spec, x, rep)


def _print_state_report(spec: NetworkSpec, x: np.ndarray, rep) -> None:
    click.echo(f"V               {rep.V:.9g}")
    click.echo(f"W               {rep.W:.9g}")
    click.echo(f"X* residual     {rep.X_star_residual:.9g}")
    click.echo(f"empty cells     {', '.join(spec.cells[i].id for i in rep.I) or 'none'}")
    click.echo(f"{'cell':<12} {'x':>12} {'w':>12} {'zeta - a':>12}")
    for c, xv, wv, gv in zip(spec.cells, x, rep.w, rep.zeta_gap):
        click.echo(f"{c.id:<12} {xv:>12.6g} {wv:>12.6g} {gv:>12.6g}")


@main.command()
@click.argument("csv_file", type=click.Path(dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
def plot(csv_file, out_dir):
    """Volume and allocation plots from a trajectory CSV."""
    for p in emit_plots(csv_file, out_dir):
        click.echo(f"wrote {p}")


if __name__ == "__main__":
    main()
