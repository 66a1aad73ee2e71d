"""Scale the four-junction demand until the stability certificate says Outside,
then run GPA and MaxPressure and report how the total volume grows.

Usage: python3 scripts/necessary_condition.py [--step 0.05] [--horizon 300]
"""
from __future__ import annotations

import argparse
from pathlib import Path

from flownet.controllers import Controller, ControllerConfig
from flownet.dynamics import simulate
from flownet.scenarios import ScenarioConfig, final_quarter_slope, first_outside_scale, load_inputs
from flownet.stability import check_necessary_condition

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(ROOT / "scenarios" / "fig5_fourjunctions" / "scenario.json"))
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--horizon", type=float, default=None)
    args = ap.parse_args()

    cfg = ScenarioConfig.load(args.scenario)
    spec, demand = load_inputs(cfg.network_file, cfg.demand_file)
    s = first_outside_scale(spec, demand, args.step)
    scaled = demand.scaled(s)
    print(f"demand scale {s:g}")
    for k, pc in enumerate(scaled.pieces):
        cert = check_necessary_condition(spec, pc.lam, pc.routing)
        print(f"  piece {k}: {cert.verdict.value}, margin {cert.margin:.4f}")
    horizon = args.horizon or cfg.horizon
    for kind in ("gpa", "max_pressure"):
        tr = simulate(spec, scaled, Controller(spec, ControllerConfig(kind=kind)), spec.vector(cfg.x0), horizon, cfg.dt, cfg.sample_stride)
        v = tr.total_volume()
        print(f"{kind:>12}: 1^T x from {v[0]:.3f} to {v[-1]:.3f}, final-quarter slope {final_quarter_slope(tr.t, v):.4f}")


if __name__ == "__main__":
    main()
