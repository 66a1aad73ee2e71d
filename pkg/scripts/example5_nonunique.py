"""Two runs of the single-phase two-cell junction with lambda = 0.5 and xi = 1.

Both cells share one phase, so GPA serves them at the same rate and the
difference x_1 - x_2 never changes while both queues are occupied. The set of
equilibria is the segment x_1 + x_2 = 1; each initial condition lands on a
different point of it.

Usage: python3 scripts/example5_nonunique.py [--horizon 60]
"""
from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path

from flownet.scenarios import OutputsConfig, ScenarioConfig, run_scenario

ROOT = Path(__file__).resolve().parents[1] / "scenarios" / "ex5_nonunique"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=None)
    args = ap.parse_args()
    for tag in ("a", "b"):
        cfg = ScenarioConfig.load(ROOT / f"scenario_{tag}.json")
        cfg = replace(cfg, outputs=OutputsConfig())
        if args.horizon:
            cfg = replace(cfg, horizon=args.horizon)
        s = run_scenario(cfg, write=False)
        x = s.trajectory.x
        gap = x[:, 0] - x[:, 1]
        print(
            f"x0 = ({x[0, 0]:g}, {x[0, 1]:g}) -> ({x[-1, 0]:.6f}, {x[-1, 1]:.6f}); "
            f"x1 - x2 in [{gap.min():.6f}, {gap.max():.6f}], max |x|_inf {s.max_x_inf:g}"
        )


if __name__ == "__main__":
    main()
