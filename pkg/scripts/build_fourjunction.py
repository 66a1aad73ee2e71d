"""Write the bundled four-junction scenario (network, demand, scenario JSON).

Layout: v1 (north-west), v2 (north-east), v3 (south-west), v4 (south-east).
Every junction has five incoming cells k_1..k_5 and phases {2,3}, {1,4}, {5}.

  west junctions (v1, v3): 1 through lane from outside, 2 turn lane from outside,
                           3 turn lane and 4 through lane from the east neighbour
  east junctions (v2, v4): 1 through lane and 2 turn lane from the west neighbour,
                           3 turn lane and 4 through lane from outside
  all junctions:           5 side street from the vertical neighbour

Traffic crossing a junction pair splits turn:through 20:80 (v1->v2), 30:70
(v2->v1), 40:60 (v3->v4) and 50:50 (v4->v3). Through lanes leave the network at
the far junction, turn lanes feed the vertical neighbour's side street, and a
side street sends 65% out of the network (60% after the routing change) and the
rest across the junction pair with that pair's turn ratio.

Usage: python3 scripts/build_fourjunction.py [OUT_DIR] [--horizon 300]
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

WEST, EAST = ("v1", "v3"), ("v2", "v4")
ACROSS = {"v1": "v2", "v2": "v1", "v3": "v4", "v4": "v3"}
VERTICAL = {"v1": "v3", "v3": "v1", "v2": "v4", "v4": "v2"}
TURN = {("v1", "v2"): 0.2, ("v2", "v1"): 0.3, ("v3", "v4"): 0.4, ("v4", "v3"): 0.5}
OUTSIDE = {"v1": "w1", "v3": "w3", "v2": "e2", "v4": "e4"}
INFLOW = 0.2
X0 = (0.5, 0.4, 0.3, 0.2, 0.1)


def cell(node: str, i: int) -> str:
    return f"{node}_{i}"


def network() -> dict:
    cells = []
    for k in ("v1", "v2", "v3", "v4"):
        src, nb = OUTSIDE[k], ACROSS[k]
        tails = [src, src, nb, nb] if k in WEST else [nb, nb, src, src]
        tails.append(VERTICAL[k])
        cells += [{"id": cell(k, i + 1), "tail": t, "head": k, "capacity": 1.0} for i, t in enumerate(tails)]
    nodes = ["v1", "v2", "v3", "v4", "w1", "e2", "w3", "e4"]
    phases = {k: [[cell(k, 2), cell(k, 3)], [cell(k, 1), cell(k, 4)], [cell(k, 5)]] for k in ("v1", "v2", "v3", "v4")}
    return {"nodes": nodes, "cells": cells, "phases": phases, "clearance": {k: 1.0 for k in phases}}


def routing(exit_share: float) -> list[dict]:
    out = []

    def add(a, b, f):
        out.append({"from": a, "to": b, "fraction": round(f, 12)})

    for w in WEST:
        e = ACROSS[w]
        # eastbound lane entering w continues to e
        add(cell(w, 1), cell(e, 2), TURN[(w, e)])
        add(cell(w, 1), cell(e, 1), 1 - TURN[(w, e)])
        # westbound lane entering e continues to w
        add(cell(e, 4), cell(w, 3), TURN[(e, w)])
        add(cell(e, 4), cell(w, 4), 1 - TURN[(e, w)])
    for k in ("v1", "v2", "v3", "v4"):
        turn_cells = (2, 3)
        for i in turn_cells:
            add(cell(k, i), cell(VERTICAL[k], 5), 1.0)
        nb = ACROSS[k]
        stay = 1 - exit_share
        tr = TURN[(k, nb)]
        if k in WEST:
            add(cell(k, 5), cell(nb, 2), stay * tr)
            add(cell(k, 5), cell(nb, 1), stay * (1 - tr))
        else:
            add(cell(k, 5), cell(nb, 3), stay * tr)
            add(cell(k, 5), cell(nb, 4), stay * (1 - tr))
    return out


def demand(horizon: float) -> dict:
    lam = {cell(k, i): INFLOW for k in WEST for i in (1, 2)}
    lam.update({cell(k, i): INFLOW for k in EAST for i in (3, 4)})
    return {
        "pieces": [
            {"start": 0.0, "lambda": lam, "routing": routing(0.65)},
            {"start": horizon / 3, "lambda": lam, "routing": routing(0.60)},
        ]
    }


def scenario(horizon: float) -> dict:
    x0 = {cell(k, i + 1): v for k in ("v1", "v2", "v3", "v4") for i, v in enumerate(X0)}
    return {
        "name": "fig5_fourjunctions",
        "network": "network.json",
        "demand": "demand.json",
        "controller": {"kind": "gpa", "epsilon_reg": 1e-9, "solver_tol": 1e-10},
        "x0": x0,
        "horizon": horizon,
        "dt": 1e-3,
        "sample_stride": 100,
        "empty_threshold": 1e-9,
        "diagnostics": {"lyapunov": True, "average_inflow": True},
        "outputs": {"trajectory_csv": "out/trajectory.csv", "report": "out/report.json", "plots": "out/plots"},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", nargs="?", default=str(Path(__file__).resolve().parents[1] / "scenarios" / "fig5_fourjunctions"))
    ap.add_argument("--horizon", type=float, default=300.0)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, data in (("network", network()), ("demand", demand(args.horizon)), ("scenario", scenario(args.horizon))):
        (out / f"{name}.json").write_text(json.dumps(data, indent=2) + "\n")
        print(out / f"{name}.json")


if __name__ == "__main__":
    main()
