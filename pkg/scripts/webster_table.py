"""Equilibrium lost-time fraction of GPA next to Webster's cycle length.

For a junction with two single-cell phases, unit capacities and flow ratios
rho_1, rho_2, the GPA equilibrium spends xi / (x_1 + x_2 + xi) = 1 - rho_1 - rho_2
of the time in clearance, the same dependence on 1 - rho_1 - rho_2 as
Webster's T = (1.5 L + 5) / (1 - rho_1 - rho_2).

Usage: python3 scripts/webster_table.py [--lost-time 4]
"""
from __future__ import annotations

import argparse

import numpy as np

from flownet.lyapunov import webster_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lost-time", type=float, default=4.0, help="Webster lost time L per cycle [s]")
    args = ap.parse_args()
    print(f"{'rho1':>6} {'rho2':>6} {'lost frac':>10} {'1-rho1-rho2':>12} {'Webster T':>10} {'x1*':>9} {'x2*':>9}")
    for r1 in np.arange(0.1, 0.55, 0.1):
        for r2 in np.arange(0.1, 0.85 - r1, 0.15):
            row = webster_check(float(r1), float(r2), args.lost_time)
            print(
                f"{row.rho1:>6.2f} {row.rho2:>6.2f} {row.lost_fraction:>10.6f} "
                f"{1 - row.rho1 - row.rho2:>12.6f} {row.webster_T:>10.2f} {row.x_star[0]:>9.4f} {row.x_star[1]:>9.4f}"
            )


if __name__ == "__main__":
    main()
