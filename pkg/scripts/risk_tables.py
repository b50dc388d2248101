#!/usr/bin/env python3
"""Print the VaR and AVaR ladders for a fitted parameter set.

Usage:
    python scripts/risk_tables.py params.json [--levels 0.01,0.05] [--grid-m 8196]

Tabulates both tails: lower-tail quantiles at each tail probability and
upper-tail quantiles at the matching confidence, with the conditional tail
averages next to them.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gtsfit.gts_model import load_params  # noqa: E402
from gtsfit.risk import TailSide, avar  # noqa: E402
from gtsfit.spectral import choose_grid, density_table  # noqa: E402

DEFAULT = "0.005,0.01,0.02,0.03,0.04,0.05,0.06,0.07,0.08,0.09,0.10"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("params", help="parameter JSON file")
    ap.add_argument("--levels", default=DEFAULT, help="comma-separated tail probabilities")
    ap.add_argument("--grid-m", type=int, default=8196, dest="grid_m")
    args = ap.parse_args()

    params = load_params(args.params)
    params.validate()
    levels = [float(tok) for tok in args.levels.split(",")]

    grid = choose_grid(params, args.grid_m)
    table = density_table(params, grid)
    print(f"grid: span {grid.a:.0f} in frequency, {grid.m} points, "
          f"window [{table.x[0]:.3f}, {table.x[-1]:.3f}]")
    print(f"{'tail p':>8} {'VaR low':>10} {'AVaR low':>10} {'conf':>8} {'VaR up':>10} {'AVaR up':>10}")
    for lv in levels:
        low = avar(params, table, lv, TailSide.LOWER_TAIL)
        up = avar(params, table, lv, TailSide.UPPER_TAIL)
        print(
            f"{lv:>8.3f} {low.var:>10.4f} {low.avar:>10.4f} "
            f"{1.0 - lv:>8.3f} {up.var:>10.4f} {up.avar:>10.4f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
