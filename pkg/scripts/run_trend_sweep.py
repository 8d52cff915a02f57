#!/usr/bin/env python3
"""Desk-scale trend sweep: 6 presets x {10,30,50} nodes x 5 seeds on the
VANET road grid, 300 s horizon (~4 min on one CPU).

Writes results/sweep.csv in the standard column contract, ready for the
plotkit figure renderer.  For the full-scale study (10..70 nodes, 900 s)
use the CLI directly:

    adhocsim sweep --config <cfg> --out results/full.csv
"""

import sys
import time
from pathlib import Path

from adhocsim.cli import sweep
from adhocsim.mobility import MobilityConfig, MobilityModel
from adhocsim.scenario import NetType, Scenario
from adhocsim.traffic import CSV_HEADER

OUT = Path(__file__).resolve().parent.parent / "results" / "sweep.csv"


def main() -> int:
    base = Scenario(
        net_type=NetType.VANET,
        preset="aodv-def",
        node_count=10,
        seed=1,
        horizon=300.0,
        mobility=MobilityConfig(
            model=MobilityModel.ROAD_GRID,
            area=(1000.0, 1000.0),
            grid_spacing=200.0,
        ),
    )
    started = time.time()
    rows, failures = sweep(
        base,
        node_counts=[10, 30, 50],
        seeds=[1, 2, 3, 4, 5],
        presets=[
            "aodv-def", "aodv-mod", "fsr-def", "fsr-mod", "olsr-def", "olsr-mod",
        ],
    )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(
        CSV_HEADER + "\n" + "".join(r + "\n" for r in rows), encoding="utf-8"
    )
    print(f"wrote {len(rows)} rows to {OUT} in {time.time() - started:.0f}s")
    for cell, message in failures:
        print(f"FAILED {cell.preset} n={cell.node_count} s={cell.seed}: {message}",
              file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
