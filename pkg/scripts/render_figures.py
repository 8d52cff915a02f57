#!/usr/bin/env python3
"""Render the three metric figure families (PDR, E2ED, NRO vs node count)
from results/sweep.csv via the plotkit CLI.

Requires the plotkit package (see plotkit/ at the repository root):

    pip install -e plotkit --no-build-isolation
"""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CSV = ROOT / "results" / "sweep.csv"
FIG_DIR = ROOT / "results" / "figures"


def main() -> int:
    if not CSV.exists():
        print(f"{CSV} missing; run scripts/run_trend_sweep.py first",
              file=sys.stderr)
        return 1
    FIG_DIR.mkdir(parents=True, exist_ok=True)
    failed = False
    for metric in ("pdr", "e2ed", "nro"):
        for facet in ("def", "mod", "all"):
            out = FIG_DIR / f"{metric}_{facet}.png"
            cmd = [
                "plot", "--csv", str(CSV), "--metric", metric,
                "--facet", facet, "--net", "both", "--out", str(out),
            ]
            proc = subprocess.run(cmd)
            if proc.returncode != 0:
                failed = True
            else:
                print(f"wrote {out}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
