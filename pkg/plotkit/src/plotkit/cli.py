"""`plot` command: render one metric figure from a sweep CSV.

Exit codes: 0 success, 2 schema/selection/config error.
"""

from __future__ import annotations

import argparse
import sys

from plotkit.aggregate import EmptyFacetError, SchemaError
from plotkit.render import FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render sweep-CSV metrics versus node count"
    )
    parser.add_argument("--csv", required=True, help="sweep CSV path")
    parser.add_argument(
        "--metric", required=True, choices=("pdr", "e2ed", "nro")
    )
    parser.add_argument("--facet", default="all", choices=("def", "mod", "all"))
    parser.add_argument("--net", default="both", choices=("manet", "vanet", "both"))
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(metric=args.metric, facet=args.facet, net=args.net,
                      out=args.out)
    try:
        render(args.csv, spec)
    except (SchemaError, EmptyFacetError, OSError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
