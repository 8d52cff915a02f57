"""Command-line front end: single runs, batch sweeps, link forecasts from
distance-sample files, and config validation.

Exit codes: 0 success, 1 run failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from adhocsim import linkmath
from adhocsim.scenario import (
    PRESETS,
    ConfigError,
    Scenario,
    parse_config,
    run_scenario,
    serialize_config,
)
from adhocsim.traffic import CSV_HEADER, csv_row

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_CONFIG = 2


def _load_scenario(args) -> Scenario:
    if args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        scenario = parse_config(text)
    else:
        scenario = Scenario()
    if getattr(args, "seed", None) is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario.validated()


def _trace_path(trace_dir: str, scenario: Scenario) -> Path:
    name = (
        f"{scenario.preset}_{scenario.net_type.value}"
        f"_n{scenario.node_count}_s{scenario.seed}.trace"
    )
    return Path(trace_dir) / name


def _run_cell(scenario: Scenario, trace_dir):
    result = run_scenario(scenario, collect_trace=bool(trace_dir))
    if trace_dir:
        path = _trace_path(trace_dir, scenario)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(result.trace_text(), encoding="utf-8")
    row = csv_row(
        scenario.protocol_name(),
        scenario.preset_variant(),
        scenario.net_type.value,
        scenario.node_count,
        scenario.seed,
        result.metrics,
    )
    return row


def sweep(base: Scenario, node_counts, seeds, presets, jobs=1, trace_dir=None):
    """Run the cartesian product of (preset, node_count, seed) cells.

    Returns (rows, failures); rows come back in deterministic sorted cell
    order no matter how many workers ran them.
    """
    if not node_counts or not seeds or not presets:
        raise ConfigError(["sweep lists must be non-empty"])
    bad = [p for p in presets if p not in PRESETS]
    if bad:
        raise ConfigError(
            [f"unknown preset {p!r}; valid: {', '.join(sorted(PRESETS))}" for p in bad]
        )
    cells = [
        replace(base, preset=preset, node_count=nodes, seed=seed).validated()
        for preset in presets
        for nodes in node_counts
        for seed in seeds
    ]
    rows = []
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, cell, trace_dir) for cell in cells]
            for cell, fut in zip(cells, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - reported per cell
                    failures.append((cell, str(exc)))
    else:
        for cell in cells:
            try:
                rows.append(_run_cell(cell, trace_dir))
            except Exception as exc:  # noqa: BLE001 - reported per cell
                failures.append((cell, str(exc)))
    return rows, failures


def _write_rows(rows, out_path) -> None:
    text = CSV_HEADER + "\n" + "".join(row + "\n" for row in rows)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _int_list(raw: str):
    return [int(part) for part in raw.split(",") if part.strip() != ""]


def cmd_run(args) -> int:
    try:
        scenario = _load_scenario(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        row = _run_cell(scenario, args.trace)
    except Exception as exc:  # noqa: BLE001 - surfaced to the shell
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    _write_rows([row], args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        base = _load_scenario(args)
        node_counts = _int_list(args.nodes)
        seeds = _int_list(args.seeds)
        presets = (
            sorted(PRESETS) if args.presets == "all" else args.presets.split(",")
        )
        rows, failures = sweep(
            base,
            node_counts,
            seeds,
            presets,
            jobs=args.jobs,
            trace_dir=args.trace,
        )
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    _write_rows(rows, args.out)
    for cell, message in failures:
        print(
            f"run failed: {cell.preset} nodes={cell.node_count} "
            f"seed={cell.seed}: {message}",
            file=sys.stderr,
        )
    return EXIT_RUN_FAILURE if failures else EXIT_OK


def cmd_forecast(args) -> int:
    try:
        samples = _read_samples(args.samples)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if len(samples) < 3:
        print("config error: need at least 3 samples", file=sys.stderr)
        return EXIT_CONFIG
    try:
        est, forecast = linkmath.forecast_link(
            *samples[-3:], radius=args.range, horizon=args.horizon
        )
    except ValueError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    expiry = "inf" if math.isinf(forecast.expiry) else f"{forecast.expiry:.6f}"
    print(f"{est.rel_speed:.6f} {expiry} {forecast.prob:.6f}")
    return EXIT_OK


def _read_samples(path):
    samples = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected `t dist`, got {line!r}")
        samples.append(
            linkmath.DistanceSample(t=float(parts[0]), dist=float(parts[1]))
        )
    return samples


def cmd_validate(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenario = parse_config(text)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(serialize_config(scenario))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adhocsim",
        description="Deterministic MANET/VANET routing-protocol simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario, print/write a CSV row")
    run_p.add_argument("--config", help="scenario config file")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--out", help="CSV output path (default stdout)")
    run_p.add_argument("--trace", help="directory for the event trace")
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a preset x nodes x seeds batch")
    sweep_p.add_argument("--config", help="base scenario config file")
    sweep_p.add_argument(
        "--nodes", default="10,20,30,40,50,60,70", help="comma-separated node counts"
    )
    sweep_p.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seeds")
    sweep_p.add_argument(
        "--presets", default="all", help="'all' or comma-separated preset names"
    )
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sweep_p.add_argument("--out", help="CSV output path (default stdout)")
    sweep_p.add_argument("--trace", help="directory for per-run traces")
    sweep_p.set_defaults(fn=cmd_sweep)

    fc_p = sub.add_parser(
        "forecast", help="speed/expiry/availability from a `t dist` sample file"
    )
    fc_p.add_argument("samples", help="file of whitespace-separated `t dist` rows")
    fc_p.add_argument(
        "--range", type=float, default=250.0, help="radio range in meters"
    )
    fc_p.add_argument(
        "--horizon",
        type=float,
        default=10.0,
        help="availability horizon in seconds after the newest sample",
    )
    fc_p.set_defaults(fn=cmd_forecast)

    val_p = sub.add_parser("validate", help="check a config file, echo defaults")
    val_p.add_argument("--config", required=True, help="scenario config file")
    val_p.set_defaults(fn=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
