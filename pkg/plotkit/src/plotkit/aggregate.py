"""CSV reading and seed aggregation for the sweep result contract.

Expected columns (header mandatory):

    protocol,preset,net_type,nodes,seed,pdr,e2ed_s,nro,
    data_sent,data_delivered,routing_pkts

Metric cells may be `nan` when a run's denominator was zero; such cells
are excluded from aggregation, and a point where every seed is nan is
omitted entirely.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

REQUIRED_COLUMNS = (
    "protocol",
    "preset",
    "net_type",
    "nodes",
    "seed",
    "pdr",
    "e2ed_s",
    "nro",
)

METRIC_COLUMNS = {"pdr": "pdr", "e2ed": "e2ed_s", "nro": "nro"}


class SchemaError(ValueError):
    """The CSV does not satisfy the sweep column contract."""


class EmptyFacetError(ValueError):
    """The requested metric/facet/net selection matches no rows."""


@dataclass(frozen=True)
class SeriesPoint:
    nodes: int
    mean: float
    lo: float  # min across seeds
    hi: float  # max across seeds
    count: int  # seeds aggregated


def read_rows(csv_path):
    """Parse and schema-check the CSV; returns a list of row dicts."""
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(
                f"CSV {csv_path} is missing required column(s): "
                f"{', '.join(missing)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(
                    {
                        "protocol": row["protocol"],
                        "preset": row["preset"],
                        "net_type": row["net_type"],
                        "nodes": int(row["nodes"]),
                        "seed": int(row["seed"]),
                        "pdr": float(row["pdr"]),
                        "e2ed_s": float(row["e2ed_s"]),
                        "nro": float(row["nro"]),
                    }
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"CSV {csv_path} line {lineno}: {exc}") from exc
    return rows


def aggregate(rows, metric, facet="all", net="both"):
    """Seed-aggregated series per (net_type, protocol, preset).

    Returns {net_type: {(protocol, preset): [SeriesPoint...]}} with points
    sorted by node count; mean with min/max whiskers across seeds.
    """
    if metric not in METRIC_COLUMNS:
        raise SchemaError(f"unknown metric {metric!r}; valid: pdr, e2ed, nro")
    column = METRIC_COLUMNS[metric]
    if facet not in ("def", "mod", "all"):
        raise ValueError(f"unknown facet {facet!r}; valid: def, mod, all")
    if net not in ("manet", "vanet", "both"):
        raise ValueError(f"unknown net {net!r}; valid: manet, vanet, both")

    cells: dict = {}
    for row in rows:
        if facet != "all" and row["preset"] != facet:
            continue
        if net != "both" and row["net_type"] != net:
            continue
        value = row[column]
        if math.isnan(value):
            continue
        key = (row["net_type"], row["protocol"], row["preset"], row["nodes"])
        cells.setdefault(key, []).append(value)

    if not cells:
        raise EmptyFacetError(
            f"no rows match metric={metric} facet={facet} net={net}"
        )

    series: dict = {}
    for (net_type, protocol, preset, nodes), values in cells.items():
        point = SeriesPoint(
            nodes=nodes,
            mean=sum(values) / len(values),
            lo=min(values),
            hi=max(values),
            count=len(values),
        )
        series.setdefault(net_type, {}).setdefault(
            (protocol, preset), []
        ).append(point)
    for panels in series.values():
        for points in panels.values():
            points.sort(key=lambda p: p.nodes)
    return series
