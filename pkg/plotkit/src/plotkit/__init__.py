"""Figure renderer for routing-simulation sweep CSVs."""

from plotkit.aggregate import (
    EmptyFacetError,
    SchemaError,
    SeriesPoint,
    aggregate,
    read_rows,
)
from plotkit.render import FigureSpec, render

__all__ = [
    "EmptyFacetError",
    "SchemaError",
    "SeriesPoint",
    "aggregate",
    "read_rows",
    "FigureSpec",
    "render",
]
