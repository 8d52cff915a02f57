"""Matplotlib rendering of aggregated sweep series.

Output is byte-deterministic for identical inputs: the Agg/SVG backends
are pinned, SVG ids are salted with a constant, and no timestamps are
embedded.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from plotkit.aggregate import aggregate, read_rows  # noqa: E402

Y_LABELS = {
    "pdr": "packet delivery ratio [%]",
    "e2ed": "end-to-end delay [s]",
    "nro": "normalized routing overhead",
}

LINE_STYLE = {"def": "-", "mod": "--"}
PROTOCOL_COLOR = {"aodv": "tab:blue", "fsr": "tab:orange", "olsr": "tab:green"}


@dataclass(frozen=True)
class FigureSpec:
    metric: str  # pdr | e2ed | nro
    facet: str = "all"  # def | mod | all
    net: str = "both"  # manet | vanet | both
    out: str = "figure.png"


def render(csv_path, spec: FigureSpec):
    """Render one figure from the CSV per the spec; returns the aggregated
    series that was plotted (for verification against the CSV).
    """
    rows = read_rows(csv_path)
    series = aggregate(rows, spec.metric, facet=spec.facet, net=spec.net)
    panels = sorted(series)
    plt.rcParams["svg.hashsalt"] = "plotkit"
    fig, axes = plt.subplots(
        1, len(panels), figsize=(5.0 * len(panels), 3.6), squeeze=False,
        sharey=True,
    )
    for ax, net_type in zip(axes[0], panels):
        for (protocol, preset) in sorted(series[net_type]):
            points = series[net_type][(protocol, preset)]
            xs = [p.nodes for p in points]
            means = [p.mean for p in points]
            yerr = [
                [p.mean - p.lo for p in points],
                [p.hi - p.mean for p in points],
            ]
            ax.errorbar(
                xs,
                means,
                yerr=yerr,
                label=f"{protocol}-{preset}",
                color=PROTOCOL_COLOR.get(protocol),
                linestyle=LINE_STYLE.get(preset, "-"),
                marker="o",
                markersize=3,
                capsize=2,
            )
        ax.set_title(net_type)
        ax.set_xlabel("number of nodes")
        ax.grid(True, alpha=0.3)
    axes[0][0].set_ylabel(Y_LABELS[spec.metric])
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out.suffix == ".svg" else {}
    fig.savefig(out, dpi=120, metadata=metadata)
    plt.close(fig)
    return series
