"""Acceptance: regenerate all three metric figure families from a
sweep-shaped CSV, verify plotted means against an independent aggregation
within 1e-9, and confirm schema violations are reported loudly.
"""

import statistics
from contextlib import contextmanager

import pytest

from plotkit.aggregate import SchemaError, read_rows
from plotkit.cli import main
from plotkit.render import FigureSpec, render

from test_plotkit import sweep_csv


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def test_figure_families_regenerate_and_match_recount(tmp_path):
    with criterion("plotkit-figure-families"):
        csv_path = sweep_csv(tmp_path)
        rows = read_rows(csv_path)
        column = {"pdr": "pdr", "e2ed": "e2ed_s", "nro": "nro"}
        for metric in ("pdr", "e2ed", "nro"):
            for facet in ("def", "mod", "all"):
                out = tmp_path / f"{metric}_{facet}.png"
                spec = FigureSpec(
                    metric=metric, facet=facet, net="both", out=str(out)
                )
                series = render(csv_path, spec)
                assert out.exists() and out.stat().st_size > 0
                for net, panels in series.items():
                    want_lines = 6 if facet == "all" else 3
                    assert len(panels) == want_lines
                    for (protocol, preset), points in panels.items():
                        for point in points:
                            values = [
                                r[column[metric]]
                                for r in rows
                                if r["protocol"] == protocol
                                and r["preset"] == preset
                                and r["net_type"] == net
                                and r["nodes"] == point.nodes
                            ]
                            assert abs(
                                point.mean - statistics.fmean(values)
                            ) < 1e-9


def test_dropped_column_is_reported_not_skipped(tmp_path):
    with criterion("plotkit-schema-errors"):
        csv_path = sweep_csv(tmp_path, node_counts=(10,), seeds=(1,))
        text = csv_path.read_text(encoding="utf-8").splitlines()
        header = text[0].split(",")
        drop = header.index("nro")
        reduced = [
            ",".join(col for i, col in enumerate(line.split(",")) if i != drop)
            for line in text
        ]
        broken = tmp_path / "dropped.csv"
        broken.write_text("\n".join(reduced) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError) as err:
            read_rows(broken)
        assert "nro" in str(err.value)
        code = main(
            ["--csv", str(broken), "--metric", "pdr",
             "--out", str(tmp_path / "x.png")]
        )
        assert code == 2
        assert not (tmp_path / "x.png").exists()
