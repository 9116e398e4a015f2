import csv

import pytest

from plexplots import CSV_COLUMNS, PlotError, plot_pareto
from plexplots.pareto import main


def write_csv(path, rows):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    return path


def bench_rows(datasets=("uniform", "lognormal", "face_like", "osm_like"),
               indexes=("plex", "rs", "binary", "cht")):
    rows = []
    for d_i, dataset in enumerate(datasets):
        for i_i, index in enumerate(indexes):
            for s in (1, 2, 3):
                rows.append({
                    "dataset": dataset, "index": index, "epsilon": 2 ** (2 + s),
                    "r": 8, "delta": "" if index != "cht" else 4,
                    "bytes": 0 if index == "binary" else 1000 * s * (i_i + 1),
                    "build_ns": 10_000 * s + 1000 * d_i,
                    "median_lookup_ns": 100.0 + 10 * s + i_i,
                    "p99_lookup_ns": 200.0 + 10 * s,
                })
    return rows


def test_acceptance_criterion_13_renders_both_charts(tmp_path):
    """4 index types x 4 datasets render for both metrics; a missing-column
    CSV produces the documented error."""
    path = write_csv(tmp_path / "bench.csv", bench_rows())
    for metric in ("build_ns", "median_lookup_ns"):
        out = tmp_path / f"{metric}.png"
        fig = plot_pareto(path, metric, out)
        assert out.stat().st_size > 0
        assert len(fig.axes) == 4

    broken = tmp_path / "broken.csv"
    with open(broken, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["dataset", "index", "bytes"])
        w.writeheader()
        w.writerow({"dataset": "a", "index": "b", "bytes": 1})
    with pytest.raises(PlotError, match="missing columns.*build_ns"):
        plot_pareto(broken, "build_ns", tmp_path / "broken.png")
    print("ACCEPTANCE 13 PASS - both Pareto charts render; missing columns rejected")


def test_two_row_csv_draws_two_points(tmp_path):
    rows = bench_rows(datasets=("d1",), indexes=("plex",))[:2]
    path = write_csv(tmp_path / "two.csv", rows)
    fig = plot_pareto(path, "median_lookup_ns", tmp_path / "two.png")
    (ax,) = fig.axes
    assert sum(len(line.get_xdata()) for line in ax.lines) == 2


def test_empty_csv_is_an_error(tmp_path):
    path = write_csv(tmp_path / "empty.csv", [])
    with pytest.raises(PlotError, match="no data rows"):
        plot_pareto(path, "build_ns", tmp_path / "empty.png")


def test_unknown_metric_rejected(tmp_path):
    path = write_csv(tmp_path / "b.csv", bench_rows())
    with pytest.raises(PlotError, match="unknown metric"):
        plot_pareto(path, "p50", tmp_path / "x.png")


def test_refuses_overwrite_without_force(tmp_path):
    path = write_csv(tmp_path / "b.csv", bench_rows())
    out = tmp_path / "chart.png"
    plot_pareto(path, "build_ns", out)
    with pytest.raises(PlotError, match="--force"):
        plot_pareto(path, "build_ns", out)
    plot_pareto(path, "build_ns", out, force=True)


def test_deterministic_output_and_input_untouched(tmp_path):
    path = write_csv(tmp_path / "b.csv", bench_rows())
    before = path.read_bytes()
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    plot_pareto(path, "median_lookup_ns", a)
    plot_pareto(path, "median_lookup_ns", b)
    assert a.read_bytes() == b.read_bytes()
    assert path.read_bytes() == before


def test_cli_roundtrip(tmp_path, capsys):
    path = write_csv(tmp_path / "b.csv", bench_rows())
    out = tmp_path / "cli.png"
    assert main([str(path), "--metric", "build_ns", "--out", str(out)]) == 0
    assert out.exists()
    # second run without --force fails with a message
    assert main([str(path), "--metric", "build_ns", "--out", str(out)]) == 1
    assert "--force" in capsys.readouterr().err
    assert main([str(path), "--metric", "build_ns", "--out", str(out), "--force"]) == 0
