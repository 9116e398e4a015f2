"""Render size-versus-time Pareto charts from benchmark CSV rows.

Input is the fixed schema the benchmark CLI emits:

    dataset,index,epsilon,r,delta,bytes,build_ns,median_lookup_ns,p99_lookup_ns

One sub-chart per dataset, bytes on a log x axis, one series per index
type. Output is a static image; rendering the same CSV twice produces
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

CSV_COLUMNS = [
    "dataset", "index", "epsilon", "r", "delta", "bytes",
    "build_ns", "median_lookup_ns", "p99_lookup_ns",
]
METRICS = ("build_ns", "median_lookup_ns")

METRIC_LABELS = {
    "build_ns": "build time (ns)",
    "median_lookup_ns": "median lookup (ns)",
}


class PlotError(ValueError):
    pass


def load_rows(csv_path: str | Path) -> list[dict]:
    """Rows from a benchmark CSV; refuses files missing schema columns."""
    path = Path(csv_path)
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise PlotError(f"{path}: missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def plot_pareto(csv_path: str | Path, metric: str, out_image: str | Path,
                force: bool = False):
    """Write the chart for ``metric`` and return the matplotlib figure."""
    if metric not in METRICS:
        raise PlotError(f"unknown metric {metric!r}; choose from {METRICS}")
    out = Path(out_image)
    if out.exists() and not force:
        raise PlotError(f"{out} already exists; pass --force to overwrite")
    rows = load_rows(csv_path)

    datasets = sorted({r["dataset"] for r in rows})
    fig, axes = plt.subplots(1, len(datasets),
                             figsize=(4.0 * len(datasets), 3.4), squeeze=False)
    for ax, dataset in zip(axes[0], datasets):
        subset = [r for r in rows if r["dataset"] == dataset]
        for index_name in sorted({r["index"] for r in subset}):
            series = [r for r in subset if r["index"] == index_name]
            # zero-byte baselines still get a spot on the log axis
            pts = sorted((max(float(r["bytes"]), 1.0), float(r[metric])) for r in series)
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", markersize=4, label=index_name)
        ax.set_xscale("log")
        ax.set_title(dataset)
        ax.set_xlabel("index size (bytes)")
        ax.grid(True, which="both", alpha=0.3)
    axes[0][0].set_ylabel(METRIC_LABELS[metric])
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return fig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_pareto",
        description="render a size-versus-time Pareto chart from a benchmark CSV")
    parser.add_argument("csv", help="benchmark CSV file")
    parser.add_argument("--metric", choices=METRICS, required=True)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--force", action="store_true",
                        help="overwrite an existing output file")
    args = parser.parse_args(argv)
    try:
        plot_pareto(args.csv, args.metric, args.out, force=args.force)
    except (PlotError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
