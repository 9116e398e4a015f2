"""Benchmark command line: gen / build / probe / tune.

probe emits rows of the documented CSV schema
    dataset,index,epsilon,r,delta,bytes,build_ns,median_lookup_ns,p99_lookup_ns
and always verifies every probe against a lower-bound oracle before any
timing loop runs. build prints one JSON line of build statistics. tune
prints the cost tables behind the subindex choice and, with --grid, builds
and measures every candidate configuration for comparison.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import data_io, plex
from .cht import ChtConfig, build_cht
from .radix_table import build_radix_table
from .tuner import build_lcp_histogram, estimate_cht_memory

CSV_COLUMNS = [
    "dataset", "index", "epsilon", "r", "delta", "bytes",
    "build_ns", "median_lookup_ns", "p99_lookup_ns",
]

GRID_R = range(1, 11)
GRID_DELTA = [1 << e for e in range(1, 11)]
GRID_BUILD_CAP_BYTES = 256 << 20  # skip grid candidates larger than this
P99_CHUNK = 256


def _fail(msg: str) -> "NoReturn":  # noqa: F821
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(1)


def cmd_gen(args: argparse.Namespace) -> None:
    spec = data_io.SyntheticSpec(kind=args.kind, n=args.n, seed=args.seed)
    keys = data_io.generate(spec)
    try:
        data_io.write_dataset(args.out, keys)
    except OSError as e:
        _fail(f"writing {args.out}: {e}")
    print(f"wrote {len(keys)} keys to {args.out}")


def _load(path: str) -> np.ndarray:
    try:
        ds = data_io.load_dataset(path)
    except (OSError, ValueError) as e:
        _fail(f"loading {path}: {e}")
    if not ds.was_sorted:
        print(f"note: {path} was unsorted; sorted in memory", file=sys.stderr)
    return ds.keys


def cmd_build(args: argparse.Namespace) -> None:
    data = _load(args.data)
    t0 = time.perf_counter_ns()
    if args.index == "binary":
        index: plex.PlexIndex | plex.BinarySearchBaseline = plex.BinarySearchBaseline(data)
        build_ns = time.perf_counter_ns() - t0
        stats = {"index": "binary", "choice": "binary_search", "bytes": 0}
    else:
        subindex_kinds = ("radix_table",) if args.index == "rs" else None
        index = plex.build(data, args.epsilon, r_max=args.r_max, delta_max=args.delta_max,
                           subindex_kinds=subindex_kinds)
        build_ns = time.perf_counter_ns() - t0
        bs = index.build_stats
        stats = {
            "index": args.index,
            "epsilon": index.epsilon,
            "spline_points": len(index.spline),
            "choice": index.choice.kind,
            "r": index.choice.r,
            "delta": index.choice.delta,
            "predicted_lambda": round(index.choice.predicted_lambda, 6),
            "bytes": index.total_bytes,
            "spline_build_ns": bs.spline_build_ns,
            "tune_ns": bs.tune_ns,
            "subindex_build_ns": bs.subindex_build_ns,
        }
    stats["dataset"] = args.data
    stats["build_ns"] = build_ns
    try:
        Path(args.out).write_bytes(plex.serialize(index))
    except OSError as e:
        _fail(f"writing {args.out}: {e}")
    print(json.dumps(stats))


def cmd_probe(args: argparse.Namespace) -> None:
    data = _load(args.data)
    try:
        index = plex.deserialize(Path(args.index).read_bytes(), data=data)
    except (OSError, ValueError) as e:
        _fail(f"loading index {args.index}: {e}")
    probes = data_io.make_workload(data, args.probes, args.seed, args.positive_fraction)
    if len(probes) == 0:
        _fail("workload is empty")

    # correctness gate: every probe must match the lower-bound oracle
    got = index.lookup_batch(probes)
    expected = np.searchsorted(data, probes, side="left")
    bad = np.flatnonzero(got != expected)
    if len(bad):
        b = int(bad[0])
        _fail(f"lookup mismatch for key {int(probes[b])}: got {int(got[b])}, "
              f"expected {int(expected[b])}")

    out = np.empty(len(probes), dtype=np.int64)
    lookup = index.lookup_batch
    medians = []
    chunk_rates = []
    for _ in range(args.repeats):
        t0 = time.perf_counter_ns()
        lookup(probes)
        total = time.perf_counter_ns() - t0
        medians.append(total / len(probes))
        for c0 in range(0, len(probes) - P99_CHUNK + 1, P99_CHUNK):
            chunk = probes[c0 : c0 + P99_CHUNK]
            t0 = time.perf_counter_ns()
            lookup(chunk)
            chunk_rates.append((time.perf_counter_ns() - t0) / P99_CHUNK)
    median_ns = float(np.median(medians))
    p99_ns = float(np.percentile(chunk_rates, 99)) if chunk_rates else median_ns

    if isinstance(index, plex.BinarySearchBaseline):
        label, eps, r, d, nbytes = "binary", 0, "", "", 0
    else:
        label = "plex"
        eps = index.epsilon
        r = index.choice.r if index.choice.r is not None else ""
        d = index.choice.delta if index.choice.delta is not None else ""
        nbytes = index.total_bytes
    row = {
        "dataset": Path(args.data).stem,
        "index": args.label or label,
        "epsilon": eps,
        "r": r,
        "delta": d,
        "bytes": nbytes,
        "build_ns": args.build_ns,
        "median_lookup_ns": round(median_ns, 2),
        "p99_lookup_ns": round(p99_ns, 2),
    }
    _write_csv_row(args.csv, row)
    print(",".join(str(row[c]) for c in CSV_COLUMNS))


def _write_csv_row(path: str | None, row: dict) -> None:
    if not path:
        return
    p = Path(path)
    new = not p.exists() or p.stat().st_size == 0
    with open(p, "a", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        if new:
            w.writeheader()
        w.writerow(row)


def measure_grid(
    data: np.ndarray,
    epsilon: int,
    probes: np.ndarray,
    r_values=GRID_R,
    delta_values=GRID_DELTA,
    cap_bytes: int = GRID_BUILD_CAP_BYTES,
) -> tuple[plex.PlexIndex, list[dict]]:
    """Build every candidate subindex at the given epsilon and measure its
    mean segment-search steps on the workload. Returns the auto-tuned index
    and one record per candidate (skipped ones carry measured=None)."""
    index = plex.build(data, epsilon)
    spline = index.spline
    hist = build_lcp_histogram(spline.keys, spline.width)
    rows: list[dict] = []
    for r in r_values:
        table = build_radix_table(spline, r)
        shadow = plex.PlexIndex(spline, table, index.choice, data=data)
        rows.append({
            "kind": "radix_table", "r": r, "delta": None,
            "bytes": table.size_bytes,
            "measured_steps": shadow.subindex_steps(probes),
        })
    for r in r_values:
        for d in delta_values:
            est = estimate_cht_memory(hist, r, d)
            if est.bytes > cap_bytes:
                rows.append({"kind": "cht", "r": r, "delta": d,
                             "bytes": est.bytes, "measured_steps": None})
                continue
            tree = build_cht(spline.keys, ChtConfig(r, d, spline.width))
            shadow = plex.PlexIndex(spline, tree, index.choice, data=data)
            rows.append({
                "kind": "cht", "r": r, "delta": d,
                "bytes": tree.size_bytes,
                "measured_steps": shadow.subindex_steps(probes),
            })
    return index, rows


def cmd_tune(args: argparse.Namespace) -> None:
    data = _load(args.data)
    index = plex.build(data, args.epsilon, r_max=args.r_max, delta_max=args.delta_max)
    spline = index.spline
    lambdas = index.diagnostics.radix_lambdas
    surface = index.diagnostics.surface

    print(f"spline: {len(spline)} points, {spline.size_bytes} bytes (budget), epsilon={args.epsilon}")
    print("radix table costs (lambda_r), memory:")
    for r in range(0, min(len(lambdas) - 1, 16) + 1):
        mem = 0 if r == 0 else ((1 << r) + 1) * 4
        print(f"  r={r:>2}  lambda={lambdas[r]:.4f}  bytes={mem}")
    if surface is not None:
        print("tree costs lambda_(r,delta) (powers-of-two deltas), est. bytes:")
        deltas = [d for d in GRID_DELTA if d <= surface.delta_max]
        header = "  r\\d " + "".join(f"{d:>10}" for d in deltas)
        print(header)
        for r in range(1, min(surface.r_max, 10) + 1):
            cols = "".join(f"{surface.lam[r, d]:>10.3f}" for d in deltas)
            print(f"  {r:>3} {cols}")
    print(f"chosen: {index.choice.kind}"
          f" r={index.choice.r} delta={index.choice.delta}"
          f" predicted_lambda={index.choice.predicted_lambda:.4f}"
          f" bytes={index.choice.predicted_bytes}")

    if args.grid:
        probes = data_io.make_workload(data, args.probes, args.seed, 1.0)
        _, rows = measure_grid(data, args.epsilon, probes)
        chosen_steps = index.subindex_steps(probes)
        measurable = [row for row in rows if row["measured_steps"] is not None]
        best = min(measurable, key=lambda row: row["measured_steps"])
        print("grid (measured mean subindex steps):")
        for row in rows:
            ms = "skipped(size)" if row["measured_steps"] is None else f"{row['measured_steps']:.3f}"
            print(f"  {row['kind']:>11} r={row['r']:>2} delta={row['delta'] or '-':>5}"
                  f" bytes={row['bytes']:>12} steps={ms}")
        print(f"grid best: {best['kind']} r={best['r']} delta={best['delta']}"
              f" steps={best['measured_steps']:.3f}")
        print(f"chosen measured steps: {chosen_steps:.3f}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plexbench",
                                     description="generate, build, probe, and tune")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic SOSD-format dataset")
    g.add_argument("--kind", choices=data_io.KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build and serialize an index")
    b.add_argument("--data", required=True)
    b.add_argument("--epsilon", type=int, default=32)
    b.add_argument("--index", choices=["plex", "rs", "binary"], default="plex")
    b.add_argument("--out", required=True)
    b.add_argument("--r-max", type=int, default=plex.DEFAULT_R_MAX)
    b.add_argument("--delta-max", type=int, default=plex.DEFAULT_DELTA_MAX)
    b.set_defaults(func=cmd_build)

    p = sub.add_parser("probe", help="verify then time lookups, emit a CSV row")
    p.add_argument("--index", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--probes", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--positive-fraction", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--csv", default=None, help="append the row to this CSV file")
    p.add_argument("--label", default=None, help="index name for the CSV (default by kind)")
    p.add_argument("--build-ns", type=int, default=0,
                   help="build time from the build step's JSON stats")
    p.set_defaults(func=cmd_probe)

    t = sub.add_parser("tune", help="print cost tables and the chosen configuration")
    t.add_argument("--data", required=True)
    t.add_argument("--epsilon", type=int, default=32)
    t.add_argument("--grid", action="store_true",
                   help="also build and measure every grid candidate")
    t.add_argument("--probes", type=int, default=10_000)
    t.add_argument("--seed", type=int, default=7)
    t.add_argument("--r-max", type=int, default=plex.DEFAULT_R_MAX)
    t.add_argument("--delta-max", type=int, default=plex.DEFAULT_DELTA_MAX)
    t.set_defaults(func=cmd_tune)

    args = parser.parse_args(argv)
    if getattr(args, "n", None) is not None and args.n < 1:
        parser.error("--n must be >= 1")
    if getattr(args, "epsilon", None) is not None and args.epsilon < 1:
        parser.error("--epsilon must be >= 1")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
