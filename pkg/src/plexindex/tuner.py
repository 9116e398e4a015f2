"""Subindex auto-tuning from the lcp histogram of the spline keys.

The histogram of longest-common-prefix lengths of adjacent spline keys is
enough to price every candidate tree without building it: filtering the
histogram at threshold p leaves maximal runs of positions that are exactly
the key intervals covered by bins at bit depth p, so one sweep over all
thresholds yields, for every (radix bits, delta) pair at once, the average
leaf depth, the exact node count, and therefore the predicted lookup cost
and memory. The final selection takes the cheapest candidate (tree or
plain radix table) that fits in the spline's own byte budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._bits import bit_length_u64
from .cht import CELL_BYTES
from .core import KeyWidth, ceil_log2
from .radix_table import OFFSET_BYTES

__all__ = [
    "LcpHistogram",
    "CostSurface",
    "ChtEstimate",
    "TunerChoice",
    "build_lcp_histogram",
    "compute_cost_surface",
    "estimate_cht_memory",
    "select_subindex",
]


@dataclass(frozen=True)
class LcpHistogram:
    """values[i] = lcp(keys[i], keys[i+1]) for adjacent spline keys.

    Length is one less than the number of spline keys; empty when there
    are fewer than two keys (the tuner then falls back to binary search).
    """

    values: np.ndarray
    width: KeyWidth

    @property
    def num_keys(self) -> int:
        return len(self.values) + 1


@njit(cache=True)
def _adjacent_lcp(keys, width_bits):
    out = np.empty(keys.shape[0] - 1, np.int64)
    for i in range(1, keys.shape[0]):
        out[i - 1] = width_bits - bit_length_u64(keys[i - 1] ^ keys[i])
    return out


def build_lcp_histogram(keys: np.ndarray, width: KeyWidth = KeyWidth()) -> LcpHistogram:
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    if len(keys) < 2:
        return LcpHistogram(np.empty(0, np.int64), width)
    if not np.all(keys[:-1] < keys[1:]):
        raise ValueError("keys must be sorted and distinct")
    if int(keys[-1]) > width.max_key:
        raise ValueError(f"keys do not fit in {width.bits} bits")
    return LcpHistogram(_adjacent_lcp(keys, width.bits), width)


@njit(cache=True)
def _surface_pass(values, width_bits, r_max, delta_max, div_flat, div_start, div_len):
    """One sweep over all prefix depths p.

    At each p the maximal runs of histogram positions with value >= p are
    found by a fresh scan; a run of length L raises depth_r[min(L-1, d+)]
    by L and nodes_r[min(L, d+)] by 1 for every r that uses depth p
    (p % r == 0). Suffix sums over delta finish the job outside.
    """
    m = values.shape[0]
    depth = np.zeros((r_max + 1, delta_max + 1), np.int64)
    nodes = np.zeros((r_max + 1, delta_max + 1), np.int64)
    for p in range(1, width_bits + 1):
        found = False
        i = 0
        while i < m:
            if values[i] >= p:
                j = i + 1
                while j < m and values[j] >= p:
                    j += 1
                run = j - i
                found = True
                for t in range(div_len[p]):
                    r = div_flat[div_start[p] + t]
                    di = run - 1 if run - 1 < delta_max else delta_max
                    depth[r, di] += run
                    ni = run if run < delta_max else delta_max
                    nodes[r, ni] += 1
                i = j
            else:
                i += 1
        if not found:
            break
    return depth, nodes


class CostSurface:
    """Predicted lookup cost and memory for every (radix bits, delta) pair.

    Matrices are indexed [r, delta] directly (row 0 and column 0 unused).
    ``lam[r, d]`` = ceil(log2(d)) + depth_sums[r, d] / |S|;
    ``node_counts[r, d]`` counts the root plus every run whose key span
    (run + 1) exceeds d at the depths r uses; ``mem`` is node count times
    2^r cells of CELL_BYTES.
    """

    __slots__ = ("r_max", "delta_max", "num_keys", "depth_sums", "node_counts", "lam", "mem")

    def __init__(self, r_max: int, delta_max: int, num_keys: int,
                 depth_sums: np.ndarray, node_counts: np.ndarray):
        self.r_max = r_max
        self.delta_max = delta_max
        self.num_keys = num_keys
        self.depth_sums = depth_sums
        self.node_counts = node_counts
        steps = np.array([ceil_log2(d) for d in range(delta_max + 1)], dtype=np.float64)
        self.lam = steps[None, :] + depth_sums / float(num_keys)
        self.lam[:, 0] = np.inf
        self.lam[0, :] = np.inf
        cells = node_counts.astype(np.int64) * (np.left_shift(1, np.arange(r_max + 1))[:, None])
        self.mem = cells * CELL_BYTES
        self.mem[0, :] = 0


def compute_cost_surface(hist: LcpHistogram, r_max: int, delta_max: int) -> CostSurface:
    """Run the interval sweep and suffix sums for all pairs at once."""
    if r_max < 1 or delta_max < 1:
        raise ValueError("r_max and delta_max must be >= 1")
    width_bits = hist.width.bits
    div_lists = [[r for r in range(1, r_max + 1) if p % r == 0] for p in range(width_bits + 1)]
    div_len = np.array([len(d) for d in div_lists], dtype=np.int64)
    div_start = np.zeros(width_bits + 1, dtype=np.int64)
    div_start[1:] = np.cumsum(div_len)[:-1]
    div_flat = np.array([r for d in div_lists for r in d] or [0], dtype=np.int64)
    values = np.ascontiguousarray(hist.values, dtype=np.int64)
    if len(values) == 0:
        depth = np.zeros((r_max + 1, delta_max + 1), np.int64)
        nodes = np.zeros((r_max + 1, delta_max + 1), np.int64)
    else:
        depth, nodes = _surface_pass(values, width_bits, r_max, delta_max,
                                     div_flat, div_start, div_len)
    # suffix sums: depth_r(d) += depth_r(d+1), nodes likewise, for d+ - 1 .. 1
    depth[:, 1:] = np.cumsum(depth[:, 1:][:, ::-1], axis=1)[:, ::-1]
    nodes[:, 1:] = np.cumsum(nodes[:, 1:][:, ::-1], axis=1)[:, ::-1]
    nodes[:, 1:] += 1  # the root
    nodes[0, :] = 0
    return CostSurface(r_max, delta_max, hist.num_keys, depth, nodes)


@dataclass(frozen=True)
class ChtEstimate:
    node_count: int
    bytes: int


def estimate_cht_memory(hist: LcpHistogram, radix_bits: int, delta: int,
                        cell_bytes: int = CELL_BYTES) -> ChtEstimate:
    """Exact node count and byte size of a tree, from the histogram alone.

    One node for the root plus, at every depth p the tree uses, one node
    per maximal run whose key span (run + 1) exceeds delta.
    """
    if radix_bits < 1 or delta < 1:
        raise ValueError("radix_bits and delta must be >= 1")
    values = hist.values
    nodes = 1
    for p in range(radix_bits, hist.width.bits, radix_bits):
        mask = values >= p
        if not mask.any():
            break
        padded = np.concatenate((np.zeros(1, bool), mask, np.zeros(1, bool)))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        lengths = edges[1::2] - edges[0::2]
        nodes += int(np.count_nonzero(lengths + 1 > delta))
    return ChtEstimate(nodes, nodes * (1 << radix_bits) * cell_bytes)


@dataclass(frozen=True)
class TunerChoice:
    kind: str  # "binary_search" | "radix_table" | "cht"
    r: int | None
    delta: int | None
    predicted_lambda: float
    predicted_bytes: int


def select_subindex(
    surface: CostSurface | None,
    radix_lambdas: np.ndarray,
    spline_bytes: int,
    width: KeyWidth = KeyWidth(),
    kinds: tuple[str, ...] = ("radix_table", "cht"),
) -> TunerChoice:
    """Cheapest candidate whose memory fits in the spline's byte budget.

    Ties break toward smaller memory, then smaller r, then the radix table
    over a tree; when nothing fits, fall back to binary search over the
    spline (cost lambda_0, zero extra memory). ``kinds`` restricts the
    candidate set (the plain radix-spline baseline passes only
    "radix_table").
    """
    fallback = TunerChoice("binary_search", None, None, float(radix_lambdas[0]), 0)
    if surface is None or surface.num_keys < 2:
        return fallback
    r_lim = min(surface.r_max, len(radix_lambdas) - 1, width.bits)
    best_key: tuple | None = None
    best: TunerChoice | None = None
    if "radix_table" in kinds:
        for r in range(1, r_lim + 1):
            mem = ((1 << r) + 1) * OFFSET_BYTES
            if mem <= spline_bytes:
                key = (float(radix_lambdas[r]), mem, r, 0, 0)
                if best_key is None or key < best_key:
                    best_key = key
                    best = TunerChoice("radix_table", r, None, key[0], mem)
    if "cht" in kinds and surface.delta_max >= 2:
        # candidate deltas start at 2, the hyperparameter grid's lower bound;
        # delta-1 trees degenerate to per-key bins whose zero binary-search
        # cost is an artifact of the model not charging the node hop
        for r in range(1, r_lim + 1):
            fits = np.flatnonzero(surface.mem[r, 2:] <= spline_bytes)
            for d0 in fits:
                d = int(d0) + 2
                mem = int(surface.mem[r, d])
                key = (float(surface.lam[r, d]), mem, r, 1, d)
                if best_key is None or key < best_key:
                    best_key = key
                    best = TunerChoice("cht", r, d, key[0], mem)
    return best if best is not None else fallback
