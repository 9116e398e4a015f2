"""The composed index: spline + auto-tuned subindex + serialization.

Build pipeline: extract the CDF of the sorted data, grow the spline while
pricing every radix-table width in the same streaming fashion, price every
tree configuration from the spline keys' lcp histogram, pick the cheapest
subindex that fits in the spline's own byte budget, and build just that
one. A lookup walks subindex -> spline segment -> interpolation -> binary
search in the +-epsilon window and returns lower-bound positions (index of
the first occurrence for present keys, insertion point otherwise).
"""

from __future__ import annotations

import math
import struct
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .cht import ChtConfig, CompactHistTree, _descend, build_cht
from .core import KeyWidth
from .radix_table import RadixTableIndex, build_radix_table, lambdas_from_cdf
from .spline import SplineModel, _corridor_select
from .tuner import (
    TunerChoice,
    build_lcp_histogram,
    compute_cost_surface,
    select_subindex,
)

__all__ = [
    "PlexIndex",
    "BinarySearchBaseline",
    "BuildStats",
    "build",
    "serialize",
    "deserialize",
    "MAGIC",
]

MAGIC = b"PLEX"
FORMAT_VERSION = 1

TAG_BINARY_ONLY = 0  # spline + binary search over all spline points
TAG_RADIX = 1
TAG_CHT = 2
TAG_BASELINE = 255  # no spline at all: plain binary search on the data

DEFAULT_R_MAX = 20
DEFAULT_DELTA_MAX = 1 << 10


# --- jitted lookup paths ---------------------------------------------------


@njit(cache=True, inline="always")
def _lower_bound(data, k, lo, hi):
    # branchy halving: on deep searches the mispredicted side still issues
    # its load speculatively, which acts as a prefetch
    while lo < hi:
        mid = (lo + hi) >> 1
        if data[mid] < k:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, inline="always")
def _lower_bound_small(data, k, lo, hi):
    # branchless halving: fixed trip count, no mispredict noise; the right
    # shape for the short cache-resident ranges the subindex leaves behind
    n = hi - lo
    base = lo
    while n > 1:
        half = n >> 1
        if data[base + half - 1] < k:
            base += half
        n -= half
    if n == 1 and data[base] < k:
        base += 1
    return base


@njit(cache=True, inline="always")
def _last_le(keys, k, lo, hi):
    n = hi - lo
    base = lo
    while n > 1:
        half = n >> 1
        if keys[base + half - 1] <= k:
            base += half
        n -= half
    if n == 1 and keys[base] <= k:
        base += 1
    return base - 1


@njit(cache=True, inline="always")
def _finish(data, skeys, spos, seg, k, eps):
    """Interpolate within segment ``seg`` and lower-bound search the
    epsilon window; falls through to the tail when every window key is
    smaller (possible only for absent probes inside duplicate runs)."""
    n = data.shape[0]
    m = skeys.shape[0]
    if m == 1:
        est = np.int64(spos[0])
    else:
        ak = skeys[seg]
        bk = skeys[seg + 1]
        ap = np.int64(spos[seg])
        bp = np.int64(spos[seg + 1])
        if k <= ak:
            est = ap
        elif k >= bk:
            est = bp
        else:
            slope = float(bp - ap) / float(bk - ak)
            est = np.int64(math.floor(float(ap) + float(k - ak) * slope + 0.5))
            if est < ap:
                est = ap
            if est > bp:
                est = bp
    lo = est - eps
    if lo < 0:
        lo = 0
    hi = est + eps
    if hi > n - 1:
        hi = n - 1
    if hi - lo <= 128:
        # short windows: sequential scan streams 1-2 prefetched cache
        # lines instead of dependent halving probes
        res = lo
        while res <= hi and data[res] < k:
            res += 1
    else:
        res = _lower_bound_small(data, k, lo, hi + 1)
    if res == hi + 1 and res < n:
        res = _lower_bound(data, k, hi + 1, n)
    return res


@njit(cache=True, inline="always")
def _clamp_seg(i, m):
    if i < 0:
        i = 0
    if i > m - 2:
        i = m - 2
    return i


@njit(cache=True)
def _batch_baseline(data, probes, out):
    n = data.shape[0]
    for t in range(probes.shape[0]):
        out[t] = _lower_bound(data, probes[t], 0, n)


@njit(cache=True)
def _batch_binary_only(data, skeys, spos, eps, probes, out):
    m = skeys.shape[0]
    for t in range(probes.shape[0]):
        k = probes[t]
        seg = _clamp_seg(_last_le(skeys, k, 0, m), m)
        out[t] = _finish(data, skeys, spos, seg, k, eps)


@njit(cache=True)
def _batch_radix(data, skeys, spos, offsets, radix_bits, width_bits, eps, probes, out):
    m = skeys.shape[0]
    shift = np.uint64(width_bits - radix_bits)
    for t in range(probes.shape[0]):
        k = probes[t]
        p = np.int64(k >> shift)
        start = np.int64(offsets[p])
        end = np.int64(offsets[p + 1])
        if start > 0:
            start -= 1
        seg = _clamp_seg(_last_le(skeys, k, start, end), m)
        out[t] = _finish(data, skeys, spos, seg, k, eps)


@njit(cache=True)
def _batch_cht(data, skeys, spos, cells, radix_bits, delta, width_bits, eps, probes, out):
    m = skeys.shape[0]
    for t in range(probes.shape[0]):
        k = probes[t]
        q, _ = _descend(cells, radix_bits, width_bits, k)
        start = q - 1
        if start < 0:
            start = 0
        end = q + delta
        if end > m:
            end = m
        seg = _clamp_seg(_last_le(skeys, k, start, end), m)
        out[t] = _finish(data, skeys, spos, seg, k, eps)


@njit(cache=True, inline="always")
def _last_le_steps(keys, k, lo, hi):
    steps = 0
    while lo < hi:
        steps += 1
        mid = (lo + hi) >> 1
        if keys[mid] <= k:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1, steps


@njit(cache=True)
def _steps_binary_only(skeys, probes):
    m = skeys.shape[0]
    total = 0
    for t in range(probes.shape[0]):
        _, s = _last_le_steps(skeys, probes[t], 0, m)
        total += s
    return total


@njit(cache=True)
def _steps_radix(skeys, offsets, radix_bits, width_bits, probes):
    shift = np.uint64(width_bits - radix_bits)
    total = 0
    for t in range(probes.shape[0]):
        k = probes[t]
        p = np.int64(k >> shift)
        start = np.int64(offsets[p])
        end = np.int64(offsets[p + 1])
        if start > 0:
            start -= 1
        _, s = _last_le_steps(skeys, k, start, end)
        total += s
    return total


@njit(cache=True)
def _steps_cht(skeys, cells, radix_bits, delta, width_bits, probes):
    m = skeys.shape[0]
    total = 0
    for t in range(probes.shape[0]):
        k = probes[t]
        q, hops = _descend(cells, radix_bits, width_bits, k)
        start = q - 1
        if start < 0:
            start = 0
        end = q + delta
        if end > m:
            end = m
        _, s = _last_le_steps(skeys, k, start, end)
        total += hops + s
    return total


# --- the index -------------------------------------------------------------


@dataclass
class BuildStats:
    spline_build_ns: int = 0
    tune_ns: int = 0
    subindex_build_ns: int = 0
    total_bytes: int = 0


HEADER = struct.Struct("<4sHQBQQB")  # magic, version, epsilon, width, |S|, |D|, tag
CHOICE = struct.Struct("<dQ")  # predicted lambda, predicted bytes


class PlexIndex:
    """Immutable composed index; concurrent lookups are read-only.

    The data array is referenced, not copied or serialized: serialized
    files hold only the spline and subindex, and ``deserialize`` re-attaches
    the key array (SOSD keeps keys beside the index).
    """

    def __init__(
        self,
        spline: SplineModel,
        subindex: RadixTableIndex | CompactHistTree | None,
        choice: TunerChoice,
        data: np.ndarray | None = None,
        build_stats: BuildStats | None = None,
    ):
        self.spline = spline
        self.subindex = subindex
        self.choice = choice
        self.data = data
        self.build_stats = build_stats or BuildStats()
        self.build_stats.total_bytes = self.total_bytes

    @property
    def epsilon(self) -> int:
        return self.spline.epsilon

    @property
    def num_keys(self) -> int:
        return self.spline.num_keys

    @property
    def subindex_bytes(self) -> int:
        return 0 if self.subindex is None else self.subindex.size_bytes

    @property
    def total_bytes(self) -> int:
        return self.spline.size_bytes + self.subindex_bytes + HEADER.size + CHOICE.size

    def attach_data(self, data: np.ndarray) -> "PlexIndex":
        self.data = np.ascontiguousarray(data, dtype=np.uint64)
        return self

    def _require_data(self) -> np.ndarray:
        if self.data is None:
            raise RuntimeError("no data attached; call attach_data() first")
        return self.data

    def subindex_range(self, k: int) -> tuple[int, int]:
        """(start, length) of spline-point indices the subindex narrows
        ``k``'s segment search to."""
        m = len(self.spline)
        if self.subindex is None:
            return 0, m
        if isinstance(self.subindex, RadixTableIndex):
            return self.subindex.lookup_range(k)
        q = self.subindex.lookup(k)
        start = max(q - 1, 0)
        end = min(q + self.subindex.config.delta, m)
        return start, end - start

    def lookup(self, k: int) -> int:
        """Lower-bound position of ``k``: index of the first occurrence when
        present, insertion point otherwise."""
        data = self._require_data()
        k = self.spline.width.check_key(k)
        start, length = self.subindex_range(k)
        seg = self.spline.segment_search(start, length, k)
        est = self.spline.interpolate(seg, k)
        n = len(data)
        eps = self.epsilon
        lo = max(est - eps, 0)
        hi = min(est + eps, n - 1)
        res = self._py_lower_bound(data, k, lo, hi + 1)
        if res == hi + 1 and res < n:
            res = self._py_lower_bound(data, k, hi + 1, n)
        return res

    @staticmethod
    def _py_lower_bound(data: np.ndarray, k: int, lo: int, hi: int) -> int:
        while lo < hi:
            mid = (lo + hi) >> 1
            if int(data[mid]) < k:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def lookup_batch(self, probes: np.ndarray) -> np.ndarray:
        """Vector of lower-bound positions; same results as ``lookup``."""
        data = self._require_data()
        probes = np.ascontiguousarray(probes, dtype=np.uint64)
        out = np.empty(len(probes), dtype=np.int64)
        sk, sp = self.spline.keys, self.spline.positions
        eps = self.epsilon
        wb = self.spline.width.bits
        if self.subindex is None:
            _batch_binary_only(data, sk, sp, eps, probes, out)
        elif isinstance(self.subindex, RadixTableIndex):
            _batch_radix(data, sk, sp, self.subindex.offsets, self.subindex.radix_bits,
                         wb, eps, probes, out)
        else:
            _batch_cht(data, sk, sp, self.subindex.cells, self.subindex.config.radix_bits,
                       self.subindex.config.delta, wb, eps, probes, out)
        return out

    def subindex_steps(self, probes: np.ndarray) -> float:
        """Measured mean subindex search steps per probe: tree hops plus
        binary-search iterations needed to pin down the segment."""
        probes = np.ascontiguousarray(probes, dtype=np.uint64)
        sk = self.spline.keys
        wb = self.spline.width.bits
        if self.subindex is None:
            total = _steps_binary_only(sk, probes)
        elif isinstance(self.subindex, RadixTableIndex):
            total = _steps_radix(sk, self.subindex.offsets, self.subindex.radix_bits, wb, probes)
        else:
            total = _steps_cht(sk, self.subindex.cells, self.subindex.config.radix_bits,
                               self.subindex.config.delta, wb, probes)
        return total / max(len(probes), 1)


class BinarySearchBaseline:
    """Plain binary search on the data array; the zero-byte reference index."""

    def __init__(self, data: np.ndarray | None = None):
        self.data = None if data is None else np.ascontiguousarray(data, dtype=np.uint64)

    total_bytes = 0
    subindex_bytes = 0

    def attach_data(self, data: np.ndarray) -> "BinarySearchBaseline":
        self.data = np.ascontiguousarray(data, dtype=np.uint64)
        return self

    def lookup(self, k: int) -> int:
        if self.data is None:
            raise RuntimeError("no data attached; call attach_data() first")
        return PlexIndex._py_lower_bound(self.data, int(k), 0, len(self.data))

    def lookup_batch(self, probes: np.ndarray) -> np.ndarray:
        if self.data is None:
            raise RuntimeError("no data attached; call attach_data() first")
        probes = np.ascontiguousarray(probes, dtype=np.uint64)
        out = np.empty(len(probes), dtype=np.int64)
        _batch_baseline(self.data, probes, out)
        return out


@dataclass
class BuildDiagnostics:
    """Tuning internals kept for inspection (never serialized)."""

    radix_lambdas: np.ndarray
    surface: object | None  # CostSurface, or None for single-point splines


def build(
    data: np.ndarray,
    epsilon: int,
    width: KeyWidth = KeyWidth(),
    r_max: int = DEFAULT_R_MAX,
    delta_max: int = DEFAULT_DELTA_MAX,
    subindex_kinds: tuple[str, ...] | None = None,
) -> PlexIndex:
    """Build the index over sorted (non-decreasing) keys.

    The single hyperparameter is ``epsilon``; the subindex and its
    parameters come out of the cost models. ``subindex_kinds`` restricts
    the tuner's candidates (("radix_table",) gives the plain radix-spline
    baseline).
    """
    data = np.ascontiguousarray(data, dtype=np.uint64)
    n = len(data)
    if n == 0:
        raise ValueError("empty dataset")
    if n > 1 and not np.all(data[:-1] <= data[1:]):
        raise ValueError("data must be sorted non-decreasing")
    if int(data[-1]) > width.max_key:
        raise ValueError(f"keys do not fit in {width.bits} bits")
    if epsilon < 1:
        raise ValueError("epsilon must be >= 1")
    r_max = min(r_max, width.bits)

    t0 = time.perf_counter_ns()
    if n == 1:
        cdf_keys = data.copy()
        cdf_pos = np.zeros(1, dtype=np.uint64)
    else:
        first = np.empty(n, dtype=bool)
        first[0] = True
        np.not_equal(data[1:], data[:-1], out=first[1:])
        cdf_keys = data[first]
        cdf_pos = np.flatnonzero(first).astype(np.uint64)
    spline_mask = _corridor_select(cdf_keys, cdf_pos, int(epsilon))
    spline = SplineModel(cdf_keys[spline_mask], cdf_pos[spline_mask], epsilon, n, width)
    t1 = time.perf_counter_ns()

    lambdas = lambdas_from_cdf(cdf_keys, cdf_pos, spline_mask, n, r_max, width)
    if len(spline) >= 2:
        hist = build_lcp_histogram(spline.keys, width)
        surface = compute_cost_surface(hist, r_max, delta_max)
    else:
        surface = None
    kinds = subindex_kinds if subindex_kinds is not None else ("radix_table", "cht")
    choice = select_subindex(surface, lambdas, spline.size_bytes, width, kinds=kinds)
    t2 = time.perf_counter_ns()

    subindex: RadixTableIndex | CompactHistTree | None = None
    if choice.kind == "radix_table":
        subindex = build_radix_table(spline, choice.r)
    elif choice.kind == "cht":
        subindex = build_cht(spline.keys, ChtConfig(choice.r, choice.delta, width))
    t3 = time.perf_counter_ns()

    stats = BuildStats(spline_build_ns=t1 - t0, tune_ns=t2 - t1, subindex_build_ns=t3 - t2)
    index = PlexIndex(spline, subindex, choice, data=data, build_stats=stats)
    index.diagnostics = BuildDiagnostics(radix_lambdas=lambdas, surface=surface)
    return index


# --- serialization ---------------------------------------------------------


def serialize(index: PlexIndex | BinarySearchBaseline) -> bytes:
    """Little-endian byte image; identical inputs give identical bytes."""
    if isinstance(index, BinarySearchBaseline):
        return HEADER.pack(MAGIC, FORMAT_VERSION, 0, 64, 0, 0, TAG_BASELINE) + CHOICE.pack(0.0, 0)
    sub = index.subindex
    if sub is None:
        tag = TAG_BINARY_ONLY
    elif isinstance(sub, RadixTableIndex):
        tag = TAG_RADIX
    else:
        tag = TAG_CHT
    parts = [
        HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            index.epsilon,
            index.spline.width.bits,
            len(index.spline),
            index.num_keys,
            tag,
        ),
        CHOICE.pack(index.choice.predicted_lambda, index.choice.predicted_bytes),
        np.ascontiguousarray(index.spline.keys, dtype="<u8").tobytes(),
        np.ascontiguousarray(index.spline.positions, dtype="<u8").tobytes(),
    ]
    if tag == TAG_RADIX:
        parts.append(struct.pack("<I", sub.radix_bits))
        parts.append(np.ascontiguousarray(sub.offsets, dtype="<u4").tobytes())
    elif tag == TAG_CHT:
        parts.append(struct.pack("<III", sub.config.radix_bits, sub.config.delta, sub.node_count))
        parts.append(np.ascontiguousarray(sub.cells, dtype="<u4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ValueError("truncated index file")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise ValueError(f"{len(self.buf) - self.pos} trailing bytes after index payload")


def deserialize(buf: bytes, data: np.ndarray | None = None) -> PlexIndex | BinarySearchBaseline:
    """Rebuild an index from bytes; pass ``data`` to enable lookups."""
    rd = _Reader(buf)
    magic, version, epsilon, width_bits, n_spline, n_data, tag = HEADER.unpack(rd.take(HEADER.size))
    if magic != MAGIC:
        raise ValueError("not a PLEX file")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    predicted_lambda, predicted_bytes = CHOICE.unpack(rd.take(CHOICE.size))
    if tag == TAG_BASELINE:
        rd.done()
        return BinarySearchBaseline(data)
    width = KeyWidth(width_bits)
    skeys = np.frombuffer(rd.take(8 * n_spline), dtype="<u8")
    spos = np.frombuffer(rd.take(8 * n_spline), dtype="<u8")
    spline = SplineModel(skeys, spos, epsilon, n_data, width)
    subindex: RadixTableIndex | CompactHistTree | None
    if tag == TAG_BINARY_ONLY:
        subindex = None
        choice = TunerChoice("binary_search", None, None, predicted_lambda, predicted_bytes)
    elif tag == TAG_RADIX:
        (radix_bits,) = struct.unpack("<I", rd.take(4))
        offsets = np.frombuffer(rd.take(4 * ((1 << radix_bits) + 1)), dtype="<u4")
        subindex = RadixTableIndex(radix_bits, width, offsets.copy())
        choice = TunerChoice("radix_table", radix_bits, None, predicted_lambda, predicted_bytes)
    elif tag == TAG_CHT:
        radix_bits, delta, node_count = struct.unpack("<III", rd.take(12))
        cells = np.frombuffer(rd.take(4 * node_count * (1 << radix_bits)), dtype="<u4")
        subindex = CompactHistTree(ChtConfig(radix_bits, delta, width), cells.copy(), node_count, n_spline)
        choice = TunerChoice("cht", radix_bits, delta, predicted_lambda, predicted_bytes)
    else:
        raise ValueError(f"unknown subindex tag {tag}")
    rd.done()
    index = PlexIndex(spline, subindex, choice)
    if data is not None:
        index.attach_data(data)
    return index
