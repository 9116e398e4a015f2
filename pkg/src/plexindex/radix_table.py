"""Radix table over spline keys and the per-r lookup cost model.

The table maps the top r bits of a key to the range of spline points whose
keys carry that prefix. The cost tracker estimates, for every r at once and
in a single streaming pass, the average number of binary-search steps a
table with parameter r would leave per data key: each bucket contributes
(data keys in bucket) * ceil(log2(spline points in bucket)).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._bits import bit_length_u64, ceil_log2_i64
from .core import KeyWidth, ceil_log2, lcp
from .spline import SplineModel

__all__ = ["RadixTableIndex", "build_radix_table", "RadixCostTracker"]

OFFSET_BYTES = 4  # offsets are unsigned 32-bit entries


class RadixTableIndex:
    """Prefix table: offsets[p] = index of the first spline point whose
    top-r-bit prefix is >= p; offsets[2^r] = number of spline points."""

    __slots__ = ("radix_bits", "width", "offsets")

    def __init__(self, radix_bits: int, width: KeyWidth, offsets: np.ndarray):
        self.radix_bits = int(radix_bits)
        self.width = width
        self.offsets = offsets
        self.offsets.setflags(write=False)

    @property
    def size_bytes(self) -> int:
        return OFFSET_BYTES * len(self.offsets)

    def lookup_range(self, k: int) -> tuple[int, int]:
        """(start, length) of spline-point indices to search for ``k``'s
        segment.

        The bucket range is widened one position to the left (when
        possible) because the point starting ``k``'s segment may be the
        last point of the previous bucket.
        """
        k = min(max(k, 0), self.width.max_key)
        p = k >> (self.width.bits - self.radix_bits)
        start = int(self.offsets[p])
        end = int(self.offsets[p + 1])
        if start > 0:
            start -= 1
        return start, end - start


def build_radix_table(spline: SplineModel, radix_bits: int) -> RadixTableIndex:
    """Build the prefix table for the spline's keys; memory is exactly
    (2^r + 1) 32-bit entries."""
    width = spline.width
    if not 1 <= radix_bits <= width.bits:
        raise ValueError(f"radix bits {radix_bits} outside [1, {width.bits}]")
    n = len(spline.keys)
    if n >= 2**31:
        raise ValueError("offset overflow: more than 2^31 - 1 spline points")
    shift = np.uint64(width.bits - radix_bits)
    prefixes = spline.keys >> shift
    buckets = np.arange(1 << radix_bits, dtype=np.uint64)
    offsets = np.empty((1 << radix_bits) + 1, dtype=np.uint32)
    offsets[:-1] = np.searchsorted(prefixes, buckets, side="left")
    offsets[-1] = n
    return RadixTableIndex(radix_bits, width, offsets)


class RadixCostTracker:
    """Streaming evaluator of the radix-table cost model for all r at once.

    Feed data keys (non-decreasing, duplicates allowed) and spline-point
    events in key order; ``finalize`` yields lambda[r] for r = 0..r_max
    without ever materializing a table. A bucket at level r only closes
    when a data key arrives whose top-r bits differ from the previous
    key's, i.e. for every r greater than their lcp, which keeps the pass
    O(1) amortized per event.
    """

    def __init__(self, r_max: int, width: KeyWidth = KeyWidth()):
        if not 0 <= r_max <= width.bits:
            raise ValueError(f"r_max {r_max} outside [0, {width.bits}]")
        self.r_max = int(r_max)
        self.width = width
        self._prev_key = -1
        self._cum_data = 0
        self._cum_spline = 0
        # per-r cumulative counts at the time the open bucket started
        self._data_base = [0] * (r_max + 1)
        self._spline_base = [0] * (r_max + 1)
        self._cost = [0] * (r_max + 1)
        self._lambdas: np.ndarray | None = None

    def _close(self, r: int) -> None:
        in_bucket = self._cum_data - self._data_base[r]
        spline_in_bucket = self._cum_spline - self._spline_base[r]
        self._cost[r] += in_bucket * ceil_log2(spline_in_bucket)
        self._data_base[r] = self._cum_data
        self._spline_base[r] = self._cum_spline

    def add_key(self, k: int) -> None:
        """Record one data key (one occurrence)."""
        if self._lambdas is not None:
            raise RuntimeError("tracker already finalized")
        self.width.check_key(k)
        if self._prev_key >= 0:
            if k < self._prev_key:
                raise ValueError(f"data key {k} arrived out of order")
            if k != self._prev_key:
                common = lcp(self._prev_key, k, self.width)
                for r in range(common + 1, self.r_max + 1):
                    self._close(r)
        self._cum_data += 1
        self._prev_key = k

    def add_spline_point(self, k: int) -> None:
        """Record that the most recent data key became a spline point."""
        if self._lambdas is not None:
            raise RuntimeError("tracker already finalized")
        if k != self._prev_key:
            raise ValueError("spline-point event out of key order")
        self._cum_spline += 1

    def finalize(self) -> np.ndarray:
        """Close open buckets and return lambda[r] for r = 0..r_max."""
        if self._lambdas is None:
            if self._cum_data == 0:
                raise ValueError("no data keys tracked")
            for r in range(self.r_max + 1):
                self._close(r)
            self._lambdas = np.array(self._cost, dtype=np.float64) / self._cum_data
        return self._lambdas

    @property
    def lambdas(self) -> np.ndarray:
        return self.finalize()


@njit(cache=True)
def _lambda_pass(cdf_keys, cdf_positions, spline_mask, num_keys, r_max, width_bits):
    """Weighted one-pass variant of the tracker over distinct CDF points.

    Each CDF point carries its duplicate count as weight; spline events for
    point i-1 are accounted before the level-r buckets touched by the key
    transition i-1 -> i close. Matches RadixCostTracker exactly.
    """
    m = cdf_keys.shape[0]
    cost = np.zeros(r_max + 1, np.float64)
    data_base = np.zeros(r_max + 1, np.int64)
    spline_base = np.zeros(r_max + 1, np.int64)
    cum_data = np.int64(0)
    cum_spline = np.int64(0)
    for i in range(m):
        if i > 0:
            if spline_mask[i - 1]:
                cum_spline += 1
            common = width_bits - bit_length_u64(cdf_keys[i - 1] ^ cdf_keys[i])
            for r in range(common + 1, r_max + 1):
                in_bucket = cum_data - data_base[r]
                s = cum_spline - spline_base[r]
                cost[r] += in_bucket * ceil_log2_i64(s)
                data_base[r] = cum_data
                spline_base[r] = cum_spline
        if i + 1 < m:
            weight = cdf_positions[i + 1] - cdf_positions[i]
        else:
            weight = np.uint64(num_keys) - cdf_positions[i]
        cum_data += np.int64(weight)
    if spline_mask[m - 1]:
        cum_spline += 1
    for r in range(r_max + 1):
        in_bucket = cum_data - data_base[r]
        s = cum_spline - spline_base[r]
        cost[r] += in_bucket * ceil_log2_i64(s)
    return cost / cum_data


def lambdas_from_cdf(
    cdf_keys: np.ndarray,
    cdf_positions: np.ndarray,
    spline_mask: np.ndarray,
    num_keys: int,
    r_max: int,
    width: KeyWidth = KeyWidth(),
) -> np.ndarray:
    """Fast path for the build pipeline: lambda[0..r_max] from distinct CDF
    points, their first-occurrence positions, and the spline-point mask."""
    return _lambda_pass(
        np.ascontiguousarray(cdf_keys, dtype=np.uint64),
        np.ascontiguousarray(cdf_positions, dtype=np.uint64),
        np.ascontiguousarray(spline_mask, dtype=np.bool_),
        num_keys,
        int(r_max),
        width.bits,
    )
