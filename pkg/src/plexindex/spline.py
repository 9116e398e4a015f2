"""Error-bounded linear spline over the key CDF.

The spline is a subset of CDF points picked greedily in one pass: keep a
corridor of feasible slopes from the last emitted point, narrowed by the
+-epsilon band of every point seen since; when the slope to the incoming
point leaves the corridor, the previous point becomes a spline point and
the corridor restarts. Every dataset key is then predicted within epsilon
positions by linear interpolation between its two surrounding spline points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numba import njit

from .core import CdfPoint, KeyWidth

__all__ = ["SplinePoint", "SplineModel", "SplineBuilder", "build_spline"]


@dataclass(frozen=True)
class SplinePoint:
    key: int
    position: int


class SplineModel:
    """Immutable piecewise-linear CDF approximation with a hard error bound.

    For every key in the dataset it was built from, the interpolated
    position differs from the position of the key's first occurrence by at
    most ``epsilon``. Safe to share across threads once built.
    """

    __slots__ = ("keys", "positions", "epsilon", "num_keys", "width")

    def __init__(
        self,
        keys: np.ndarray,
        positions: np.ndarray,
        epsilon: int,
        num_keys: int,
        width: KeyWidth = KeyWidth(),
    ):
        if epsilon < 1:
            raise ValueError("epsilon must be >= 1")
        self.keys = np.ascontiguousarray(keys, dtype=np.uint64)
        self.positions = np.ascontiguousarray(positions, dtype=np.uint64)
        self.epsilon = int(epsilon)
        self.num_keys = int(num_keys)
        self.width = width
        self.keys.setflags(write=False)
        self.positions.setflags(write=False)

    def __len__(self) -> int:
        return len(self.keys)

    def point(self, i: int) -> SplinePoint:
        return SplinePoint(int(self.keys[i]), int(self.positions[i]))

    def __iter__(self) -> Iterator[SplinePoint]:
        return (self.point(i) for i in range(len(self)))

    @property
    def size_bytes(self) -> int:
        """Byte size of the spline array: 8-byte key + 8-byte position each."""
        return 16 * len(self.keys)

    def segment_search(self, range_start: int, range_len: int, k: int) -> int:
        """Index of the segment holding ``k``, searched within the given
        range of spline-point indices.

        Returns the index of the last spline point with key <= k, clamped
        to a valid segment index: 0 when k precedes all points, and
        ``len - 2`` when k reaches or passes the last point.
        """
        n = len(self.keys)
        if n == 1:
            return 0
        if not 0 <= range_start <= n or range_len < 0 or range_start + range_len > n:
            raise IndexError(f"range [{range_start}, {range_start + range_len}) outside spline")
        keys = self.keys
        lo, hi = range_start, range_start + range_len
        while lo < hi:
            mid = (lo + hi) // 2
            if int(keys[mid]) <= k:
                lo = mid + 1
            else:
                hi = mid
        i = lo - 1
        if i < 0:
            return 0
        return min(i, n - 2)

    def interpolate(self, segment_index: int, k: int) -> int:
        """Estimated CDF position of ``k`` in the given segment.

        Linear interpolation in float64, rounded half-up, clamped to the
        segment's position range. Mirrors the jitted lookup kernels
        operation for operation so scalar and batch paths agree exactly.
        """
        n = len(self.keys)
        if n == 1:
            if segment_index != 0:
                raise IndexError(f"segment {segment_index} out of range for single-point spline")
            return int(self.positions[0])
        if not 0 <= segment_index <= n - 2:
            raise IndexError(f"segment {segment_index} out of range [0, {n - 2}]")
        ak = int(self.keys[segment_index])
        bk = int(self.keys[segment_index + 1])
        ap = int(self.positions[segment_index])
        bp = int(self.positions[segment_index + 1])
        if k <= ak:
            return ap
        if k >= bk:
            return bp
        slope = float(bp - ap) / float(bk - ak)
        est = math.floor(float(ap) + float(k - ak) * slope + 0.5)
        return min(max(est, ap), bp)

    def predict(self, k: int) -> int:
        """Interpolated position of ``k`` using a full-range segment search."""
        seg = self.segment_search(0, len(self.keys), k)
        return self.interpolate(seg, k)


class SplineBuilder:
    """Streaming greedy-corridor construction; O(1) state per point.

    Feed CDF points in strictly increasing key/position order via ``add``,
    then call ``finish``. Slope arithmetic intentionally matches the jitted
    array kernel (float64 of integer deltas) so both builders emit the same
    spline.
    """

    def __init__(self, epsilon: int, width: KeyWidth = KeyWidth()):
        if epsilon < 1:
            raise ValueError("epsilon must be >= 1")
        self.epsilon = int(epsilon)
        self.width = width
        self._keys: list[int] = []
        self._positions: list[int] = []
        self._last_key = -1
        self._last_pos = -1
        self._last_key_seen = -1
        self._last_pos_seen = -1
        self._cand: tuple[int, int] | None = None
        self._lo = 0.0
        self._hi = 0.0

    def _emit(self, key: int, pos: int) -> None:
        self._keys.append(key)
        self._positions.append(pos)
        self._last_key = key
        self._last_pos = pos

    def _band(self, key: int, pos: int) -> tuple[float, float]:
        dx = float(key - self._last_key)
        dy = float(pos - self._last_pos)
        return (dy - self.epsilon) / dx, (dy + self.epsilon) / dx

    def add(self, key: int, position: int) -> None:
        self.width.check_key(key)
        if self._keys and (key <= self._last_key_seen or position <= self._last_pos_seen):
            raise ValueError("CDF points must strictly increase in key and position")
        if not self._keys:
            self._emit(key, position)
        elif self._cand is None:
            self._lo, self._hi = self._band(key, position)
            self._cand = (key, position)
        else:
            s = float(position - self._last_pos) / float(key - self._last_key)
            if s < self._lo or s > self._hi:
                self._emit(*self._cand)
                self._lo, self._hi = self._band(key, position)
            else:
                blo, bhi = self._band(key, position)
                self._lo = max(self._lo, blo)
                self._hi = min(self._hi, bhi)
            self._cand = (key, position)
        self._last_key_seen = key
        self._last_pos_seen = position

    def finish(self, num_keys: int) -> SplineModel:
        if not self._keys:
            raise ValueError("empty dataset")
        if self._cand is not None:
            self._emit(*self._cand)
            self._cand = None
        return SplineModel(
            np.array(self._keys, dtype=np.uint64),
            np.array(self._positions, dtype=np.uint64),
            self.epsilon,
            num_keys,
            self.width,
        )


def build_spline(
    cdf: Iterable[CdfPoint],
    epsilon: int,
    num_keys: int,
    width: KeyWidth = KeyWidth(),
) -> SplineModel:
    """Build the error-bounded spline from a stream of CDF points."""
    builder = SplineBuilder(epsilon, width)
    for p in cdf:
        builder.add(p.key, p.position)
    return builder.finish(num_keys)


@njit(cache=True)
def _corridor_select(keys, positions, epsilon):
    """Greedy corridor over CDF arrays; returns a spline-point mask."""
    n = keys.shape[0]
    out = np.zeros(n, np.bool_)
    out[0] = True
    if n == 1:
        return out
    eps = float(epsilon)
    last = 0
    dx = float(keys[1] - keys[last])
    dy = float(positions[1] - positions[last])
    lo = (dy - eps) / dx
    hi = (dy + eps) / dx
    for i in range(2, n):
        dx = float(keys[i] - keys[last])
        dy = float(positions[i] - positions[last])
        s = dy / dx
        if s < lo or s > hi:
            out[i - 1] = True
            last = i - 1
            dx = float(keys[i] - keys[last])
            dy = float(positions[i] - positions[last])
            lo = (dy - eps) / dx
            hi = (dy + eps) / dx
        else:
            blo = (dy - eps) / dx
            bhi = (dy + eps) / dx
            if blo > lo:
                lo = blo
            if bhi < hi:
                hi = bhi
    out[n - 1] = True
    return out


def build_spline_from_arrays(
    cdf_keys: np.ndarray,
    cdf_positions: np.ndarray,
    epsilon: int,
    num_keys: int,
    width: KeyWidth = KeyWidth(),
) -> SplineModel:
    """Array fast path used by the index build pipeline.

    Emits exactly the same spline as ``SplineBuilder`` fed point by point.
    """
    if len(cdf_keys) == 0:
        raise ValueError("empty dataset")
    if epsilon < 1:
        raise ValueError("epsilon must be >= 1")
    cdf_keys = np.ascontiguousarray(cdf_keys, dtype=np.uint64)
    cdf_positions = np.ascontiguousarray(cdf_positions, dtype=np.uint64)
    mask = _corridor_select(cdf_keys, cdf_positions, int(epsilon))
    return SplineModel(cdf_keys[mask], cdf_positions[mask], epsilon, num_keys, width)
