"""Compact hist-tree over spline keys.

A read-only radix tree with fanout 2^r stored as one flat array of 32-bit
cells, node i occupying cells [i*2^r, (i+1)*2^r). Construction is direct
and level-by-level from the sorted key array: each node partitions its key
range into 2^r bins by the next r bits; bins holding more than delta keys
become child nodes on the next level, everything else becomes a final
(leaf) cell pointing at the bin's first key index. Empty bins store the
position where such keys would be inserted, so lookups of absent keys
still land on a valid lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import KeyWidth

__all__ = ["ChtConfig", "CompactHistTree", "ChtStats", "build_cht"]

CELL_BYTES = 4
LEAF_BIT = np.uint32(0x80000000)
PAYLOAD_MASK = np.uint32(0x7FFFFFFF)


@dataclass(frozen=True)
class ChtConfig:
    radix_bits: int
    delta: int
    width: KeyWidth = KeyWidth()

    def __post_init__(self) -> None:
        if self.radix_bits < 1 or self.radix_bits > self.width.bits:
            raise ValueError(f"radix bits {self.radix_bits} outside [1, {self.width.bits}]")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")


@dataclass(frozen=True)
class ChtStats:
    node_count: int
    memory_bytes: int
    # average child hops after the first one (the convention the tuner's
    # depth model prices); avg_depth_all_hops charges every hop instead
    exact_avg_depth: float
    avg_depth_all_hops: float


@njit(cache=True)
def _build_cells(keys, radix_bits, delta, width_bits):
    n = keys.shape[0]
    fanout = 1 << radix_bits
    cap = 16
    node_lo = np.empty(cap, np.int64)
    node_hi = np.empty(cap, np.int64)
    node_depth = np.empty(cap, np.int64)
    cells = np.empty(cap * fanout, np.uint32)
    node_lo[0] = 0
    node_hi[0] = n
    node_depth[0] = 0
    count = 1
    head = 0
    while head < count:
        lo = node_lo[head]
        hi = node_hi[head]
        depth = node_depth[head]
        remaining = width_bits - depth * radix_bits
        bits = radix_bits if remaining >= radix_bits else remaining
        shift = np.uint64(remaining - bits)
        nbins = 1 << bits
        base = head * fanout
        pos = lo
        for b in range(fanout):
            if b >= nbins:
                # unused cells of a partial final level; keep them
                # deterministic and harmless
                cells[base + b] = LEAF_BIT | np.uint32(hi)
                continue
            start = pos
            bu = np.uint64(b)
            while pos < hi and ((keys[pos] >> shift) & np.uint64(nbins - 1)) == bu:
                pos += 1
            if pos - start > delta and shift > np.uint64(0):
                if count == cap:
                    cap *= 2
                    new_lo = np.empty(cap, np.int64)
                    new_hi = np.empty(cap, np.int64)
                    new_depth = np.empty(cap, np.int64)
                    new_cells = np.empty(cap * fanout, np.uint32)
                    new_lo[:count] = node_lo
                    new_hi[:count] = node_hi
                    new_depth[:count] = node_depth
                    new_cells[: count * fanout] = cells
                    node_lo = new_lo
                    node_hi = new_hi
                    node_depth = new_depth
                    cells = new_cells
                node_lo[count] = start
                node_hi[count] = pos
                node_depth[count] = depth + 1
                cells[base + b] = np.uint32(count)
                count += 1
            else:
                cells[base + b] = LEAF_BIT | np.uint32(start)
        head += 1
    return cells[: count * fanout].copy(), count


@njit(cache=True)
def _descend(cells, radix_bits, width_bits, k):
    """Walk the tree for key k; returns (leaf payload, child hops)."""
    fanout = 1 << radix_bits
    node = 0
    depth = 0
    hops = 0
    while True:
        remaining = width_bits - depth * radix_bits
        bits = radix_bits if remaining >= radix_bits else remaining
        shift = np.uint64(remaining - bits)
        b = (k >> shift) & np.uint64((1 << bits) - 1)
        cell = cells[node * fanout + np.int64(b)]
        if cell & LEAF_BIT:
            return np.int64(cell & PAYLOAD_MASK), hops
        node = np.int64(cell)
        depth += 1
        hops += 1


class CompactHistTree:
    """Flat-array radix tree; immutable and read-shareable once built.

    For any key between the smallest and largest indexed key, the lookup
    estimate q satisfies: the index q* of the last key <= the probe lies in
    [q - 1, q + delta - 1], and for probes that are indexed keys themselves
    q* lies in [q, q + delta - 1].
    """

    __slots__ = ("config", "cells", "node_count", "num_keys")

    def __init__(self, config: ChtConfig, cells: np.ndarray, node_count: int, num_keys: int):
        self.config = config
        self.cells = cells
        self.node_count = int(node_count)
        self.num_keys = int(num_keys)
        self.cells.setflags(write=False)

    @property
    def size_bytes(self) -> int:
        return CELL_BYTES * len(self.cells)

    def lookup(self, k: int) -> int:
        """Estimated index of the first key >= the leaf bin holding ``k``."""
        k = min(max(k, 0), self.config.width.max_key)
        payload, _ = _descend(self.cells, self.config.radix_bits, self.config.width.bits, np.uint64(k))
        return int(payload)

    def lookup_with_hops(self, k: int) -> tuple[int, int]:
        k = min(max(k, 0), self.config.width.max_key)
        payload, hops = _descend(self.cells, self.config.radix_bits, self.config.width.bits, np.uint64(k))
        return int(payload), int(hops)

    def stats(self) -> ChtStats:
        """Exact node count, memory, and average leaf depths.

        Depths are recovered from the cells alone: an in-order walk visits
        leaf cells in ascending start order, so consecutive leaf payloads
        delimit each bin's key count.
        """
        fanout = 1 << self.config.radix_bits
        sum_after_first = 0
        sum_all = 0
        # iterative in-order DFS: (node, next bin, depth)
        stack = [(0, 0, 0)]
        prev_start = None
        prev_depth = 0
        while stack:
            node, b, depth = stack.pop()
            while b < fanout:
                cell = int(self.cells[node * fanout + b])
                if cell & int(LEAF_BIT):
                    start = cell & int(PAYLOAD_MASK)
                    if prev_start is not None:
                        size = start - prev_start
                        sum_all += size * prev_depth
                        sum_after_first += size * max(0, prev_depth - 1)
                    prev_start = start
                    prev_depth = depth
                    b += 1
                else:
                    stack.append((node, b + 1, depth))
                    node, b, depth = cell, 0, depth + 1
        if prev_start is not None:
            size = self.num_keys - prev_start
            sum_all += size * prev_depth
            sum_after_first += size * max(0, prev_depth - 1)
        return ChtStats(
            node_count=self.node_count,
            memory_bytes=self.size_bytes,
            exact_avg_depth=sum_after_first / self.num_keys,
            avg_depth_all_hops=sum_all / self.num_keys,
        )


def build_cht(keys: np.ndarray, config: ChtConfig) -> CompactHistTree:
    """Build the tree over sorted distinct keys, level by level."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    n = len(keys)
    if n == 0:
        raise ValueError("empty key set")
    if n >= 2**31:
        raise ValueError("offset overflow: more than 2^31 - 1 keys")
    if n > 1 and not np.all(keys[:-1] < keys[1:]):
        if np.any(keys[:-1] == keys[1:]):
            raise ValueError("duplicate keys are not supported")
        raise ValueError("keys must be sorted")
    if int(keys[-1]) > config.width.max_key:
        raise ValueError(f"keys do not fit in {config.width.bits} bits")
    cells, count = _build_cells(keys, config.radix_bits, config.delta, config.width.bits)
    return CompactHistTree(config, cells, count, n)
