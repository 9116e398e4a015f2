"""Jitted bit helpers shared by the kernels."""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def bit_length_u64(x):
    """Bit length of a uint64 in a constant number of steps."""
    n = 0
    if x >= np.uint64(1 << 32):
        x >>= np.uint64(32)
        n += 32
    if x >= np.uint64(1 << 16):
        x >>= np.uint64(16)
        n += 16
    if x >= np.uint64(1 << 8):
        x >>= np.uint64(8)
        n += 8
    if x >= np.uint64(1 << 4):
        x >>= np.uint64(4)
        n += 4
    if x >= np.uint64(1 << 2):
        x >>= np.uint64(2)
        n += 2
    if x >= np.uint64(2):
        x >>= np.uint64(1)
        n += 1
    if x >= np.uint64(1):
        n += 1
    return n


@njit(cache=True, inline="always")
def ceil_log2_i64(c):
    """Binary-search step count for c candidates; 0 for c <= 1."""
    if c <= 1:
        return 0
    v = np.uint64(c - 1)
    return bit_length_u64(v)
