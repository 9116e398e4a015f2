"""Key, position, and bit-manipulation primitives shared by every index layer.

Keys are unsigned integers ordered numerically. A dataset declares how many
bits its keys occupy (`KeyWidth`), which lets hand-sized examples (4-bit
keys) and full 64-bit datasets run through one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["KeyWidth", "CdfPoint", "lcp", "prefix", "ceil_log2"]


@dataclass(frozen=True)
class KeyWidth:
    """Number of significant bits in every key of a dataset (1..64)."""

    bits: int = 64

    def __post_init__(self) -> None:
        if not 1 <= self.bits <= 64:
            raise ValueError(f"key width must be in [1, 64], got {self.bits}")

    @property
    def max_key(self) -> int:
        return (1 << self.bits) - 1

    def check_key(self, k: int) -> int:
        if not 0 <= k <= self.max_key:
            raise ValueError(f"key {k} does not fit in {self.bits} bits")
        return k


@dataclass(frozen=True)
class CdfPoint:
    """One sample of the data CDF: a key and the index of its first
    occurrence in the sorted dataset."""

    key: int
    position: int


def lcp(a: int, b: int, width: KeyWidth = KeyWidth()) -> int:
    """Length of the longest common bit prefix of ``a`` and ``b``.

    Bits are compared from position ``width.bits - 1`` downward. The result
    lies in [0, width.bits] and equals ``width.bits`` iff ``a == b``.
    """
    width.check_key(a)
    width.check_key(b)
    x = a ^ b
    if x == 0:
        return width.bits
    return width.bits - x.bit_length()


def prefix(k: int, r: int, width: KeyWidth = KeyWidth()) -> int:
    """Top ``r`` bits of ``k``, right-aligned; ``prefix(k, 0, w) == 0``."""
    if not 0 <= r <= width.bits:
        raise ValueError(f"prefix length {r} outside [0, {width.bits}]")
    width.check_key(k)
    if r == 0:
        return 0
    return k >> (width.bits - r)


def ceil_log2(count: int) -> int:
    """Binary-search step count for ``count`` candidates.

    ceil(log2(count)) for count >= 2; empty and singleton ranges need no
    steps, so counts <= 1 map to 0.
    """
    if count <= 1:
        return 0
    return (count - 1).bit_length()
