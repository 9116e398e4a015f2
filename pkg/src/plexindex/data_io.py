"""Dataset files, synthetic key generators, and probe workloads.

Files follow the SOSD binary convention: a little-endian uint64 count
followed by that many little-endian uint64 keys. Generators are seeded and
deterministic; they are desk-scale stand-ins for the benchmark's key
distributions (smooth, heavy-tailed, one-dominant-prefix-with-outliers,
clustered).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetFile",
    "SyntheticSpec",
    "load_dataset",
    "write_dataset",
    "generate",
    "make_workload",
    "KINDS",
]

KINDS = ("uniform", "lognormal", "books_like", "face_like", "osm_like")

U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class DatasetFile:
    path: Path
    keys: np.ndarray
    was_sorted: bool


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str
    n: int
    seed: int
    outlier_fraction: float = 0.001  # face_like only

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; choose from {KINDS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def write_dataset(path: str | Path, keys: np.ndarray) -> Path:
    path = Path(path)
    keys = np.ascontiguousarray(keys, dtype="<u8")
    with open(path, "wb") as f:
        f.write(np.uint64(len(keys)).tobytes())
        f.write(keys.tobytes())
    return path


def load_dataset(path: str | Path) -> DatasetFile:
    """Read a key file; sorts (stably, if needed) and records whether the
    input was already sorted."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 8:
        raise ValueError(f"{path}: empty or truncated dataset file")
    count = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    expected = 8 + 8 * count
    if len(raw) != expected:
        raise ValueError(f"{path}: size mismatch, header says {count} keys "
                         f"({expected} bytes) but file has {len(raw)} bytes")
    keys = np.frombuffer(raw[8:], dtype="<u8").astype(np.uint64)
    was_sorted = bool(np.all(keys[:-1] <= keys[1:])) if count > 1 else True
    if not was_sorted:
        keys = np.sort(keys, kind="stable")
    return DatasetFile(path, keys, was_sorted)


def generate(spec: SyntheticSpec) -> np.ndarray:
    """Sorted keys for the given spec; same spec, same keys."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    if spec.kind == "uniform":
        keys = rng.integers(0, 1 << 64, n, dtype=np.uint64)
    elif spec.kind == "lognormal":
        x = rng.lognormal(mean=0.0, sigma=1.0, size=n)
        keys = _to_u64(x, 1 << 60)
    elif spec.kind == "books_like":
        # popularity-style heavy tail: most mass at small keys, a long tail
        x = rng.lognormal(mean=0.0, sigma=1.0, size=n) ** 3
        keys = _to_u64(x, 1 << 56)
    elif spec.kind == "face_like":
        # nearly all keys under one fixed 24-bit prefix (so no affordable
        # radix width can split the bulk), grouped into dense sub-clumps,
        # plus a handful of extreme outliers at both ends of the key space
        n_out = max(2, int(round(n * spec.outlier_fraction)))
        n_base = n - n_out
        base = np.uint64(0x00A5C3 << 40)
        n_sub = max(1, n_base // 64)
        subcenters = rng.integers(0, 1 << 40, n_sub, dtype=np.uint64)
        pick = rng.integers(0, n_sub, n_base)
        cluster = base + subcenters[pick] + rng.integers(0, 1 << 12, n_base, dtype=np.uint64)
        lo = rng.integers(0, 1 << 20, (n_out + 1) // 2, dtype=np.uint64)
        hi = np.uint64(U64_MAX) - rng.integers(0, 1 << 20, n_out // 2, dtype=np.uint64)
        keys = np.concatenate([cluster, lo, hi])
    elif spec.kind == "osm_like":
        # clustered composite ids: dense clumps around scattered centers
        n_clusters = max(1, int(np.sqrt(n)))
        centers = rng.integers(0, 1 << 63, n_clusters, dtype=np.uint64)
        pick = rng.integers(0, n_clusters, n)
        jitter = rng.integers(0, 1 << 24, n, dtype=np.uint64)
        keys = centers[pick] + jitter
    else:  # pragma: no cover - guarded by SyntheticSpec
        raise AssertionError(spec.kind)
    keys.sort()
    return keys


def _to_u64(x: np.ndarray, scale: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    # largest float64 below 2^64; float(U64_MAX) rounds up and cannot cast
    cap = float((1 << 64) - (1 << 11))
    return np.minimum(x * scale, cap).astype(np.uint64)


def make_workload(
    data: np.ndarray,
    n_probes: int,
    seed: int,
    positive_fraction: float = 1.0,
) -> np.ndarray:
    """Probe keys: present ones sampled uniformly from the data, absent
    ones rejection-sampled from the key space. Deterministic per seed."""
    if not 0.0 <= positive_fraction <= 1.0:
        raise ValueError("positive_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    n_pos = int(round(n_probes * positive_fraction))
    n_neg = n_probes - n_pos
    parts = []
    if n_pos:
        parts.append(data[rng.integers(0, len(data), n_pos)])
    if n_neg:
        missing = []
        need = n_neg
        while need > 0:
            cand = rng.integers(0, 1 << 64, max(2 * need, 64), dtype=np.uint64)
            pos = np.searchsorted(data, cand)
            pos_clip = np.minimum(pos, len(data) - 1)
            present = data[pos_clip] == cand
            cand = cand[~present]
            missing.append(cand[:need])
            need -= len(cand[:need])
        parts.append(np.concatenate(missing))
    probes = np.concatenate(parts) if parts else np.empty(0, np.uint64)
    return probes[rng.permutation(len(probes))]
