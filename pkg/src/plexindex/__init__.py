"""Single-hyperparameter learned index for sorted integer keys.

An error-bounded linear spline approximates the key CDF; a radix subindex
(plain prefix table or compact hist-tree, picked by cost models computed
without building either) narrows the spline-segment search; lookups finish
with a binary search inside the spline's +-epsilon window.
"""

from .core import CdfPoint, KeyWidth, ceil_log2, lcp, prefix
from .spline import SplineBuilder, SplineModel, SplinePoint, build_spline
from .radix_table import RadixCostTracker, RadixTableIndex, build_radix_table
from .cht import ChtConfig, ChtStats, CompactHistTree, build_cht
from .tuner import (
    ChtEstimate,
    CostSurface,
    LcpHistogram,
    TunerChoice,
    build_lcp_histogram,
    compute_cost_surface,
    estimate_cht_memory,
    select_subindex,
)
from .plex import BinarySearchBaseline, PlexIndex, build, deserialize, serialize
from .data_io import SyntheticSpec, generate, load_dataset, make_workload, write_dataset

__all__ = [
    "KeyWidth", "CdfPoint", "lcp", "prefix", "ceil_log2",
    "SplinePoint", "SplineModel", "SplineBuilder", "build_spline",
    "RadixTableIndex", "RadixCostTracker", "build_radix_table",
    "ChtConfig", "ChtStats", "CompactHistTree", "build_cht",
    "LcpHistogram", "CostSurface", "ChtEstimate", "TunerChoice",
    "build_lcp_histogram", "compute_cost_surface", "estimate_cht_memory",
    "select_subindex",
    "PlexIndex", "BinarySearchBaseline", "build", "serialize", "deserialize",
    "SyntheticSpec", "generate", "load_dataset", "write_dataset", "make_workload",
]

__version__ = "0.1.0"
