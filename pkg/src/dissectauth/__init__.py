"""Adaptive authentication core: dissection commitments, dynamic rules, telemetry, risk."""

__version__ = "0.1.0"

from .dissection import (
    BlockScheme,
    ComparisonResult,
    DissectionRecord,
    KeyboardLayout,
    ProbeConfig,
    Substitution,
    TimingVector,
    classify_substitution,
    commit,
    compare,
    dissect,
    key_proximity,
    load_layout,
    timing_similarity,
)

__all__ = [
    "BlockScheme",
    "ComparisonResult",
    "DissectionRecord",
    "KeyboardLayout",
    "ProbeConfig",
    "Substitution",
    "TimingVector",
    "classify_substitution",
    "commit",
    "compare",
    "dissect",
    "key_proximity",
    "load_layout",
    "timing_similarity",
    "__version__",
]
