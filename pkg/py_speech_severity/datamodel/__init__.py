"""
Dataset representation: manifests, segmentation, subject-independent splits and
the synthetic corpus generator.
"""

# Local imports
from .manifest import MANIFEST_VERSION, load_manifest, load_segment_series, save_manifest, validate_manifest
from .segmentation import segment_length, segment_series
from .splits import DEFAULT_RATIOS, apportion, make_splits
from .synthetic import MANIFEST_NAME, coupling_strength, synth_dataset
from .types import (
    BPRS_MAX,
    BPRS_MIN,
    CHANNEL_NAMES,
    N_CHANNELS,
    Fold,
    Manifest,
    SegmentRef,
    Session,
    SplitAssignment,
    SyntheticConfig,
    TimeSeriesSegment,
)

__all__ = [
    "BPRS_MAX",
    "BPRS_MIN",
    "CHANNEL_NAMES",
    "DEFAULT_RATIOS",
    "MANIFEST_NAME",
    "MANIFEST_VERSION",
    "N_CHANNELS",
    "Fold",
    "Manifest",
    "SegmentRef",
    "Session",
    "SplitAssignment",
    "SyntheticConfig",
    "TimeSeriesSegment",
    "apportion",
    "coupling_strength",
    "load_manifest",
    "load_segment_series",
    "make_splits",
    "save_manifest",
    "segment_length",
    "segment_series",
    "synth_dataset",
    "validate_manifest",
]
