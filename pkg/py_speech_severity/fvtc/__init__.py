"""
Full vocal tract coordination features.
"""

# Local imports
from .correlation import (
    N_PAIRS,
    PAIR_ORDER,
    CorrelationVector,
    FVTCConfig,
    FVTCMatrix,
    channel_normalize,
    correlation_vector,
    delayed_correlation,
    extract_fvtc,
    fvtc_matrix,
    load_fvtc,
    save_fvtc,
)

__all__ = [
    "N_PAIRS",
    "PAIR_ORDER",
    "CorrelationVector",
    "FVTCConfig",
    "FVTCMatrix",
    "channel_normalize",
    "correlation_vector",
    "delayed_correlation",
    "extract_fvtc",
    "fvtc_matrix",
    "load_fvtc",
    "save_fvtc",
]
