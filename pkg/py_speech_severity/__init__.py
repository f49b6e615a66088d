"""
Speech-based severity estimation.

A library and CLI for estimating a total BPRS severity score from speech:
full vocal tract coordination (FVTC) features, a masked VQ-VAE that compresses
them into concise articulatory representations, and a CNN + multi-head
attention regressor that fuses them with pretrained speech representations.
"""

# Local imports
from .config import RunConfig
from .exceptions import (
    CheckpointError,
    ConfigurationError,
    DataError,
    FormatError,
    NonFiniteError,
    NumericError,
    SeverityEstimationError,
    ShapeError,
)

__version__ = "1.0.0"

__all__ = [
    "RunConfig",
    "__version__",
    # Exceptions
    "SeverityEstimationError",
    "ConfigurationError",
    "DataError",
    "ShapeError",
    "FormatError",
    "CheckpointError",
    "NumericError",
    "NonFiniteError",
]
