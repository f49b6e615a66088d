"""
Speech representation ingestion and the FMAT matrix format.
"""

# Local imports
from .fmat import (
    FMAT_MAGIC,
    FMAT_VERSION,
    decode_fmat,
    encode_fmat,
    read_fmat,
    read_matrix,
    read_matrix_csv,
    write_fmat,
    write_matrix_csv,
)
from .pooling import (
    SSL_DIMS,
    SegmentEmbedding,
    SessionEmbeddingStack,
    WindowRepMatrix,
    mean_pool_windows,
    stack_session,
)

__all__ = [
    "FMAT_MAGIC",
    "FMAT_VERSION",
    "SSL_DIMS",
    "SegmentEmbedding",
    "SessionEmbeddingStack",
    "WindowRepMatrix",
    "decode_fmat",
    "encode_fmat",
    "mean_pool_windows",
    "read_fmat",
    "read_matrix",
    "read_matrix_csv",
    "stack_session",
    "write_fmat",
    "write_matrix_csv",
]
