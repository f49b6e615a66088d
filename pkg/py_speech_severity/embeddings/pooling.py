"""
Segment and session embeddings built from externally computed speech representations.
"""

# Python imports
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Local imports
from ..exceptions import DataError, ShapeError
from .fmat import read_matrix

SSL_DIMS = (768, 1024)


@dataclass(frozen=True)
class WindowRepMatrix:
    """
    Per-window representations of one segment from a pretrained speech encoder.

    Attributes:
        values: Array [W x E], one row per context window
        source: Provenance tag, e.g. "wav2vec2-base"
    """

    values: np.ndarray
    source: str = "unknown"

    def __post_init__(self) -> None:
        """Validate shape and embedding width."""
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise ShapeError("Window representation matrix must be [W x E] with W >= 1", str(self.values.shape))
        if self.values.shape[1] not in SSL_DIMS:
            raise ShapeError("Unsupported representation width", f"{self.values.shape[1]} not in {SSL_DIMS}")

    @classmethod
    def from_file(cls, path: str | Path) -> WindowRepMatrix:
        """Load window representations from an FMAT or CSV file."""
        values, metadata = read_matrix(path)
        return cls(values=np.asarray(values, dtype=np.float64), source=str(metadata.get("source", "unknown")))


@dataclass(frozen=True)
class SegmentEmbedding:
    """Fixed-size embedding of one segment."""

    values: np.ndarray
    segment_ref: str = ""
    source: str = "unknown"


@dataclass(frozen=True)
class SessionEmbeddingStack:
    """
    Segment embeddings of one session stacked in manifest order.

    Attributes:
        values: Array [S x E]
        session_ref: "subject_id/session_id"
        source: Provenance tag of the stacked embeddings
    """

    values: np.ndarray
    session_ref: str = ""
    source: str = "unknown"
    segment_refs: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_segments(self) -> int:
        """Number of stacked segments (S)."""
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        """Embedding width (E)."""
        return int(self.values.shape[1])


def mean_pool_windows(windows: WindowRepMatrix, segment_ref: str = "") -> SegmentEmbedding:
    """
    Average window representations into one segment embedding.

    Args:
        windows: Window representations [W x E]
        segment_ref: Reference stored on the result

    Returns:
        SegmentEmbedding of width E

    Raises:
        DataError: If the matrix is empty or holds non-finite values
    """
    values = np.asarray(windows.values, dtype=np.float64)
    if values.size == 0:
        raise DataError("Empty window representation matrix", segment_ref or None)
    if not np.all(np.isfinite(values)):
        raise DataError("Non-finite window representations", segment_ref or None)
    return SegmentEmbedding(values=values.mean(axis=0), segment_ref=segment_ref, source=windows.source)


def stack_session(embeddings: list[SegmentEmbedding], session_ref: str = "") -> SessionEmbeddingStack:
    """
    Stack segment embeddings into a session input; row i is segment i.

    Raises:
        DataError: If the list is empty
        ShapeError: If embedding widths differ across segments
    """
    if not embeddings:
        raise DataError("Cannot stack an empty session", session_ref or None)
    width = embeddings[0].values.shape[-1]
    for embedding in embeddings:
        if embedding.values.ndim != 1 or embedding.values.shape[0] != width:
            raise ShapeError(
                "Embedding dimension mismatch",
                f"{session_ref}: segment {embedding.segment_ref!r} has shape {embedding.values.shape}, "
                f"expected ({width},)",
            )
    return SessionEmbeddingStack(
        values=np.stack([e.values for e in embeddings]),
        session_ref=session_ref,
        source=embeddings[0].source,
        segment_refs=tuple(e.segment_ref for e in embeddings),
    )
