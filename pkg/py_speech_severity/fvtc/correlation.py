"""
Delayed correlations and full vocal tract coordination (FVTC) matrices.

For channels x, y of length N and lag d (0 <= d < N) the delayed correlation is

    r(d) = sum_{t=0}^{N-d-1} x[t] * y[t+d] / (N - d)

A correlation vector stacks r(0..D); the FVTC matrix stacks the vectors of all
36 channel pairs (i, j) with i <= j in row-major order (1,1), (1,2), ..., (8,8).
Sums are accumulated left to right (cumulative sum), so results are bit-identical
for identical inputs.
"""

# Python imports
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from msgspec import Struct

# Local imports
from ..datamodel.types import N_CHANNELS, TimeSeriesSegment
from ..embeddings.fmat import read_fmat, write_fmat
from ..exceptions import DataError, ShapeError

# 1-based (i, j) pairs, i <= j
PAIR_ORDER: tuple[tuple[int, int], ...] = tuple(
    (i + 1, j + 1) for i in range(N_CHANNELS) for j in range(i, N_CHANNELS)
)
N_PAIRS = len(PAIR_ORDER)
_ROWS = np.array([i - 1 for i, _ in PAIR_ORDER])
_COLS = np.array([j - 1 for _, j in PAIR_ORDER])


class FVTCConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    FVTC extraction settings.

    Attributes:
        D: Maximum lag in frames (default 50, i.e. 0.5 s at 100 Hz)
        normalize: z-score each channel before correlating
    """

    D: int = 50
    normalize: bool = True

    def __post_init__(self) -> None:
        """Validate the lag."""
        if self.D < 0:
            raise ValueError(f"D must be >= 0, got {self.D}")


@dataclass(frozen=True)
class CorrelationVector:
    """Delayed correlations r(0..D) of one channel pair (1-based indices)."""

    values: np.ndarray
    channel_pair: tuple[int, int] = (1, 1)

    @property
    def D(self) -> int:
        """Maximum lag."""
        return len(self.values) - 1


@dataclass(frozen=True)
class FVTCMatrix:
    """
    Stacked auto- and cross-correlation vectors of one segment.

    Attributes:
        values: Array [36 x (D+1)], rows in PAIR_ORDER
        D: Maximum lag
        normalized: Whether channels were z-scored first
        segment_ref: Reference of the source segment
    """

    values: np.ndarray
    D: int
    normalized: bool = True
    segment_ref: str = ""

    def __post_init__(self) -> None:
        """Validate the matrix shape."""
        if self.values.shape != (N_PAIRS, self.D + 1):
            raise ShapeError("FVTC matrix shape mismatch", f"expected {(N_PAIRS, self.D + 1)}, got {self.values.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        """Matrix shape (36, D+1)."""
        return self.values.shape  # type: ignore[return-value]

    def metadata(self) -> dict[str, object]:
        """FMAT metadata describing the matrix."""
        return {
            "D": self.D,
            "normalized": self.normalized,
            "pair_order": [list(p) for p in PAIR_ORDER],
            "segment_ref": self.segment_ref,
        }


def channel_normalize(segment: TimeSeriesSegment) -> TimeSeriesSegment:
    """
    z-score every channel: sample mean 0, population standard deviation 1.

    A constant channel becomes all zeros and its index is recorded in
    degenerate_channels.
    """
    x = segment.channels
    centered = x - x.mean(axis=1, keepdims=True)
    sd = np.sqrt((centered * centered).mean(axis=1))
    degenerate = tuple(int(i) for i in np.flatnonzero(sd == 0))
    safe = np.where(sd > 0, sd, 1.0)
    normalized = centered / safe[:, None]
    normalized[list(degenerate), :] = 0.0
    return replace(segment, channels=normalized, degenerate_channels=degenerate)


def _check_pair(x: np.ndarray, y: np.ndarray) -> None:
    if x.ndim != 1 or x.shape != y.shape:
        raise ShapeError("Mismatched channel lengths", f"{x.shape} vs {y.shape}")


def _check_lag(d: int, n: int) -> None:
    if not 0 <= d < n:
        raise DataError("Lag out of range", f"need 0 <= lag < N = {n}, got {d}")


def delayed_correlation(x: np.ndarray, y: np.ndarray, d: int) -> float:
    """
    Delayed correlation of x with y at lag d.

    Raises:
        ShapeError: If x and y differ in length
        DataError: If d is not in [0, N)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    n = x.shape[0]
    _check_lag(d, n)
    return float(np.cumsum(x[: n - d] * y[d:])[-1] / (n - d))


def correlation_vector(
    x: np.ndarray,
    y: np.ndarray,
    D: int,
    channel_pair: tuple[int, int] = (1, 1),
) -> CorrelationVector:
    """
    Stack delayed correlations for lags 0..D.

    Raises:
        DataError: If D is not in [0, N)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    _check_lag(D, x.shape[0])
    values = np.array([delayed_correlation(x, y, d) for d in range(D + 1)])
    return CorrelationVector(values=values, channel_pair=channel_pair)


def fvtc_matrix(segment: TimeSeriesSegment, D: int = 50, normalize: bool = True) -> FVTCMatrix:
    """
    Build the FVTC matrix of a segment.

    Args:
        segment: Eight-channel segment
        D: Maximum lag (0 <= D < N)
        normalize: z-score channels first

    Returns:
        FVTCMatrix [36 x (D+1)] whose row for pair (i, j) equals
        correlation_vector(channel_i, channel_j, D)

    Raises:
        DataError: If D is not in [0, N)
    """
    n = segment.n_frames
    _check_lag(D, n)
    x = channel_normalize(segment).channels if normalize else segment.channels
    left = x[_ROWS]
    right = x[_COLS]
    values = np.empty((N_PAIRS, D + 1))
    for d in range(D + 1):
        values[:, d] = np.cumsum(left[:, : n - d] * right[:, d:], axis=1)[:, -1] / (n - d)
    return FVTCMatrix(values=values, D=D, normalized=normalize, segment_ref=segment.ref)


def extract_fvtc(
    segments: list[TimeSeriesSegment],
    config: FVTCConfig,
    max_workers: int = 1,
) -> list[FVTCMatrix]:
    """
    FVTC matrices for many segments, in input order.

    Segments are independent, so a thread pool may be used; results do not
    depend on scheduling.
    """
    if max_workers <= 1:
        return [fvtc_matrix(s, config.D, config.normalize) for s in segments]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda s: fvtc_matrix(s, config.D, config.normalize), segments))


def save_fvtc(path: str | Path, matrix: FVTCMatrix) -> Path:
    """Persist an FVTC matrix as FMAT with keys {D, normalized, pair_order}."""
    return write_fmat(path, matrix.values, matrix.metadata())


def load_fvtc(path: str | Path) -> FVTCMatrix:
    """
    Load an FVTC matrix written by save_fvtc.

    Raises:
        DataError: If the metadata or pair order do not describe an FVTC matrix
    """
    values, metadata = read_fmat(path)
    if "D" not in metadata or "normalized" not in metadata:
        raise DataError("Not an FVTC matrix file", f"{path}: missing D/normalized metadata")
    pair_order = [tuple(p) for p in metadata.get("pair_order", [])]
    if pair_order and tuple(pair_order) != PAIR_ORDER:
        raise DataError("Unexpected FVTC pair order", str(path))
    return FVTCMatrix(
        values=np.asarray(values, dtype=np.float64),
        D=int(metadata["D"]),
        normalized=bool(metadata["normalized"]),
        segment_ref=str(metadata.get("segment_ref", "")),
    )
