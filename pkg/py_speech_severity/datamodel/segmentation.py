"""
Cutting continuous articulatory recordings into fixed-length segments.
"""

# Python imports
from __future__ import annotations

import numpy as np

# Local imports
from ..exceptions import DataError, ShapeError
from .types import N_CHANNELS, TimeSeriesSegment


def segment_length(frame_rate: float, segment_seconds: float = 40.0) -> int:
    """Frames per full segment: round(segment_seconds * frame_rate)."""
    return int(round(segment_seconds * frame_rate))


def segment_series(
    series: np.ndarray,
    frame_rate: float,
    segment_seconds: float = 40.0,
    subject_id: str = "",
    session_id: str = "",
) -> list[TimeSeriesSegment]:
    """
    Split an [8 x T] series into consecutive non-overlapping segments.

    Full segments have round(segment_seconds * frame_rate) frames. A trailing
    remainder of at least half a segment is kept as a short final segment;
    a shorter one is dropped.

    Args:
        series: Array [8 x T]
        frame_rate: Frames per second (> 0)
        segment_seconds: Segment duration in seconds
        subject_id: Stored on every segment
        session_id: Stored on every segment

    Returns:
        Segments in time order (possibly empty when T is below half a segment)

    Raises:
        DataError: If the series is empty, non-finite, or frame_rate is not positive
        ShapeError: If the series does not have 8 rows
    """
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != N_CHANNELS:
        raise ShapeError(f"Series must be [{N_CHANNELS} x T]", str(values.shape))
    total = values.shape[1]
    if total < 1:
        raise DataError("Empty series", f"{subject_id}/{session_id}")
    if frame_rate <= 0 or segment_seconds <= 0:
        raise DataError("frame_rate and segment_seconds must be positive", f"{frame_rate}, {segment_seconds}")
    if not np.all(np.isfinite(values)):
        raise DataError("Series contains non-finite samples", f"{subject_id}/{session_id}")
    length = max(segment_length(frame_rate, segment_seconds), 1)
    bounds = [(start, start + length) for start in range(0, total - length + 1, length)]
    consumed = len(bounds) * length
    remainder = total - consumed
    if remainder > 0 and 2 * remainder >= length:
        bounds.append((consumed, total))
    return [
        TimeSeriesSegment(
            channels=values[:, start:stop].copy(),
            frame_rate=frame_rate,
            subject_id=subject_id,
            session_id=session_id,
            segment_index=index,
        )
        for index, (start, stop) in enumerate(bounds)
    ]
