"""
Type definitions for the dataset representation.

This module contains the records shared across the datamodel modules:
articulatory segments, sessions, manifests, fold assignments and the
synthetic-corpus configuration.
"""

# Python imports
from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
from msgspec import Struct

# Local imports
from ..exceptions import DataError, ShapeError

CHANNEL_NAMES: tuple[str, ...] = (
    "LA",
    "LP",
    "TBCL",
    "TBCD",
    "TTCL",
    "TTCD",
    "aperiodicity",
    "periodicity",
)
N_CHANNELS = len(CHANNEL_NAMES)

# 18 BPRS items, each scored 1-7
BPRS_MIN = 18
BPRS_MAX = 126


class Fold(StrEnum):
    """Subject-independent data fold."""

    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class TimeSeriesSegment:
    """
    Eight-channel articulatory time series for one segment.

    Rows are the 6 vocal tract variables followed by aperiodicity and
    periodicity (see CHANNEL_NAMES); columns are frames.

    Attributes:
        channels: Array [8 x N]
        frame_rate: Frames per second
        subject_id: Subject the segment belongs to
        session_id: Session the segment belongs to
        segment_index: Position of the segment within its session
        degenerate_channels: Indices of constant channels zeroed by normalization
    """

    channels: np.ndarray
    frame_rate: float = 100.0
    subject_id: str = ""
    session_id: str = ""
    segment_index: int = 0
    degenerate_channels: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        """Validate channel count and sample values."""
        if self.channels.ndim != 2 or self.channels.shape[0] != N_CHANNELS:
            raise ShapeError(
                f"Segment must have exactly {N_CHANNELS} channel rows",
                f"{self.ref}: got shape {self.channels.shape}",
            )
        if not np.all(np.isfinite(self.channels)):
            raise DataError("Segment contains non-finite samples", self.ref)
        if self.frame_rate <= 0:
            raise DataError("frame_rate must be positive", f"{self.ref}: {self.frame_rate}")

    @property
    def n_frames(self) -> int:
        """Number of frames (N)."""
        return int(self.channels.shape[1])

    @property
    def ref(self) -> str:
        """Readable reference "subject/session#index"."""
        return f"{self.subject_id}/{self.session_id}#{self.segment_index}"


class SegmentRef(Struct, frozen=True, forbid_unknown_fields=True):
    """Manifest entry for one segment: articulatory and representation files."""

    index: int
    tv_path: str
    ssl_path: str


class Session(Struct, frozen=True, forbid_unknown_fields=True):
    """
    One recorded session with its total BPRS severity.

    Attributes:
        subject_id: Subject identifier
        session_id: Session identifier (unique per subject)
        severity: Total BPRS score in [18, 126]
        segments: Ordered segment entries
    """

    subject_id: str
    session_id: str
    severity: int
    segments: list[SegmentRef]

    @property
    def key(self) -> str:
        """Unique "subject_id/session_id" key."""
        return f"{self.subject_id}/{self.session_id}"


@dataclass(frozen=True)
class Manifest:
    """
    Validated dataset manifest.

    Attributes:
        sessions: Session records in file order
        root: Directory that relative segment paths are resolved against
        version: Manifest format version
        frame_rate: Frames per second of the articulatory files, when the corpus declares one
    """

    sessions: list[Session]
    root: Path = field(default_factory=Path)
    version: int = 1
    frame_rate: float | None = None

    def resolve(self, path: str) -> Path:
        """Resolve a segment path against the manifest root."""
        candidate = Path(path)
        return candidate if candidate.is_absolute() else self.root / candidate

    @property
    def subjects(self) -> list[str]:
        """Distinct subject ids, sorted."""
        return sorted({session.subject_id for session in self.sessions})

    @property
    def n_segments(self) -> int:
        """Total number of segments over all sessions."""
        return sum(len(session.segments) for session in self.sessions)

    def session(self, key: str) -> Session:
        """Look up a session by its "subject/session" key."""
        for session in self.sessions:
            if session.key == key:
                return session
        raise DataError("Unknown session", key)


class SplitAssignment(Struct, frozen=True):
    """
    Subject-independent fold assignment.

    Attributes:
        assignment: subject_id -> fold
        seed: Shuffle seed used to build the assignment
        ratios: (train, val, test) ratios
    """

    assignment: dict[str, Fold]
    seed: int
    ratios: tuple[float, float, float]

    def subjects(self, fold: Fold | str) -> list[str]:
        """Subjects assigned to a fold, sorted."""
        wanted = Fold(fold)
        return sorted(subject for subject, f in self.assignment.items() if f == wanted)

    def fold_of(self, subject_id: str) -> Fold:
        """Fold of a subject."""
        try:
            return self.assignment[subject_id]
        except KeyError as e:
            raise DataError("Subject not in split assignment", subject_id) from e

    def sessions(self, manifest: Manifest, fold: Fold | str) -> list[Session]:
        """Sessions of a manifest whose subject belongs to a fold, in manifest order."""
        wanted = Fold(fold)
        return [s for s in manifest.sessions if self.fold_of(s.subject_id) == wanted]

    def counts(self) -> tuple[int, int, int]:
        """Subject counts per fold (train, val, test)."""
        return tuple(len(self.subjects(fold)) for fold in Fold)  # type: ignore[return-value]


class SyntheticConfig(Struct, frozen=True, forbid_unknown_fields=True):
    """
    Configuration of the synthetic clinical-speech corpus.

    Attributes:
        n_subjects: Number of subjects (>= 1)
        sessions_per_subject: Sessions per subject (>= 1)
        segments_per_session: Segments per session (>= 1)
        frame_rate: Frames per second of the articulatory channels
        segment_seconds: Segment duration in seconds
        severity_range: Inclusive (lo, hi) severity bounds within [18, 126]
        coupling_gain: Scale of inter-channel coupling (>= 0)
        noise_sd: Standard deviation of additive white noise (>= 0)
        ssl_dim: Width of the synthetic speech representations (768 or 1024)
        ssl_windows: Context windows per segment in the representation files
        n_latents: Number of coupled latent oscillators (k)
        seed: Random seed
    """

    n_subjects: int = 8
    sessions_per_subject: int = 2
    segments_per_session: int = 3
    frame_rate: float = 100.0
    segment_seconds: float = 40.0
    severity_range: tuple[int, int] = (BPRS_MIN, BPRS_MAX)
    coupling_gain: float = 1.0
    noise_sd: float = 0.1
    ssl_dim: int = 768
    ssl_windows: int = 8
    n_latents: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        """
        Validate configuration after initialization.

        Raises:
            ValueError: If any field is out of range
        """
        for name in ("n_subjects", "sessions_per_subject", "segments_per_session", "ssl_windows", "n_latents"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.frame_rate <= 0 or self.segment_seconds <= 0:
            raise ValueError("frame_rate and segment_seconds must be positive")
        lo, hi = self.severity_range
        if lo < BPRS_MIN or hi > BPRS_MAX or lo > hi:
            raise ValueError(f"severity_range must satisfy {BPRS_MIN} <= lo <= hi <= {BPRS_MAX}, got {lo, hi}")
        if self.coupling_gain < 0 or self.noise_sd < 0:
            raise ValueError("coupling_gain and noise_sd must be non-negative")
        if self.ssl_dim not in (768, 1024):
            raise ValueError(f"ssl_dim must be 768 or 1024, got {self.ssl_dim}")

    @property
    def n_frames(self) -> int:
        """Frames per synthetic segment."""
        return int(round(self.segment_seconds * self.frame_rate))
