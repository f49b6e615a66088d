"""
Manifest loading, validation and saving.

A manifest is a UTF-8 JSON document:

    {"version": 1,
     "frame_rate": 100.0,   (optional)
     "sessions": [{"subject_id", "session_id", "severity",
                   "segments": [{"index", "tv_path", "ssl_path"}]}]}

Segment paths are resolved relative to the manifest's directory.
"""

# Python imports
from __future__ import annotations

from pathlib import Path

import msgspec
import numpy as np
from loguru import logger
from msgspec import Struct

# Local imports
from ..embeddings.fmat import read_matrix
from ..exceptions import DataError, ManifestParseError, ManifestValidationError
from .types import BPRS_MAX, BPRS_MIN, N_CHANNELS, Manifest, Session, TimeSeriesSegment

MANIFEST_VERSION = 1


class _ManifestDocument(Struct, forbid_unknown_fields=True, omit_defaults=True):
    version: int
    sessions: list[Session]
    frame_rate: float | None = None


def validate_manifest(manifest: Manifest, check_files: bool = True) -> Manifest:
    """
    Check every manifest invariant.

    Args:
        manifest: Manifest to check
        check_files: Also require every referenced file to exist

    Returns:
        The same manifest

    Raises:
        ManifestValidationError: Naming the first offending record
    """
    if manifest.version != MANIFEST_VERSION:
        raise ManifestValidationError("Unsupported manifest version", str(manifest.version))
    if manifest.frame_rate is not None and not manifest.frame_rate > 0:
        raise ManifestValidationError("frame_rate must be positive", str(manifest.frame_rate))
    seen: set[tuple[str, str]] = set()
    for session in manifest.sessions:
        pair = (session.subject_id, session.session_id)
        if pair in seen:
            raise ManifestValidationError("Duplicate session", f"session {session.key}")
        seen.add(pair)
        if not BPRS_MIN <= session.severity <= BPRS_MAX:
            raise ManifestValidationError(
                "Severity out of range",
                f"session {session.key}: {session.severity} not in [{BPRS_MIN}, {BPRS_MAX}]",
            )
        if not session.segments:
            raise ManifestValidationError("Session has no segments", f"session {session.key}")
        indices = [segment.index for segment in session.segments]
        if len(set(indices)) != len(indices):
            raise ManifestValidationError("Duplicate segment index", f"session {session.key}: {indices}")
        if not check_files:
            continue
        for segment in session.segments:
            for path in (segment.tv_path, segment.ssl_path):
                if not manifest.resolve(path).is_file():
                    raise ManifestValidationError(
                        "Missing segment file",
                        f"session {session.key} segment {segment.index}: {manifest.resolve(path)}",
                    )
    return manifest


def load_manifest(path: str | Path, check_files: bool = True) -> Manifest:
    """
    Load and validate a manifest file.

    Args:
        path: Manifest JSON path
        check_files: Require every referenced segment file to exist

    Returns:
        Validated Manifest rooted at the file's directory

    Raises:
        ManifestParseError: If the file is missing or not a manifest document
        ManifestValidationError: If an invariant is violated
    """
    source = Path(path)
    if not source.is_file():
        raise ManifestParseError("Manifest file not found", str(source))
    try:
        document = msgspec.json.decode(source.read_bytes(), type=_ManifestDocument)
    except (msgspec.DecodeError, msgspec.ValidationError) as e:
        raise ManifestParseError("Malformed manifest", f"{source}: {e}") from e
    manifest = Manifest(
        sessions=document.sessions, root=source.parent, version=document.version, frame_rate=document.frame_rate
    )
    validate_manifest(manifest, check_files=check_files)
    logger.debug(
        f"Loaded manifest {source}: {len(manifest.sessions)} sessions, "
        f"{len(manifest.subjects)} subjects, {manifest.n_segments} segments"
    )
    return manifest


def save_manifest(manifest: Manifest, path: str | Path) -> Path:
    """
    Write a manifest as indented JSON.

    Args:
        manifest: Manifest to write (paths are written as stored)
        path: Destination file

    Returns:
        The written path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    document = _ManifestDocument(version=manifest.version, sessions=manifest.sessions, frame_rate=manifest.frame_rate)
    target.write_bytes(msgspec.json.format(msgspec.json.encode(document), indent=2) + b"\n")
    return target


def load_segment_series(manifest: Manifest, session: Session, frame_rate: float) -> list[TimeSeriesSegment]:
    """
    Load the articulatory segments of a session in manifest order.

    FMAT files store [8 x N] (channels x frames); CSV files store frames as rows
    and are transposed on load.

    Raises:
        DataError: If a file cannot be read or does not hold 8 channels
    """
    segments = []
    for ref in session.segments:
        values, metadata = read_matrix(manifest.resolve(ref.tv_path))
        if "columns" in metadata:
            values = values.T
        if values.ndim != 2 or values.shape[0] != N_CHANNELS:
            raise DataError(
                "Segment file does not hold 8 channels",
                f"session {session.key} segment {ref.index}: shape {values.shape}",
            )
        segments.append(
            TimeSeriesSegment(
                channels=np.asarray(values, dtype=np.float64),
                frame_rate=float(metadata.get("frame_rate", frame_rate)),
                subject_id=session.subject_id,
                session_id=session.session_id,
                segment_index=ref.index,
            )
        )
    return segments
