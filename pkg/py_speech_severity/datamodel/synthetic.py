"""
Synthetic clinical-speech corpus with severity planted in articulatory coordination.

Each segment mixes k latent resonators into the 8 channels. The share of the
shared (coupled) component in every channel is

    coupling = g * (1 - u) / (1 + g * (1 - u)),    u = (severity - 18) / 108

so inter-channel correlation decreases strictly with severity whenever the gain
g is positive. The synthetic speech representations are a fixed random
projection of the same coupling parameter plus white noise.
"""

# Python imports
from __future__ import annotations

from pathlib import Path

import numpy as np
from loguru import logger
from scipy.signal import lfilter

# Local imports
from ..embeddings.fmat import write_fmat
from ..exceptions import DataError
from .manifest import save_manifest
from .types import BPRS_MAX, BPRS_MIN, CHANNEL_NAMES, N_CHANNELS, Manifest, SegmentRef, Session, SyntheticConfig

MANIFEST_NAME = "manifest.json"

_MAX_LAG = 5
_RESONATOR_RADIUS = 0.98
_PRIVATE_POLE = 0.9


def coupling_strength(severity: float, gain: float) -> float:
    """Share of the coupled component for a severity; strictly decreasing in severity when gain > 0."""
    drive = gain * (1.0 - (severity - BPRS_MIN) / (BPRS_MAX - BPRS_MIN))
    return drive / (1.0 + drive)


def _standardize(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=-1, keepdims=True)
    sd = centered.std(axis=-1, keepdims=True)
    return centered / np.where(sd > 0, sd, 1.0)


class _CorpusGenerator:
    """Holds the corpus-level random structure shared by all subjects."""

    def __init__(self, config: SyntheticConfig) -> None:
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        k = config.n_latents
        self.base_mixing = self.rng.normal(size=(N_CHANNELS, k))
        self.lags = self.rng.integers(0, _MAX_LAG + 1, size=N_CHANNELS)
        freqs = self.rng.uniform(1.0, 6.0, size=k)
        self.omegas = 2.0 * np.pi * freqs / config.frame_rate
        self.channel_scale = self.rng.uniform(0.5, 2.0, size=N_CHANNELS)
        self.channel_offset = self.rng.normal(size=N_CHANNELS)
        self.projection = self.rng.normal(size=(2, config.ssl_dim))

    def subject_mixing(self) -> np.ndarray:
        mixing = self.base_mixing + 0.1 * self.rng.normal(size=self.base_mixing.shape)
        return mixing / np.linalg.norm(mixing, axis=1, keepdims=True)

    def session_severity(self, base: float) -> int:
        lo, hi = self.config.severity_range
        spread = 0.05 * (hi - lo)
        return int(np.clip(round(base + spread * self.rng.normal()), lo, hi))

    def tv_segment(self, mixing: np.ndarray, coupling: float) -> np.ndarray:
        n = self.config.n_frames
        total = n + _MAX_LAG
        latents = np.stack(
            [
                lfilter(
                    [1.0],
                    [1.0, -2.0 * _RESONATOR_RADIUS * np.cos(w), _RESONATOR_RADIUS**2],
                    self.rng.normal(size=total),
                )
                for w in self.omegas
            ]
        )
        latents = _standardize(latents)
        mixed = mixing @ latents
        shared = np.stack([mixed[c, _MAX_LAG - lag : _MAX_LAG - lag + n] for c, lag in enumerate(self.lags)])
        private = lfilter([1.0], [1.0, -_PRIVATE_POLE], self.rng.normal(size=(N_CHANNELS, total)), axis=1)[:, _MAX_LAG:]
        channels = np.sqrt(coupling) * _standardize(shared) + np.sqrt(1.0 - coupling) * _standardize(private)
        channels = channels + self.config.noise_sd * self.rng.normal(size=channels.shape)
        return channels * self.channel_scale[:, None] + self.channel_offset[:, None]

    def ssl_windows(self, coupling: float) -> np.ndarray:
        params = np.array([2.0 * coupling, (2.0 * coupling) ** 2])
        noise = self.config.noise_sd * self.rng.normal(size=(self.config.ssl_windows, self.config.ssl_dim))
        return params @ self.projection + noise


def synth_dataset(config: SyntheticConfig, out_dir: str | Path) -> tuple[Manifest, Path]:
    """
    Generate a synthetic corpus and its manifest on disk.

    Layout under out_dir: tv/<subject>/<session>/seg_NNN.fmat ([8 x N] channels),
    ssl/<subject>/<session>/seg_NNN.fmat ([W x ssl_dim] windows) and manifest.json.
    Identical config and seed produce byte-identical files.

    Args:
        config: Corpus configuration
        out_dir: Output directory (created if needed)

    Returns:
        Tuple of (validated manifest, manifest path)

    Raises:
        DataError: If the output directory is not writable
    """
    root = Path(out_dir)
    generator = _CorpusGenerator(config)
    lo, hi = config.severity_range
    sessions: list[Session] = []
    try:
        root.mkdir(parents=True, exist_ok=True)
        for subject_index in range(config.n_subjects):
            subject_id = f"S{subject_index:03d}"
            mixing = generator.subject_mixing()
            base = generator.rng.uniform(lo, hi)
            for session_index in range(config.sessions_per_subject):
                session_id = f"sess{session_index:02d}"
                severity = generator.session_severity(base)
                coupling = coupling_strength(severity, config.coupling_gain)
                refs = []
                for segment_index in range(config.segments_per_session):
                    rel = Path(subject_id) / session_id / f"seg_{segment_index:03d}.fmat"
                    write_fmat(
                        root / "tv" / rel,
                        generator.tv_segment(mixing, coupling),
                        {
                            "frame_rate": config.frame_rate,
                            "channels": list(CHANNEL_NAMES),
                            "subject_id": subject_id,
                            "session_id": session_id,
                            "segment_index": segment_index,
                        },
                    )
                    write_fmat(
                        root / "ssl" / rel,
                        generator.ssl_windows(coupling),
                        {"source": f"synthetic-ssl-{config.ssl_dim}"},
                    )
                    refs.append(
                        SegmentRef(
                            index=segment_index,
                            tv_path=(Path("tv") / rel).as_posix(),
                            ssl_path=(Path("ssl") / rel).as_posix(),
                        )
                    )
                sessions.append(
                    Session(subject_id=subject_id, session_id=session_id, severity=severity, segments=refs)
                )
        manifest = Manifest(sessions=sessions, root=root, frame_rate=config.frame_rate)
        manifest_path = save_manifest(manifest, root / MANIFEST_NAME)
    except OSError as e:
        raise DataError("Cannot write synthetic corpus", f"{root}: {e}") from e
    logger.info(
        f"Synthesized {len(sessions)} sessions ({manifest.n_segments} segments) "
        f"for {config.n_subjects} subjects into {root}"
    )
    return manifest, manifest_path
