"""
Checkpoint container for parameter sets.

Layout (all integers little-endian):

    magic     4 bytes  b"FCKP"
    version   u32      1
    json_len  u32
    metadata  json_len bytes of UTF-8 JSON
    then, for every parameter in declared order:
        length u64
        FMAT-encoded array (length bytes)

The metadata object always carries "names", "shapes", "optimizer", "epoch",
"seed" and "extra" (model-specific settings).
"""

# Python imports
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import msgspec
import numpy as np
from loguru import logger

# Local imports
from ..embeddings.fmat import decode_fmat, encode_fmat
from ..exceptions import CheckpointError, FormatError
from .parameters import ParameterSet

CHECKPOINT_MAGIC = b"FCKP"
CHECKPOINT_VERSION = 1

_HEADER = struct.Struct("<4sII")
_LENGTH = struct.Struct("<Q")


@dataclass
class Checkpoint:
    """
    Decoded checkpoint.

    Attributes:
        arrays: Parameter arrays in declared order
        optimizer: Optimizer hyperparameters (empty when not saved from training)
        epoch: Epoch the parameters were taken from
        seed: Seed of the run
        extra: Model-specific metadata
    """

    arrays: dict[str, np.ndarray]
    optimizer: dict[str, Any] = field(default_factory=dict)
    epoch: int = 0
    seed: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def load_into(self, params: ParameterSet) -> None:
        """Copy the stored arrays into a parameter set with the same names and shapes."""
        params.load_state_dict(self.arrays)


def encode_checkpoint(
    arrays: dict[str, np.ndarray],
    optimizer: dict[str, Any] | None = None,
    epoch: int = 0,
    seed: int = 0,
    extra: dict[str, Any] | None = None,
) -> bytes:
    """Encode named arrays and metadata as checkpoint bytes."""
    names = list(arrays)
    metadata = {
        "names": names,
        "shapes": [list(np.shape(arrays[name])) for name in names],
        "optimizer": optimizer or {},
        "epoch": epoch,
        "seed": seed,
        "extra": extra or {},
    }
    meta = msgspec.json.encode(metadata)
    parts = [_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(meta)), meta]
    for name in names:
        blob = encode_fmat(np.asarray(arrays[name], dtype=np.float64))
        parts.append(_LENGTH.pack(len(blob)))
        parts.append(blob)
    return b"".join(parts)


def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    Decode checkpoint bytes.

    Raises:
        CheckpointError: On a bad header, truncation or inconsistent metadata
    """
    if len(data) < _HEADER.size:
        raise CheckpointError("Truncated checkpoint header", f"expected {_HEADER.size} bytes, got {len(data)}")
    magic, version, meta_len = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError("Bad checkpoint magic", repr(magic))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError("Unsupported checkpoint version", str(version))
    offset = _HEADER.size
    if len(data) < offset + meta_len:
        raise CheckpointError("Truncated checkpoint metadata", f"expected {offset + meta_len} bytes, got {len(data)}")
    try:
        metadata = msgspec.json.decode(data[offset : offset + meta_len])
    except msgspec.DecodeError as e:
        raise CheckpointError("Malformed checkpoint metadata", str(e)) from e
    offset += meta_len
    names: list[str] = metadata.get("names", [])
    shapes: list[list[int]] = metadata.get("shapes", [])
    if len(names) != len(shapes):
        raise CheckpointError("Checkpoint names and shapes differ in length", f"{len(names)} vs {len(shapes)}")
    arrays: dict[str, np.ndarray] = {}
    for name, shape in zip(names, shapes, strict=True):
        if len(data) < offset + _LENGTH.size:
            raise CheckpointError("Truncated checkpoint", f"missing length of {name}")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        if len(data) < offset + length:
            raise CheckpointError("Truncated checkpoint", f"{name}: expected {length} bytes, got {len(data) - offset}")
        try:
            array, _ = decode_fmat(data[offset : offset + length])
        except FormatError as e:
            raise CheckpointError(f"Corrupt array {name}", str(e)) from e
        if list(array.shape) != list(shape):
            raise CheckpointError("Checkpoint shape mismatch", f"{name}: {array.shape} vs {shape}")
        arrays[name] = array
        offset += length
    return Checkpoint(
        arrays=arrays,
        optimizer=metadata.get("optimizer", {}),
        epoch=int(metadata.get("epoch", 0)),
        seed=int(metadata.get("seed", 0)),
        extra=metadata.get("extra", {}),
    )


def save_checkpoint(
    path: str | Path,
    params: ParameterSet,
    optimizer: dict[str, Any] | None = None,
    epoch: int = 0,
    seed: int = 0,
    extra: dict[str, Any] | None = None,
) -> Path:
    """Write a parameter set to a checkpoint file, creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_checkpoint(params.state_dict(), optimizer, epoch, seed, extra))
    logger.debug(f"Saved checkpoint with {len(params)} parameters to {target}")
    return target


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Read a checkpoint file.

    Raises:
        CheckpointError: If the file is missing or malformed
    """
    source = Path(path)
    if not source.is_file():
        raise CheckpointError("Checkpoint not found", str(source))
    return decode_checkpoint(source.read_bytes())
