"""
FMAT matrix file format and CSV matrix IO.

FMAT layout (all integers little-endian):

    magic     4 bytes  b"FMAT"
    version   u32      1
    dtype     u8       1 = float32, 2 = float64
    ndim      u32
    dims      ndim x u64
    payload   row-major little-endian values
    meta_len  u32
    metadata  meta_len bytes of UTF-8 JSON (an object)
"""

# Python imports
from __future__ import annotations

import struct
from pathlib import Path
from typing import Any

import msgspec
import numpy as np

# Local imports
from ..exceptions import (
    BadMagicError,
    DataError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    UnsupportedVersionError,
)

FMAT_MAGIC = b"FMAT"
FMAT_VERSION = 1

_DTYPE_CODES: dict[int, np.dtype] = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
}

_HEADER = struct.Struct("<4sIBI")


def encode_fmat(matrix: np.ndarray, metadata: dict[str, Any] | None = None) -> bytes:
    """
    Encode an array as FMAT bytes.

    Args:
        matrix: float32 or float64 array of any rank
        metadata: JSON-serializable mapping stored after the payload

    Returns:
        Encoded file contents

    Raises:
        UnsupportedDtypeError: If the array is not float32/float64
    """
    array = np.asarray(matrix)
    code = next((c for c, d in _DTYPE_CODES.items() if d == array.dtype), None)
    if code is None:
        raise UnsupportedDtypeError("Unsupported dtype", f"{array.dtype} (expected float32 or float64)")
    dtype = _DTYPE_CODES[code]
    meta = msgspec.json.encode(metadata or {})
    parts = [
        _HEADER.pack(FMAT_MAGIC, FMAT_VERSION, code, array.ndim),
        struct.pack(f"<{array.ndim}Q", *array.shape),
        np.ascontiguousarray(array, dtype=dtype).tobytes(order="C"),
        struct.pack("<I", len(meta)),
        meta,
    ]
    return b"".join(parts)


def decode_fmat(data: bytes) -> tuple[np.ndarray, dict[str, Any]]:
    """
    Decode FMAT bytes.

    Args:
        data: Encoded file contents

    Returns:
        Tuple of (array, metadata)

    Raises:
        BadMagicError: If the magic bytes are wrong
        UnsupportedVersionError: If the version is not 1
        UnsupportedDtypeError: If the dtype code is unknown
        TruncatedPayloadError: If the data ends early (with expected/actual byte counts)
    """
    magic = bytes(data[: len(FMAT_MAGIC)])
    if magic != FMAT_MAGIC:
        raise BadMagicError("bad magic", f"expected {FMAT_MAGIC!r}, got {magic!r}")
    _require(data, _HEADER.size, "header")
    _, version, code, ndim = _HEADER.unpack_from(data, 0)
    if version != FMAT_VERSION:
        raise UnsupportedVersionError("unsupported version", f"expected {FMAT_VERSION}, got {version}")
    dtype = _DTYPE_CODES.get(code)
    if dtype is None:
        raise UnsupportedDtypeError("unsupported dtype code", str(code))
    offset = _HEADER.size
    dims_size = 8 * ndim
    _require(data, offset + dims_size, "dimension table")
    shape = struct.unpack_from(f"<{ndim}Q", data, offset)
    offset += dims_size
    payload_size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    _require(data, offset + payload_size, "payload")
    array = np.frombuffer(data, dtype=dtype, count=payload_size // dtype.itemsize, offset=offset)
    array = array.reshape(shape).copy()
    offset += payload_size
    _require(data, offset + 4, "metadata length")
    (meta_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    _require(data, offset + meta_len, "metadata")
    try:
        metadata = msgspec.json.decode(data[offset : offset + meta_len])
    except msgspec.DecodeError as e:
        raise DataError("invalid FMAT metadata", str(e)) from e
    if not isinstance(metadata, dict):
        raise DataError("invalid FMAT metadata", f"expected a JSON object, got {type(metadata).__name__}")
    return array, metadata


def _require(data: bytes, needed: int, what: str) -> None:
    if len(data) < needed:
        raise TruncatedPayloadError(
            "truncated payload", f"{what}: expected {needed} bytes, got {len(data)}"
        )


def write_fmat(path: str | Path, matrix: np.ndarray, metadata: dict[str, Any] | None = None) -> Path:
    """
    Write an array to an FMAT file, creating parent directories.

    Args:
        path: Destination path
        matrix: float32 or float64 array
        metadata: JSON-serializable mapping

    Returns:
        The written path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_fmat(matrix, metadata))
    return target


def read_fmat(path: str | Path) -> tuple[np.ndarray, dict[str, Any]]:
    """
    Read an FMAT file.

    Args:
        path: Source path

    Returns:
        Tuple of (array, metadata)

    Raises:
        DataError: If the file does not exist
        FormatError: If the file is malformed (see decode_fmat)
    """
    source = Path(path)
    if not source.is_file():
        raise DataError("FMAT file not found", str(source))
    return decode_fmat(source.read_bytes())


def write_matrix_csv(path: str | Path, matrix: np.ndarray, header: list[str]) -> Path:
    """
    Write a 2-D array as CSV: one header row of column names, then one row per frame.

    Values are written with 17 significant digits, so float64 data reads back exactly.

    Args:
        path: Destination path
        matrix: Array of shape [rows x len(header)]
        header: Column names
    """
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != len(header):
        raise DataError("CSV header does not match matrix", f"{len(header)} names for shape {array.shape}")
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(target, array, fmt="%.17g", delimiter=",", header=",".join(header), comments="", encoding="utf-8")
    return target


def read_matrix_csv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """
    Read a CSV matrix written with a header row (rows are frames, columns are channels).

    Args:
        path: Source path

    Returns:
        Tuple of (array [rows x columns], header names)

    Raises:
        DataError: If the file is missing, empty, ragged, or holds non-numeric cells
    """
    source = Path(path)
    if not source.is_file():
        raise DataError("CSV file not found", str(source))
    lines = source.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip():
        raise DataError("Empty CSV matrix", str(source))
    header = [name.strip() for name in lines[0].split(",")]
    body = [line for line in lines[1:] if line.strip()]
    if not body:
        return np.empty((0, len(header)), dtype=np.float64), header
    try:
        values = np.loadtxt(body, dtype=np.float64, delimiter=",", ndmin=2)
    except ValueError as e:
        raise DataError("Malformed CSV matrix", f"{source}: {e}") from e
    if values.shape[1] != len(header):
        raise DataError("CSV rows do not match header", f"{source}: {values.shape[1]} cells for {len(header)} names")
    return values, header


def read_matrix(path: str | Path) -> tuple[np.ndarray, dict[str, Any]]:
    """
    Read a matrix from FMAT or CSV, chosen by file suffix.

    CSV files are returned as stored ([frames x channels]) with their header
    under the "columns" metadata key.
    """
    source = Path(path)
    if source.suffix.lower() == ".csv":
        array, header = read_matrix_csv(source)
        return array, {"columns": header}
    return read_fmat(source)
