"""ZTEB: a bit-exact binary container for embedding tensors.

Layout (all integers little-endian):

    bytes 0-3   magic "ZTEB"
    bytes 4-5   format version, u16 (currently 1)
    byte  6     dtype tag, u8 (1 = 32-bit IEEE float)
    byte  7     rank, u8
    next 8*rank shape, u64 per dimension
    rest        payload: row-major float32 values, product(shape) of them

Embedding rows (the last axis) must be unit-norm within 1e-3; the loader
enforces this so downstream code can rely on it.  Computation happens in
float64; only the payload is 32-bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"ZTEB"
VERSION = 1
DTYPE_FLOAT32 = 1
FILE_NORM_ATOL = 1e-3

_MAX_RANK = 8


class ZtebFormatError(ValueError):
    """A file violates the ZTEB container format."""


def header_size(rank: int) -> int:
    return 8 + 8 * rank


def write_embedding_file(array: np.ndarray, path) -> None:
    """Write a tensor as a ZTEB file (payload cast to little-endian float32)."""
    arr = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite values")
    if not 1 <= arr.ndim <= _MAX_RANK:
        raise ValueError(f"rank must be in [1, {_MAX_RANK}], got {arr.ndim}")
    payload = np.ascontiguousarray(arr, dtype="<f4")
    header = struct.pack("<4sHBB", MAGIC, VERSION, DTYPE_FLOAT32, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    Path(path).write_bytes(header + payload.tobytes())


def _parse_header(blob: bytes, path) -> tuple[tuple[int, ...], int]:
    """Validate the fixed header and return (shape, payload offset)."""
    if len(blob) < 8:
        raise ZtebFormatError(f"{path}: file too short for a ZTEB header ({len(blob)} bytes)")
    magic, version, dtype_tag, rank = struct.unpack_from("<4sHBB", blob, 0)
    if magic != MAGIC:
        raise ZtebFormatError(f"{path}: bad magic {magic!r} at offset 0, expected {MAGIC!r}")
    if version != VERSION:
        raise ZtebFormatError(f"{path}: unsupported format version {version}, expected {VERSION}")
    if dtype_tag != DTYPE_FLOAT32:
        raise ZtebFormatError(f"{path}: unsupported dtype tag {dtype_tag}, expected {DTYPE_FLOAT32}")
    if not 1 <= rank <= _MAX_RANK:
        raise ZtebFormatError(f"{path}: rank {rank} outside [1, {_MAX_RANK}]")
    if len(blob) < header_size(rank):
        raise ZtebFormatError(f"{path}: truncated header (rank {rank})")
    shape = struct.unpack_from(f"<{rank}Q", blob, 8)
    return shape, header_size(rank)


def _check_norms(arr: np.ndarray, path) -> None:
    rows = arr.reshape(-1, arr.shape[-1]) if arr.ndim > 1 else arr.reshape(1, -1)
    norms = np.linalg.norm(rows, axis=1)
    bad = np.abs(norms - 1.0) > FILE_NORM_ATOL
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise ZtebFormatError(
            f"{path}: row {idx} has L2 norm {norms[idx]:.6g}, "
            f"expected 1 within {FILE_NORM_ATOL:g}"
        )


def read_embedding_file(path, check_norm: bool = True) -> np.ndarray:
    """Read a whole ZTEB file into a float64 tensor.

    Raises :class:`ZtebFormatError` on bad magic, version or dtype mismatch,
    payload length disagreements, non-finite values, or (when ``check_norm``)
    rows that are not unit-norm.
    """
    blob = Path(path).read_bytes()
    shape, start = _parse_header(blob, path)
    count = int(np.prod(shape, dtype=np.int64)) if shape else 0
    expected = count * 4
    actual = len(blob) - start
    if actual != expected:
        kind = "truncated" if actual < expected else "oversized"
        raise ZtebFormatError(
            f"{path}: {kind} payload: shape {tuple(shape)} needs {expected} bytes, found {actual}"
        )
    arr = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
    arr = arr.reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ZtebFormatError(f"{path}: payload contains non-finite values")
    if check_norm:
        _check_norms(arr, path)
    return arr


def read_block(path, offset: int, rows: int, dim: int, check_norm: bool = True) -> np.ndarray:
    """Read one (rows, dim) float32 block at a byte offset inside a ZTEB file.

    The file header is validated and the requested range must fall inside
    the payload on a 4-byte boundary relative to its start.
    """
    blob = Path(path).read_bytes()
    shape, start = _parse_header(blob, path)
    count = int(np.prod(shape, dtype=np.int64))
    payload_end = start + count * 4
    if len(blob) - start != count * 4:
        raise ZtebFormatError(
            f"{path}: payload length {len(blob) - start} disagrees with shape {tuple(shape)}"
        )
    nbytes = rows * dim * 4
    if offset < start or offset + nbytes > payload_end or (offset - start) % 4 != 0:
        raise ZtebFormatError(
            f"{path}: block [{offset}, {offset + nbytes}) outside payload "
            f"[{start}, {payload_end}) or misaligned"
        )
    arr = np.frombuffer(blob, dtype="<f4", count=rows * dim, offset=offset)
    arr = arr.reshape(rows, dim).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise ZtebFormatError(f"{path}: block at offset {offset} contains non-finite values")
    if check_norm:
        _check_norms(arr, path)
    return arr


def block_offset(outer_index: int, rows: int, dim: int, rank: int = 3) -> int:
    """Byte offset of block ``outer_index`` in a (S, rows, dim) ZTEB tensor."""
    return header_size(rank) + outer_index * rows * dim * 4
