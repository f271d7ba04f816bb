"""Writers for the ZTEB wire format and the dataset manifest.

Self-contained on purpose: the exporter couples to the evaluation side only
through these on-disk formats, never through its code.

ZTEB layout (little-endian): magic "ZTEB", version u16 (=1), dtype tag u8
(1 = float32), rank u8, rank x u64 shape, then the row-major float32
payload.  Embedding rows must be unit-norm; readers validate within 1e-3.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ZTEB"
VERSION = 1
DTYPE_FLOAT32 = 1


def header_size(rank: int) -> int:
    return 8 + 8 * rank


def write_zteb(array: np.ndarray, path) -> None:
    arr = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite values")
    payload = np.ascontiguousarray(arr, dtype="<f4")
    header = struct.pack("<4sHBB", MAGIC, VERSION, DTYPE_FLOAT32, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    Path(path).write_bytes(header + payload.tobytes())


def view_block_offset(sample_index: int, n_views: int, dim: int) -> int:
    """Byte offset of one sample's (n_views, dim) block in a (S, N, D) file."""
    return header_size(3) + sample_index * n_views * dim * 4


def write_manifest(path, *, dataset: str, class_names: list[str], temperature: float,
                   n_views: int, samples: list[dict], text_files: list[str],
                   provenance: dict) -> None:
    doc = dict(provenance)
    doc.update({
        "dataset": dataset,
        "n_classes": len(class_names),
        "class_names": list(class_names),
        "temperature": temperature,
        "n_views": n_views,
        "samples": samples,
        "text_embeddings": list(text_files),
    })
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
