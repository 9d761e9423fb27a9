"""
Tensor checkpoint container.

Layout (all integers little-endian):

    8 bytes   magic  b"MIALAB01"
    8 bytes   uint64 header length H
    H bytes   UTF-8 JSON header:
              {"metadata": {...},
               "tensors": [{"name", "shape", "dtype", "offset", "nbytes"}, ...]}
    payload   concatenated tensors, offsets relative to the payload start

Tensors are float64 ("<f8") or int64 ("<i8").
"""

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from modules.mialab.core.exceptions import CheckpointError
from modules.mialab.core.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"MIALAB01"
_SUPPORTED = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def _canonical(array: NDArray[Any]) -> NDArray[Any]:
    arr = np.asarray(array)
    if np.issubdtype(arr.dtype, np.integer) or arr.dtype == np.bool_:
        return np.ascontiguousarray(arr, dtype="<i8")
    return np.ascontiguousarray(arr, dtype="<f8")


def save_checkpoint(
    path: str | Path,
    tensors: dict[str, NDArray[Any]],
    metadata: dict[str, Any] | None = None,
) -> Path:
    """Write tensors in sorted name order. Returns the written path."""
    path = Path(path)
    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = _canonical(tensors[name])
        blob = arr.tobytes(order="C")
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": arr.dtype.str,
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)

    header = json.dumps(
        {"metadata": metadata or {}, "tensors": entries}, sort_keys=True
    ).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)

    logger.debug("Checkpoint written", extra={"path": str(path), "tensors": len(entries)})
    return path


def load_checkpoint(path: str | Path) -> tuple[dict[str, NDArray[Any]], dict[str, Any]]:
    """
    Read a checkpoint container.

    Raises:
        CheckpointError: Wrong magic, truncated file or inconsistent header.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    if len(data) < 16 or data[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint container")
    (header_len,) = struct.unpack("<Q", data[8:16])
    payload_start = 16 + header_len
    if payload_start > len(data):
        raise CheckpointError(f"{path}: header truncated")
    try:
        header = json.loads(data[16:payload_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header") from e

    tensors: dict[str, NDArray[Any]] = {}
    for entry in header.get("tensors", []):
        dtype = _SUPPORTED.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"{path}: unsupported dtype {entry['dtype']!r}")
        start = payload_start + int(entry["offset"])
        end = start + int(entry["nbytes"])
        if end > len(data):
            raise CheckpointError(f"{path}: tensor {entry['name']!r} truncated")
        shape = tuple(int(s) for s in entry["shape"])
        arr = np.frombuffer(data[start:end], dtype=dtype)
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(f"{path}: tensor {entry['name']!r} has wrong size")
        tensors[entry["name"]] = arr.reshape(shape).astype(dtype.newbyteorder("="), copy=True)
    return tensors, header.get("metadata", {})
