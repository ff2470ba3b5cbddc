"""
Flat binary container used for checkpoints and motion files.

Byte layout (all integers little-endian):

    offset 0   8 bytes   magic, e.g. b"MCMCKPT1" or b"MCMMOTN1"
    offset 8   4 bytes   uint32 header length H
    offset 12  H bytes   UTF-8 JSON header
    offset 12+H          payload: concatenated float64 ('<f8') arrays

The header is
    {"format_version": 1, "kind": ..., "config_hash": ..., "seed": ...,
     "meta": {...}, "entries": [{"name", "shape", "offset", "nbytes"}, ...]}
with entry offsets relative to the start of the payload. Entries are written
in sorted name order so equal content gives equal bytes.
"""

import json
import os
import struct
import tempfile
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import DataError

FORMAT_VERSION = 1
CHECKPOINT_MAGIC = b"MCMCKPT1"
MOTION_MAGIC = b"MCMMOTN1"
DATASET_MAGIC = b"MCMDATA1"


def encode_arrays(arrays: Dict[str, np.ndarray]) -> Tuple[list, bytes]:
    """Serialize named arrays into (entries, payload) in sorted name order"""
    entries = []
    chunks = []
    offset = 0
    for name in sorted(arrays):
        data = np.ascontiguousarray(arrays[name], dtype="<f8")
        raw = data.tobytes()
        entries.append({"name": name, "shape": list(data.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    return entries, b"".join(chunks)


def to_bytes(
    magic: bytes,
    arrays: Dict[str, np.ndarray],
    kind: str,
    config_hash: str = "",
    seed: Optional[int] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> bytes:
    entries, payload = encode_arrays(arrays)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config_hash": config_hash,
        "seed": seed,
        "meta": meta or {},
        "entries": entries,
    }
    header_raw = json.dumps(header, sort_keys=True).encode("utf-8")
    return magic + struct.pack("<I", len(header_raw)) + header_raw + payload


def from_bytes(raw: bytes, magic: bytes) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    if len(raw) < 12 or raw[:8] != magic:
        raise DataError(f"Not a {magic.decode()} container")
    (header_len,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"Corrupt container header: {e}") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(f"Unsupported container version {header.get('format_version')}")

    payload = raw[12 + header_len:]
    arrays = {}
    for entry in header["entries"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(payload):
            raise DataError(f"Truncated payload for entry '{entry['name']}'")
        flat = np.frombuffer(payload[start:start + nbytes], dtype="<f8").astype(np.float64)
        arrays[entry["name"]] = flat.reshape(entry["shape"])
    return header, arrays


def atomic_write_bytes(path: str, raw: bytes) -> None:
    """Write via a temp file in the target directory, then rename over the target"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(raw)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_container(path: str, magic: bytes, arrays: Dict[str, np.ndarray], kind: str, **header_fields) -> None:
    atomic_write_bytes(path, to_bytes(magic, arrays, kind, **header_fields))


def read_container(path: str, magic: bytes) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    if not os.path.exists(path):
        raise DataError(f"File not found: {path}")
    with open(path, "rb") as f:
        return from_bytes(f.read(), magic)
