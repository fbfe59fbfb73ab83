"""Single-file checkpoint container.

Layout::

    8 bytes   magic  b"PLCKPT01"
    8 bytes   little-endian uint64 length L of the JSON manifest
    L bytes   UTF-8 JSON: {"format", "version", "metadata", "arrays": [{"name", "shape", "offset", "nbytes"}]}
    ...       concatenated little-endian float64 blobs, offsets relative to blob start

Round trips are bit-exact.
"""

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import IngestionError

MAGIC = b"PLCKPT01"
FORMAT = "pseudoloc-checkpoint"
VERSION = 1


def save_checkpoint(path, arrays, metadata=None):
    path = Path(path)
    entries, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(np.shape(arr)), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    manifest = json.dumps(
        {"format": FORMAT, "version": VERSION, "metadata": metadata or {}, "arrays": entries},
        sort_keys=True,
    ).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(manifest)))
        f.write(manifest)
        for raw in blobs:
            f.write(raw)
    tmp.replace(path)
    return path


def load_checkpoint(path):
    """Returns ``(arrays, metadata)``."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise IngestionError(path, f"cannot read checkpoint: {exc}") from exc
    if buf[:8] != MAGIC:
        raise IngestionError(path, "not a checkpoint file (bad magic)")
    (n,) = struct.unpack("<Q", buf[8:16])
    try:
        manifest = json.loads(buf[16 : 16 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IngestionError(path, f"corrupt manifest: {exc}") from exc
    if manifest.get("format") != FORMAT or manifest.get("version") != VERSION:
        raise IngestionError(path, f"unsupported container {manifest.get('format')} v{manifest.get('version')}")
    base = 16 + n
    arrays = {}
    for e in manifest["arrays"]:
        start = base + e["offset"]
        chunk = buf[start : start + e["nbytes"]]
        if len(chunk) != e["nbytes"]:
            raise IngestionError(path, f"truncated blob for {e['name']}")
        arrays[e["name"]] = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(e["shape"])
    return arrays, manifest["metadata"]
