"""Deterministic binary checkpoints.

Layout: magic ``CMCK``, a little-endian u32 format version, a u64 header
length, a canonical-JSON header (sorted keys, fixed separators), then the
raw little-endian float64 tensor payloads in header order.  Unlike zip
containers there are no timestamps, so saving identical state twice gives
identical bytes, which the rerun guarantees in the harness depend on.
"""

import json
import struct

import numpy as np

from camarl.errors import ConfigurationError

_MAGIC = b"CMCK"
_VERSION = 1


def save_checkpoint(path, arrays, meta=None):
    """Write named float64 arrays plus a JSON-serializable meta dict.

    The substrate version is always recorded in the header.
    """
    from camarl import SUBSTRATE_VERSION

    names = list(arrays.keys())
    full_meta = {"substrate_version": SUBSTRATE_VERSION}
    full_meta.update(meta or {})
    header = {
        "version": _VERSION,
        "meta": full_meta,
        "tensors": [{"name": n, "shape": list(np.asarray(arrays[n]).shape)}
                    for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for n in names:
            a = np.ascontiguousarray(np.asarray(arrays[n], dtype="<f8"))
            f.write(a.tobytes())


def load_checkpoint(path):
    """Read a checkpoint, returning (arrays, meta)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != _MAGIC:
        raise ConfigurationError(f"{path} is not a checkpoint file")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != _VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {version}")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + hlen].decode("utf-8"))
    arrays = {}
    off = 16 + hlen
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = off + 8 * count
        if end > len(raw):
            raise ConfigurationError(f"{path} is truncated")
        arrays[spec["name"]] = np.frombuffer(
            raw[off:end], dtype="<f8").astype(np.float64).reshape(shape)
        off = end
    return arrays, header.get("meta", {})
