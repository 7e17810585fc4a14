"""Flat binary container: JSON header + raw little-endian array payload.

Used for calibration datasets and model checkpoints. The layout is
deterministic (no archive timestamps), so identical content yields
identical bytes:

    magic "NLBIN1\\n" | u32 header length | header JSON (utf-8) | payload

The header carries a manifest of (name, shape, dtype) in payload order
plus arbitrary user metadata under "meta".
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"NLBIN1\n"


def write_container(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    manifest = []
    payload = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        dtype = arr.dtype.newbyteorder("<")
        manifest.append({"name": name, "shape": list(arr.shape),
                         "dtype": dtype.str})
        payload.append(arr.astype(dtype, copy=False).tobytes())
    header = json.dumps({"manifest": manifest, "meta": meta},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for chunk in payload:
            fh.write(chunk)


def read_container(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a needlelab container")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["manifest"]:
            dtype = np.dtype(entry["dtype"])
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            data = fh.read(count * dtype.itemsize)
            arrays[entry["name"]] = np.frombuffer(
                data, dtype=dtype).reshape(entry["shape"]).copy()
    return arrays, header["meta"]
