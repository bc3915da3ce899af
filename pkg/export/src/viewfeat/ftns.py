"""Minimal FTNS tensor writer/reader.

Wire format (little-endian): magic "FTNS", u16 version = 1, u16 rank <= 4,
rank u32 dims, row-major float32 payload. Kept self-contained so this
package only touches the consumer through files.
"""

import struct

import numpy as np

MAGIC = b"FTNS"
VERSION = 1


def write(path, array):
    arr = np.asarray(array)
    if not 1 <= arr.ndim <= 4:
        raise ValueError(f"FTNS rank must be 1..4, got {arr.ndim}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HH", VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read(path):
    with open(path, "rb") as fh:
        head = fh.read(8)
        if len(head) != 8 or head[:4] != MAGIC:
            raise ValueError(f"{path}: not an FTNS file")
        version, rank = struct.unpack("<HH", head[4:])
        if version != VERSION or not 1 <= rank <= 4:
            raise ValueError(f"{path}: unsupported header (version {version}, rank {rank})")
        dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
        data = fh.read(4 * int(np.prod(dims)))
    return np.frombuffer(data, dtype="<f4").reshape(dims).copy()
