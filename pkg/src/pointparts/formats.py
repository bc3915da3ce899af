"""On-disk formats: the FTNS tensor container, the points text file, and
debug images.

FTNS layout, all little-endian:
    bytes 0..3   magic b"FTNS"
    bytes 4..5   version, u16 (currently 1)
    bytes 6..7   rank, u16 (at most 4)
    then rank    u32 dimension sizes
    then         row-major float32 payload, exactly 4 * prod(dims) bytes

Points files are whitespace-separated text, one point per line, '#' starts
a comment. Columns are "x y z", optionally followed by "r g b" in [0, 1]
and/or a positive integer part label, and every data line must use the same
column count (3, 4, 6 or 7). Floats are written with repr precision so a
write/read round trip reproduces them exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterator, Tuple

import numpy as np

from .cloud import PointCloud
from .errors import InvalidArgumentError, InvalidInputError

FTNS_MAGIC = b"FTNS"
FTNS_VERSION = 1
FTNS_MAX_RANK = 4


def write_ftns(path, array: np.ndarray) -> None:
    arr = np.asarray(array)
    if arr.ndim < 1 or arr.ndim > FTNS_MAX_RANK:
        raise InvalidArgumentError(f"FTNS rank must be 1..{FTNS_MAX_RANK}, got {arr.ndim}")
    payload = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(FTNS_MAGIC)
        fh.write(struct.pack("<HH", FTNS_VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(payload.tobytes())


def _read_header(fh, path) -> Tuple[int, ...]:
    head = fh.read(8)
    if len(head) != 8 or head[:4] != FTNS_MAGIC:
        raise InvalidInputError(f"{path}: not an FTNS file (bad magic)")
    version, rank = struct.unpack("<HH", head[4:])
    if version != FTNS_VERSION:
        raise InvalidInputError(f"{path}: unsupported FTNS version {version}")
    if not 1 <= rank <= FTNS_MAX_RANK:
        raise InvalidInputError(f"{path}: FTNS rank {rank} out of range")
    raw = fh.read(4 * rank)
    if len(raw) != 4 * rank:
        raise InvalidInputError(f"{path}: truncated FTNS dimension list")
    return struct.unpack(f"<{rank}I", raw)


def read_ftns(path) -> np.ndarray:
    """Read a whole FTNS tensor as float32."""
    with open(path, "rb") as fh:
        dims = _read_header(fh, path)
        count = int(np.prod(dims))
        data = fh.read(4 * count)
        if len(data) != 4 * count:
            raise InvalidInputError(f"{path}: payload is {len(data)} bytes, expected {4 * count}")
        if fh.read(1):
            raise InvalidInputError(f"{path}: trailing bytes after payload")
    return np.frombuffer(data, dtype="<f4").reshape(dims).copy()


def validate_ftns(path) -> Tuple[int, ...]:
    """Check structure without loading the payload; returns the dims."""
    p = Path(path)
    with open(p, "rb") as fh:
        dims = _read_header(fh, p)
        expected = 4 * int(np.prod(dims))
        fh.seek(0, 2)
        actual = fh.tell() - (8 + 4 * len(dims))
        if actual != expected:
            raise InvalidInputError(f"{p}: payload is {actual} bytes, expected {expected}")
    return dims


def iter_ftns_first_axis(path) -> Iterator[np.ndarray]:
    """Yield slices along the first axis one at a time (constant memory)."""
    with open(path, "rb") as fh:
        dims = _read_header(fh, path)
        slice_count = int(np.prod(dims[1:])) if len(dims) > 1 else 1
        for _ in range(dims[0]):
            raw = fh.read(4 * slice_count)
            if len(raw) != 4 * slice_count:
                raise InvalidInputError(f"{path}: truncated payload")
            yield np.frombuffer(raw, dtype="<f4").reshape(dims[1:]).copy()


def read_points(path) -> PointCloud:
    """Parse a points text file into a PointCloud."""
    positions, colors, labels = [], [], []
    ncols = None
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            cols = body.split()
            if ncols is None:
                ncols = len(cols)
                if ncols not in (3, 4, 6, 7):
                    raise InvalidInputError(
                        f"{path}:{lineno}: {ncols} columns; expected x y z [r g b] [label]"
                    )
            elif len(cols) != ncols:
                raise InvalidInputError(
                    f"{path}:{lineno}: {len(cols)} columns, previous lines had {ncols}"
                )
            try:
                vals = [float(c) for c in cols]
            except ValueError:
                raise InvalidInputError(f"{path}:{lineno}: non-numeric field") from None
            positions.append(vals[:3])
            if ncols in (6, 7):
                colors.append(vals[3:6])
            if ncols in (4, 7):
                label = vals[-1]
                if label != int(label) or label < 1:
                    raise InvalidInputError(
                        f"{path}:{lineno}: label must be a positive integer, got {cols[-1]}"
                    )
                labels.append(int(label))
    if not positions:
        raise InvalidInputError(f"{path}: no points")
    return PointCloud(
        positions=np.array(positions),
        colors=np.array(colors) if colors else None,
        gt_labels=np.array(labels, dtype=np.int64) if labels else None,
    )


def write_points(path, pc: PointCloud) -> None:
    with open(path, "w") as fh:
        for i in range(pc.n_points):
            parts = [repr(float(v)) for v in pc.positions[i]]
            if pc.colors is not None:
                parts += [repr(float(v)) for v in pc.colors[i]]
            if pc.gt_labels is not None:
                parts.append(str(int(pc.gt_labels[i])))
            fh.write(" ".join(parts) + "\n")


def write_pgm(path, image01: np.ndarray) -> None:
    """Binary PGM (P5, maxval 255) from an (H, W) image in [0, 1]."""
    img = np.asarray(image01, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidArgumentError(f"PGM needs an (H, W) image, got {img.shape}")
    data = np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_ppm(path, image01: np.ndarray) -> None:
    """Binary PPM (P6, maxval 255) from an (H, W, 3) image in [0, 1]."""
    img = np.asarray(image01, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidArgumentError(f"PPM needs an (H, W, 3) image, got {img.shape}")
    data = np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
