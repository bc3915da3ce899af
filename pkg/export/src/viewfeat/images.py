"""Image loading: binary PGM/PPM natively, anything else through pillow."""

import numpy as np


def _read_pnm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P5", b"P6"):
        return None
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    channels = 1 if data[:2] == b"P5" else 3
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * channels, offset=pos)
    img = pixels.reshape(height, width, channels).astype(np.float64) / maxval
    return img[:, :, 0] if channels == 1 else img


def load_image(path):
    """Return an (H, W) or (H, W, 3) float image in [0, 1]."""
    img = _read_pnm(path)
    if img is not None:
        return img
    try:
        from PIL import Image
    except ImportError:
        raise ValueError(f"{path}: not a PGM/PPM file and pillow is unavailable") from None
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return arr


def to_gray(img):
    if img.ndim == 2:
        return img
    return img @ np.array([0.299, 0.587, 0.114])
