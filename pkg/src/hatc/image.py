"""8-bit grayscale images: validation, PGM I/O and PSNR."""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import MalformedPayload

# Identical images report this instead of infinity so CSV stays finite.
PSNR_CAP_DB = 99.0


def as_image(a) -> np.ndarray:
    """Validate and normalize an array to a 2D uint8 image."""
    img = np.asarray(a)
    if img.ndim != 2:
        raise ValueError(f"expected 2D grayscale array, got shape {img.shape}")
    if img.dtype != np.uint8:
        if np.issubdtype(img.dtype, np.integer) and img.min() >= 0 and img.max() <= 255:
            img = img.astype(np.uint8)
        else:
            raise ValueError(f"expected uint8 samples, got dtype {img.dtype}")
    return img


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB, capped at PSNR_CAP_DB for equal inputs."""
    a = as_image(a)
    b = as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.int64) - b.astype(np.int64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(255.0 * 255.0 / mse))


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM file."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise MalformedPayload(f"{path}: not a binary PGM (P5) file")
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed between tokens.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in fields)
    except ValueError as exc:
        raise MalformedPayload(f"{path}: bad PGM header") from exc
    if maxval != 255:
        raise MalformedPayload(f"{path}: only maxval 255 supported, got {maxval}")
    n = width * height
    body = data[pos : pos + n]
    if len(body) != n:
        raise MalformedPayload(f"{path}: truncated PGM body")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)


def write_pgm(path, image) -> None:
    """Write a binary (P5) 8-bit PGM file atomically (temp + rename)."""
    img = as_image(image)
    h, w = img.shape
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())
    os.replace(tmp, path)
