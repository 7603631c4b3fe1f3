"""Fixed-rate coding of keypoint locations and scales (the location layer).

Coordinates are packed as fixed-width quarter-pel integers; the scale is an
S-bit code on a logarithmic grid over the detector's pyramid range.
Orientation is not transmitted: it is recomputed from the decoded image.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedPayload
from .features import SIGMA_MAX, SIGMA_MIN, Keypoint

LOCATION_MAGIC = b"HLOC"
DEFAULT_SCALE_BITS = 8


def _coord_bits(side: int) -> int:
    return max(1, math.ceil(math.log2(4 * side)))


def location_rate(count: int, width: int, height: int, scale_bits: int) -> int:
    """Total payload bits for ``count`` keypoints of a width x height image."""
    if width <= 0 or height <= 0 or scale_bits <= 0 or count < 0:
        raise ValueError("bad location-rate arguments")
    return count * (_coord_bits(width) + _coord_bits(height) + scale_bits)


def quantize_scale(scale: float, scale_bits: int) -> int:
    levels = (1 << scale_bits) - 1
    t = (math.log(scale) - math.log(SIGMA_MIN)) / (math.log(SIGMA_MAX) - math.log(SIGMA_MIN))
    return min(levels, max(0, round(t * levels)))


def dequantize_scale(code: int, scale_bits: int) -> float:
    levels = (1 << scale_bits) - 1
    t = code / levels
    return math.exp(math.log(SIGMA_MIN) + t * (math.log(SIGMA_MAX) - math.log(SIGMA_MIN)))


@dataclass
class LocationLayer:
    count: int
    image_width: int
    image_height: int
    scale_bits: int
    payload: bytes  # packed bit string, byte-aligned at the end

    @property
    def payload_bits(self) -> int:
        return location_rate(self.count, self.image_width, self.image_height, self.scale_bits)

    def to_bytes(self) -> bytes:
        return (
            LOCATION_MAGIC
            + struct.pack("<HHHB", self.count, self.image_width, self.image_height, self.scale_bits)
            + self.payload
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "LocationLayer":
        if len(data) < 11 or data[:4] != LOCATION_MAGIC:
            raise MalformedPayload("bad location-layer magic")
        count, w, h, s = struct.unpack_from("<HHHB", data, 4)
        layer = cls(count=count, image_width=w, image_height=h, scale_bits=s, payload=data[11:])
        if len(layer.payload) != (layer.payload_bits + 7) // 8:
            raise MalformedPayload("location payload length mismatch")
        return layer


def encode_locations(
    keypoints: list[Keypoint], width: int, height: int, scale_bits: int = DEFAULT_SCALE_BITS
) -> LocationLayer:
    xbits = _coord_bits(width)
    ybits = _coord_bits(height)
    acc = 0
    nbits = 0
    for kp in keypoints:
        if not (0 <= kp.x_qpel < 4 * width and 0 <= kp.y_qpel < 4 * height):
            raise ValueError(
                f"keypoint out of bounds: ({kp.x_qpel}, {kp.y_qpel}) qpel in {width}x{height}"
            )
        sc = quantize_scale(kp.scale, scale_bits)
        for value, n in ((kp.x_qpel, xbits), (kp.y_qpel, ybits), (sc, scale_bits)):
            acc = (acc << n) | value
            nbits += n
    pad = (-nbits) % 8
    payload = (acc << pad).to_bytes((nbits + pad) // 8, "big") if nbits else b""
    return LocationLayer(
        count=len(keypoints),
        image_width=width,
        image_height=height,
        scale_bits=scale_bits,
        payload=payload,
    )


def decode_locations(layer: LocationLayer) -> list[Keypoint]:
    """Exact quarter-pel coordinates and dequantized scales; orientation and
    response are unset (recomputed downstream)."""
    xbits = _coord_bits(layer.image_width)
    ybits = _coord_bits(layer.image_height)
    nbits = layer.payload_bits
    if len(layer.payload) != (nbits + 7) // 8:
        raise MalformedPayload("location payload length mismatch")
    acc = int.from_bytes(layer.payload, "big") >> ((8 * len(layer.payload)) - nbits) if nbits else 0
    out = []
    pos = nbits
    for _ in range(layer.count):
        pos -= xbits
        x = (acc >> pos) & ((1 << xbits) - 1)
        pos -= ybits
        y = (acc >> pos) & ((1 << ybits) - 1)
        pos -= layer.scale_bits
        sc = (acc >> pos) & ((1 << layer.scale_bits) - 1)
        out.append(Keypoint(x_qpel=x, y_qpel=y, scale=dequantize_scale(sc, layer.scale_bits)))
    return out
