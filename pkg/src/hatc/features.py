"""Deterministic corner detection and 512-bit binary description.

The detector is a segment-test corner detector (16-pixel Bresenham circle,
9-contiguous arc) run over a 4-octave pyramid with 3x3 non-max suppression
and quarter-pel subpixel refinement.  The descriptor samples box-smoothed
intensities on the fixed pattern of :mod:`hatc.pattern`, rotated by an
orientation estimated from the long-distance pairs, and compares pairs of
smoothed intensities.  The sampling/comparison path is pure integer
arithmetic so descriptors computed from the same decoded image agree
bit-exactly between encoder and decoder.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import pattern as pat
from .errors import MalformedPayload
from .image import as_image

MIN_IMAGE_SIDE = 32
N_OCTAVES = 4

# Detector pyramid scale range; also bounds the coded scale grid.
SIGMA_MIN = 1.0
SIGMA_MAX = 16.0

# Bresenham circle of radius 3 in circular order, as (dx, dy).
_CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
_ARC_LEN = 9

FEATURESET_MAGIC = b"HFTS"


@dataclass
class Keypoint:
    x_qpel: int  # horizontal position, quarter-pel units
    y_qpel: int
    scale: float
    orientation: float = 0.0  # radians in [0, 2pi); filled by describe()
    response: float = 0.0

    def sort_key(self):
        # Canonical total order: response descending, ties by (y, x, scale).
        return (-self.response, self.y_qpel, self.x_qpel, self.scale)


@dataclass
class DescribeResult:
    bits: np.ndarray  # (K, 512) uint8 in {0, 1}
    kept: list[int]  # indices into the input keypoint list
    dropped: list[int]  # indices rejected by the border margin
    orientation_bins: np.ndarray  # (K,) int, 256 bins per turn


@dataclass
class FeatureSet:
    keypoints: list[Keypoint] = field(default_factory=list)
    descriptors: np.ndarray = field(
        default_factory=lambda: np.zeros((0, pat.DESCRIPTOR_BITS), dtype=np.uint8)
    )

    def __len__(self):
        return len(self.keypoints)

    def __post_init__(self):
        if len(self.keypoints) != len(self.descriptors):
            raise ValueError("keypoint/descriptor count mismatch")

    def to_bytes(self) -> bytes:
        d = pat.DESCRIPTOR_BITS
        out = bytearray(FEATURESET_MAGIC)
        out += struct.pack("<HI", d, len(self.keypoints))
        packed = np.packbits(self.descriptors, axis=1) if len(self) else None
        for i, kp in enumerate(self.keypoints):
            scale_code = int(round(kp.scale * 256))
            orient_code = orientation_bin(kp.orientation)
            out += struct.pack(
                "<IIHHf", kp.x_qpel, kp.y_qpel, scale_code, orient_code, kp.response
            )
            out += packed[i].tobytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeatureSet":
        if data[:4] != FEATURESET_MAGIC:
            raise MalformedPayload("bad feature-set magic")
        d, m = struct.unpack_from("<HI", data, 4)
        nbytes = d // 8
        rec = 16 + nbytes
        if len(data) != 10 + m * rec:
            raise MalformedPayload("feature-set length mismatch")
        kps = []
        desc = np.zeros((m, d), dtype=np.uint8)
        for i in range(m):
            off = 10 + i * rec
            x, y, sc, oc, resp = struct.unpack_from("<IIHHf", data, off)
            kps.append(
                Keypoint(x, y, sc / 256.0, oc / pat.N_ANGLE_BINS * 2 * np.pi, resp)
            )
            raw = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=off + 16)
            desc[i] = np.unpackbits(raw)[:d]
        return cls(kps, desc)


def orientation_bin(theta: float) -> int:
    return int(round(theta / (2 * np.pi) * pat.N_ANGLE_BINS)) % pat.N_ANGLE_BINS


def _downsample(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // 2, w // 2
    a = img[: 2 * h2 : 2, : 2 * w2 : 2].astype(np.int32)
    b = img[: 2 * h2 : 2, 1 : 2 * w2 : 2]
    c = img[1 : 2 * h2 : 2, : 2 * w2 : 2]
    d = img[1 : 2 * h2 : 2, 1 : 2 * w2 : 2]
    return ((a + b + c + d + 2) >> 2).astype(np.uint8)


def _segment_scores(img: np.ndarray, threshold: int) -> np.ndarray:
    """Corner score map; zero where the 9-contiguous segment test fails."""
    h, w = img.shape
    scores = np.zeros((h, w), dtype=np.int64)
    if h < 8 or w < 8:
        return scores
    p = img[3 : h - 3, 3 : w - 3].astype(np.int32)
    circ = np.stack(
        [img[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx].astype(np.int32) for dx, dy in _CIRCLE]
    )
    bright = circ > p + threshold
    dark = circ < p - threshold
    ok_b = np.zeros(p.shape, dtype=bool)
    ok_d = np.zeros(p.shape, dtype=bool)
    b2 = np.concatenate([bright, bright[: _ARC_LEN - 1]], axis=0)
    d2 = np.concatenate([dark, dark[: _ARC_LEN - 1]], axis=0)
    for s in range(16):
        ok_b |= b2[s : s + _ARC_LEN].all(axis=0)
        ok_d |= d2[s : s + _ARC_LEN].all(axis=0)
    exc_b = np.where(bright, circ - p - threshold, 0).sum(axis=0, dtype=np.int64)
    exc_d = np.where(dark, p - circ - threshold, 0).sum(axis=0, dtype=np.int64)
    score = np.maximum(np.where(ok_b, exc_b, 0), np.where(ok_d, exc_d, 0))
    scores[3 : h - 3, 3 : w - 3] = score
    return scores


def _nms(score: np.ndarray) -> np.ndarray:
    """3x3 non-max mask; raster-first point wins on plateaus."""
    s = np.pad(score, 1, constant_values=-1)
    c = s[1:-1, 1:-1]
    keep = c > 0
    # Strictly greater than raster-earlier neighbours, >= later ones.
    keep &= c > s[:-2, :-2]
    keep &= c > s[:-2, 1:-1]
    keep &= c > s[:-2, 2:]
    keep &= c > s[1:-1, :-2]
    keep &= c >= s[1:-1, 2:]
    keep &= c >= s[2:, :-2]
    keep &= c >= s[2:, 1:-1]
    keep &= c >= s[2:, 2:]
    return keep


def _subpixel_qpel(score: np.ndarray, ys: np.ndarray, xs: np.ndarray):
    """Quarter-pel offsets from a 1D quadratic fit per axis, in [-2, 2]."""

    def axis_offset(left, center, right):
        num = (left - right).astype(np.float64)
        den = 2.0 * (left + right - 2 * center).astype(np.float64)
        off = np.where(den != 0.0, num / np.where(den == 0.0, 1.0, den), 0.0)
        return np.clip(np.round(4.0 * off), -2, 2).astype(np.int64)

    c = score[ys, xs]
    dx = axis_offset(score[ys, xs - 1], c, score[ys, xs + 1])
    dy = axis_offset(score[ys - 1, xs], c, score[ys + 1, xs])
    return dx, dy


def detect(image, threshold: int) -> list[Keypoint]:
    """Detect keypoints over a 4-octave pyramid; canonical output order."""
    img = as_image(image)
    h, w = img.shape
    if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
        raise ValueError(f"image too small for extraction: {w}x{h}")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")

    keypoints: list[Keypoint] = []
    level = img
    for octave in range(N_OCTAVES):
        if min(level.shape) < 12:
            break
        score = _segment_scores(level, threshold)
        ys, xs = np.nonzero(_nms(score))
        if len(ys):
            dx, dy = _subpixel_qpel(score, ys, xs)
            xq = (4 * xs + dx) * (1 << octave)
            yq = (4 * ys + dy) * (1 << octave)
            resp = score[ys, xs]
            for i in range(len(ys)):
                keypoints.append(
                    Keypoint(
                        x_qpel=int(xq[i]),
                        y_qpel=int(yq[i]),
                        scale=float(1 << octave),
                        response=float(resp[i]),
                    )
                )
        level = _downsample(level)
    keypoints.sort(key=Keypoint.sort_key)
    return keypoints


def _integral(img: np.ndarray) -> np.ndarray:
    ii = np.zeros((img.shape[0] + 1, img.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(img, axis=0, dtype=np.int64), axis=1, out=ii[1:, 1:])
    return ii


def _box_sums(ii, cy, cx, hw):
    """Inclusive box sums around integer centers; all arrays broadcast (K, P)."""
    y0 = cy - hw
    y1 = cy + hw + 1
    x0 = cx - hw
    x1 = cx + hw + 1
    return ii[y1, x1] - ii[y1, x0] - ii[y0, x1] + ii[y0, x0]


def border_margin_px(scale: float) -> int:
    """Pixels of clearance the sampling pattern needs at this scale."""
    sigma_fp = int(round(scale * 256))
    return (pat.MAX_EXTENT_Q * sigma_fp + 65535) // 65536 + 2


def keypoint_fits(kp: Keypoint, width: int, height: int) -> bool:
    m = border_margin_px(kp.scale)
    cx = (kp.x_qpel + 2) // 4
    cy = (kp.y_qpel + 2) // 4
    return m <= cx < width - m and m <= cy < height - m


def describe(image, keypoints: list[Keypoint]) -> DescribeResult:
    """Compute one 512-bit descriptor per keypoint that clears the border.

    Deterministic integer sampling; keypoints too close to the border are
    dropped and reported in ``dropped``.
    """
    img = as_image(image)
    h, w = img.shape
    kept, dropped = [], []
    for i, kp in enumerate(keypoints):
        (kept if keypoint_fits(kp, w, h) else dropped).append(i)
    k = len(kept)
    if k == 0:
        return DescribeResult(
            bits=np.zeros((0, pat.DESCRIPTOR_BITS), dtype=np.uint8),
            kept=kept,
            dropped=dropped,
            orientation_bins=np.zeros(0, dtype=np.int64),
        )

    ii = _integral(img)
    cx = np.array([(keypoints[i].x_qpel + 2) // 4 for i in kept], dtype=np.int64)
    cy = np.array([(keypoints[i].y_qpel + 2) // 4 for i in kept], dtype=np.int64)
    sigma_fp = np.array([round(keypoints[i].scale * 256) for i in kept], dtype=np.int64)

    hw = np.maximum(1, (pat.POINT_SIGMA_Q[None, :] * sigma_fp[:, None]) // 65536)
    areas = (2 * hw + 1) ** 2

    # Orientation from unrotated long-distance pairs.  Means are float64:
    # exact doubling under intensity scaling keeps the estimate order-based.
    ox = (pat.POINT_X_Q[None, :] * sigma_fp[:, None] + 32768) // 65536
    oy = (pat.POINT_Y_Q[None, :] * sigma_fp[:, None] + 32768) // 65536
    sums = _box_sums(ii, cy[:, None] + oy, cx[:, None] + ox, hw)
    means = sums.astype(np.float64) / areas
    diff = means[:, pat.LONG_PAIRS[:, 0]] - means[:, pat.LONG_PAIRS[:, 1]]
    gx = (diff * pat.LONG_UNIT_X_Q).sum(axis=1)
    gy = (diff * pat.LONG_UNIT_Y_Q).sum(axis=1)
    theta = np.arctan2(gy, gx)
    bins = np.round(theta / (2 * np.pi) * pat.N_ANGLE_BINS).astype(np.int64) % pat.N_ANGLE_BINS

    # Rotate the pattern by the per-keypoint orientation, then scale.
    cosq = pat.COS_Q[bins][:, None]
    sinq = pat.SIN_Q[bins][:, None]
    rx = (pat.POINT_X_Q[None, :] * cosq - pat.POINT_Y_Q[None, :] * sinq) // 65536
    ry = (pat.POINT_X_Q[None, :] * sinq + pat.POINT_Y_Q[None, :] * cosq) // 65536
    rox = (rx * sigma_fp[:, None] + 32768) // 65536
    roy = (ry * sigma_fp[:, None] + 32768) // 65536
    rsums = _box_sums(ii, cy[:, None] + roy, cx[:, None] + rox, hw)

    # Pairwise smoothed-intensity comparison via exact cross-multiplication.
    a = pat.SHORT_PAIRS[:, 0]
    b = pat.SHORT_PAIRS[:, 1]
    bits = (rsums[:, a] * areas[:, b] > rsums[:, b] * areas[:, a]).astype(np.uint8)

    return DescribeResult(bits=bits, kept=kept, dropped=dropped, orientation_bins=bins)


def extract(image, threshold: int) -> FeatureSet:
    """Detect then describe; border-dropped keypoints are removed."""
    kps = detect(image, threshold)
    res = describe(image, kps)
    out = []
    for j, i in enumerate(res.kept):
        kp = kps[i]
        kp.orientation = float(res.orientation_bins[j]) / pat.N_ANGLE_BINS * 2 * np.pi
        out.append(kp)
    return FeatureSet(out, res.bits)
