"""Fixed sampling pattern for the 512-bit binary descriptor.

The pattern is a set of 60 points on concentric rings around the keypoint.
Each point carries its own smoothing radius (larger for outer rings).  The
512 shortest point pairs produce the descriptor bits; the 128 longest pairs
drive the orientation estimate.  All geometry is stored in fixed point
(1/256 px per unit at scale 1.0) so sampling is exact integer arithmetic.
"""

from __future__ import annotations

import math

import numpy as np

DESCRIPTOR_BITS = 512
N_ORIENT_PAIRS = 128
N_ANGLE_BINS = 256

# (radius, point count, per-point smoothing sigma), all in pattern units.
_RINGS = (
    (0.0, 1, 0.55),
    (2.9, 10, 0.80),
    (4.9, 14, 1.20),
    (7.4, 15, 1.80),
    (10.8, 20, 2.60),
)

_FP = 256  # fixed-point scale for pattern coordinates


def _build():
    xs, ys, sigmas = [], [], []
    for ring_idx, (radius, count, sigma) in enumerate(_RINGS):
        # Alternate rings are phase-staggered so pairs are not collinear.
        phase = math.pi / count if ring_idx % 2 else 0.0
        for i in range(count):
            ang = 2.0 * math.pi * i / count + phase
            xs.append(radius * math.cos(ang))
            ys.append(radius * math.sin(ang))
            sigmas.append(sigma)
    px = np.round(np.array(xs) * _FP).astype(np.int64)
    py = np.round(np.array(ys) * _FP).astype(np.int64)
    psig = np.round(np.array(sigmas) * _FP).astype(np.int64)

    n = len(px)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            d2 = int((px[i] - px[j]) ** 2 + (py[i] - py[j]) ** 2)
            pairs.append((d2, i, j))
    pairs.sort()
    short = np.array([(i, j) for _, i, j in pairs[:DESCRIPTOR_BITS]], dtype=np.int64)
    long = np.array([(i, j) for _, i, j in pairs[-N_ORIENT_PAIRS:]], dtype=np.int64)

    # Unit direction of each long pair, fixed point x16384.
    dx = (px[long[:, 0]] - px[long[:, 1]]).astype(np.float64)
    dy = (py[long[:, 0]] - py[long[:, 1]]).astype(np.float64)
    norm = np.sqrt(dx * dx + dy * dy)
    ux = np.round(dx / norm * 16384).astype(np.int64)
    uy = np.round(dy / norm * 16384).astype(np.int64)

    k = np.arange(N_ANGLE_BINS)
    cos_q = np.round(np.cos(2 * np.pi * k / N_ANGLE_BINS) * 65536).astype(np.int64)
    sin_q = np.round(np.sin(2 * np.pi * k / N_ANGLE_BINS) * 65536).astype(np.int64)

    return px, py, psig, short, long, ux, uy, cos_q, sin_q


(
    POINT_X_Q,  # x256
    POINT_Y_Q,  # x256
    POINT_SIGMA_Q,  # x256
    SHORT_PAIRS,  # (512, 2) point indices
    LONG_PAIRS,  # (128, 2) point indices
    LONG_UNIT_X_Q,  # x16384
    LONG_UNIT_Y_Q,  # x16384
    COS_Q,  # x65536, per angle bin
    SIN_Q,  # x65536, per angle bin
) = _build()

N_POINTS = len(POINT_X_Q)

# Orientation-independent support radius (pattern units x256): the farthest
# point plus its own smoothing radius.  Used for border-margin checks.
MAX_EXTENT_Q = int(
    np.max(np.sqrt(POINT_X_Q.astype(np.float64) ** 2 + POINT_Y_Q**2) + POINT_SIGMA_Q) + 1
)
