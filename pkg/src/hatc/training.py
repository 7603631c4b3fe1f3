"""Coding-model training from an image corpus.

For residual models: each training image is coded and decoded at the target
quality, descriptors are computed at the same quantized keypoints on both
the original and the decoded image, and the XOR residuals feed the dexel
statistics.  Intra models train on the original descriptors alone.
"""

from __future__ import annotations

import numpy as np

from .entropy_model import DexelOrderModel, chain_bound, greedy_order, model_from_stats, DexelStats
from .errors import InsufficientData
from .features import describe, detect, keypoint_fits
from .imagecodec import decode_image, encode_image
from .location_coder import DEFAULT_SCALE_BITS
from .pipeline import _decoder_view_keypoints


def descriptor_pairs(image, q: int, detector_threshold: int = 70):
    """(original, lossy) descriptor pairs at shared quantized keypoints."""
    h, w = image.shape
    decoded = decode_image(encode_image(image, q))
    kps = detect(image, detector_threshold)
    view = _decoder_view_keypoints(kps, w, h, DEFAULT_SCALE_BITS)
    view = [kp for kp in view if keypoint_fits(kp, w, h)]
    d_orig = describe(image, view)
    d_lossy = describe(decoded, view)
    return list(zip(d_orig.bits, d_lossy.bits))


def train_from_images(
    images, kind: str, q: int = 0, detector_threshold: int = 70
) -> DexelOrderModel:
    """Train one coding model over an image corpus.

    Residual training runs the full code/decode loop at quality ``q``;
    intra training extracts original descriptors only (``q`` is kept as
    metadata bucket 0).
    """
    vectors = []
    for img in images:
        if kind == "residual":
            for orig, lossy in descriptor_pairs(img, q, detector_threshold):
                vectors.append(orig ^ lossy)
        else:
            h, w = img.shape
            kps = detect(img, detector_threshold)
            view = _decoder_view_keypoints(kps, w, h, DEFAULT_SCALE_BITS)
            view = [kp for kp in view if keypoint_fits(kp, w, h)]
            vectors.extend(describe(img, view).bits)
    if len(vectors) < 2:
        raise InsufficientData(f"corpus produced only {len(vectors)} descriptors")
    stats = DexelStats(len(vectors[0])).accumulate_many(np.stack(vectors))
    model = model_from_stats(stats, kind=kind, quality_bucket=q if kind == "residual" else 0)
    return model


def training_summary(images, model: DexelOrderModel, detector_threshold: int = 70) -> dict:
    """Chain-bound diagnostics for a freshly trained model."""
    vectors = []
    for img in images:
        if model.source_kind == "residual":
            for orig, lossy in descriptor_pairs(img, model.quality_bucket, detector_threshold):
                vectors.append(orig ^ lossy)
        else:
            from .features import extract

            vectors.extend(extract(img, detector_threshold).descriptors)
    stats = DexelStats(model.dimension).accumulate_many(np.stack(vectors))
    return {
        "vectors": stats.sample_count,
        "chain_bound_greedy": chain_bound(stats, greedy_order(stats)),
        "chain_bound_identity": chain_bound(stats, np.arange(model.dimension)),
        "model_cross_entropy": model.cross_entropy_bits(),
    }
