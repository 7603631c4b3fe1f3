import numpy as np
import pytest

from hatc.features import (
    FeatureSet,
    Keypoint,
    describe,
    detect,
    extract,
    keypoint_fits,
)


def _square_image():
    img = np.full((64, 64), 255, dtype=np.uint8)
    img[20:40, 24:44] = 0
    return img


def test_detect_flat_image_is_empty():
    img = np.full((64, 64), 128, dtype=np.uint8)
    assert detect(img, 70) == []


def test_detect_huge_threshold_is_empty():
    assert detect(_square_image(), 255) == []


def test_detect_square_corners_within_one_pixel():
    kps = detect(_square_image(), 70)
    assert kps
    corners = [(24, 20), (43, 20), (24, 39), (43, 39)]
    base = [kp for kp in kps if kp.scale == 1.0]
    for cx, cy in corners:
        best = min(
            abs(kp.x_qpel / 4.0 - cx) + abs(kp.y_qpel / 4.0 - cy) for kp in base
        )
        assert best <= 2.0, f"no keypoint within 1 px of corner ({cx}, {cy})"


def test_detect_rejects_tiny_images_and_bad_threshold():
    with pytest.raises(ValueError):
        detect(np.zeros((16, 16), dtype=np.uint8), 70)
    with pytest.raises(ValueError):
        detect(np.zeros((64, 64), dtype=np.uint8), -1)


def test_detect_canonical_order_is_total(test_image):
    kps = detect(test_image, 50)
    keys = [kp.sort_key() for kp in kps]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_describe_deterministic(test_image):
    kps = detect(test_image, 50)
    r1 = describe(test_image, kps)
    r2 = describe(test_image, kps)
    assert np.array_equal(r1.bits, r2.bits)
    assert r1.kept == r2.kept and r1.dropped == r2.dropped


def test_describe_bit_length(test_image):
    kps = detect(test_image, 50)
    res = describe(test_image, kps)
    assert res.bits.shape == (len(res.kept), 512)
    assert set(np.unique(res.bits)) <= {0, 1}


def test_describe_invariant_to_intensity_doubling():
    # Comparisons are order-based, so scaling all intensities by 2 (no
    # clipping) must leave every bit unchanged.
    rng = np.random.default_rng(99)
    img = rng.integers(10, 120, (64, 64)).astype(np.uint8)
    kp = Keypoint(x_qpel=4 * 32, y_qpel=4 * 32, scale=1.0)
    assert keypoint_fits(kp, 64, 64)
    r1 = describe(img, [kp])
    r2 = describe((img.astype(np.int32) * 2).clip(0, 255).astype(np.uint8), [kp])
    assert not r1.dropped and not r2.dropped
    assert np.array_equal(r1.bits, r2.bits)


def test_describe_drops_border_keypoints(test_image):
    kp = Keypoint(x_qpel=4, y_qpel=4, scale=1.0)
    res = describe(test_image, [kp])
    assert res.dropped == [0] and res.kept == []
    assert res.bits.shape[0] == 0


def test_describe_depends_only_on_support_region(test_image):
    kp = Keypoint(x_qpel=4 * 32, y_qpel=4 * 32, scale=1.0)
    far = test_image.copy()
    far[0, 0] ^= 0xFF  # far outside the descriptor's support
    r1 = describe(test_image, [kp])
    r2 = describe(far, [kp])
    assert np.array_equal(r1.bits, r2.bits)


def test_extract_flat_image_empty():
    fs = extract(np.full((64, 64), 40, dtype=np.uint8), 70)
    assert len(fs) == 0
    assert fs.descriptors.shape == (0, 512)


def test_extract_counts_consistent(test_image):
    fs = extract(test_image, 50)
    assert len(fs.keypoints) == len(fs.descriptors)
    assert len(fs) > 0


def test_extract_serialization_deterministic(test_image):
    a = extract(test_image, 50).to_bytes()
    b = extract(test_image.copy(), 50).to_bytes()
    assert a == b


def test_featureset_bytes_round_trip(test_image):
    fs = extract(test_image, 50)
    back = FeatureSet.from_bytes(fs.to_bytes())
    assert np.array_equal(back.descriptors, fs.descriptors)
    assert [(k.x_qpel, k.y_qpel) for k in back.keypoints] == [
        (k.x_qpel, k.y_qpel) for k in fs.keypoints
    ]
    assert back.to_bytes() == fs.to_bytes()


def test_featureset_count_mismatch_rejected():
    with pytest.raises(ValueError):
        FeatureSet([Keypoint(0, 0, 1.0)], np.zeros((2, 512), dtype=np.uint8))
