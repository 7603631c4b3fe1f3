import numpy as np
import pytest

from hatc.errors import MalformedPayload
from hatc.image import psnr
from hatc.imagecodec import CodedImage, decode_image, encode_image

Q_SWEEP = (5, 10, 15, 20, 50, 70)


def test_constant_image_stays_constant():
    # A constant block is DC-only, so the reconstruction is constant too
    # (up to DC quantization).
    img = np.full((8, 8), 77, dtype=np.uint8)
    out = decode_image(encode_image(img, 50))
    assert np.all(out == out[0, 0])
    assert abs(int(out[0, 0]) - 77) <= 2


def test_encode_deterministic(test_image):
    a = encode_image(test_image, 30).to_bytes()
    b = encode_image(test_image.copy(), 30).to_bytes()
    assert a == b


def test_payload_size_monotone_in_quality(test_image):
    small = len(encode_image(test_image, 10).to_bytes())
    big = len(encode_image(test_image, 70).to_bytes())
    assert small < big


def test_decode_dimensions(test_image):
    out = decode_image(encode_image(test_image, 40))
    assert out.shape == test_image.shape
    assert out.dtype == np.uint8


def test_truncated_payload_rejected(test_image):
    blob = encode_image(test_image, 50).to_bytes()
    with pytest.raises(MalformedPayload):
        decode_image(CodedImage.from_bytes(blob[: len(blob) // 2]))
    with pytest.raises(MalformedPayload):
        CodedImage.from_bytes(blob[:5])


def test_coded_image_bytes_round_trip(test_image):
    coded = encode_image(test_image, 25)
    back = CodedImage.from_bytes(coded.to_bytes())
    assert back.to_bytes() == coded.to_bytes()
    assert np.array_equal(decode_image(back), decode_image(coded))


@pytest.mark.parametrize("q", (5, 20, 50, 70, 100))
def test_reencode_idempotent(test_image, q):
    # Re-encoding a codec reconstruction must reproduce it exactly.
    once = decode_image(encode_image(test_image, q))
    twice = decode_image(encode_image(once, q))
    assert np.array_equal(once, twice)


def test_psnr_and_rate_monotone_over_sweep(corpus):
    for item in corpus.queries[:3]:
        psnrs, sizes = [], []
        for q in Q_SWEEP:
            coded = encode_image(item.image, q)
            sizes.append(len(coded.to_bytes()))
            psnrs.append(psnr(item.image, decode_image(coded)))
        assert all(a <= b for a, b in zip(psnrs, psnrs[1:])), psnrs
        assert all(a <= b for a, b in zip(sizes, sizes[1:])), sizes


def test_psnr_cap_and_closed_forms():
    a = np.random.default_rng(0).integers(0, 200, (32, 32)).astype(np.uint8)
    assert psnr(a, a) == 99.0
    assert abs(psnr(a, a + 1) - 48.13) < 0.01
    assert abs(psnr(a, a + 2) - 42.11) < 0.01


def test_psnr_symmetric_and_checks_shape():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 255, (16, 16)).astype(np.uint8)
    b = rng.integers(0, 255, (16, 16)).astype(np.uint8)
    assert psnr(a, b) == psnr(b, a)
    with pytest.raises(ValueError):
        psnr(a, np.zeros((8, 8), dtype=np.uint8))


def test_quality_bounds():
    img = np.full((16, 16), 100, dtype=np.uint8)
    with pytest.raises(ValueError):
        encode_image(img, 0)
    with pytest.raises(ValueError):
        encode_image(img, 101)
