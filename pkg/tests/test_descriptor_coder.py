import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatc.descriptor_coder import (
    CodedDescriptorBlock,
    apply_residual,
    decode_block,
    encode_block,
    measured_rate,
    residual,
)
from hatc.entropy_model import DexelStats, model_from_stats
from hatc.errors import ChecksumMismatch, MalformedPayload, ModelMismatch
from hatc.features import extract


def _uniform_model(d=512, kind="intra"):
    s = DexelStats(d)
    s.marginal_counts[:] = 2
    s.pair_counts[:] = 1
    idx = np.arange(d)
    s.pair_counts[idx, idx] = 0
    s.pair_counts[idx, idx, 0, 0] = 2
    s.pair_counts[idx, idx, 1, 1] = 2
    s.sample_count = 4
    return model_from_stats(s, kind)


def test_residual_trivials():
    rng = np.random.default_rng(1)
    d = rng.integers(0, 2, (3, 512)).astype(np.uint8)
    assert not residual(d, d).any()
    assert np.array_equal(residual(d, np.zeros_like(d)), d)


def test_residual_weight_matches_popcount_oracle():
    rng = np.random.default_rng(2)
    a = rng.integers(0, 2, (10, 512)).astype(np.uint8)
    b = rng.integers(0, 2, (10, 512)).astype(np.uint8)
    r = residual(a, b)
    assert r.sum() == int(np.count_nonzero(a != b))


def test_apply_residual_trivials():
    rng = np.random.default_rng(3)
    d = rng.integers(0, 2, (4, 512)).astype(np.uint8)
    assert np.array_equal(apply_residual(d, np.zeros_like(d)), d)
    assert np.array_equal(apply_residual(d, np.ones_like(d)), 1 - d)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_residual_involution_property(seed, n):
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 2, (n, 64)).astype(np.uint8)
    d_tilde = rng.integers(0, 2, (n, 64)).astype(np.uint8)
    assert np.array_equal(apply_residual(d_tilde, residual(d, d_tilde)), d)


def test_encode_block_empty():
    model = _uniform_model()
    block = encode_block(np.zeros((0, 512), dtype=np.uint8), model)
    assert block.count == 0
    assert len(block.payload) <= 8
    assert decode_block(block, model).shape == (0, 512)


def test_all_zero_residuals_compress_hard(models):
    model = models[50]
    zeros = np.zeros((100, 512), dtype=np.uint8)
    rate = measured_rate(zeros, model)
    assert rate < 0.2 * 512
    assert np.array_equal(decode_block(encode_block(zeros, model), model), zeros)


def test_round_trip_random_vectors(models):
    rng = np.random.default_rng(7)
    for model in (models[10], models["intra"], _uniform_model()):
        v = rng.integers(0, 2, (50, 512)).astype(np.uint8)
        assert np.array_equal(decode_block(encode_block(v, model), model), v)


def test_round_trip_real_descriptors(models, test_image):
    v = extract(test_image, 50).descriptors
    assert len(v) > 0
    out = decode_block(encode_block(v, models["intra"]), models["intra"])
    assert np.array_equal(out, v)


def test_decode_count_matches_block(models):
    rng = np.random.default_rng(8)
    v = rng.integers(0, 2, (17, 512)).astype(np.uint8)
    block = encode_block(v, models[10])
    assert block.count == 17
    assert decode_block(block, models[10]).shape == (17, 512)


def test_tampered_payload_detected(models):
    rng = np.random.default_rng(9)
    v = rng.integers(0, 2, (10, 512)).astype(np.uint8)
    block = encode_block(v, models[10])
    payload = bytearray(block.payload)
    payload[len(payload) // 2] ^= 0x40
    bad = CodedDescriptorBlock(
        count=block.count,
        source_kind=block.source_kind,
        quality_bucket=block.quality_bucket,
        payload=bytes(payload),
        checksum=block.checksum,
    )
    with pytest.raises(ChecksumMismatch):
        decode_block(bad, models[10])


def test_wrong_model_rejected(models):
    rng = np.random.default_rng(10)
    v = rng.integers(0, 2, (5, 512)).astype(np.uint8)
    block = encode_block(v, models[10])
    with pytest.raises(ModelMismatch):
        decode_block(block, models[50])
    with pytest.raises(ModelMismatch):
        decode_block(block, models["intra"])


def test_block_bytes_round_trip(models):
    rng = np.random.default_rng(11)
    v = rng.integers(0, 2, (6, 512)).astype(np.uint8)
    block = encode_block(v, models[10])
    back = CodedDescriptorBlock.from_bytes(block.to_bytes())
    assert back.to_bytes() == block.to_bytes()
    assert np.array_equal(decode_block(back, models[10]), v)
    with pytest.raises(MalformedPayload):
        CodedDescriptorBlock.from_bytes(block.to_bytes()[:6])


def test_measured_rate_uniform_random_incompressible():
    model = _uniform_model()
    rng = np.random.default_rng(12)
    v = rng.integers(0, 2, (200, 512)).astype(np.uint8)
    assert measured_rate(v, model) == pytest.approx(512, rel=0.02)


def test_measured_rate_empty_rejected(models):
    with pytest.raises(ValueError):
        measured_rate(np.zeros((0, 512), dtype=np.uint8), models[10])


def test_coder_efficiency_on_model_distributed_data(models):
    rng = np.random.default_rng(13)
    for model in (models[10], models["intra"]):
        v = model.sample(2000, rng)
        payload_bits = measured_rate(v, model) * len(v)
        budget = 1.02 * model.cross_entropy_bits() * len(v) + 64
        assert payload_bits <= budget
