"""End-to-end encoders/decoders for the three transmission paradigms.

CTA sends the coded image only; ATC sends locations plus intra-coded
descriptors; HATC sends the coded image, the locations of the selected
keypoints and a differential descriptor enhancement layer.  HATC prediction
is closed-loop: the predictor descriptors are computed from the locally
decoded image at the quantized keypoints, exactly as the decoder will, so
reconstructed descriptors match the encoder originals bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pattern as pat
from .container import HatcStream, mux
from .descriptor_coder import apply_residual, decode_block, encode_block, residual
from .entropy_model import DexelOrderModel
from .errors import LayerMissing, ModelMismatch
from .features import FeatureSet, Keypoint, describe, detect, extract, keypoint_fits
from .image import as_image
from .imagecodec import decode_image, encode_image
from .location_coder import DEFAULT_SCALE_BITS, decode_locations, encode_locations


@dataclass
class EncodeConfig:
    method: str = "hatc"  # "cta" | "atc" | "hatc"
    q: int = 50
    detector_threshold: int = 70
    refine_count: int = 50  # number of features refined by the enhancement layer
    scale_bits: int = DEFAULT_SCALE_BITS

    def __post_init__(self):
        if self.method not in ("cta", "atc", "hatc"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.refine_count < 0:
            raise ValueError("refine_count must be >= 0")


@dataclass
class RateReport:
    bytes_image: int = 0
    bytes_loc: int = 0
    bytes_enh: int = 0
    bytes_container: int = 0

    @property
    def bytes_total(self) -> int:
        return self.bytes_image + self.bytes_loc + self.bytes_enh + self.bytes_container

    @classmethod
    def from_stream(cls, stream: HatcStream) -> "RateReport":
        sizes = stream.layer_sizes()
        return cls(
            bytes_image=sizes.get("image", 0),
            bytes_loc=sizes.get("locations", 0),
            bytes_enh=sizes.get("enhancement", 0),
            bytes_container=sizes["container"],
        )


@dataclass
class DecodedResult:
    features: FeatureSet
    rate_report: RateReport
    image: np.ndarray | None = None


def select_top_z(features: FeatureSet, z: int) -> FeatureSet:
    """The min(z, M) features with the highest detector response."""
    if z < 0:
        raise ValueError("z must be >= 0")
    order = sorted(range(len(features)), key=lambda i: features.keypoints[i].sort_key())
    chosen = order[: min(z, len(features))]
    return FeatureSet(
        [features.keypoints[i] for i in chosen], features.descriptors[chosen]
    )


def _decoder_view_keypoints(
    keypoints: list[Keypoint], width: int, height: int, scale_bits: int
) -> list[Keypoint]:
    """Keypoints as the decoder will see them (quantized scale round trip)."""
    layer = encode_locations(keypoints, width, height, scale_bits)
    return decode_locations(layer)


def encode_hatc(image, config: EncodeConfig, model: DexelOrderModel) -> HatcStream:
    img = as_image(image)
    h, w = img.shape
    if model.source_kind != "residual":
        raise ModelMismatch("HATC needs a residual-trained model")

    coded = encode_image(img, config.q)
    decoded = decode_image(coded)

    detected = detect(img, config.detector_threshold)
    view = _decoder_view_keypoints(detected, w, h, config.scale_bits)
    usable = [
        (kp, vk) for kp, vk in zip(detected, view) if keypoint_fits(vk, w, h)
    ]
    selected = [kp for kp, _ in usable[: config.refine_count]]

    loc_layer = encode_locations(selected, w, h, config.scale_bits)
    # Canonical decoder view: exactly what decode_locations will hand out.
    view_kps = decode_locations(loc_layer)

    d_orig = describe(img, view_kps)
    d_pred = describe(decoded, view_kps)
    assert not d_orig.dropped and not d_pred.dropped  # pre-filtered by margin
    residuals = residual(d_orig.bits, d_pred.bits)
    enh = encode_block(residuals, model)

    return HatcStream(image_layer=coded, location_layer=loc_layer, enhancement_layer=enh)


def decode_hatc(stream: HatcStream, model: DexelOrderModel) -> DecodedResult:
    if (
        stream.image_layer is None
        or stream.location_layer is None
        or stream.enhancement_layer is None
    ):
        raise LayerMissing("HATC decoding needs image, location and enhancement layers")
    img = decode_image(stream.image_layer)
    kps = decode_locations(stream.location_layer)
    d_pred = describe(img, kps)
    assert not d_pred.dropped
    residuals = decode_block(stream.enhancement_layer, model)
    if len(residuals) != len(kps):
        raise ModelMismatch("enhancement layer count does not match location layer")
    bits = apply_residual(d_pred.bits, residuals)
    for j, kp in enumerate(kps):
        kp.orientation = float(d_pred.orientation_bins[j]) / pat.N_ANGLE_BINS * 2 * np.pi
    return DecodedResult(
        features=FeatureSet(kps, bits),
        rate_report=RateReport.from_stream(stream),
        image=img,
    )


def encode_cta(image, q: int) -> HatcStream:
    return HatcStream(image_layer=encode_image(as_image(image), q))


def decode_cta(stream: HatcStream, detector_threshold: int) -> DecodedResult:
    if stream.image_layer is None:
        raise LayerMissing("CTA decoding needs an image layer")
    img = decode_image(stream.image_layer)
    return DecodedResult(
        features=extract(img, detector_threshold),
        rate_report=RateReport.from_stream(stream),
        image=img,
    )


def encode_atc(image, detector_threshold: int, intra_model: DexelOrderModel) -> HatcStream:
    img = as_image(image)
    h, w = img.shape
    if intra_model.source_kind != "intra":
        raise ModelMismatch("ATC needs an intra-trained model")
    fs = extract(img, detector_threshold)
    loc_layer = encode_locations(fs.keypoints, w, h, DEFAULT_SCALE_BITS)
    enh = encode_block(fs.descriptors, intra_model)
    return HatcStream(location_layer=loc_layer, enhancement_layer=enh)


def decode_atc(stream: HatcStream, intra_model: DexelOrderModel) -> DecodedResult:
    if stream.location_layer is None or stream.enhancement_layer is None:
        raise LayerMissing("ATC decoding needs location and enhancement layers")
    kps = decode_locations(stream.location_layer)
    bits = decode_block(stream.enhancement_layer, intra_model)
    if len(bits) != len(kps):
        raise ModelMismatch("descriptor count does not match location layer")
    return DecodedResult(
        features=FeatureSet(kps, bits),
        rate_report=RateReport.from_stream(stream),
        image=None,
    )


def encode(image, config: EncodeConfig, model: DexelOrderModel | None = None) -> bytes:
    """Serialize one image under the configured paradigm."""
    if config.method == "cta":
        return mux(encode_cta(image, config.q))
    if config.method == "atc":
        if model is None:
            raise ModelMismatch("ATC encoding needs an intra model")
        return mux(encode_atc(image, config.detector_threshold, model))
    if model is None:
        raise ModelMismatch("HATC encoding needs a residual model")
    return mux(encode_hatc(image, config, model))
