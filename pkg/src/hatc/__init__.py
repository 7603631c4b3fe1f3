"""Joint coding of images and binary local features.

The package covers three transmission paradigms for visual analysis over a
rate-limited channel: compress-then-analyze (send pixels), analyze-then-
compress (send features) and the hybrid scheme that layers a differential
feature enhancement stream on top of a lossy image.
"""

from .container import HatcStream, demux, mux
from .corpus import make_corpus, make_training_images, write_corpus
from .descriptor_coder import (
    CodedDescriptorBlock,
    apply_residual,
    decode_block,
    encode_block,
    measured_rate,
    residual,
)
from .entropy_model import (
    DexelOrderModel,
    DexelStats,
    chain_bound,
    greedy_order,
    pick_model,
)
from .errors import (
    ChecksumMismatch,
    HatcError,
    InsufficientData,
    LayerMissing,
    MalformedPayload,
    ModelMismatch,
)
from .features import FeatureSet, Keypoint, describe, detect, extract
from .image import psnr, read_pgm, write_pgm
from .imagecodec import CodedImage, decode_image, encode_image
from .location_coder import (
    LocationLayer,
    decode_locations,
    encode_locations,
    location_rate,
)
from .pipeline import (
    DecodedResult,
    EncodeConfig,
    RateReport,
    decode_atc,
    decode_cta,
    decode_hatc,
    encode,
    encode_atc,
    encode_cta,
    encode_hatc,
    select_top_z,
)
from .retrieval import (
    Corpus,
    CorpusItem,
    RankedList,
    average_precision,
    default_grid,
    load_manifest,
    mean_average_precision,
    sweep,
    write_csv,
    write_svgs,
)
from .training import train_from_images, training_summary

__version__ = "0.1.0"

__all__ = [
    "ChecksumMismatch",
    "CodedDescriptorBlock",
    "CodedImage",
    "Corpus",
    "CorpusItem",
    "DecodedResult",
    "DexelOrderModel",
    "DexelStats",
    "EncodeConfig",
    "FeatureSet",
    "HatcError",
    "HatcStream",
    "InsufficientData",
    "Keypoint",
    "LayerMissing",
    "LocationLayer",
    "MalformedPayload",
    "ModelMismatch",
    "RankedList",
    "RateReport",
    "apply_residual",
    "average_precision",
    "chain_bound",
    "decode_atc",
    "decode_block",
    "decode_cta",
    "decode_hatc",
    "decode_image",
    "decode_locations",
    "default_grid",
    "demux",
    "describe",
    "detect",
    "encode",
    "encode_atc",
    "encode_block",
    "encode_cta",
    "encode_hatc",
    "encode_image",
    "encode_locations",
    "extract",
    "greedy_order",
    "load_manifest",
    "location_rate",
    "make_corpus",
    "make_training_images",
    "mean_average_precision",
    "measured_rate",
    "mux",
    "pick_model",
    "psnr",
    "read_pgm",
    "residual",
    "select_top_z",
    "sweep",
    "train_from_images",
    "training_summary",
    "write_corpus",
    "write_csv",
    "write_pgm",
    "write_svgs",
]
