"""XOR prediction residuals and lossless descriptor block coding.

Residual mode encodes original-vs-predictor XOR residuals (the enhancement
layer); intra mode runs the identical machinery on raw descriptors.  Blocks
carry a CRC32 of the decoded bits so corruption is detected.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import rangecoder
from .entropy_model import _KIND_CODE, _KIND_NAME, DexelOrderModel
from .errors import ChecksumMismatch, MalformedPayload, ModelMismatch

BLOCK_MAGIC = b"HENH"


def residual(d: np.ndarray, d_tilde: np.ndarray) -> np.ndarray:
    """Elementwise XOR of an original descriptor with its predictor."""
    d = np.asarray(d, dtype=np.uint8)
    d_tilde = np.asarray(d_tilde, dtype=np.uint8)
    if d.shape != d_tilde.shape:
        raise ValueError(f"dimension mismatch: {d.shape} vs {d_tilde.shape}")
    return d ^ d_tilde


def apply_residual(d_tilde: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Invert :func:`residual`; XOR is an involution."""
    return residual(d_tilde, r)


@dataclass
class CodedDescriptorBlock:
    payload: bytes
    count: int
    source_kind: str
    quality_bucket: int
    checksum: int  # CRC32 of the packed decoded bits

    def to_bytes(self) -> bytes:
        return (
            BLOCK_MAGIC
            + struct.pack(
                "<HBBI",
                self.count,
                _KIND_CODE[self.source_kind],
                self.quality_bucket,
                len(self.payload),
            )
            + self.payload
            + struct.pack("<I", self.checksum)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "CodedDescriptorBlock":
        if len(data) < 16 or data[:4] != BLOCK_MAGIC:
            raise MalformedPayload("bad descriptor-block magic")
        count, kind, bucket, n = struct.unpack_from("<HBBI", data, 4)
        if len(data) != 16 + n:
            raise MalformedPayload("descriptor-block length mismatch")
        (crc,) = struct.unpack_from("<I", data, 12 + n)
        return cls(
            payload=data[12 : 12 + n],
            count=count,
            source_kind=_KIND_NAME[kind],
            quality_bucket=bucket,
            checksum=crc,
        )


def _bits_crc(bits: np.ndarray) -> int:
    if bits.size == 0:
        return zlib.crc32(b"")
    return zlib.crc32(np.packbits(bits, axis=1).tobytes())


def encode_block(vectors, model: DexelOrderModel) -> CodedDescriptorBlock:
    """Losslessly encode bit vectors under the model's order and contexts."""
    v = np.asarray(vectors, dtype=np.uint8)
    if v.size == 0:
        v = v.reshape(0, model.dimension)
    if v.ndim != 2 or v.shape[1] != model.dimension:
        raise ValueError(f"expected (n, {model.dimension}) vectors, got {v.shape}")
    if v.shape[0] > 0xFFFF:
        raise ValueError("too many vectors for one block")
    payload = rangecoder.encode_vectors(
        v[:, model.order], model.first_prob, model.cond_probs.astype(np.uint64)
    )
    return CodedDescriptorBlock(
        payload=payload,
        count=v.shape[0],
        source_kind=model.source_kind,
        quality_bucket=model.quality_bucket,
        checksum=_bits_crc(v),
    )


def decode_block(block: CodedDescriptorBlock, model: DexelOrderModel) -> np.ndarray:
    """Exact inverse of :func:`encode_block`; verifies the trailing checksum."""
    if (block.source_kind, block.quality_bucket) != (
        model.source_kind,
        model.quality_bucket,
    ):
        raise ModelMismatch(
            f"block coded with {(block.source_kind, block.quality_bucket)}, "
            f"model is {(model.source_kind, model.quality_bucket)}"
        )
    coded = rangecoder.decode_vectors(
        block.payload,
        block.count,
        model.dimension,
        model.first_prob,
        model.cond_probs.astype(np.uint64),
    )
    out = np.zeros_like(coded)
    out[:, model.order] = coded
    if _bits_crc(out) != block.checksum:
        raise ChecksumMismatch("descriptor block failed its integrity check")
    return out


def measured_rate(vectors, model: DexelOrderModel) -> float:
    """Payload bits per descriptor, excluding the fixed block header."""
    v = np.asarray(vectors, dtype=np.uint8)
    if v.ndim != 2 or v.shape[0] == 0:
        raise ValueError("measured_rate needs a non-empty vector list")
    block = encode_block(v, model)
    return len(block.payload) * 8 / block.count
