"""Baseline lossy grayscale image codec (the pixel layer).

8x8 block DCT, standard luminance quantization table scaled by the
conventional quality-factor mapping, zigzag scan, DC prediction and
run-length + Huffman coding with the standard luminance tables.  Grayscale
only; dimensions are padded internally to multiples of 8 by edge
replication.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedPayload
from .image import as_image

CODED_IMAGE_MAGIC = b"HIMG"
CODEC_ID_BLOCK_DCT = 1

_STD_LUMA_QT = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)

# ITU-T81 Annex K luminance Huffman table specs (BITS, HUFFVAL).
_DC_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
_DC_VALS = tuple(range(12))
_AC_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D)
_AC_VALS = (
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA,
)


def _build_huffman(bits, vals):
    """Canonical code assignment; returns encode map and decode map."""
    encode = {}
    decode = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            encode[vals[k]] = (code, length)
            decode[(length, code)] = vals[k]
            code += 1
            k += 1
        code <<= 1
    return encode, decode


_DC_ENC, _DC_DEC = _build_huffman(_DC_BITS, _DC_VALS)
_AC_ENC, _AC_DEC = _build_huffman(_AC_BITS, _AC_VALS)

_ZIGZAG = np.array(
    [
        0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
        12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
    ]
)


def _dct_matrix():
    x = np.arange(8)
    u = x[:, None]
    m = np.cos((2 * x[None, :] + 1) * u * np.pi / 16)
    m *= np.sqrt(2.0 / 8.0)
    m[0] *= np.sqrt(0.5)
    return m


_DCT = _dct_matrix()


def quality_table(q: int) -> np.ndarray:
    if not 1 <= q <= 100:
        raise ValueError(f"quality factor out of range: {q}")
    scale = 5000 // q if q < 50 else 200 - 2 * q
    qt = (_STD_LUMA_QT * scale + 50) // 100
    return np.clip(qt, 1, 255)


class _BitWriter:
    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._n = 0

    def write(self, value: int, nbits: int):
        self._acc = (self._acc << nbits) | (value & ((1 << nbits) - 1))
        self._n += nbits
        while self._n >= 8:
            self._n -= 8
            self._buf.append((self._acc >> self._n) & 0xFF)
        self._acc &= (1 << self._n) - 1

    def finish(self) -> bytes:
        if self._n:
            self._buf.append((self._acc << (8 - self._n)) & 0xFF)
            self._acc = 0
            self._n = 0
        return bytes(self._buf)


class _BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # bit position

    def read(self, nbits: int) -> int:
        end = self._pos + nbits
        if end > 8 * len(self._data):
            raise MalformedPayload("image payload truncated")
        v = 0
        pos = self._pos
        for _ in range(nbits):
            byte = self._data[pos >> 3]
            v = (v << 1) | ((byte >> (7 - (pos & 7))) & 1)
            pos += 1
        self._pos = pos
        return v


def _magnitude(v: int):
    """JPEG magnitude category and amplitude bits."""
    size = abs(v).bit_length()
    bits = v if v >= 0 else v + (1 << size) - 1
    return size, bits


def _from_magnitude(size: int, bits: int) -> int:
    if size == 0:
        return 0
    if bits >> (size - 1):
        return bits
    return bits - (1 << size) + 1


def _huff_read(reader: _BitReader, table) -> int:
    code = 0
    for length in range(1, 17):
        code = (code << 1) | reader.read(1)
        sym = table.get((length, code))
        if sym is not None:
            return sym
    raise MalformedPayload("invalid Huffman code in image payload")


@dataclass
class CodedImage:
    payload: bytes
    width: int
    height: int
    q: int
    codec_id: int = CODEC_ID_BLOCK_DCT

    def to_bytes(self) -> bytes:
        return (
            CODED_IMAGE_MAGIC
            + struct.pack("<BBHHI", self.codec_id, self.q, self.width, self.height, len(self.payload))
            + self.payload
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "CodedImage":
        if len(data) < 14 or data[:4] != CODED_IMAGE_MAGIC:
            raise MalformedPayload("bad coded-image magic")
        codec_id, q, w, h, n = struct.unpack_from("<BBHHI", data, 4)
        if len(data) != 14 + n:
            raise MalformedPayload("coded-image length mismatch")
        return cls(payload=data[14:], width=w, height=h, q=q, codec_id=codec_id)


def _to_blocks(img: np.ndarray):
    h, w = img.shape
    ph = (h + 7) // 8 * 8
    pw = (w + 7) // 8 * 8
    padded = np.pad(img, ((0, ph - h), (0, pw - w)), mode="edge")
    blocks = padded.reshape(ph // 8, 8, pw // 8, 8).transpose(0, 2, 1, 3)
    return blocks.reshape(-1, 8, 8), ph // 8, pw // 8


def _quantize(blocks: np.ndarray, qt: np.ndarray) -> np.ndarray:
    shifted = blocks.astype(np.float64) - 128.0
    coef = np.einsum("ux,bxy,vy->buv", _DCT, shifted, _DCT)
    return np.round(coef / qt).astype(np.int64)


def _reconstruct_blocks(quant: np.ndarray, qt: np.ndarray) -> np.ndarray:
    coefs = quant.astype(np.float64) * qt
    pixels = np.einsum("ux,buv,vy->bxy", _DCT, coefs, _DCT)
    return np.clip(np.round(pixels + 128.0), 0, 255).astype(np.uint8)


def encode_image(image, q: int) -> CodedImage:
    img = as_image(image)
    h, w = img.shape
    qt = quality_table(q)
    blocks, _, _ = _to_blocks(img)
    quant = _quantize(blocks, qt)
    # Iterate quantization to a fixed point of the encode/decode round trip
    # so re-encoding a reconstruction reproduces the same payload exactly.
    for _ in range(8):
        requant = _quantize(_reconstruct_blocks(quant, qt), qt)
        if np.array_equal(requant, quant):
            break
        quant = requant
    zz = quant.reshape(-1, 64)[:, _ZIGZAG]

    wtr = _BitWriter()
    prev_dc = 0
    for row in zz:
        diff = int(row[0]) - prev_dc
        prev_dc = int(row[0])
        size, bits = _magnitude(diff)
        code, length = _DC_ENC[size]
        wtr.write(code, length)
        if size:
            wtr.write(bits, size)
        run = 0
        last_nz = int(np.max(np.nonzero(row)[0])) if np.any(row[1:]) else 0
        for k in range(1, 64):
            v = int(row[k])
            if k > last_nz:
                break
            if v == 0:
                run += 1
                continue
            while run >= 16:
                code, length = _AC_ENC[0xF0]  # ZRL
                wtr.write(code, length)
                run -= 16
            size, bits = _magnitude(v)
            code, length = _AC_ENC[(run << 4) | size]
            wtr.write(code, length)
            wtr.write(bits, size)
            run = 0
        if last_nz < 63:
            code, length = _AC_ENC[0x00]  # EOB
            wtr.write(code, length)
    return CodedImage(payload=wtr.finish(), width=w, height=h, q=q)


def decode_image(coded: CodedImage) -> np.ndarray:
    if coded.codec_id != CODEC_ID_BLOCK_DCT:
        raise MalformedPayload(f"unknown codec id {coded.codec_id}")
    w, h = coded.width, coded.height
    qt = quality_table(coded.q)
    nby = (h + 7) // 8
    nbx = (w + 7) // 8
    nblocks = nby * nbx
    rdr = _BitReader(coded.payload)
    zz = np.zeros((nblocks, 64), dtype=np.int64)
    prev_dc = 0
    for b in range(nblocks):
        size = _huff_read(rdr, _DC_DEC)
        diff = _from_magnitude(size, rdr.read(size) if size else 0)
        prev_dc += diff
        zz[b, 0] = prev_dc
        k = 1
        while k < 64:
            sym = _huff_read(rdr, _AC_DEC)
            if sym == 0x00:  # EOB
                break
            run = sym >> 4
            size = sym & 0x0F
            if size == 0 and run != 15:
                raise MalformedPayload("invalid AC run/size symbol")
            k += run
            if size:
                if k > 63:
                    raise MalformedPayload("AC coefficient index out of range")
                zz[b, k] = _from_magnitude(size, rdr.read(size))
            k += 1

    quant = np.zeros((nblocks, 64), dtype=np.int64)
    quant[:, _ZIGZAG] = zz
    pixels = _reconstruct_blocks(quant.reshape(-1, 8, 8), qt)
    full = pixels.reshape(nby, nbx, 8, 8).transpose(0, 2, 1, 3).reshape(nby * 8, nbx * 8)
    return full[:h, :w]
