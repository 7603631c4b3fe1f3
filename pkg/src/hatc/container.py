"""Multiplexing of the image, location and enhancement layers.

Container layout: 16-byte header (magic, version, layer count, reserved),
then a layer table of (tag, offset, length) entries, then the layers.  The
explicit table lets a consumer decode the image layer without parsing the
feature layers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .descriptor_coder import CodedDescriptorBlock
from .errors import LayerMissing, MalformedPayload
from .imagecodec import CodedImage
from .location_coder import LocationLayer

STREAM_MAGIC = b"HATC"
STREAM_VERSION = 1

TAG_IMAGE = b"HIMG"
TAG_LOCATIONS = b"HLOC"
TAG_ENHANCEMENT = b"HENH"

_HEADER_LEN = 16
_TABLE_ENTRY_LEN = 12


@dataclass
class HatcStream:
    image_layer: CodedImage | None = None
    location_layer: LocationLayer | None = None
    enhancement_layer: CodedDescriptorBlock | None = None

    def __post_init__(self):
        if self.image_layer is None and self.location_layer is None and self.enhancement_layer is None:
            raise LayerMissing("a stream needs at least one layer")

    def layer_sizes(self) -> dict[str, int]:
        """Serialized byte count per present layer plus container overhead."""
        sizes = {}
        if self.image_layer is not None:
            sizes["image"] = len(self.image_layer.to_bytes())
        if self.location_layer is not None:
            sizes["locations"] = len(self.location_layer.to_bytes())
        if self.enhancement_layer is not None:
            sizes["enhancement"] = len(self.enhancement_layer.to_bytes())
        sizes["container"] = _HEADER_LEN + _TABLE_ENTRY_LEN * len(sizes)
        return sizes

    def total_bytes(self) -> int:
        return sum(self.layer_sizes().values())


def mux(stream: HatcStream) -> bytes:
    """Serialize a stream; total length equals stream.total_bytes() exactly."""
    layers = []
    if stream.image_layer is not None:
        layers.append((TAG_IMAGE, stream.image_layer.to_bytes()))
    if stream.location_layer is not None:
        layers.append((TAG_LOCATIONS, stream.location_layer.to_bytes()))
    if stream.enhancement_layer is not None:
        layers.append((TAG_ENHANCEMENT, stream.enhancement_layer.to_bytes()))

    header = STREAM_MAGIC + struct.pack("<BB", STREAM_VERSION, len(layers))
    header += b"\x00" * (_HEADER_LEN - len(header))
    offset = _HEADER_LEN + _TABLE_ENTRY_LEN * len(layers)
    table = bytearray()
    body = bytearray()
    for tag, blob in layers:
        table += tag + struct.pack("<II", offset, len(blob))
        body += blob
        offset += len(blob)
    return header + bytes(table) + bytes(body)


def demux(data: bytes) -> HatcStream:
    """Exact inverse of :func:`mux`."""
    if len(data) < _HEADER_LEN or data[:4] != STREAM_MAGIC:
        raise MalformedPayload("bad stream magic")
    version, nlayers = struct.unpack_from("<BB", data, 4)
    if version != STREAM_VERSION:
        raise MalformedPayload(f"unsupported stream version {version}")
    table_end = _HEADER_LEN + _TABLE_ENTRY_LEN * nlayers
    if len(data) < table_end:
        raise MalformedPayload("stream truncated in layer table")

    image = locations = enhancement = None
    for i in range(nlayers):
        base = _HEADER_LEN + _TABLE_ENTRY_LEN * i
        tag = data[base : base + 4]
        offset, length = struct.unpack_from("<II", data, base + 4)
        if offset + length > len(data):
            raise MalformedPayload("stream truncated: layer extends past buffer")
        blob = data[offset : offset + length]
        if tag == TAG_IMAGE:
            if image is not None:
                raise MalformedPayload("duplicate image layer")
            image = CodedImage.from_bytes(blob)
        elif tag == TAG_LOCATIONS:
            if locations is not None:
                raise MalformedPayload("duplicate location layer")
            locations = LocationLayer.from_bytes(blob)
        elif tag == TAG_ENHANCEMENT:
            if enhancement is not None:
                raise MalformedPayload("duplicate enhancement layer")
            enhancement = CodedDescriptorBlock.from_bytes(blob)
        else:
            raise MalformedPayload(f"unknown layer tag {tag!r}")
    return HatcStream(image_layer=image, location_layer=locations, enhancement_layer=enhancement)
