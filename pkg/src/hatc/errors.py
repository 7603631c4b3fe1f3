"""Exception types shared across the codec."""


class HatcError(Exception):
    """Base class for codec errors."""


class MalformedPayload(HatcError):
    """Bitstream bytes do not parse as the declared structure."""


class ChecksumMismatch(MalformedPayload):
    """Decoded payload failed its integrity check."""


class ModelMismatch(HatcError):
    """Coded block does not match the supplied coding model."""


class LayerMissing(HatcError):
    """A required bitstream layer is absent from the container."""


class InsufficientData(HatcError):
    """Not enough training vectors to fit a coding model."""
