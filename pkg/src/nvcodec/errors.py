"""Engine exception types.

Every failure mode promised by an operation contract maps to one of these, so
callers (and the service layer) can distinguish bad input from bad state.
"""


class CodecError(Exception):
    """Base class for all engine errors."""


class AudioFormatError(CodecError):
    """Malformed or unsupported WAV data."""


class UnsupportedSampleRateError(AudioFormatError):
    """Audio is valid but not at the engine-native 16 kHz rate."""


class BitstreamError(CodecError):
    """Bad magic, truncated payload, or inconsistent bitstream header."""


class WeightFormatError(CodecError):
    """Malformed NVW1 tensor container."""


class MissingTensorError(WeightFormatError):
    """A required tensor is absent or misshaped; carries the tensor name."""

    def __init__(self, name: str, detail: str = "missing"):
        self.tensor_name = name
        super().__init__(f"tensor '{name}': {detail}")


class ShapeError(CodecError):
    """Operand dimensions do not match an operation's contract."""


class InsufficientDataError(CodecError):
    """Not enough frames/samples to run a fitting operation."""
