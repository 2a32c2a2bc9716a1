"""PCM audio I/O and streaming frame iteration.

The engine is mono 16 kHz float32 throughout. WAV support is deliberately
narrow: little-endian RIFF/WAVE, PCM 16-bit or IEEE float 32-bit, mono or
stereo in, PCM 16-bit mono out. Everything else is rejected explicitly
rather than resampled or guessed at.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import AudioFormatError, ShapeError, UnsupportedSampleRateError

ENGINE_SAMPLE_RATE = 16000

_FORMAT_PCM = 1
_FORMAT_IEEE_FLOAT = 3


@dataclass
class AudioBuffer:
    """Mono PCM samples in [-1, 1] at a declared sample rate."""

    samples: np.ndarray
    sample_rate_hz: int = ENGINE_SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        if self.sample_rate_hz <= 0:
            raise AudioFormatError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise AudioFormatError("audio contains non-finite samples")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def require_engine_rate(self) -> "AudioBuffer":
        if self.sample_rate_hz != ENGINE_SAMPLE_RATE:
            raise UnsupportedSampleRateError(
                f"engine requires {ENGINE_SAMPLE_RATE} Hz audio, got {self.sample_rate_hz} Hz"
            )
        return self


def _read_exact(buf: bytes, offset: int, n: int, what: str) -> bytes:
    if offset + n > len(buf):
        raise AudioFormatError(f"truncated WAV file while reading {what}")
    return buf[offset : offset + n]


def read_wav_bytes(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE blob to a mono AudioBuffer.

    Stereo is averaged to mono; 16-bit integers are scaled by 1/32768.
    Raises AudioFormatError for anything that is not plain PCM16/float32,
    and UnsupportedSampleRateError when the rate is not 16 kHz.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError("not a RIFF/WAVE file")

    fmt = None
    payload = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body = _read_exact(data, offset + 8, chunk_size, chunk_id.decode("ascii", "replace"))
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise AudioFormatError("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        offset += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise AudioFormatError("missing fmt or data chunk")

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels not in (1, 2):
        raise AudioFormatError(f"unsupported channel count {n_channels}")
    if audio_format == _FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float32) / 32768.0
    elif audio_format == _FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        samples = raw.astype(np.float32)
    else:
        raise AudioFormatError(
            f"unsupported codec: format tag {audio_format} at {bits} bits (need PCM16 or float32)"
        )

    if n_channels == 2:
        samples = samples[: samples.size // 2 * 2].reshape(-1, 2).mean(axis=1)

    if sample_rate != ENGINE_SAMPLE_RATE:
        raise UnsupportedSampleRateError(
            f"engine requires {ENGINE_SAMPLE_RATE} Hz audio, got {sample_rate} Hz"
        )
    samples = np.clip(samples, -1.0, 1.0).astype(np.float32)
    return AudioBuffer(samples, sample_rate)


def read_wav(path) -> AudioBuffer:
    with open(path, "rb") as fh:
        return read_wav_bytes(fh.read())


def write_wav_bytes(audio: AudioBuffer) -> bytes:
    """Encode an AudioBuffer as 16-bit PCM mono WAV bytes.

    Values outside [-1, 1] saturate to the int16 range (never wrap).
    """
    scaled = np.round(audio.samples.astype(np.float64) * 32768.0)
    ints = np.clip(scaled, -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = struct.pack(
        "<4sIHHIIHH",
        b"fmt ",
        16,
        _FORMAT_PCM,
        1,
        audio.sample_rate_hz,
        audio.sample_rate_hz * 2,
        2,
        16,
    )
    return header + fmt + b"data" + struct.pack("<I", len(payload)) + payload


def write_wav(path, audio: AudioBuffer) -> None:
    with open(path, "wb") as fh:
        fh.write(write_wav_bytes(audio))


@dataclass
class FrameIterator:
    """Iterate ceil(N / hop) frames of a fixed window, zero-padding the tail.

    Frame t covers samples [t*hop, t*hop + window); every frame whose start
    lies inside the signal is produced.
    """

    samples: np.ndarray
    window: int
    hop: int
    _n: int = field(init=False)

    def __post_init__(self):
        if self.window <= 0 or self.hop <= 0:
            raise ShapeError("window and hop must be positive")
        self.samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        self._n = -(-self.samples.size // self.hop)

    def __len__(self) -> int:
        return self._n

    def __iter__(self):
        for t in range(self._n):
            start = t * self.hop
            chunk = self.samples[start : start + self.window]
            if chunk.size < self.window:
                chunk = np.pad(chunk, (0, self.window - chunk.size))
            yield chunk

    def as_matrix(self) -> np.ndarray:
        """All frames stacked as an (n_frames, window) float32 matrix."""
        if self._n == 0:
            return np.zeros((0, self.window), dtype=np.float32)
        padded = np.pad(self.samples, (0, (self._n - 1) * self.hop + self.window - self.samples.size))
        idx = np.arange(self.window)[None, :] + self.hop * np.arange(self._n)[:, None]
        return padded[idx]
