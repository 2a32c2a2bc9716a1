"""Log-melspectrum conditioning features.

160-dimensional log-mel vectors computed from 80 ms windows every 40 ms
(25 Hz update rate). Frame t covers samples [t*hop, t*hop + window), causally
anchored at the window start and zero-padded at the signal edge, so frame
count is ceil(N / hop) and delaying the input by one hop shifts the feature
sequence by exactly one frame.

Band edges, window shape and power-vs-magnitude are not pinned by the coding
scheme itself; the defaults here (periodic Hann, power spectra, HTK mel scale
over 125-7500 Hz, log floor 1e-10) are recorded in weight-file metadata so
encoder and decoder always agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import ENGINE_SAMPLE_RATE, AudioBuffer, FrameIterator
from .errors import AudioFormatError, ShapeError

N_MELS = 160
FRAME_RATE_HZ = 25
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class MelConfig:
    """Front-end analysis parameters. hop_ms * update rate must equal 1000."""

    window_ms: int = 80
    hop_ms: int = 40
    n_mels: int = N_MELS
    fft_size: int = 2048
    fmin_hz: float = 125.0
    fmax_hz: float = 7500.0
    log_floor: float = LOG_FLOOR
    sample_rate_hz: int = ENGINE_SAMPLE_RATE

    def __post_init__(self):
        if 1000 % self.hop_ms != 0:
            raise ShapeError(f"hop {self.hop_ms} ms does not divide one second evenly")
        if self.fft_size < self.window_samples:
            raise ShapeError("fft_size must cover the analysis window")
        if not (0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2):
            raise ShapeError("mel band edges must satisfy 0 <= fmin < fmax <= Nyquist")

    @property
    def window_samples(self) -> int:
        return self.window_ms * self.sample_rate_hz // 1000

    @property
    def hop_samples(self) -> int:
        return self.hop_ms * self.sample_rate_hz // 1000

    @property
    def update_rate_hz(self) -> int:
        return 1000 // self.hop_ms


@dataclass
class FeatureFrame:
    """One log-mel conditioning vector."""

    values: np.ndarray
    frame_index: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32).reshape(-1)
        if self.values.size != N_MELS:
            raise ShapeError(f"feature frame must have {N_MELS} dims, got {self.values.size}")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("feature frame contains non-finite values")


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig) -> np.ndarray:
    """Triangular mel filters (n_mels, fft_size//2 + 1), unnormalized HTK style."""
    n_bins = cfg.fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * cfg.sample_rate_hz / cfg.fft_size
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.n_mels + 2))
    lower, center, upper = edges[:-2], edges[1:-1], edges[2:]
    rise = (bin_hz[None, :] - lower[:, None]) / (center - lower)[:, None]
    fall = (upper[:, None] - bin_hz[None, :]) / (upper - center)[:, None]
    return np.maximum(0.0, np.minimum(rise, fall))


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def frame_matrix(audio: AudioBuffer, cfg: MelConfig) -> np.ndarray:
    """(n_frames, window) sample matrix per the causal framing rule."""
    audio.require_engine_rate()
    return FrameIterator(audio.samples, cfg.window_samples, cfg.hop_samples).as_matrix()


def extract_feature_matrix(audio: AudioBuffer, cfg: MelConfig | None = None) -> np.ndarray:
    """Log-mel features as an (n_frames, n_mels) float32 matrix."""
    cfg = cfg or MelConfig()
    frames = frame_matrix(audio, cfg).astype(np.float64)
    if frames.shape[0] == 0:
        return np.zeros((0, cfg.n_mels), dtype=np.float32)
    spectra = np.fft.rfft(frames * _hann_periodic(cfg.window_samples)[None, :], n=cfg.fft_size)
    power = spectra.real**2 + spectra.imag**2
    energies = power @ mel_filterbank(cfg).T
    return np.log(np.maximum(energies, cfg.log_floor)).astype(np.float32)


def extract_features(audio: AudioBuffer, cfg: MelConfig | None = None) -> list[FeatureFrame]:
    """One FeatureFrame per 40 ms hop; empty audio yields an empty list."""
    mat = extract_feature_matrix(audio, cfg)
    return [FeatureFrame(row, t) for t, row in enumerate(mat)]


def frames_to_matrix(frames) -> np.ndarray:
    if len(frames) == 0:
        return np.zeros((0, N_MELS), dtype=np.float32)
    return np.stack([f.values for f in frames]).astype(np.float32)


def matrix_to_frames(mat: np.ndarray, first_index: int = 0) -> list[FeatureFrame]:
    return [FeatureFrame(row, first_index + t) for t, row in enumerate(np.atleast_2d(mat))]


_DUMP_MAGIC = b"NVFD"


def write_feature_dump(path, frames, cfg: MelConfig | None = None) -> None:
    """Debug dump: one text header line "n_mels hop_ms", then f32-LE records."""
    cfg = cfg or MelConfig()
    mat = frames_to_matrix(frames)
    with open(path, "wb") as fh:
        fh.write(f"{cfg.n_mels} {cfg.hop_ms}\n".encode("ascii"))
        fh.write(mat.astype("<f4").tobytes())


def read_feature_dump(path) -> tuple[np.ndarray, int]:
    """Returns (feature matrix, hop_ms)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 2:
            raise AudioFormatError("bad feature dump header")
        n_mels, hop_ms = int(header[0]), int(header[1])
        raw = fh.read()
    if len(raw) % (4 * n_mels) != 0:
        raise AudioFormatError("feature dump payload is not a whole number of frames")
    mat = np.frombuffer(raw, dtype="<f4").reshape(-1, n_mels)
    return mat, hop_ms
