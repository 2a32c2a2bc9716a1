"""Noise mixing at controlled SNR and the X2Y regime pairings.

A regime names where the conditioning audio and the teacher-forcing target
audio come from:

    c2c   (clean,    clean)   studio audio on both sides
    n2n   (noisy,    noisy)   the mixture on both sides
    n2c   (noisy,    clean)   mixture conditioning, clean target
    dc2c  (denoised, clean)   denoiser in front of a clean-trained model
    dn2n  (denoised, noisy)   denoiser in front of a noisy-trained model

The d* regimes run the conditioning side through the supplied denoiser; the
target side follows the underlying training regime (clean for dc2c, the raw
mixture for dn2n).

Mixing: out = speech + g*noise with g = sqrt(P_s / (P_n * 10^(snr/10))), so
the achieved SNR matches the request to rounding error. Noise shorter than
the speech is looped from a seeded circular offset; longer noise is cropped
at a seeded offset. If the mix clips, the whole signal is peak-normalized
and the gain recorded, which leaves the speech-to-noise ratio untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .audio_io import AudioBuffer
from .errors import CodecError, ShapeError
from .rng import CounterRng

REGIMES = ("c2c", "n2n", "n2c", "dc2c", "dn2n")

_REGIME_TABLE = {
    "c2c": ("clean", "clean"),
    "n2n": ("noisy", "noisy"),
    "n2c": ("noisy", "clean"),
    "dc2c": ("denoised", "clean"),
    "dn2n": ("denoised", "noisy"),
}


@dataclass(frozen=True)
class RegimeSpec:
    """Conditioning/target source pair for one training-or-eval regime."""

    name: str

    def __post_init__(self):
        if self.name not in _REGIME_TABLE:
            raise ShapeError(f"unknown regime '{self.name}' (expected one of {REGIMES})")

    @property
    def conditioning_source(self) -> str:
        return _REGIME_TABLE[self.name][0]

    @property
    def target_source(self) -> str:
        return _REGIME_TABLE[self.name][1]

    @property
    def needs_denoiser(self) -> bool:
        return self.conditioning_source == "denoised"

    @property
    def needs_noise(self) -> bool:
        return self.name != "c2c"


@dataclass(frozen=True)
class MixSpec:
    """Requested SNR (dB) and the seed for noise placement draws."""

    snr_db: float
    seed: int = 0

    SNR_RANGE_DB = (1.0, 40.0)

    @classmethod
    def random(cls, seed: int) -> "MixSpec":
        lo, hi = cls.SNR_RANGE_DB
        u = CounterRng(seed).uniform()
        return cls(lo + (hi - lo) * u, seed)


@dataclass
class MixResult:
    audio: AudioBuffer
    noise_gain: float
    norm_gain: float  # 1.0 unless peak-normalization kicked in
    snr_db: float


def _power(x: np.ndarray) -> float:
    return float(np.mean(x.astype(np.float64) ** 2))


def _fit_noise(noise: np.ndarray, n: int, rng: CounterRng) -> np.ndarray:
    """Loop (circular, seeded offset) or crop (seeded offset) to n samples."""
    if noise.size >= n:
        offset = int(rng.integers(1, noise.size - n + 1)[0])
        return noise[offset : offset + n]
    offset = int(rng.integers(1, noise.size)[0])
    rolled = np.roll(noise, -offset)
    reps = -(-n // rolled.size)
    return np.tile(rolled, reps)[:n]


def mix_at_snr(speech: AudioBuffer, noise: AudioBuffer, snr_db: float, seed: int = 0) -> MixResult:
    """Mix noise into speech at the requested SNR (dB)."""
    if speech.sample_rate_hz != noise.sample_rate_hz:
        raise ShapeError("speech and noise sample rates differ")
    s = speech.samples.astype(np.float64)
    if s.size == 0 or _power(s) == 0.0:
        raise CodecError("speech has zero energy")
    raw_noise = noise.samples.astype(np.float64)
    if raw_noise.size == 0 or _power(raw_noise) == 0.0:
        raise CodecError("noise has zero energy")
    n = _fit_noise(raw_noise, s.size, CounterRng(seed))
    p_n = _power(n)
    if p_n == 0.0:
        raise CodecError("noise segment has zero energy")
    with np.errstate(under="ignore", over="ignore", divide="ignore"):
        # extreme SNR requests underflow the gain to 0 (pure speech) or
        # overflow it to inf, which the zero-energy guards above make moot
        gain = float(np.sqrt(_power(s) / p_n) * np.float64(10.0) ** (-np.float64(snr_db) / 20.0))
        out = s + gain * n
        peak = float(np.max(np.abs(out))) if out.size else 0.0
        norm = 1.0 / peak if peak > 1.0 else 1.0
        p_gn = _power(gain * n)
        achieved = float(10.0 * np.log10(_power(s) / p_gn)) if p_gn > 0.0 else float("inf")
    return MixResult(
        audio=AudioBuffer((out * norm).astype(np.float32), speech.sample_rate_hz),
        noise_gain=gain,
        norm_gain=norm,
        snr_db=float(achieved),
    )


def build_pair(
    regime: RegimeSpec | str,
    clean: AudioBuffer,
    noise: AudioBuffer | None,
    mix: MixSpec,
    denoiser: Callable[[AudioBuffer], AudioBuffer] | None = None,
) -> tuple[AudioBuffer, AudioBuffer]:
    """(conditioning_audio, target_audio) for one regime.

    Features come from the first element, the teacher-forcing target from the
    second. d* regimes require a denoiser callable; c2c ignores the noise.
    """
    spec = regime if isinstance(regime, RegimeSpec) else RegimeSpec(regime)
    if spec.needs_denoiser and denoiser is None:
        raise CodecError(f"regime '{spec.name}' requires a denoiser")
    if spec.name == "c2c":
        return clean, clean
    if noise is None:
        raise CodecError(f"regime '{spec.name}' requires noise audio")
    mixed = mix_at_snr(clean, noise, mix.snr_db, mix.seed).audio
    if spec.name == "n2n":
        return mixed, mixed
    if spec.name == "n2c":
        return mixed, clean
    conditioning = denoiser(mixed)
    return (conditioning, clean) if spec.name == "dc2c" else (conditioning, mixed)


# ---------------------------------------------------------------------------
# manifest: one line per pair


@dataclass
class ManifestEntry:
    clean_path: str
    noise_path: str  # "-" when the regime uses no mixing (c2c or unaugmented n2n)
    snr_db: float
    regime: str
    seed: int

    def line(self) -> str:
        return f"{self.clean_path},{self.noise_path},{self.snr_db:g},{self.regime},{self.seed}"

    @classmethod
    def parse(cls, line: str) -> "ManifestEntry":
        parts = [p.strip() for p in line.strip().split(",")]
        if len(parts) != 5:
            raise ShapeError(f"manifest line needs 5 fields, got {len(parts)}: {line!r}")
        entry = cls(parts[0], parts[1], float(parts[2]), parts[3], int(parts[4]))
        RegimeSpec(entry.regime)
        return entry


def write_manifest(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(e.line() + "\n")


def read_manifest(path) -> list[ManifestEntry]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(ManifestEntry.parse(line))
    return out
