"""High-level codec operations shared by the service and the CLI.

Everything here works on in-memory AudioBuffers, bitstream bytes and parsed
WeightSets; file and transport concerns live in the callers.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .augment import MixResult, RegimeSpec, mix_at_snr
from .denoiser import denoise, has_tasnet, load_tasnet_weights, si_snr, si_snr_improvement
from .errors import CodecError
from .features import MelConfig, extract_feature_matrix
from .kernels import BlockDiagonalMatrix, BlockSparseMatrix
from .quantizer import (
    encode_frame,
    decode_frame,
    load_quantizer,
    pack_bitstream,
    unpack_bitstream,
)
from .vocoder import decode as vocoder_decode
from .vocoder import load_vocoder_weights
from .weights import WeightSet, entry_shape, entry_sparsity, read_weights_bytes


def mel_config_from(ws: WeightSet) -> MelConfig:
    return MelConfig(
        window_ms=ws.meta_int("mel.window_ms", 80),
        hop_ms=ws.meta_int("mel.hop_ms", 40),
        n_mels=ws.meta_int("mel.n_mels", 160),
        fft_size=ws.meta_int("mel.fft_size", 2048),
        fmin_hz=ws.meta_float("mel.fmin_hz", 125.0),
        fmax_hz=ws.meta_float("mel.fmax_hz", 7500.0),
        log_floor=ws.meta_float("mel.log_floor", 1e-10),
    )


@dataclass
class EncodeResult:
    payload: bytes
    n_frames: int
    frame_bits: int
    frame_rate_hz: int
    duration_s: float

    @property
    def bitrate_bps(self) -> float:
        return self.frame_bits * self.frame_rate_hz


def encode_audio(audio: AudioBuffer, ws: WeightSet) -> EncodeResult:
    """WAV -> features -> KLT/VQ -> packed bitstream."""
    audio.require_engine_rate()
    cfg = mel_config_from(ws)
    feats = extract_feature_matrix(audio, cfg)
    klt, books = load_quantizer(ws)
    codes = np.stack([encode_frame(row, klt, books) for row in feats]) if len(feats) else np.zeros((0, len(books.codebooks)), dtype=np.int64)
    payload = pack_bitstream(codes, books, cfg.update_rate_hz)
    return EncodeResult(
        payload=payload,
        n_frames=len(feats),
        frame_bits=books.frame_bits,
        frame_rate_hz=cfg.update_rate_hz,
        duration_s=len(feats) / cfg.update_rate_hz,
    )


def decode_bitstream(blob: bytes, ws: WeightSet, seed: int = 0) -> AudioBuffer:
    """Packed bitstream -> decoded features -> WaveGRU audio."""
    klt, books = load_quantizer(ws)
    stream = unpack_bitstream(blob, books)
    feats = np.stack(
        [decode_frame(code, klt, books, t).values for t, code in enumerate(stream.codes)]
    ) if stream.n_frames else np.zeros((0, klt.mean.size), dtype=np.float32)
    return vocoder_decode(feats, load_vocoder_weights(ws), seed)


def denoise_audio(audio: AudioBuffer, ws: WeightSet) -> AudioBuffer:
    return denoise(audio, load_tasnet_weights(ws))


@dataclass
class RoundtripResult:
    audio: AudioBuffer
    denoised: bool
    encode: EncodeResult
    regime: str
    seed: int


def roundtrip_audio(audio: AudioBuffer, ws: WeightSet, regime: str = "n2n", seed: int = 0) -> RoundtripResult:
    """Optional denoise, then encode + decode at the given seed."""
    spec = RegimeSpec(regime)
    if spec.needs_denoiser:
        if not has_tasnet(ws):
            raise CodecError(
                f"regime '{regime}' needs the denoiser, but the weight set has no tasnet.* tensors"
            )
        conditioned = denoise_audio(audio, ws)
    else:
        conditioned = audio
    enc = encode_audio(conditioned, ws)
    out = decode_bitstream(enc.payload, ws, seed)
    return RoundtripResult(out, spec.needs_denoiser, enc, regime, seed)


def mix_audio(clean: AudioBuffer, noise: AudioBuffer, snr_db: float, seed: int = 0) -> MixResult:
    return mix_at_snr(clean, noise, snr_db, seed)


def compute_metrics(
    estimate: AudioBuffer,
    reference: AudioBuffer,
    noisy: AudioBuffer | None = None,
) -> dict:
    """SI-SNR of estimate vs reference; SI-SNRi too when the mixture is given."""
    out = {"si_snr_db": si_snr(estimate, reference)}
    if noisy is not None:
        out["noisy_si_snr_db"] = si_snr(noisy, reference)
        out["si_snri_db"] = si_snr_improvement(noisy, estimate, reference)
    return out


_LAYOUT_NAMES = {np.ndarray: "dense"}


def inspect_weights(ws: WeightSet) -> dict:
    """Tensor listing with shapes, layouts and sparsity percentages."""
    tensors = []
    for name in ws.names():
        entry = ws.tensors[name]
        if isinstance(entry, BlockSparseMatrix):
            layout = "block4x4"
        elif isinstance(entry, BlockDiagonalMatrix):
            layout = f"blockdiag{entry.n_blocks}"
        else:
            layout = "dense"
        tensors.append(
            {
                "name": name,
                "shape": list(entry_shape(entry)),
                "layout": layout,
                "sparsity_pct": round(100.0 * entry_sparsity(entry), 4),
            }
        )
    return {"tensors": tensors, "metadata": dict(sorted(ws.metadata.items()))}


class WeightCache:
    """Tiny content-addressed LRU so repeated requests reuse parsed weights."""

    def __init__(self, capacity: int = 4):
        self.capacity = capacity
        self._items: OrderedDict[str, WeightSet] = OrderedDict()

    def get(self, blob: bytes) -> WeightSet:
        key = hashlib.sha256(blob).hexdigest()
        if key in self._items:
            self._items.move_to_end(key)
            return self._items[key]
        ws = read_weights_bytes(blob)
        self._items[key] = ws
        while len(self._items) > self.capacity:
            self._items.popitem(last=False)
        return ws
