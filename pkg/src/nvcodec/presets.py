"""WeightSet builders.

The engine ships no trained model; these builders produce complete,
well-shaped NVW1 weight sets for development, testing and the documented
demo flows:

  * random   - counter-RNG Gaussian weights at sensible scales, with the
               pruned layouts applied (92% 4x4 block-sparse projections,
               16-block block-diagonal GRU recurrences).
  * toy      - a shrunk configuration (small hidden sizes) for fast tests.

KLT/VQ tensors are fitted on synthetic harmonic "speech" so the quantizer
round-trips real feature vectors sensibly, and the QMF prototype plus every
front-end constant ride along in metadata so encoder and decoder agree.
"""

from __future__ import annotations

import numpy as np

from .audio_io import ENGINE_SAMPLE_RATE, AudioBuffer
from .denoiser import TasNetConfig
from .features import MelConfig, extract_feature_matrix
from .filterbank import DEFAULT_PROTOTYPE, QmfCascade
from .kernels import block_diagonal_from_dense, magnitude_prune
from .quantizer import DEFAULT_BITS, DEFAULT_LAYOUT, fit_klt, train_codebooks
from .rng import CounterRng
from .vocoder import VocoderConfig
from .weights import WeightSet

PRUNE_SPARSITY = 0.92
GRU_BLOCKS = 16


def synthetic_speech(seconds: float = 2.0, seed: int = 7, f0: float = 150.0) -> AudioBuffer:
    """Harmonic 'speech-like' signal: pitched harmonics under a slow envelope."""
    rng = CounterRng(seed)
    n = int(round(seconds * ENGINE_SAMPLE_RATE))
    t = np.arange(n) / ENGINE_SAMPLE_RATE
    phases = rng.uniform(8) * 2.0 * np.pi
    amps = np.array([0.5, 0.35, 0.25, 0.18, 0.12, 0.08, 0.05, 0.03])
    x = sum(a * np.sin(2.0 * np.pi * f0 * (k + 1) * t + p) for k, (a, p) in enumerate(zip(amps, phases)))
    envelope = 0.55 + 0.45 * np.sin(2.0 * np.pi * 2.7 * t + phases[0])
    x = x * envelope + 0.01 * rng.normal(n)
    x = 0.72 * x / np.max(np.abs(x))
    return AudioBuffer(x.astype(np.float32), ENGINE_SAMPLE_RATE)


def synthetic_noise(seconds: float = 2.0, seed: int = 11) -> AudioBuffer:
    """Broadband noise with mild high-frequency emphasis."""
    rng = CounterRng(seed)
    n = int(round(seconds * ENGINE_SAMPLE_RATE))
    white = rng.normal(n)
    emphasized = np.concatenate([[white[0]], white[1:] - 0.45 * white[:-1]])
    x = 0.5 * emphasized / np.max(np.abs(emphasized))
    return AudioBuffer(x.astype(np.float32), ENGINE_SAMPLE_RATE)


def _gauss(rng: CounterRng, shape, scale: float) -> np.ndarray:
    return (scale * rng.normal(int(np.prod(shape)))).reshape(shape).astype(np.float32)


def _quantizer_tensors(ws: WeightSet, seed: int) -> None:
    # 12 s -> 300 frames, comfortably above the 161-frame KLT rank requirement
    speech = synthetic_speech(12.0, seed=seed + 101)
    feats = extract_feature_matrix(speech)
    # deterministic jitter spreads the covariance so the KLT has full rank
    jitter = 0.05 * CounterRng(seed + 202).normal(feats.size).reshape(feats.shape)
    feats = feats.astype(np.float64) + jitter
    klt = fit_klt(feats)
    books = train_codebooks(feats, klt, DEFAULT_LAYOUT, DEFAULT_BITS, seed=seed + 303, iterations=8)
    ws.tensors["klt.mean"] = klt.mean.astype(np.float32)
    ws.tensors["klt.basis"] = klt.basis.astype(np.float32)
    for i, cb in enumerate(books.codebooks):
        ws.tensors[f"vq.cb{i:02d}"] = cb.astype(np.float32)
    ws.metadata["vq.layout"] = ",".join(str(d) for d in DEFAULT_LAYOUT)
    ws.metadata["vq.bits"] = ",".join(str(b) for b in DEFAULT_BITS)


def _vocoder_tensors(ws: WeightSet, cfg: VocoderConfig, rng: CounterRng, pruned: bool) -> None:
    h, g, m, k = cfg.cond_hidden, cfg.gru_dim, cfg.n_bands, cfg.n_mix
    ws.tensors["cond.conv_in.w"] = _gauss(rng, (h, cfg.n_mels, 3), 0.5 / np.sqrt(3 * cfg.n_mels))
    ws.tensors["cond.conv_in.b"] = np.zeros(h, dtype=np.float32)
    for i, w_shape in enumerate([(h, h, 2)] * 3, start=1):
        ws.tensors[f"cond.dil{i}.w"] = _gauss(rng, w_shape, 0.5 / np.sqrt(2 * h))
        ws.tensors[f"cond.dil{i}.b"] = np.zeros(h, dtype=np.float32)
    for i in range(1, 4):
        ws.tensors[f"cond.up{i}.w"] = _gauss(rng, (h, h, cfg.up_kernel), 0.5 / np.sqrt(cfg.up_kernel * h))
        ws.tensors[f"cond.up{i}.b"] = np.zeros(h, dtype=np.float32)
    proj = _gauss(rng, (g, h), 1.0 / np.sqrt(h))
    ws.tensors["cond.proj.w"] = magnitude_prune(proj, PRUNE_SPARSITY) if pruned else proj
    ws.tensors["cond.proj.b"] = np.zeros(g, dtype=np.float32)
    for gate in ("r", "z", "n"):
        w_mat = _gauss(rng, (g, g), 1.0 / np.sqrt(g))
        u_mat = _gauss(rng, (g, g), 1.0 / np.sqrt(g))
        ws.tensors[f"gru.w{gate}"] = magnitude_prune(w_mat, PRUNE_SPARSITY) if pruned else w_mat
        ws.tensors[f"gru.u{gate}"] = (
            block_diagonal_from_dense(u_mat, GRU_BLOCKS) if pruned else u_mat
        )
        ws.tensors[f"gru.b{gate}"] = np.zeros(g, dtype=np.float32)
    ws.tensors["ar_proj.w"] = _gauss(rng, (g, m), 0.8 / np.sqrt(m))
    ws.tensors["ar_proj.b"] = np.zeros(g, dtype=np.float32)
    mol = _gauss(rng, (m * 3 * k, g), 0.15 / np.sqrt(g))
    ws.tensors["mol_proj.w"] = magnitude_prune(mol, PRUNE_SPARSITY) if pruned else mol
    mol_b = np.zeros((m, 3, k), dtype=np.float32)
    mol_b[:, 2, :] = -2.0  # start with moderate scales (e^-2)
    ws.tensors["mol_proj.b"] = mol_b.reshape(-1)
    ws.metadata.update(
        {
            "vocoder.cond_hidden": str(h),
            "vocoder.gru_dim": str(g),
            "vocoder.n_mix": str(k),
            "qmf.levels": str(cfg.qmf_levels),
            "mol.scale_floor": str(cfg.scale_floor),
        }
    )


def _tasnet_tensors(ws: WeightSet, cfg: TasNetConfig, rng: CounterRng, pruned: bool) -> None:
    f, fm, w = cfg.n_filters, cfg.mask_filters, cfg.window
    c, h = cfg.block_channels, cfg.hidden
    fb = _gauss(rng, (f, w), 1.0 / np.sqrt(w))
    ws.tensors["tasnet.fb_in.w"] = fb
    ws.tensors["tasnet.fb_mask.w"] = _gauss(rng, (fm, w), 1.0 / np.sqrt(w))
    # synthesis filterbank: pseudo-inverse of the analysis bank, so all-ones
    # masks reconstruct the input (pruning exempt, like the paper's filterbanks)
    ws.tensors["tasnet.fb_out.w"] = np.linalg.pinv(fb.astype(np.float64)).T.astype(np.float32)
    for k in range(cfg.n_blocks):
        p = f"tasnet.block{k:02d}"
        in_w = _gauss(rng, (c, h), 0.3 / np.sqrt(h))
        out_w = _gauss(rng, (h, c), 0.3 / np.sqrt(c))
        ws.tensors[f"{p}.in.w"] = magnitude_prune(in_w, PRUNE_SPARSITY) if pruned else in_w
        ws.tensors[f"{p}.in.b"] = np.zeros(c, dtype=np.float32)
        ws.tensors[f"{p}.in_prelu.a"] = np.full(c, 0.25, dtype=np.float32)
        ws.tensors[f"{p}.dw.w"] = _gauss(rng, (c, cfg.depthwise_kernel), 0.3)
        ws.tensors[f"{p}.dw.b"] = np.zeros(c, dtype=np.float32)
        ws.tensors[f"{p}.dw_prelu.a"] = np.full(c, 0.25, dtype=np.float32)
        ws.tensors[f"{p}.out.w"] = magnitude_prune(out_w, PRUNE_SPARSITY) if pruned else out_w
        ws.tensors[f"{p}.out.b"] = np.zeros(h, dtype=np.float32)
    ws.tensors["tasnet.mask_out.w"] = _gauss(rng, (f, fm, cfg.mask_out_kernel), 0.3 / np.sqrt(fm))
    ws.tensors["tasnet.mask_out.b"] = np.full(f, 1.5, dtype=np.float32)  # open masks by default
    ws.metadata.update(
        {
            "tasnet.n_filters": str(f),
            "tasnet.window": str(cfg.window),
            "tasnet.stride": str(cfg.stride),
            "tasnet.mask_filters": str(fm),
            "tasnet.n_repeats": str(cfg.n_repeats),
            "tasnet.blocks_per_repeat": str(cfg.blocks_per_repeat),
            "tasnet.block_channels": str(c),
            "tasnet.hidden": str(h),
            "tasnet.lookahead_frames": str(cfg.lookahead_frames),
        }
    )


def build_weights(
    seed: int = 0,
    vocoder_cfg: VocoderConfig | None = None,
    tasnet_cfg: TasNetConfig | None = None,
    include_tasnet: bool = True,
    pruned: bool = True,
    prototype: np.ndarray | None = None,
    mel_cfg: MelConfig | None = None,
) -> WeightSet:
    """Complete random WeightSet for the given configuration."""
    vocoder_cfg = vocoder_cfg or VocoderConfig()
    mel_cfg = mel_cfg or MelConfig()
    rng = CounterRng(seed)
    ws = WeightSet()
    ws.metadata.update(
        {
            "audio.sample_rate_hz": str(ENGINE_SAMPLE_RATE),
            "mel.window_ms": str(mel_cfg.window_ms),
            "mel.hop_ms": str(mel_cfg.hop_ms),
            "mel.n_mels": str(mel_cfg.n_mels),
            "mel.fft_size": str(mel_cfg.fft_size),
            "mel.fmin_hz": str(mel_cfg.fmin_hz),
            "mel.fmax_hz": str(mel_cfg.fmax_hz),
            "mel.log_floor": str(mel_cfg.log_floor),
        }
    )
    ws.tensors["qmf.prototype"] = np.asarray(
        DEFAULT_PROTOTYPE if prototype is None else prototype, dtype=np.float32
    )
    _quantizer_tensors(ws, seed)
    _vocoder_tensors(ws, vocoder_cfg, rng, pruned)
    if include_tasnet:
        _tasnet_tensors(ws, tasnet_cfg or TasNetConfig(), rng, pruned)
    return ws


def toy_vocoder_config() -> VocoderConfig:
    return VocoderConfig(cond_hidden=16, gru_dim=32, n_mix=4)


def toy_tasnet_config() -> TasNetConfig:
    # overcomplete filterbank (filters >= window), like the full-size config
    return TasNetConfig(
        n_filters=32,
        window=16,
        stride=4,
        mask_filters=16,
        n_repeats=1,
        blocks_per_repeat=4,
        block_channels=24,
        hidden=16,
    )


def build_toy_weights(seed: int = 0, include_tasnet: bool = True, pruned: bool = False) -> WeightSet:
    """Small everything: fast enough for per-test decoding."""
    return build_weights(
        seed=seed,
        vocoder_cfg=toy_vocoder_config(),
        tasnet_cfg=toy_tasnet_config(),
        include_tasnet=include_tasnet,
        pruned=pruned,
    )
