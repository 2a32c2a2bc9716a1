"""Causal ConvTASNet speech enhancer and the SI-SNR metric.

Pipeline:  frames -> learned analysis filterbank F (256 filters, 4 ms window,
1 ms stride) -> sigmoid masks from a causal mask network -> masked frames ->
learned transpose filterbank, overlap-added back to the time domain.

The mask network runs on a separate 128-filter filterbank over the same
frames: twenty depthwise-convolutional blocks (two repeats of ten), each an
inverted bottleneck (1x1 conv up, PReLU, causal depthwise kernel 3 with
dilation 2^(k mod 10), PReLU, 1x1 conv down) with an additive skip
connection, then a stride-1 transpose conv (kernel 3) up to 256 channels and
a sigmoid. There is no layer-wise normalization anywhere: the graph stays
causal frame to frame.

Lookahead: the mixture path is delayed by L mask frames relative to the
masks, i.e. masked[t] = fb[t] * mask[t + L]. On top of that the overlapped
4 ms window itself smears W-1 samples, so the total algorithmic lookahead is
L*H + (W-1) samples (95 for the default L = 2); output sample i never
depends on input after i + lookahead_samples, and that boundary is exact.

Synthesis divides the overlap-add sum by the per-sample window coverage
count, so a transpose filterbank built as pinv(F) reconstructs edges exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import CodecError, ShapeError
from .kernels import Matrix, depthwise_conv1d, matmul, prelu, sigmoid, transpose_conv1d
from .weights import WeightSet

SI_SNR_CAP_DB = 100.0


@dataclass(frozen=True)
class TasNetConfig:
    """On-device causal ConvTASNet hyperparameters."""

    sample_rate_hz: int = 16000
    n_filters: int = 256          # F: analysis/synthesis filterbank size
    window: int = 64              # 4 ms at 16 kHz
    stride: int = 16              # 1 ms hop -> 1000 masked frames per second
    mask_filters: int = 128       # F': mask-network input filterbank
    n_repeats: int = 2
    blocks_per_repeat: int = 10
    block_channels: int = 256
    hidden: int = 128             # inter-block width
    depthwise_kernel: int = 3
    dilation_period: int = 10     # d in 2^(k mod d)
    mask_out_kernel: int = 3
    lookahead_frames: int = 2     # L: delay between masks and mixture

    @property
    def n_blocks(self) -> int:
        return self.n_repeats * self.blocks_per_repeat

    @property
    def frame_rate_hz(self) -> int:
        return self.sample_rate_hz // self.stride

    def dilation(self, k: int) -> int:
        return 2 ** (k % self.dilation_period)

    @property
    def lookahead_samples(self) -> int:
        """Total algorithmic lookahead: mask delay plus window overlap."""
        return self.lookahead_frames * self.stride + (self.window - 1)

    @classmethod
    def from_metadata(cls, ws: WeightSet) -> "TasNetConfig":
        return cls(
            n_filters=ws.meta_int("tasnet.n_filters", 256),
            window=ws.meta_int("tasnet.window", 64),
            stride=ws.meta_int("tasnet.stride", 16),
            mask_filters=ws.meta_int("tasnet.mask_filters", 128),
            n_repeats=ws.meta_int("tasnet.n_repeats", 2),
            blocks_per_repeat=ws.meta_int("tasnet.blocks_per_repeat", 10),
            block_channels=ws.meta_int("tasnet.block_channels", 256),
            hidden=ws.meta_int("tasnet.hidden", 128),
            lookahead_frames=ws.meta_int("tasnet.lookahead_frames", 2),
        )


@dataclass
class _Block:
    in_w: Matrix
    in_b: np.ndarray
    in_alpha: np.ndarray
    dw_w: np.ndarray
    dw_b: np.ndarray
    dw_alpha: np.ndarray
    out_w: Matrix
    out_b: np.ndarray
    dilation: int


@dataclass
class TasNetWeights:
    fb_in: np.ndarray     # (F, W) analysis filters, rows = filters
    fb_mask: np.ndarray   # (F', W)
    fb_out: np.ndarray    # (F, W) synthesis filters
    blocks: list[_Block]
    mask_out_w: np.ndarray  # (F, F', kernel) stride-1 transpose conv
    mask_out_b: np.ndarray
    cfg: TasNetConfig

    def describe(self) -> list[str]:
        """Ordered op list of the mask network (structural test surface)."""
        ops = ["filterbank"]
        for k, b in enumerate(self.blocks):
            ops += [
                f"block{k:02d}.conv1x1_in",
                f"block{k:02d}.prelu",
                f"block{k:02d}.depthwise(d={b.dilation})",
                f"block{k:02d}.prelu",
                f"block{k:02d}.conv1x1_out",
                f"block{k:02d}.skip_add",
            ]
        ops += ["transpose_conv", "sigmoid"]
        return ops


def load_tasnet_weights(ws: WeightSet, cfg: TasNetConfig | None = None) -> TasNetWeights:
    cfg = cfg or TasNetConfig.from_metadata(ws)
    f, fm, w = cfg.n_filters, cfg.mask_filters, cfg.window
    c, h = cfg.block_channels, cfg.hidden
    blocks = []
    for k in range(cfg.n_blocks):
        p = f"tasnet.block{k:02d}"
        blocks.append(
            _Block(
                in_w=ws.get(f"{p}.in.w", (c, h)),
                in_b=ws.dense(f"{p}.in.b", (c,)),
                in_alpha=ws.dense(f"{p}.in_prelu.a", (c,)),
                dw_w=ws.dense(f"{p}.dw.w", (c, cfg.depthwise_kernel)),
                dw_b=ws.dense(f"{p}.dw.b", (c,)),
                dw_alpha=ws.dense(f"{p}.dw_prelu.a", (c,)),
                out_w=ws.get(f"{p}.out.w", (h, c)),
                out_b=ws.dense(f"{p}.out.b", (h,)),
                dilation=cfg.dilation(k),
            )
        )
    return TasNetWeights(
        fb_in=ws.dense("tasnet.fb_in.w", (f, w)),
        fb_mask=ws.dense("tasnet.fb_mask.w", (fm, w)),
        fb_out=ws.dense("tasnet.fb_out.w", (f, w)),
        blocks=blocks,
        mask_out_w=ws.dense("tasnet.mask_out.w", (f, fm, cfg.mask_out_kernel)),
        mask_out_b=ws.dense("tasnet.mask_out.b", (f,)),
        cfg=cfg,
    )


def has_tasnet(ws: WeightSet) -> bool:
    return "tasnet.fb_in.w" in ws


def _frames(x: np.ndarray, window: int, stride: int) -> np.ndarray:
    """ceil(N/stride) frames starting at t*stride, zero-padded at the tail."""
    n = -(-x.size // stride) if x.size else 0
    padded = np.zeros((n - 1) * stride + window if n else 0)
    padded[: x.size] = x
    idx = np.arange(window)[None, :] + stride * np.arange(n)[:, None]
    return padded[idx] if n else np.zeros((0, window))


def compute_masks(frames_mask_fb: np.ndarray, w: TasNetWeights) -> np.ndarray:
    """Mask-network forward pass: (T, F') features -> (T, F) masks in (0,1)."""
    y = frames_mask_fb
    for b in w.blocks:
        a = prelu(matmul(b.in_w, y) + b.in_b, b.in_alpha)
        a = prelu(depthwise_conv1d(a, b.dw_w, dilation=b.dilation) + b.dw_b, b.dw_alpha)
        y = y + (matmul(b.out_w, a) + b.out_b)  # skip: block output = input + residual
    logits = transpose_conv1d(y, w.mask_out_w, stride=1)[: len(y)] + w.mask_out_b
    return sigmoid(logits)


def denoise(audio: AudioBuffer, weights: WeightSet | TasNetWeights, cfg: TasNetConfig | None = None) -> AudioBuffer:
    """Enhance one utterance; output has the input's length.

    masked[t] = fb[t] * mask[t + L]: the mixture path is delayed L mask
    frames relative to the masks, giving the network that much lookahead.
    """
    w = weights if isinstance(weights, TasNetWeights) else load_tasnet_weights(weights, cfg)
    c = w.cfg
    audio.require_engine_rate()
    x = audio.samples.astype(np.float64)
    n = x.size
    if n == 0:
        return AudioBuffer(np.zeros(0, dtype=np.float32), audio.sample_rate_hz)
    # frame the input padded with L*H zeros so mask frames t+L exist for all t
    frames = _frames(np.concatenate([x, np.zeros(c.lookahead_frames * c.stride)]), c.window, c.stride)
    n_content = -(-n // c.stride)
    fb = frames[:n_content] @ w.fb_in.astype(np.float64).T
    masks = compute_masks(frames @ w.fb_mask.astype(np.float64).T, w)
    masked = fb * masks[c.lookahead_frames : c.lookahead_frames + n_content]
    chunks = masked @ w.fb_out.astype(np.float64)
    out = np.zeros(n_content * c.stride + c.window)
    coverage = np.zeros_like(out)
    for t in range(n_content):
        out[t * c.stride : t * c.stride + c.window] += chunks[t]
        coverage[t * c.stride : t * c.stride + c.window] += 1.0
    out = out[:n] / np.maximum(coverage[:n], 1.0)
    return AudioBuffer(np.clip(out, -1.0, 1.0).astype(np.float32), audio.sample_rate_hz)


def si_snr(estimate: AudioBuffer | np.ndarray, reference: AudioBuffer | np.ndarray) -> float:
    """Scale-invariant SNR in dB, capped at 100.

    The estimate is projected onto the reference; the ratio of projected to
    residual energy is reported. Positive rescaling of the estimate cannot
    change the value (exactly so for estimate == c * reference, which hits
    the cap).
    """
    e = (estimate.samples if isinstance(estimate, AudioBuffer) else np.asarray(estimate)).astype(np.float64)
    r = (reference.samples if isinstance(reference, AudioBuffer) else np.asarray(reference)).astype(np.float64)
    if e.shape != r.shape:
        raise ShapeError(f"length mismatch: estimate {e.shape}, reference {r.shape}")
    ref_energy = float(np.dot(r, r))
    if ref_energy == 0.0:
        raise CodecError("reference signal has zero energy")
    alpha = float(np.dot(e, r)) / ref_energy
    target = alpha * r
    residual = e - target
    num = float(np.dot(target, target))
    den = float(np.dot(residual, residual))
    if den == 0.0 or num >= den * 10.0 ** (SI_SNR_CAP_DB / 10.0):
        return SI_SNR_CAP_DB
    if num == 0.0 or num <= den * 10.0 ** (-SI_SNR_CAP_DB / 10.0):
        return -SI_SNR_CAP_DB
    return 10.0 * np.log10(num / den)


def si_snr_improvement(noisy, enhanced, clean) -> float:
    """SI-SNRi: si_snr(enhanced, clean) - si_snr(noisy, clean)."""
    return si_snr(enhanced, clean) - si_snr(noisy, clean)
