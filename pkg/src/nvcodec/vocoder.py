"""Multi-band WaveGRU decoder.

The conditioning stack consumes 25 Hz log-mel frames and produces one vector
per GRU step (4 kHz for the 4-band engine):

    input conv (kernel 3, one frame of lookahead)   25 Hz
    3 dilated causal convs (kernel 2, dilation 1/2/4)
    3 transpose convs (kernel 4, stride 2)          25 -> 50 -> 100 -> 200 Hz
    linear projection to the GRU width, then tiling 200 Hz -> 4 kHz

tanh follows every convolution; the projection is linear. The GRU input is
the sum of the conditioning vector and a linear projection of the previous
step's M subband samples. Each step the GRU state is projected to M*K*3
mixture-of-logistics parameters; one sample per band is drawn by picking a
component with one uniform draw and inverse-CDF transforming a second, and
the QMF synthesis bank turns every M-sample group into M output samples.

All randomness comes from the counter-based generator in rng.py: per step,
2*M uniforms are consumed in band order (u1 then u2 for band 0, then band 1,
and so on), which makes decoding reproducible and lets a state snapshot
resume bit-exactly.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .audio_io import ENGINE_SAMPLE_RATE, AudioBuffer
from .errors import ShapeError
from .features import FRAME_RATE_HZ, N_MELS, frames_to_matrix
from .filterbank import QmfCascade, QmfSynthesizer
from .kernels import GruWeights, Matrix, gru_step, matmul, transpose_conv1d
from .rng import CounterRng
from .weights import WeightSet

SCALE_FLOOR = 1e-4


@dataclass(frozen=True)
class VocoderConfig:
    """Decoder-side hyperparameters; defaults are the 16 kHz engine values."""

    n_mels: int = N_MELS
    frame_rate_hz: int = FRAME_RATE_HZ
    sample_rate_hz: int = ENGINE_SAMPLE_RATE
    cond_hidden: int = 512
    gru_dim: int = 1024
    qmf_levels: int = 2
    n_mix: int = 8
    lookahead_frames: int = 1
    dilations: tuple[int, ...] = (1, 2, 4)
    up_kernel: int = 4
    scale_floor: float = SCALE_FLOOR

    @property
    def n_bands(self) -> int:
        return 2**self.qmf_levels

    @property
    def band_rate_hz(self) -> int:
        if self.sample_rate_hz % self.n_bands:
            raise ShapeError("band count must divide the sample rate")
        return self.sample_rate_hz // self.n_bands

    @property
    def steps_per_frame(self) -> int:
        if self.band_rate_hz % self.frame_rate_hz:
            raise ShapeError("GRU rate must be a multiple of the frame rate")
        return self.band_rate_hz // self.frame_rate_hz

    @property
    def samples_per_frame(self) -> int:
        return self.steps_per_frame * self.n_bands

    @property
    def up_strides(self) -> tuple[int, ...]:
        # three doubling transpose convolutions: 25 -> 50 -> 100 -> 200 Hz
        return (2, 2, 2)

    @property
    def upsampled_rate_hz(self) -> int:
        return self.frame_rate_hz * int(np.prod(self.up_strides))

    @property
    def tile_factor(self) -> int:
        if self.band_rate_hz % self.upsampled_rate_hz:
            raise ShapeError("tiling factor must be integral")
        return self.band_rate_hz // self.upsampled_rate_hz

    @classmethod
    def from_metadata(cls, ws: WeightSet) -> "VocoderConfig":
        return cls(
            cond_hidden=ws.meta_int("vocoder.cond_hidden", 512),
            gru_dim=ws.meta_int("vocoder.gru_dim", 1024),
            qmf_levels=ws.meta_int("qmf.levels", 2),
            n_mix=ws.meta_int("vocoder.n_mix", 8),
            scale_floor=ws.meta_float("mol.scale_floor", SCALE_FLOOR),
        )


@dataclass
class VocoderWeights:
    """Parsed canonical tensors for the decoder graph."""

    conv_in_w: np.ndarray
    conv_in_b: np.ndarray
    dil_w: list[np.ndarray]
    dil_b: list[np.ndarray]
    up_w: list[np.ndarray]
    up_b: list[np.ndarray]
    proj_w: Matrix
    proj_b: np.ndarray
    gru: GruWeights
    ar_w: np.ndarray
    ar_b: np.ndarray
    mol_w: Matrix
    mol_b: np.ndarray
    qmf: QmfCascade
    cfg: VocoderConfig


def load_vocoder_weights(ws: WeightSet, cfg: VocoderConfig | None = None) -> VocoderWeights:
    """Fetch and shape-check every tensor the decoder needs.

    Raises MissingTensorError naming the first absent or misshaped tensor.
    """
    cfg = cfg or VocoderConfig.from_metadata(ws)
    h, g, m, k = cfg.cond_hidden, cfg.gru_dim, cfg.n_bands, cfg.n_mix
    dil_w, dil_b, up_w, up_b = [], [], [], []
    for i in range(1, 4):
        dil_w.append(ws.dense(f"cond.dil{i}.w", (h, h, 2)))
        dil_b.append(ws.dense(f"cond.dil{i}.b", (h,)))
        up_w.append(ws.dense(f"cond.up{i}.w", (h, h, cfg.up_kernel)))
        up_b.append(ws.dense(f"cond.up{i}.b", (h,)))
    gru = GruWeights(
        wr=ws.get("gru.wr", (g, g)),
        wz=ws.get("gru.wz", (g, g)),
        wn=ws.get("gru.wn", (g, g)),
        ur=ws.get("gru.ur", (g, g)),
        uz=ws.get("gru.uz", (g, g)),
        un=ws.get("gru.un", (g, g)),
        br=ws.dense("gru.br", (g,)).astype(np.float64),
        bz=ws.dense("gru.bz", (g,)).astype(np.float64),
        bn=ws.dense("gru.bn", (g,)).astype(np.float64),
    )
    prototype = ws.dense("qmf.prototype") if "qmf.prototype" in ws else None
    return VocoderWeights(
        conv_in_w=ws.dense("cond.conv_in.w", (h, cfg.n_mels, 3)),
        conv_in_b=ws.dense("cond.conv_in.b", (h,)),
        dil_w=dil_w,
        dil_b=dil_b,
        up_w=up_w,
        up_b=up_b,
        proj_w=ws.get("cond.proj.w", (g, h)),
        proj_b=ws.dense("cond.proj.b", (g,)),
        gru=gru,
        ar_w=ws.dense("ar_proj.w", (g, m)),
        ar_b=ws.dense("ar_proj.b", (g,)),
        mol_w=ws.get("mol_proj.w", (m * 3 * k, g)),
        mol_b=ws.dense("mol_proj.b", (m * 3 * k,)),
        qmf=QmfCascade(cfg.qmf_levels, prototype),
        cfg=cfg,
    )


# ---------------------------------------------------------------------------
# mixture of logistics


def _split_params(params: np.ndarray):
    p = np.asarray(params, dtype=np.float64)
    if p.ndim < 2 or p.shape[-2] != 3:
        raise ShapeError(f"MoL params must be (..., 3, K), got {p.shape}")
    return p[..., 0, :], p[..., 1, :], p[..., 2, :]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def mol_sample(params, u1, u2, scale_floor: float = SCALE_FLOOR):
    """Draw from a K-component logistic mixture via two uniforms in (0,1).

    u1 picks the component by inverse CDF over softmax(logits); u2 is pushed
    through the logistic quantile mean + scale*(ln u2 - ln(1-u2)). Scales are
    floored at scale_floor and the sample is clamped to [-1, 1].

    params is (..., 3, K): [logits, means, log_scales] rows; u1/u2 broadcast
    against the leading dimensions.
    """
    logits, means, log_scales = _split_params(params)
    w = np.exp(_log_softmax(logits))
    cum = np.cumsum(w, axis=-1)
    u1 = np.asarray(u1, dtype=np.float64)
    j = np.sum(cum <= u1[..., None], axis=-1)
    j = np.minimum(j, logits.shape[-1] - 1)
    k = means.shape[-1]
    means_b = np.broadcast_to(means, j.shape + (k,))
    ls_b = np.broadcast_to(log_scales, j.shape + (k,))
    mean_j = np.take_along_axis(means_b, j[..., None], axis=-1)[..., 0]
    ls_j = np.take_along_axis(ls_b, j[..., None], axis=-1)[..., 0]
    scale = np.exp(np.maximum(ls_j, np.log(scale_floor)))
    u2 = np.asarray(u2, dtype=np.float64)
    sample = mean_j + scale * (np.log(u2) - np.log1p(-u2))
    out = np.clip(sample, -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def mol_log_likelihood(params, x, scale_floor: float = SCALE_FLOOR):
    """log-density of x under the logistic mixture (continuous, scale-floored).

    log sum_j softmax(logits)_j * pdf(x; mean_j, scale_j) with
    log pdf = -z - log(scale) - 2*softplus(-z), z = (x - mean)/scale.
    """
    logits, means, log_scales = _split_params(params)
    log_w = _log_softmax(logits)
    ls = np.maximum(log_scales, np.log(scale_floor))
    scale = np.exp(ls)
    x = np.asarray(x, dtype=np.float64)
    z = (x[..., None] - means) / scale
    log_pdf = -z - ls - 2.0 * np.logaddexp(0.0, -z)
    joint = log_w + log_pdf
    peak = joint.max(axis=-1, keepdims=True)
    out = (peak + np.log(np.sum(np.exp(joint - peak), axis=-1, keepdims=True)))[..., 0]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# streaming conditioning stack


class _StreamConv:
    """Chunk-wise conv1d with carried history; bit-exact vs one-shot."""

    def __init__(self, kernel: np.ndarray, bias: np.ndarray, dilation: int, lookahead: int):
        self.kernel = np.asarray(kernel, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.dilation = dilation
        self.lookahead = lookahead
        c_in = self.kernel.shape[1]
        self.ctx = (self.kernel.shape[2] - 1) * dilation
        self.hist = np.zeros((self.ctx, c_in))
        self.n_in = 0
        self.n_out = 0

    def _emit(self, seg: np.ndarray, n_in_old: int, n_new: int) -> np.ndarray:
        width = self.kernel.shape[2]
        out = np.zeros((n_new, self.kernel.shape[0]))
        for j in range(width):
            start = self.n_out + self.lookahead - j * self.dilation - n_in_old + self.ctx
            out += seg[start : start + n_new] @ self.kernel[:, :, j].T
        self.n_out += n_new
        return np.tanh(out + self.bias)

    def push(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        seg = np.concatenate([self.hist, x]) if x.size else self.hist
        n_in_old = self.n_in
        self.n_in += len(x)
        n_new = max(0, self.n_in - self.lookahead) - self.n_out
        out = self._emit(seg, n_in_old, n_new) if n_new else np.zeros((0, self.kernel.shape[0]))
        if self.ctx:
            self.hist = seg[len(seg) - self.ctx :].copy() if len(seg) >= self.ctx else np.concatenate(
                [np.zeros((self.ctx - len(seg), seg.shape[1])), seg]
            )
        return out

    def flush(self) -> np.ndarray:
        pad = np.zeros((self.lookahead, self.kernel.shape[1]))
        seg = np.concatenate([self.hist, pad])
        n_new = self.n_in - self.n_out
        return self._emit(seg, self.n_in, n_new) if n_new > 0 else np.zeros((0, self.kernel.shape[0]))

    def get_state(self):
        return {"hist": self.hist.copy(), "n_in": self.n_in, "n_out": self.n_out}

    def set_state(self, st):
        self.hist = np.asarray(st["hist"], dtype=np.float64).reshape(self.hist.shape).copy()
        self.n_in = int(st["n_in"])
        self.n_out = int(st["n_out"])


class _StreamUp:
    """Chunk-wise transpose conv (stride s): carries the last few inputs."""

    def __init__(self, kernel: np.ndarray, bias: np.ndarray, stride: int):
        self.kernel = np.asarray(kernel, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.stride = stride
        self.carry_len = max(0, -(-self.kernel.shape[2] // stride) - 1)
        self.carry = np.zeros((0, self.kernel.shape[1]))

    def push(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if len(x) == 0:
            return np.zeros((0, self.kernel.shape[0]))
        local = np.concatenate([self.carry, x])
        full = transpose_conv1d(local, self.kernel, self.stride)
        out = full[self.stride * len(self.carry) :]
        keep = min(self.carry_len, len(local))
        self.carry = local[len(local) - keep :].copy()
        return np.tanh(out + self.bias)

    def get_state(self):
        return {"carry": self.carry.copy()}

    def set_state(self, st):
        self.carry = np.asarray(st["carry"], dtype=np.float64).reshape(-1, self.kernel.shape[1]).copy()


class ConditioningStream:
    """Streaming conditioning stack: push feature frames, get step vectors.

    Total lookahead is exactly one feature frame (the input convolution);
    every other layer is causal, upsampling included.
    """

    def __init__(self, w: VocoderWeights):
        cfg = w.cfg
        self.cfg = cfg
        self.conv_in = _StreamConv(w.conv_in_w, w.conv_in_b, 1, cfg.lookahead_frames)
        self.dils = [
            _StreamConv(kw, kb, d, 0) for kw, kb, d in zip(w.dil_w, w.dil_b, cfg.dilations)
        ]
        self.ups = [_StreamUp(kw, kb, s) for kw, kb, s in zip(w.up_w, w.up_b, cfg.up_strides)]
        self.proj_w = w.proj_w
        self.proj_b = np.asarray(w.proj_b, dtype=np.float64)

    def _tail(self, h: np.ndarray) -> np.ndarray:
        for layer in self.dils:
            h = layer.push(h)
        for layer in self.ups:
            h = layer.push(h)
        h = matmul(self.proj_w, h) + self.proj_b
        return np.repeat(h, self.cfg.tile_factor, axis=0)

    def push(self, frames: np.ndarray) -> np.ndarray:
        """frames (n, n_mels) -> (steps, gru_dim); lags one frame behind."""
        return self._tail(self.conv_in.push(np.atleast_2d(frames)))

    def flush(self) -> np.ndarray:
        """Emit the vectors held back by the lookahead (zero-padded future)."""
        return self._tail(self.conv_in.flush())

    def get_state(self):
        return {
            "conv_in": self.conv_in.get_state(),
            "dils": [d.get_state() for d in self.dils],
            "ups": [u.get_state() for u in self.ups],
        }

    def set_state(self, st):
        self.conv_in.set_state(st["conv_in"])
        for d, s in zip(self.dils, st["dils"]):
            d.set_state(s)
        for u, s in zip(self.ups, st["ups"]):
            u.set_state(s)


def condition(features, ws_or_weights, cfg: VocoderConfig | None = None) -> np.ndarray:
    """One-shot conditioning: (n_frames, n_mels) -> (steps_per_frame*n, gru_dim)."""
    w = ws_or_weights if isinstance(ws_or_weights, VocoderWeights) else load_vocoder_weights(ws_or_weights, cfg)
    mat = frames_to_matrix(features) if not isinstance(features, np.ndarray) else np.asarray(features)
    if mat.ndim != 2 or mat.shape[1] != w.cfg.n_mels:
        raise ShapeError(f"features must be (n, {w.cfg.n_mels}), got {mat.shape}")
    stream = ConditioningStream(w)
    return np.concatenate([stream.push(mat), stream.flush()], axis=0)


# ---------------------------------------------------------------------------
# autoregressive decoding


class Decoder:
    """Streaming decoder holding the full generation state.

    push() accepts whole feature frames and returns the finished audio chunk;
    snapshot()/restore() serialize every piece of state (GRU vector, last
    band samples, conditioning buffers, synthesis delay lines, RNG counter)
    so a restored decoder continues bit-exactly.
    """

    def __init__(self, weights: WeightSet | VocoderWeights, seed: int = 0, cfg: VocoderConfig | None = None):
        self.w = weights if isinstance(weights, VocoderWeights) else load_vocoder_weights(weights, cfg)
        self.cfg = self.w.cfg
        self.cond = ConditioningStream(self.w)
        self.synth: QmfSynthesizer = self.w.qmf.make_synthesizer()
        self.rng = CounterRng(seed)
        self.h = np.zeros(self.cfg.gru_dim)
        self.prev = np.zeros(self.cfg.n_bands)
        self.frames_in = 0
        self.flushed = False

    def _run_steps(self, cond_vecs: np.ndarray) -> np.ndarray:
        m, k = self.cfg.n_bands, self.cfg.n_mix
        steps = len(cond_vecs)
        bands = np.empty((m, steps))
        ar_w = self.w.ar_w.astype(np.float64)
        ar_b = self.w.ar_b.astype(np.float64)
        mol_b = self.w.mol_b.astype(np.float64)
        for i in range(steps):
            x = cond_vecs[i] + ar_w @ self.prev + ar_b
            self.h = gru_step(self.h, x, self.w.gru)
            params = (matmul(self.w.mol_w, self.h) + mol_b).reshape(m, 3, k)
            u = self.rng.uniform(2 * m)
            self.prev = mol_sample(params, u[0::2], u[1::2], self.cfg.scale_floor)
            bands[:, i] = self.prev
        return bands

    def push(self, frames) -> np.ndarray:
        """Feed feature frames; returns the audio samples finished by them."""
        if self.flushed:
            raise ShapeError("decoder already flushed")
        mat = frames_to_matrix(frames) if not isinstance(frames, np.ndarray) else np.atleast_2d(frames)
        self.frames_in += mat.shape[0]
        bands = self._run_steps(self.cond.push(mat))
        return self.synth.push(list(bands))

    def flush(self) -> np.ndarray:
        if self.flushed:
            return np.zeros(0)
        self.flushed = True
        bands = self._run_steps(self.cond.flush())
        return self.synth.push(list(bands))

    # -- state serialization ------------------------------------------------

    def snapshot(self) -> dict:
        import copy

        return copy.deepcopy(
            {
                "h": self.h,
                "prev": self.prev,
                "rng": self.rng.state(),
                "cond": self.cond.get_state(),
                "synth": self.synth.get_state(),
                "frames_in": self.frames_in,
                "flushed": self.flushed,
            }
        )

    def restore(self, state: dict) -> None:
        import copy

        state = copy.deepcopy(state)
        self.h = np.asarray(state["h"], dtype=np.float64)
        self.prev = np.asarray(state["prev"], dtype=np.float64)
        self.rng = CounterRng(*state["rng"])
        self.cond.set_state(state["cond"])
        self.synth.set_state(state["synth"])
        self.frames_in = int(state["frames_in"])
        self.flushed = bool(state["flushed"])

    def snapshot_bytes(self) -> bytes:
        """Snapshot as a self-contained npz blob (float64-exact)."""
        flat: dict[str, np.ndarray] = {}
        _flatten_state("s", self.snapshot(), flat)
        buf = io.BytesIO()
        np.savez(buf, **flat)
        return buf.getvalue()

    def restore_bytes(self, blob: bytes) -> None:
        flat = dict(np.load(io.BytesIO(blob)).items())
        template = self.snapshot()
        self.restore(_unflatten_state("s", template, flat))


def _flatten_state(prefix: str, obj, out: dict) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten_state(f"{prefix}.{k}", v, out)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten_state(f"{prefix}.{i}", v, out)
    elif isinstance(obj, np.ndarray):
        out[prefix] = obj
    else:
        out[prefix] = np.array(int(obj), dtype=np.int64)


def _unflatten_state(prefix: str, template, flat: dict):
    if isinstance(template, dict):
        return {k: _unflatten_state(f"{prefix}.{k}", v, flat) for k, v in template.items()}
    if isinstance(template, (list, tuple)):
        seq = [_unflatten_state(f"{prefix}.{i}", v, flat) for i, v in enumerate(template)]
        return type(template)(seq)
    value = flat[prefix]
    if isinstance(template, np.ndarray):
        return value  # stored shape wins: streaming buffers grow over time
    return type(template)(value)


def decode(features, weights: WeightSet | VocoderWeights, seed: int = 0, cfg: VocoderConfig | None = None) -> AudioBuffer:
    """Decode feature frames to audio: exactly samples_per_frame * n samples."""
    dec = Decoder(weights, seed, cfg)
    audio = np.concatenate([dec.push(features), dec.flush()])
    return AudioBuffer(np.clip(audio, -1.0, 1.0).astype(np.float32), dec.cfg.sample_rate_hz)


def teacher_forced_nll(features, target: AudioBuffer, weights: WeightSet | VocoderWeights, cfg: VocoderConfig | None = None) -> float:
    """Mean negative log-likelihood per subband sample under teacher forcing.

    The graph is the decoding graph, but the autoregressive input is the
    ground-truth previous band samples from the QMF analysis of the target.
    """
    w = weights if isinstance(weights, VocoderWeights) else load_vocoder_weights(weights, cfg)
    cfg = w.cfg
    mat = frames_to_matrix(features) if not isinstance(features, np.ndarray) else np.asarray(features)
    bands = w.qmf.analyze(target)
    steps = bands.shape[1]
    if steps != mat.shape[0] * cfg.steps_per_frame:
        raise ShapeError(
            f"target yields {steps} band steps but features cover {mat.shape[0] * cfg.steps_per_frame}"
        )
    cond = condition(mat, w)
    prev = np.concatenate([np.zeros((cfg.n_bands, 1)), bands[:, :-1]], axis=1)
    x_all = cond + prev.T @ w.ar_w.astype(np.float64).T + w.ar_b.astype(np.float64)
    m, k = cfg.n_bands, cfg.n_mix
    mol_b = w.mol_b.astype(np.float64)
    h = np.zeros(cfg.gru_dim)
    total = 0.0
    for t in range(steps):
        h = gru_step(h, x_all[t], w.gru)
        params = (matmul(w.mol_w, h) + mol_b).reshape(m, 3, k)
        total += float(np.sum(mol_log_likelihood(params, bands[:, t], cfg.scale_floor)))
    return -total / (steps * m) if steps else 0.0
