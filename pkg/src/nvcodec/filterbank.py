"""Quadrature-mirror filterbank cascade.

A two-band QMF building block (high-pass h1[n] = (-1)^n h0[n], synthesis
g0 = h0, g1 = -h1, so aliasing cancels identically) is applied recursively
to both outputs, splitting 16 kHz audio into M = 2^levels critically-sampled
subbands. Band order is tree order: the low branch's bands first, then the
high branch's, each recursively.

Two prototypes ship with the engine:

  HAAR_PROTOTYPE     - [1/sqrt(2), 1/sqrt(2)]: exactly perfect reconstruction.
  DEFAULT_PROTOTYPE  - 16-tap linear-phase near-PR lowpass obtained by
                       least-squares flattening of the distortion function
                       A(w)^2 + A(w+pi)^2 with a stopband penalty
                       (max ripple ~1.9e-4, stopband ~-43 dB); two-level
                       reconstruction SNR is ~77 dB on speech-like signals.

Reconstruction delay is (M - 1) * (taps - 1) samples and is reported by the
cascade so callers can align signals.

Streaming: analyzers and synthesizers carry per-stream FIR tails and
decimation phase, so chunk-wise processing is bit-exactly equal to one-shot
processing regardless of chunk sizes.
"""

from __future__ import annotations

import numpy as np

from .audio_io import AudioBuffer
from .errors import ShapeError

HAAR_PROTOTYPE = np.array([2.0**-0.5, 2.0**-0.5])

DEFAULT_PROTOTYPE = np.array(
    [
        -7.0046072284458028e-04,
        1.1592560796230565e-04,
        -4.3745118178715589e-03,
        2.3115510311453390e-02,
        -1.9098614404924211e-03,
        -1.1630872595110571e-01,
        1.2053942509875261e-01,
        6.8657478842656927e-01,
        6.8657478842656927e-01,
        1.2053942509875261e-01,
        -1.1630872595110571e-01,
        -1.9098614404924211e-03,
        2.3115510311453390e-02,
        -4.3745118178715589e-03,
        1.1592560796230565e-04,
        -7.0046072284458028e-04,
    ]
)


def mirror_highpass(h0: np.ndarray) -> np.ndarray:
    """h1[n] = (-1)^n h0[n]."""
    h0 = np.asarray(h0, dtype=np.float64).reshape(-1)
    return h0 * (-1.0) ** np.arange(h0.size)


class _FirStream:
    """Streaming FIR y[n] = sum_k h[k] x[n-k] with a carried input tail."""

    def __init__(self, h: np.ndarray):
        self.h = np.asarray(h, dtype=np.float64).reshape(-1)
        self.tail = np.zeros(self.h.size - 1)

    def push(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size == 0:
            return x
        seg = np.concatenate([self.tail, x])
        if self.h.size > 1:
            self.tail = seg[-(self.h.size - 1) :].copy()
        return np.convolve(seg, self.h, mode="valid")

    def get_state(self) -> np.ndarray:
        return self.tail.copy()

    def set_state(self, tail: np.ndarray) -> None:
        tail = np.asarray(tail, dtype=np.float64).reshape(-1)
        if tail.size != self.h.size - 1:
            raise ShapeError("FIR state size mismatch")
        self.tail = tail.copy()


class _TwoBandAnalysis:
    def __init__(self, h0: np.ndarray):
        self.f0 = _FirStream(h0)
        self.f1 = _FirStream(mirror_highpass(h0))
        self.pos = 0  # global input index parity for the keep-even decimator

    def push(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y0 = self.f0.push(x)
        y1 = self.f1.push(x)
        off = (-self.pos) % 2
        self.pos = (self.pos + len(y0)) % 2
        return y0[off::2], y1[off::2]


class _TwoBandSynthesis:
    def __init__(self, h0: np.ndarray):
        self.f0 = _FirStream(h0)
        self.f1 = _FirStream(-mirror_highpass(h0))

    def push(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        if len(lo) != len(hi):
            raise ShapeError("band chunks must have equal length")
        up0 = np.zeros(2 * len(lo))
        up1 = np.zeros(2 * len(hi))
        up0[0::2] = lo
        up1[0::2] = hi
        return self.f0.push(up0) + self.f1.push(up1)


class QmfAnalyzer:
    """Streaming analysis tree producing M = 2^levels band chunks per push."""

    def __init__(self, prototype: np.ndarray, levels: int):
        if levels < 0:
            raise ShapeError("levels must be >= 0")
        self.levels = levels
        self.node = _TwoBandAnalysis(prototype) if levels > 0 else None
        self.children = (
            (QmfAnalyzer(prototype, levels - 1), QmfAnalyzer(prototype, levels - 1))
            if levels > 1
            else None
        )

    def push(self, x: np.ndarray) -> list[np.ndarray]:
        if self.levels == 0:
            return [np.asarray(x, dtype=np.float64).reshape(-1)]
        lo, hi = self.node.push(x)
        if self.children is None:
            return [lo, hi]
        return self.children[0].push(lo) + self.children[1].push(hi)

    def get_state(self) -> list:
        if self.levels == 0:
            return []
        state = [self.node.f0.get_state(), self.node.f1.get_state(), self.node.pos]
        if self.children:
            state.append(self.children[0].get_state())
            state.append(self.children[1].get_state())
        return state

    def set_state(self, state: list) -> None:
        if self.levels == 0:
            return
        self.node.f0.set_state(state[0])
        self.node.f1.set_state(state[1])
        self.node.pos = int(state[2])
        if self.children:
            self.children[0].set_state(state[3])
            self.children[1].set_state(state[4])


class QmfSynthesizer:
    """Streaming synthesis tree consuming M equal-length band chunks per push."""

    def __init__(self, prototype: np.ndarray, levels: int):
        self.levels = levels
        self.node = _TwoBandSynthesis(prototype) if levels > 0 else None
        self.children = (
            (QmfSynthesizer(prototype, levels - 1), QmfSynthesizer(prototype, levels - 1))
            if levels > 1
            else None
        )

    def push(self, bands) -> np.ndarray:
        bands = [np.asarray(b, dtype=np.float64).reshape(-1) for b in bands]
        if len(bands) != 2**self.levels:
            raise ShapeError(f"expected {2**self.levels} bands, got {len(bands)}")
        if len({len(b) for b in bands}) > 1:
            raise ShapeError("band chunks must have equal length")
        if self.levels == 0:
            return bands[0]
        if self.children is None:
            lo, hi = bands
        else:
            half = len(bands) // 2
            lo = self.children[0].push(bands[:half])
            hi = self.children[1].push(bands[half:])
        return self.node.push(lo, hi)

    def get_state(self) -> list:
        if self.levels == 0:
            return []
        state = [self.node.f0.get_state(), self.node.f1.get_state()]
        if self.children:
            state.append(self.children[0].get_state())
            state.append(self.children[1].get_state())
        return state

    def set_state(self, state: list) -> None:
        if self.levels == 0:
            return
        self.node.f0.set_state(state[0])
        self.node.f1.set_state(state[1])
        if self.children:
            self.children[0].set_state(state[2])
            self.children[1].set_state(state[3])


class QmfCascade:
    """Recursive 2^levels-band QMF split/merge with a fixed group delay."""

    def __init__(self, levels: int = 2, prototype: np.ndarray | None = None):
        if levels < 1:
            raise ShapeError("cascade needs at least one level")
        self.levels = levels
        self.prototype = np.asarray(
            DEFAULT_PROTOTYPE if prototype is None else prototype, dtype=np.float64
        ).reshape(-1)
        if self.prototype.size < 2:
            raise ShapeError("prototype needs at least 2 taps")

    @property
    def n_bands(self) -> int:
        return 2**self.levels

    @property
    def group_delay(self) -> int:
        """Analysis+synthesis delay in samples at the full rate."""
        return (2**self.levels - 1) * (self.prototype.size - 1)

    def make_analyzer(self) -> QmfAnalyzer:
        return QmfAnalyzer(self.prototype, self.levels)

    def make_synthesizer(self) -> QmfSynthesizer:
        return QmfSynthesizer(self.prototype, self.levels)

    def analyze(self, audio) -> np.ndarray:
        """Whole-buffer analysis -> (M, ceil(N/M)) band matrix (input zero-padded)."""
        x = audio.samples if isinstance(audio, AudioBuffer) else np.asarray(audio)
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        m = self.n_bands
        pad = (-x.size) % m
        if pad:
            x = np.concatenate([x, np.zeros(pad)])
        bands = self.make_analyzer().push(x)
        return np.stack(bands) if x.size else np.zeros((m, 0))

    def synthesize(self, bands) -> np.ndarray:
        """Whole-buffer synthesis -> M * band_length samples."""
        return self.make_synthesizer().push(list(np.asarray(bands, dtype=np.float64)))
