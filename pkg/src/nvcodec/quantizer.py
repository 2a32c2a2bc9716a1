"""3 kbps conditioning-feature codec: KLT, split vector quantization, bitstream.

Each 160-dim log-mel frame is decorrelated by a Karhunen-Loeve transform
(eigenbasis of the training-feature covariance, rows ordered by descending
eigenvalue), split into fixed sub-vectors, and each sub-vector is replaced by
the index of its nearest codeword. 15 sub-vectors x 8 bits = 120 bits per
frame; at the 25 Hz feature rate that is exactly 3000 bits per second.

The sub-vector layout is data, not code: it ships inside the weight file and
any fixed partition summing to 160 dims / 120 bits works. The default is ten
11-dim plus five 10-dim sub-vectors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BitstreamError, InsufficientDataError, ShapeError
from .features import N_MELS, FRAME_RATE_HZ, FeatureFrame, frames_to_matrix
from .rng import CounterRng

FRAME_BITS = 120
DEFAULT_LAYOUT = tuple([11] * 10 + [10] * 5)
DEFAULT_BITS = tuple([8] * 15)

BITSTREAM_MAGIC = b"NVC1"
BITSTREAM_VERSION = 1


@dataclass
class KltBasis:
    """Mean vector plus orthonormal basis rows in descending-eigenvalue order."""

    mean: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.basis = np.asarray(self.basis, dtype=np.float64)
        n = self.mean.size
        if self.basis.shape != (n, n):
            raise ShapeError(f"basis must be ({n}, {n}), got {self.basis.shape}")

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) @ self.basis.T

    def inverse(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) @ self.basis + self.mean


@dataclass
class SplitVqCodebooks:
    """Per-sub-vector codebooks; dims must sum to the feature size."""

    codebooks: list[np.ndarray]  # codebook i: (2**bits_i, dim_i)
    bits: tuple[int, ...] = DEFAULT_BITS

    def __post_init__(self):
        self.codebooks = [np.asarray(cb, dtype=np.float64) for cb in self.codebooks]
        self.bits = tuple(int(b) for b in self.bits)
        if len(self.codebooks) != len(self.bits):
            raise ShapeError("one bit width per codebook required")
        for cb, b in zip(self.codebooks, self.bits):
            if cb.shape[0] != 2**b:
                raise ShapeError(f"codebook has {cb.shape[0]} rows, expected {2**b}")
            if not np.all(np.isfinite(cb)):
                raise ShapeError("codebook contains non-finite values")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(cb.shape[1] for cb in self.codebooks)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def frame_bits(self) -> int:
        return sum(self.bits)


def fit_klt(frames, regularization: float = 1e-6) -> KltBasis:
    """Eigenbasis of the sample covariance, regularized on the diagonal.

    Requires at least dim+1 frames. Eigenvector sign is canonicalized
    (largest-magnitude component positive) so the basis is deterministic.
    """
    mat = frames_to_matrix(frames).astype(np.float64) if not isinstance(frames, np.ndarray) else np.asarray(frames, dtype=np.float64)
    n, d = mat.shape
    if n < d + 1:
        raise InsufficientDataError(f"KLT needs at least {d + 1} frames, got {n}")
    if not np.all(np.isfinite(mat)):
        raise ShapeError("features contain non-finite values")
    mean = mat.mean(axis=0)
    centered = mat - mean
    cov = centered.T @ centered / n
    cov[np.diag_indices(d)] += regularization * np.trace(cov) / d
    eigvals, eigvecs = np.linalg.eigh(cov)
    basis = eigvecs[:, ::-1].T  # rows = eigenvectors, descending eigenvalue
    flip = basis[np.arange(d), np.argmax(np.abs(basis), axis=1)] < 0
    basis[flip] *= -1.0
    return KltBasis(mean, basis)


def _nearest_codeword(y: np.ndarray, codebook: np.ndarray) -> int:
    d = np.sum((codebook - y[None, :]) ** 2, axis=1)
    return int(np.argmin(d))  # argmin takes the first minimum: lowest-index tie-break


def encode_frame(frame, klt: KltBasis, cb: SplitVqCodebooks) -> np.ndarray:
    """Nearest-codeword indices per sub-vector (squared error, low-index ties)."""
    values = frame.values if isinstance(frame, FeatureFrame) else np.asarray(frame)
    if values.size != cb.total_dim:
        raise ShapeError(f"frame dim {values.size} != codebook layout dim {cb.total_dim}")
    y = klt.transform(values.reshape(-1))
    indices = np.empty(len(cb.codebooks), dtype=np.int64)
    start = 0
    for i, book in enumerate(cb.codebooks):
        dim = book.shape[1]
        indices[i] = _nearest_codeword(y[start : start + dim], book)
        start += dim
    return indices


def decode_frame(code: np.ndarray, klt: KltBasis, cb: SplitVqCodebooks, frame_index: int = 0) -> FeatureFrame:
    """Inverse KLT of the concatenated codewords."""
    code = np.asarray(code, dtype=np.int64).reshape(-1)
    if code.size != len(cb.codebooks):
        raise BitstreamError(f"expected {len(cb.codebooks)} indices, got {code.size}")
    parts = []
    for idx, book, bits in zip(code, cb.codebooks, cb.bits):
        if not (0 <= idx < 2**bits):
            raise BitstreamError(f"index {idx} out of range for a {bits}-bit codebook")
        parts.append(book[idx])
    values = klt.inverse(np.concatenate(parts))
    return FeatureFrame(values.astype(np.float32), frame_index)


def train_codebooks(
    frames,
    klt: KltBasis,
    layout=DEFAULT_LAYOUT,
    bits=DEFAULT_BITS,
    seed: int = 0,
    iterations: int = 20,
) -> SplitVqCodebooks:
    """Lloyd k-means per sub-vector: fixed seed, fixed iteration count.

    Initial codewords are drawn from the data by seeded permutation; an empty
    cluster is re-seeded from the point currently farthest from its assigned
    centroid (farthest first, lowest-index empty cluster first).
    """
    mat = frames_to_matrix(frames).astype(np.float64) if not isinstance(frames, np.ndarray) else np.asarray(frames, dtype=np.float64)
    if sum(layout) != mat.shape[1]:
        raise ShapeError(f"layout sums to {sum(layout)}, features have {mat.shape[1]} dims")
    y = klt.transform(mat)
    rng = CounterRng(seed)
    books = []
    start = 0
    for dim, b in zip(layout, bits):
        data = np.ascontiguousarray(y[:, start : start + dim])
        books.append(_lloyd(data, 2**b, rng, iterations))
        start += dim
    return SplitVqCodebooks(books, tuple(bits))


def _lloyd(data: np.ndarray, k: int, rng: CounterRng, iterations: int) -> np.ndarray:
    n = data.shape[0]
    if n == 0:
        raise InsufficientDataError("cannot train a codebook on zero frames")
    # seeded Fisher-Yates permutation; cycle if fewer points than codewords
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(1, i + 1)[0])
        perm[i], perm[j] = perm[j], perm[i]
    centers = data[perm[np.arange(k) % n]].copy()
    for _ in range(iterations):
        d2 = (
            np.sum(data**2, axis=1)[:, None]
            - 2.0 * data @ centers.T
            + np.sum(centers**2, axis=1)[None, :]
        )
        assign = np.argmin(d2, axis=1)
        dist = d2[np.arange(n), assign]
        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, data)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        if empty.size:
            farthest = np.argsort(-dist, kind="stable")
            for slot, point in zip(empty, farthest[: empty.size]):
                centers[slot] = data[point]
    return centers


def load_quantizer(ws) -> tuple[KltBasis, SplitVqCodebooks]:
    """Pull the KLT and split-VQ codebooks out of a WeightSet."""
    mean = ws.dense("klt.mean")
    basis = ws.dense("klt.basis", (mean.size, mean.size))
    layout = tuple(int(v) for v in ws.metadata.get("vq.layout", "").split(",") if v) or DEFAULT_LAYOUT
    bits = tuple(int(v) for v in ws.metadata.get("vq.bits", "").split(",") if v) or DEFAULT_BITS
    books = [ws.dense(f"vq.cb{i:02d}", (2**b, d)) for i, (d, b) in enumerate(zip(layout, bits))]
    return KltBasis(mean, basis), SplitVqCodebooks(books, bits)


@dataclass
class Bitstream:
    """Framed VQ payload: header plus MSB-first packed codes."""

    frame_bits: int
    frame_rate_hz: int
    codes: np.ndarray  # (n_frames, n_subvectors) indices

    @property
    def n_frames(self) -> int:
        return self.codes.shape[0]

    @property
    def payload_bits(self) -> int:
        return self.n_frames * self.frame_bits

    @property
    def bitrate_bps(self) -> float:
        return self.frame_bits * self.frame_rate_hz


def _code_bits(codes: np.ndarray, bits) -> np.ndarray:
    """Flatten index rows to an MSB-first bit array."""
    out = []
    for row in codes:
        for idx, b in zip(row, bits):
            out.extend((int(idx) >> (b - 1 - i)) & 1 for i in range(b))
    return np.array(out, dtype=np.uint8)


def pack_bitstream(codes, cb: SplitVqCodebooks, frame_rate_hz: int = FRAME_RATE_HZ) -> bytes:
    """Serialize index rows: magic, version, frame_bits, frame_rate, count, payload."""
    codes = np.asarray(codes, dtype=np.int64).reshape(-1, len(cb.codebooks))
    header = BITSTREAM_MAGIC + struct.pack(
        "<BHHI", BITSTREAM_VERSION, cb.frame_bits, frame_rate_hz, codes.shape[0]
    )
    if codes.shape[0] == 0:
        return header
    bits = _code_bits(codes, cb.bits)
    return header + np.packbits(bits).tobytes()


def unpack_bitstream(blob: bytes, cb: SplitVqCodebooks) -> Bitstream:
    """Parse and validate a bitstream; exact inverse of pack_bitstream."""
    if len(blob) < 13:
        raise BitstreamError("bitstream shorter than its header")
    if blob[:4] != BITSTREAM_MAGIC:
        raise BitstreamError(f"bad magic {blob[:4]!r}")
    version, frame_bits, frame_rate, n_frames = struct.unpack("<BHHI", blob[4:13])
    if version != BITSTREAM_VERSION:
        raise BitstreamError(f"unsupported bitstream version {version}")
    if frame_bits != cb.frame_bits:
        raise BitstreamError(f"stream has {frame_bits} bits/frame, codebooks expect {cb.frame_bits}")
    need = -(-n_frames * frame_bits // 8)
    payload = blob[13:]
    if len(payload) < need:
        raise BitstreamError(f"truncated payload: need {need} bytes, have {len(payload)}")
    if len(payload) > need:
        raise BitstreamError("trailing bytes after payload")
    if n_frames == 0:
        return Bitstream(frame_bits, frame_rate, np.zeros((0, len(cb.codebooks)), dtype=np.int64))
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[: n_frames * frame_bits]
    codes = np.zeros((n_frames, len(cb.codebooks)), dtype=np.int64)
    pos = 0
    offsets = np.cumsum([0] + list(cb.bits))
    for f in range(n_frames):
        frame = bits[f * frame_bits : (f + 1) * frame_bits]
        for i, b in enumerate(cb.bits):
            chunk = frame[offsets[i] : offsets[i + 1]]
            codes[f, i] = int(np.dot(chunk, 1 << np.arange(b - 1, -1, -1)))
    return Bitstream(frame_bits, frame_rate, codes)
