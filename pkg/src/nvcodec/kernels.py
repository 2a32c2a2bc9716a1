"""Numeric core: structured matrices, 1-D convolutions, GRU cell, pruning.

These are the primitives both network graphs are built from. Weights are
32-bit floats; arithmetic runs in float64 and results are returned as the
input dtype promotes. Three matrix layouts exist:

  dense          - plain 2-D ndarray
  BlockSparseMatrix  - surviving 4x4 blocks of a magnitude-pruned matrix
  BlockDiagonalMatrix - fixed block-diagonal pattern (16 blocks -> 93.75%)

Every structured layout multiplies exactly like its densified masked
equivalent; that equivalence is the core test surface.

Convolution taps are indexed so that kernel[..., 0] multiplies the current
step and kernel[..., j] multiplies the step j*dilation in the past; a
lookahead of f shifts the whole window f steps into the future. Causal means
lookahead 0: output[t] never reads input after t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

BLOCK = 4


def _as2d(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {x.shape}")
    return x


@dataclass
class BlockSparseMatrix:
    """4x4 block-sparse matrix: kept blocks plus their grid coordinates.

    block_rows/block_cols index the block grid (row-major, strictly
    increasing by (block_rows, block_cols) pairs for a canonical encoding).
    """

    rows: int
    cols: int
    block_rows: np.ndarray
    block_cols: np.ndarray
    blocks: np.ndarray  # (n_blocks, BLOCK, BLOCK)

    def __post_init__(self):
        if self.rows % BLOCK or self.cols % BLOCK:
            raise ShapeError(f"dims ({self.rows}, {self.cols}) not divisible by {BLOCK}")
        self.block_rows = np.asarray(self.block_rows, dtype=np.int64).reshape(-1)
        self.block_cols = np.asarray(self.block_cols, dtype=np.int64).reshape(-1)
        self.blocks = np.asarray(self.blocks, dtype=np.float32).reshape(-1, BLOCK, BLOCK)
        if not (len(self.block_rows) == len(self.block_cols) == len(self.blocks)):
            raise ShapeError("block index/data length mismatch")
        if np.any(self.block_rows < 0) or np.any(self.block_rows >= self.rows // BLOCK):
            raise ShapeError("block row index out of range")
        if np.any(self.block_cols < 0) or np.any(self.block_cols >= self.cols // BLOCK):
            raise ShapeError("block col index out of range")
        # canonical ascending row-major order makes multiplication order (and
        # therefore its floating-point result) independent of input ordering
        ids = self.block_rows * (self.cols // BLOCK) + self.block_cols
        if np.unique(ids).size != ids.size:
            raise ShapeError("duplicate block coordinates")
        order = np.argsort(ids, kind="stable")
        self.block_rows = self.block_rows[order]
        self.block_cols = self.block_cols[order]
        self.blocks = self.blocks[order]
        self._row_starts = np.flatnonzero(
            np.diff(self.block_rows, prepend=self.block_rows[:1] - 1)
        ) if len(self.blocks) else np.zeros(0, dtype=np.int64)
        self._present_rows = self.block_rows[self._row_starts] if len(self.blocks) else np.zeros(0, dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def sparsity(self) -> float:
        return 1.0 - (self.n_blocks * BLOCK * BLOCK) / (self.rows * self.cols)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.float32)
        for r, c, b in zip(self.block_rows, self.block_cols, self.blocks):
            out[r * BLOCK : (r + 1) * BLOCK, c * BLOCK : (c + 1) * BLOCK] = b
        return out

    def matmul(self, x: np.ndarray) -> np.ndarray:
        """x of shape (..., cols) -> (..., rows)."""
        x = np.asarray(x)
        if x.shape[-1] != self.cols:
            raise ShapeError(f"matrix is {self.shape}, operand has {x.shape[-1]} columns")
        lead = x.shape[:-1]
        xb = x.reshape(-1, self.cols // BLOCK, BLOCK).astype(np.float64)
        out = np.zeros((xb.shape[0], self.rows // BLOCK, BLOCK), dtype=np.float64)
        if len(self.blocks):
            contrib = np.einsum("nij,tnj->tni", self.blocks.astype(np.float64), xb[:, self.block_cols, :])
            out[:, self._present_rows] = np.add.reduceat(contrib, self._row_starts, axis=1)
        return out.reshape(*lead, self.rows)


@dataclass
class BlockDiagonalMatrix:
    """Square matrix stored as n_blocks dense diagonal blocks."""

    blocks: np.ndarray  # (n_blocks, D/n, D/n)

    def __post_init__(self):
        self.blocks = np.asarray(self.blocks, dtype=np.float32)
        if self.blocks.ndim != 3 or self.blocks.shape[1] != self.blocks.shape[2]:
            raise ShapeError("block-diagonal storage must be (n_blocks, b, b)")

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def dim(self) -> int:
        return self.blocks.shape[0] * self.blocks.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    @property
    def sparsity(self) -> float:
        return 1.0 - 1.0 / self.n_blocks

    def to_dense(self) -> np.ndarray:
        d, b = self.dim, self.blocks.shape[1]
        out = np.zeros((d, d), dtype=np.float32)
        for i in range(self.n_blocks):
            out[i * b : (i + 1) * b, i * b : (i + 1) * b] = self.blocks[i]
        return out

    def matmul(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != self.dim:
            raise ShapeError(f"matrix is {self.shape}, operand has {x.shape[-1]} columns")
        lead = x.shape[:-1]
        xb = x.reshape(-1, self.n_blocks, self.blocks.shape[1])
        out = np.einsum("nij,tnj->tni", self.blocks.astype(np.float64), xb)
        return out.reshape(*lead, self.dim)


Matrix = np.ndarray | BlockSparseMatrix | BlockDiagonalMatrix


def matmul(m: Matrix, x: np.ndarray) -> np.ndarray:
    """Apply any matrix layout to (..., cols) inputs."""
    if isinstance(m, (BlockSparseMatrix, BlockDiagonalMatrix)):
        return m.matmul(x)
    m = _as2d(m)
    x = np.asarray(x)
    if x.shape[-1] != m.shape[1]:
        raise ShapeError(f"matrix is {m.shape}, operand has {x.shape[-1]} columns")
    return x.astype(np.float64) @ m.T.astype(np.float64)


def matvec(m: Matrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x).reshape(-1)
    return matmul(m, x)


def conv1d(
    x: np.ndarray,
    kernel: np.ndarray,
    dilation: int = 1,
    causal: bool = True,
    lookahead: int = 0,
) -> np.ndarray:
    """1-D convolution over (T, C_in) with kernel (C_out, C_in, W).

    out[t] = sum_j kernel[..., j] . x[t + lookahead - j*dilation], zero-padded
    outside [0, T). Length is preserved. causal=True requires lookahead == 0.
    """
    x = _as2d(x)
    kernel = np.asarray(kernel)
    if kernel.ndim != 3:
        raise ShapeError(f"kernel must be (C_out, C_in, W), got {kernel.shape}")
    if kernel.shape[1] != x.shape[1]:
        raise ShapeError(f"kernel expects {kernel.shape[1]} input channels, got {x.shape[1]}")
    if dilation < 1:
        raise ShapeError("dilation must be >= 1")
    if lookahead < 0:
        raise ShapeError("lookahead must be >= 0")
    if causal and lookahead:
        raise ShapeError("causal convolution cannot have lookahead")

    T, _ = x.shape
    c_out, c_in, width = kernel.shape
    left = (width - 1) * dilation
    xp = np.zeros((T + left + lookahead, c_in), dtype=np.float64)
    xp[left : left + T] = x
    out = np.zeros((T, c_out), dtype=np.float64)
    k64 = kernel.astype(np.float64)
    for j in range(width):
        # x index t + lookahead - j*dilation sits at xp index t + lookahead + (W-1-j)*dilation
        start = lookahead + (width - 1 - j) * dilation
        out += xp[start : start + T] @ k64[:, :, j].T
    return out


def depthwise_conv1d(
    x: np.ndarray,
    kernels: np.ndarray,
    dilation: int = 1,
    causal: bool = True,
) -> np.ndarray:
    """Per-channel causal convolution: (T, C) with kernels (C, W)."""
    x = _as2d(x)
    kernels = _as2d(kernels)
    if kernels.shape[0] != x.shape[1]:
        raise ShapeError(f"need one kernel per channel ({x.shape[1]}), got {kernels.shape[0]}")
    if not causal:
        raise ShapeError("only causal depthwise convolutions are defined")
    T, C = x.shape
    width = kernels.shape[1]
    out = np.zeros((T, C), dtype=np.float64)
    k64 = kernels.astype(np.float64)
    xp = np.zeros(((width - 1) * dilation + T, C), dtype=np.float64)
    xp[(width - 1) * dilation :] = x
    for j in range(width):
        start = (width - 1) * dilation - j * dilation
        out += xp[start : start + T] * k64[None, :, j]
    return out


def transpose_conv1d(x: np.ndarray, kernel: np.ndarray, stride: int = 2) -> np.ndarray:
    """Transposed convolution: (T, C_in) x (C_out, C_in, W) -> (stride*T, C_out).

    Equals zero-stuffing by `stride` followed by a convolution: each input
    step t adds kernel[..., w] . x[t] at output position stride*t + w; the
    result is cropped to exactly stride*T, so a unit impulse at t=0 copies
    the kernel starting at output position 0.
    """
    x = _as2d(x)
    kernel = np.asarray(kernel)
    if kernel.ndim != 3:
        raise ShapeError(f"kernel must be (C_out, C_in, W), got {kernel.shape}")
    if kernel.shape[1] != x.shape[1]:
        raise ShapeError(f"kernel expects {kernel.shape[1]} input channels, got {x.shape[1]}")
    if stride < 1:
        raise ShapeError("stride must be >= 1")
    T, _ = x.shape
    c_out, _, width = kernel.shape
    full = np.zeros((stride * T + width - 1, c_out), dtype=np.float64)
    k64 = kernel.astype(np.float64)
    taps = x.astype(np.float64) @ k64.transpose(2, 0, 1).reshape(width * c_out, -1).T  # (T, W*C_out)
    taps = taps.reshape(T, width, c_out)
    for w in range(width):
        full[w : w + stride * T : stride] += taps[:, w, :]
    return full[: stride * T]


@dataclass
class GruWeights:
    """Input, recurrent and bias parameters for one GRU cell.

    Recurrent matrices may be BlockDiagonalMatrix and input matrices
    BlockSparseMatrix; anything accepted by matmul() works.
    """

    wr: Matrix
    wz: Matrix
    wn: Matrix
    ur: Matrix
    uz: Matrix
    un: Matrix
    br: np.ndarray
    bz: np.ndarray
    bn: np.ndarray


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def gru_step(state: np.ndarray, x: np.ndarray, w: GruWeights) -> np.ndarray:
    """One GRU update.

        r  = sigma(Wr.x + Ur.h + br)
        z  = sigma(Wz.x + Uz.h + bz)
        n  = tanh(Wn.x + r * (Un.h + bn))
        h' = (1 - z) * h + z * n

    The reset gate multiplies the candidate's whole recurrent term, bias
    included.
    """
    h = np.asarray(state, dtype=np.float64).reshape(-1)
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    r = sigmoid(matvec(w.wr, xv) + matvec(w.ur, h) + w.br)
    z = sigmoid(matvec(w.wz, xv) + matvec(w.uz, h) + w.bz)
    n = np.tanh(matvec(w.wn, xv) + r * (matvec(w.un, h) + w.bn))
    return (1.0 - z) * h + z * n


def block_norms(dense: np.ndarray, block: int = BLOCK) -> np.ndarray:
    """Frobenius norm of each block on the (rows/b, cols/b) grid."""
    m = _as2d(dense).astype(np.float64)
    rows, cols = m.shape
    if rows % block or cols % block:
        raise ShapeError(f"dims {m.shape} not divisible by block size {block}")
    g = m.reshape(rows // block, block, cols // block, block)
    return np.sqrt(np.einsum("ribj,ribj->rb", g, g))


def magnitude_prune(dense: np.ndarray, target_sparsity: float, block: int = BLOCK) -> BlockSparseMatrix:
    """Keep the ceil((1-target)*n_blocks) largest-Frobenius-norm 4x4 blocks.

    Ties break toward the lowest row-major block index, so the result is
    deterministic. Achieved sparsity lands within one block of the target.
    """
    if not (0.0 <= target_sparsity < 1.0):
        raise ShapeError(f"target sparsity must be in [0, 1), got {target_sparsity}")
    if block != BLOCK:
        raise ShapeError("engine block size is fixed at 4")
    m = _as2d(dense)
    norms = block_norms(m, block).reshape(-1)
    n_blocks = norms.size
    keep = int(np.ceil((1.0 - target_sparsity) * n_blocks))
    # stable sort on negated norms keeps the lowest index among ties
    order = np.argsort(-norms, kind="stable")[:keep]
    order = np.sort(order)
    grid_cols = m.shape[1] // block
    br, bc = order // grid_cols, order % grid_cols
    blocks = np.stack(
        [m[r * block : (r + 1) * block, c * block : (c + 1) * block] for r, c in zip(br, bc)]
    ) if keep else np.zeros((0, block, block), dtype=np.float32)
    return BlockSparseMatrix(m.shape[0], m.shape[1], br, bc, blocks)


def block_diagonal_from_dense(dense: np.ndarray, n_blocks: int = 16) -> BlockDiagonalMatrix:
    """Extract the fixed block-diagonal pattern from a square matrix."""
    m = _as2d(dense)
    d = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise ShapeError("block-diagonal layout needs a square matrix")
    if d % n_blocks:
        raise ShapeError(f"{n_blocks} blocks do not divide dim {d}")
    b = d // n_blocks
    blocks = np.stack([m[i * b : (i + 1) * b, i * b : (i + 1) * b] for i in range(n_blocks)])
    return BlockDiagonalMatrix(blocks)


def prelu(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Per-channel PReLU over (T, C)."""
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    return np.where(x >= 0.0, x, a * x)
