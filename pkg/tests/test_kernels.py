"""Numeric-core contracts: structured matvecs, convolutions, GRU, pruning."""

import numpy as np
import pytest

import oracles
from nvcodec.errors import ShapeError
from nvcodec.kernels import (
    BlockDiagonalMatrix,
    BlockSparseMatrix,
    GruWeights,
    block_diagonal_from_dense,
    conv1d,
    depthwise_conv1d,
    gru_step,
    magnitude_prune,
    matmul,
    matvec,
    transpose_conv1d,
)
from nvcodec.rng import CounterRng


def random_block_sparse(rng, rows, cols, density=0.3):
    grid = (rows // 4) * (cols // 4)
    n_keep = max(1, int(density * grid))
    ids = np.sort(rng.integers(n_keep * 3, grid)[:n_keep])
    ids = np.unique(ids)
    blocks = rng.normal(len(ids) * 16).reshape(-1, 4, 4)
    return BlockSparseMatrix(rows, cols, ids // (cols // 4), ids % (cols // 4), blocks)


class TestMatvec:
    def test_dense_identity(self):
        x = np.arange(8.0)
        np.testing.assert_array_equal(matvec(np.eye(8), x), x)

    def test_block_diagonal_identity(self):
        blocks = np.stack([np.eye(4, dtype=np.float32)] * 16)
        x = np.arange(64.0)
        np.testing.assert_array_equal(matvec(BlockDiagonalMatrix(blocks), x), x)

    @pytest.mark.parametrize("case", range(30))
    def test_block_sparse_matches_densified_oracle(self, case):
        rng = CounterRng(1000 + case)
        rows = 4 * int(rng.integers(1, 16)[0] + 1)
        cols = 4 * int(rng.integers(1, 16)[0] + 1)
        m = random_block_sparse(rng, rows, cols)
        dense = oracles.densify_blocks(rows, cols, m.block_rows, m.block_cols, m.blocks)
        x = rng.normal(cols)
        got = matvec(m, x)
        want = dense @ x
        scale = max(1.0, float(np.abs(want).max()))
        assert np.abs(got - want).max() / scale < 1e-6

    @pytest.mark.parametrize("case", range(10))
    def test_block_diagonal_matches_densified_oracle(self, case):
        rng = CounterRng(2000 + case)
        n_blocks = int(rng.integers(1, 8)[0]) + 1
        b = int(rng.integers(1, 6)[0]) + 1
        m = BlockDiagonalMatrix(rng.normal(n_blocks * b * b).reshape(n_blocks, b, b))
        x = rng.normal(m.dim)
        want = m.to_dense().astype(np.float64) @ x
        got = matvec(m, x)
        scale = max(1.0, float(np.abs(want).max()))
        assert np.abs(got - want).max() / scale < 1e-6

    def test_batched_matmul_matches_loop(self):
        rng = CounterRng(3)
        m = random_block_sparse(rng, 16, 24)
        X = rng.normal(5 * 24).reshape(5, 24)
        batched = matmul(m, X)
        for i in range(5):
            np.testing.assert_array_equal(batched[i], matvec(m, X[i]))

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            matvec(np.eye(4), np.zeros(5))

    def test_sparsity_accounting(self):
        m = BlockDiagonalMatrix(np.zeros((16, 64, 64), dtype=np.float32))
        assert m.sparsity == pytest.approx(0.9375)
        assert m.dim == 1024


class TestConv1d:
    def test_width1_identity(self):
        x = CounterRng(4).normal(20).reshape(10, 2)
        kernel = np.eye(2, dtype=np.float32)[:, :, None]
        np.testing.assert_allclose(conv1d(x, kernel), x, atol=0)

    def test_pure_delay_kernel(self):
        """Causal width-2 dilation-4 kernel [0, 1] delays by 4."""
        x = CounterRng(5).normal(12).reshape(12, 1)
        kernel = np.array([[[0.0, 1.0]]])
        out = conv1d(x, kernel, dilation=4)
        np.testing.assert_array_equal(out[:4], np.zeros((4, 1)))
        np.testing.assert_array_equal(out[4:], x[:-4])

    @pytest.mark.parametrize("case", range(20))
    def test_matches_naive_oracle(self, case):
        rng = CounterRng(3000 + case)
        T = int(rng.integers(1, 20)[0]) + 3
        c_in = int(rng.integers(1, 4)[0]) + 1
        c_out = int(rng.integers(1, 4)[0]) + 1
        width = int(rng.integers(1, 4)[0]) + 1
        dilation = int(rng.integers(1, 4)[0]) + 1
        lookahead = int(rng.integers(1, 3)[0])
        x = rng.normal(T * c_in).reshape(T, c_in)
        k = rng.normal(c_out * c_in * width).reshape(c_out, c_in, width)
        got = conv1d(x, k, dilation, causal=lookahead == 0, lookahead=lookahead)
        want = oracles.conv1d_naive(x, k, dilation, lookahead)
        assert np.abs(got - want).max() < 1e-5

    def test_causality_is_exact(self):
        rng = CounterRng(6)
        x = rng.normal(30).reshape(30, 1)
        k = rng.normal(3).reshape(1, 1, 3)
        base = conv1d(x, k, dilation=2)
        bumped = x.copy()
        bumped[17, 0] += 1.0
        diff = conv1d(bumped, k, dilation=2) - base
        assert np.all(diff[:17] == 0.0)
        assert np.any(diff[17:] != 0.0)

    def test_causal_with_lookahead_rejected(self):
        with pytest.raises(ShapeError):
            conv1d(np.zeros((4, 1)), np.zeros((1, 1, 2)), causal=True, lookahead=1)


class TestTransposeConv:
    def test_impulse_copies_kernel(self):
        k = np.arange(8.0).reshape(1, 1, 8)
        x = np.zeros((5, 1))
        x[0, 0] = 1.0
        out = transpose_conv1d(x, k, stride=2)
        np.testing.assert_array_equal(out[:8, 0], np.arange(8.0))

    def test_output_length_is_stride_times_input(self):
        out = transpose_conv1d(np.ones((5, 2)), np.ones((3, 2, 4)), stride=2)
        assert out.shape == (10, 3)

    @pytest.mark.parametrize("case", range(20))
    def test_matches_zero_stuff_oracle(self, case):
        rng = CounterRng(4000 + case)
        T = int(rng.integers(1, 10)[0]) + 2
        c_in = int(rng.integers(1, 3)[0]) + 1
        c_out = int(rng.integers(1, 3)[0]) + 1
        width = int(rng.integers(1, 5)[0]) + 1
        stride = int(rng.integers(1, 3)[0]) + 1
        x = rng.normal(T * c_in).reshape(T, c_in)
        k = rng.normal(c_out * c_in * width).reshape(c_out, c_in, width)
        got = transpose_conv1d(x, k, stride)
        want = oracles.transpose_conv_naive(x, k, stride)
        assert np.abs(got - want).max() < 1e-5


class TestDepthwiseConv:
    def test_per_channel_identity(self):
        x = CounterRng(7).normal(24).reshape(8, 3)
        np.testing.assert_allclose(depthwise_conv1d(x, np.ones((3, 1))), x, atol=0)

    def test_per_channel_delays(self):
        x = CounterRng(8).normal(20).reshape(10, 2)
        kernels = np.array([[1.0, 0.0], [0.0, 1.0]])  # ch0 passthrough, ch1 delay 1
        out = depthwise_conv1d(x, kernels)
        np.testing.assert_array_equal(out[:, 0], x[:, 0])
        assert out[0, 1] == 0.0
        np.testing.assert_array_equal(out[1:, 1], x[:-1, 1])

    @pytest.mark.parametrize("case", range(15))
    def test_matches_naive_oracle(self, case):
        rng = CounterRng(5000 + case)
        T = int(rng.integers(1, 16)[0]) + 2
        C = int(rng.integers(1, 5)[0]) + 1
        width = int(rng.integers(1, 4)[0]) + 1
        dilation = int(rng.integers(1, 4)[0]) + 1
        x = rng.normal(T * C).reshape(T, C)
        k = rng.normal(C * width).reshape(C, width)
        got = depthwise_conv1d(x, k, dilation)
        want = oracles.depthwise_naive(x, k, dilation)
        assert np.abs(got - want).max() < 1e-5

    def test_channel_isolation(self):
        rng = CounterRng(9)
        x = rng.normal(40).reshape(20, 2)
        k = rng.normal(6).reshape(2, 3)
        base = depthwise_conv1d(x, k)
        bumped = x.copy()
        bumped[:, 1] += 1.0
        diff = depthwise_conv1d(bumped, k) - base
        assert np.all(diff[:, 0] == 0.0)


def _zero_gru(d):
    z = np.zeros((d, d), dtype=np.float32)
    b = np.zeros(d)
    return GruWeights(z, z, z, z.copy(), z.copy(), z.copy(), b, b.copy(), b.copy())


class TestGru:
    def test_all_zero_weights_halve_state(self):
        """z = sigma(0) = 1/2 and n = 0, so h' = h/2."""
        h = CounterRng(10).normal(6)
        out = gru_step(h, np.zeros(6), _zero_gru(6))
        np.testing.assert_allclose(out, 0.5 * h, atol=1e-15)

    def test_zero_state_zero_input_analytic(self):
        """h' = sigma(bz) * tanh(sigma(br) * bn): candidate bias sits inside the gate."""
        d = 5
        w = _zero_gru(d)
        rng = CounterRng(11)
        w.br, w.bz, w.bn = rng.normal(d), rng.normal(d), rng.normal(d)
        out = gru_step(np.zeros(d), np.zeros(d), w)
        sig = lambda v: 1.0 / (1.0 + np.exp(-v))
        np.testing.assert_allclose(out, sig(w.bz) * np.tanh(sig(w.br) * w.bn), atol=1e-12)

    @pytest.mark.parametrize("case", range(15))
    def test_matches_reference(self, case):
        rng = CounterRng(6000 + case)
        d = 4 * (int(rng.integers(1, 4)[0]) + 1)
        mats = [rng.normal(d * d).reshape(d, d) * 0.3 for _ in range(6)]
        biases = [rng.normal(d) * 0.3 for _ in range(3)]
        w = GruWeights(*[m.astype(np.float32) for m in mats], *biases)
        h, x = rng.normal(d), rng.normal(d)
        got = gru_step(h, x, w)
        want = oracles.gru_reference(h, x, *[m.astype(np.float32).astype(np.float64) for m in mats], *biases)
        assert np.abs(got - want).max() < 1e-5

    def test_structured_recurrences_match_dense(self):
        """GRU with block-sparse inputs and block-diagonal recurrences equals
        the same GRU run on the densified matrices."""
        rng = CounterRng(12)
        d = 16
        dense = [rng.normal(d * d).reshape(d, d).astype(np.float32) * 0.4 for _ in range(6)]
        biases = [rng.normal(d) for _ in range(3)]
        struct = [magnitude_prune(m, 0.5) for m in dense[:3]]
        struct += [block_diagonal_from_dense(m, 4) for m in dense[3:]]
        w_struct = GruWeights(*struct, *biases)
        w_masked = GruWeights(*[s.to_dense() for s in struct], *biases)
        h, x = rng.normal(d), rng.normal(d)
        got = gru_step(h, x, w_struct)
        want = gru_step(h, x, w_masked)
        assert np.abs(got - want).max() < 1e-12

    def test_z_bias_minus_30_freezes_state(self):
        """sigma(-30) ~ 0 keeps h' = h to 1e-9."""
        d = 8
        rng = CounterRng(13)
        w = _zero_gru(d)
        w.wr = rng.normal(d * d).reshape(d, d).astype(np.float32)
        w.wn = rng.normal(d * d).reshape(d, d).astype(np.float32)
        w.bz = np.full(d, -30.0)
        h = rng.normal(d)
        out = gru_step(h, rng.normal(d), w)
        assert np.abs(out - h).max() < 1e-9

    def test_gru_causality_across_steps(self):
        """Perturbing input at step t leaves states before t untouched."""
        d = 6
        rng = CounterRng(14)
        mats = [0.3 * rng.normal(d * d).reshape(d, d).astype(np.float32) for _ in range(6)]
        w = GruWeights(*mats, np.zeros(d), np.zeros(d), np.zeros(d))
        xs = rng.normal(10 * d).reshape(10, d)
        hs = [np.zeros(d)]
        for t in range(10):
            hs.append(gru_step(hs[-1], xs[t], w))
        xs2 = xs.copy()
        xs2[6] += 1.0
        hs2 = [np.zeros(d)]
        for t in range(10):
            hs2.append(gru_step(hs2[-1], xs2[t], w))
        for t in range(7):
            np.testing.assert_array_equal(hs[t], hs2[t])
        assert np.any(hs[7] != hs2[7])


class TestMagnitudePrune:
    def test_target_zero_keeps_everything(self):
        rng = CounterRng(15)
        dense = rng.normal(8 * 12).reshape(8, 12).astype(np.float32)
        pruned = magnitude_prune(dense, 0.0)
        np.testing.assert_array_equal(pruned.to_dense(), dense)
        assert pruned.sparsity == 0.0

    def test_single_dominant_block_survives(self):
        dense = np.zeros((8, 8), dtype=np.float32)
        dense[4:8, 0:4] = 5.0
        pruned = magnitude_prune(dense, target_sparsity=3 / 4)
        assert pruned.n_blocks == 1
        assert (pruned.block_rows[0], pruned.block_cols[0]) == (1, 0)

    @pytest.mark.parametrize("case", range(10))
    def test_matches_exhaustive_sort_oracle(self, case):
        rng = CounterRng(7000 + case)
        dense = rng.normal(32 * 32).reshape(32, 32).astype(np.float32)
        target = [0.0, 0.25, 0.5, 0.92][case % 4]
        pruned = magnitude_prune(dense, target)
        got = set((pruned.block_rows * 8 + pruned.block_cols).tolist())
        assert got == oracles.prune_oracle_ids(dense, target, 4)

    def test_tie_break_low_index(self):
        dense = np.zeros((8, 8), dtype=np.float32)
        dense[0:4, 4:8] = 1.0  # block id 1
        dense[4:8, 0:4] = 1.0  # block id 2, same norm
        pruned = magnitude_prune(dense, target_sparsity=0.7)  # keep ceil(0.3*4)=2
        ids = set((pruned.block_rows * 2 + pruned.block_cols).tolist())
        assert ids == {1, 2} or ids == {0, 1}  # norms: blocks 1,2 = 4.0; 0,3 = 0
        assert ids == {1, 2}

    def test_sparsity_within_one_block(self):
        rng = CounterRng(16)
        dense = rng.normal(64 * 64).reshape(64, 64).astype(np.float32)
        pruned = magnitude_prune(dense, 0.92)
        n_blocks = (64 // 4) ** 2
        assert abs(pruned.sparsity - 0.92) <= 16.0 / (64 * 64)
        assert pruned.n_blocks == int(np.ceil(0.08 * n_blocks))

    def test_invalid_target(self):
        with pytest.raises(ShapeError):
            magnitude_prune(np.zeros((4, 4), dtype=np.float32), 1.0)
