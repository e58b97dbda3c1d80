"""Functional op contracts: worked examples, brute-force oracles, properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from signcast import nn
from signcast.nn import kernels

from oracles import conv2d_loops, dense_loops, depthwise_loops, mean_loops, softmax_f64


class TestRelu:
    def test_negative_clamps_to_zero(self):
        assert nn.relu(np.float64(-2.5)) == 0

    def test_positive_passes_through(self):
        assert nn.relu(np.float64(3.0)) == 3.0

    def test_vector(self):
        x = np.array([-1.0, 0.0, 2.0, -0.5])
        np.testing.assert_array_equal(nn.relu(x), [0, 0, 2, 0])

    @given(hnp.arrays(np.float64, hnp.array_shapes(max_dims=3),
                      elements=st.floats(-1e6, 1e6)))
    def test_idempotent_and_shape_preserving(self, x):
        once = nn.relu(x)
        assert once.shape == x.shape
        np.testing.assert_array_equal(nn.relu(once), once)


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        np.testing.assert_allclose(nn.softmax([0.0, 0.0, 0.0, 0.0]), [0.25] * 4)

    def test_exact_exponentials(self):
        out = nn.softmax([math.log(1.0), math.log(3.0)])
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-12)

    def test_large_logits_match_shifted(self):
        big = nn.softmax(np.array([1000.0, 999.0]))
        small = nn.softmax(np.array([1.0, 0.0]))
        np.testing.assert_allclose(big, small, atol=1e-12)
        np.testing.assert_allclose(big, softmax_f64([1000.0, 999.0]), atol=1e-12)
        np.testing.assert_allclose(big, [0.73105857863, 0.26894142137], atol=1e-9)

    def test_rejects_singleton_and_empty(self):
        with pytest.raises(ValueError):
            nn.softmax([1.0])
        with pytest.raises(ValueError):
            nn.softmax([])

    @given(hnp.arrays(np.float64, st.integers(2, 12),
                      elements=st.floats(-100, 100)),
           st.floats(-50, 50))
    def test_sums_to_one_and_shift_invariant(self, z, c):
        p = nn.softmax(z)
        assert abs(p.sum() - 1.0) < 1e-6
        assert np.all(p > 0)
        np.testing.assert_allclose(nn.softmax(z + c), p, atol=1e-6)


class TestConv2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 4, 3))
        w = np.zeros((1, 1, 3, 3))
        w[0, 0] = np.eye(3)
        np.testing.assert_allclose(nn.conv2d(x, w), x, atol=1e-12)

    def test_constant_input_all_ones_kernel(self):
        x = np.full((6, 6, 1), 2.5)
        w = np.ones((3, 3, 1, 1))
        out = nn.conv2d(x, w, padding="valid")
        np.testing.assert_allclose(out, np.full((4, 4, 1), 9 * 2.5), atol=1e-12)

    def test_matches_loop_oracle_single(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((1, 5, 5, 1))
        w = rng.standard_normal((3, 3, 1, 1))
        b = np.zeros(1)
        got = kernels.conv2d_forward(x, w, b, 1)
        np.testing.assert_allclose(got, conv2d_loops(x, w, b, 1), atol=1e-6)

    def test_channel_mismatch_raises(self):
        with pytest.raises(ValueError):
            nn.conv2d(np.zeros((4, 4, 2)), np.zeros((3, 3, 3, 1)))

    def test_kernel_too_big_for_valid(self):
        with pytest.raises(ValueError):
            nn.conv2d(np.zeros((2, 2, 1)), np.zeros((3, 3, 1, 1)), padding="valid")

    def test_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(3)
        for _ in range(120):
            batch = int(rng.integers(1, 3))
            h, w_ = int(rng.integers(3, 9)), int(rng.integers(3, 9))
            c, f = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            kh = int(rng.integers(1, min(h, 3) + 1))
            kw = int(rng.integers(1, min(w_, 3) + 1))
            stride = int(rng.integers(1, 3))
            x = rng.standard_normal((batch, h, w_, c))
            wt = rng.standard_normal((kh, kw, c, f))
            b = rng.standard_normal(f)
            got = kernels.conv2d_forward(x, wt, b, stride)
            np.testing.assert_allclose(got, conv2d_loops(x, wt, b, stride), atol=1e-5)


class TestDepthwiseConv2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((4, 4, 3))
        w = np.ones((1, 1, 3))
        np.testing.assert_allclose(nn.depthwise_conv2d(x, w), x, atol=1e-12)

    def test_zero_channel_stays_zero(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((6, 6, 2))
        x[:, :, 1] = 0.0
        w = rng.standard_normal((3, 3, 2))
        out = nn.depthwise_conv2d(x, w, padding="valid")
        np.testing.assert_array_equal(out[:, :, 1], 0.0)

    def test_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(6)
        for _ in range(120):
            batch = int(rng.integers(1, 3))
            h, w_ = int(rng.integers(3, 9)), int(rng.integers(3, 9))
            c = int(rng.integers(1, 5))
            kh = int(rng.integers(1, min(h, 3) + 1))
            kw = int(rng.integers(1, min(w_, 3) + 1))
            stride = int(rng.integers(1, 3))
            x = rng.standard_normal((batch, h, w_, c))
            wt = rng.standard_normal((kh, kw, c))
            b = rng.standard_normal(c)
            got = kernels.depthwise_forward(x, wt, b, stride)
            np.testing.assert_allclose(got, depthwise_loops(x, wt, b, stride), atol=1e-5)


class TestGlobalAveragePool:
    def test_constant_map(self):
        out = nn.global_average_pool(np.full((7, 3, 2), 1.25))
        np.testing.assert_allclose(out, np.full((1, 1, 2), 1.25))

    def test_two_by_two(self):
        x = np.array([1.0, 2.0, 3.0, 4.0]).reshape(2, 2, 1)
        np.testing.assert_allclose(nn.global_average_pool(x), [[[2.5]]])

    def test_matches_mean_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((6, 5, 4))
        got = nn.global_average_pool(x).reshape(-1)
        np.testing.assert_allclose(got, mean_loops(x), atol=1e-6)


class TestDense:
    def test_identity(self):
        x = np.array([3.0, -1.0, 2.0])
        out = nn.dense(x, np.eye(3), np.zeros(3))
        np.testing.assert_allclose(out, x)

    def test_worked_example(self):
        out = nn.dense(np.array([1.0, 1.0]),
                       np.array([[1.0, 2.0], [3.0, 4.0]]),
                       np.zeros(2))
        np.testing.assert_allclose(out, [4.0, 6.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nn.dense(np.zeros(3), np.zeros((4, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            nn.dense(np.zeros(4), np.zeros((4, 2)), np.zeros(3))

    def test_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(8)
        for _ in range(120):
            n, m = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            x = rng.standard_normal(n)
            w = rng.standard_normal((n, m))
            b = rng.standard_normal(m)
            np.testing.assert_allclose(nn.dense(x, w, b), dense_loops(x, w, b), atol=1e-5)


class TestDropout:
    def test_infer_mode_is_identity(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((5, 5))
        np.testing.assert_array_equal(nn.dropout(x, 0.9, mode="infer"), x)

    def test_rate_zero_is_identity(self):
        x = np.arange(10.0)
        np.testing.assert_array_equal(nn.dropout(x, 0.0, mode="train", seed=1), x)

    def test_rejects_rate_one(self):
        with pytest.raises(ValueError):
            nn.dropout(np.zeros(3), 1.0)

    def test_deterministic_under_seed(self):
        x = np.ones(100)
        a = nn.dropout(x, 0.5, mode="train", seed=42)
        b = nn.dropout(x, 0.5, mode="train", seed=42)
        np.testing.assert_array_equal(a, b)

    def test_expectation_preserved(self):
        # inverted dropout keeps E[out] = x; 1e5 draws, 3-sigma band
        n = 100_000
        out = nn.dropout(np.ones(n), 0.75, mode="train", seed=7)
        # out is 0 or 4: var = 0.25*16 - 1 = 3
        stderr = math.sqrt(3.0 / n)
        assert abs(out.mean() - 1.0) < 3 * stderr


class TestCrossEntropy:
    def test_certain_prediction_zero_loss(self):
        loss, _ = nn.cross_entropy(np.array([0.0, 1.0, 0.0]) + 1e-300, 1)
        assert loss < 1e-6

    def test_uniform_loss_is_log_k(self):
        loss, _ = nn.cross_entropy(np.full(4, 0.25), 2)
        assert abs(loss - math.log(4)) < 1e-12

    def test_gradient_is_probs_minus_onehot(self):
        p = np.array([0.1, 0.7, 0.2])
        _, g = nn.cross_entropy(p, 1)
        np.testing.assert_allclose(g, [0.1, -0.3, 0.2], atol=1e-12)

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            nn.cross_entropy(np.full(4, 0.25), 4)

    def test_gradient_matches_finite_differences(self):
        # FD through softmax -> CE as a function of the logits
        rng = np.random.default_rng(10)
        z = rng.standard_normal(6)
        label = 2

        def loss_of(zv):
            return -np.log(softmax_f64(zv)[label])

        _, analytic = nn.cross_entropy(softmax_f64(z), label)
        step = 1e-6
        numeric = np.zeros_like(z)
        for i in range(z.size):
            zp, zm = z.copy(), z.copy()
            zp[i] += step
            zm[i] -= step
            numeric[i] = (loss_of(zp) - loss_of(zm)) / (2 * step)
        err = np.abs(analytic - numeric).max() / max(np.abs(numeric).max(), 1e-10)
        assert err < 1e-4


class TestSgdStep:
    def test_zero_gradient_no_change(self):
        p = np.array([1.0, 2.0])
        out = nn.sgd_step(p, np.zeros(2), 0.5)
        np.testing.assert_array_equal(out, p)

    def test_lr_one_subtracts_gradient(self):
        p = np.array([1.0, 2.0])
        g = np.array([0.5, -0.5])
        np.testing.assert_array_equal(nn.sgd_step(p, g, 1.0), p - g)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nn.sgd_step(np.zeros(3), np.zeros(4), 0.1)

    def test_quadratic_converges(self):
        # f(p) = (p - 3)^2 contracts by factor |1 - 2*lr| = 0.2 per step
        p = np.array([0.0])
        for _ in range(50):
            p = nn.sgd_step(p, 2 * (p - 3.0), 0.4)
        assert abs(p[0] - 3.0) < 1e-6


class TestFiniteOutputs:
    @settings(max_examples=30)
    @given(hnp.arrays(np.float64, st.tuples(st.integers(3, 6), st.integers(3, 6), st.integers(1, 3)),
                      elements=st.floats(-1e3, 1e3)))
    def test_conv_pipeline_stays_finite(self, x):
        rng = np.random.default_rng(11)
        w = rng.standard_normal((3, 3, x.shape[2], 2))
        out = nn.conv2d(nn.relu(x), w, stride=1, padding="same")
        assert np.all(np.isfinite(out))


@pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")
class TestBackendParity:
    def test_conv_and_depthwise_agree(self):
        from signcast.nn.kernels import fallback

        rng = np.random.default_rng(12)
        for _ in range(40):
            batch, h, w_ = int(rng.integers(1, 3)), int(rng.integers(3, 8)), int(rng.integers(3, 8))
            c, f = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            kh, kw = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            kh, kw = min(kh, h), min(kw, w_)
            stride = int(rng.integers(1, 3))
            x = rng.standard_normal((batch, h, w_, c))
            wt = rng.standard_normal((kh, kw, c, f))
            b = rng.standard_normal(f)
            np.testing.assert_allclose(
                kernels.compiled.conv2d_forward(x, wt, b, stride),
                fallback.conv2d_forward(x, wt, b, stride), atol=1e-10)
            dy = rng.standard_normal(fallback.conv2d_forward(x, wt, b, stride).shape)
            for a, bb in zip(kernels.compiled.conv2d_backward(x, wt, dy, stride),
                             fallback.conv2d_backward(x, wt, dy, stride)):
                np.testing.assert_allclose(a, bb, atol=1e-10)
            wd = rng.standard_normal((kh, kw, c))
            bd = rng.standard_normal(c)
            np.testing.assert_allclose(
                kernels.compiled.depthwise_forward(x, wd, bd, stride),
                fallback.depthwise_forward(x, wd, bd, stride), atol=1e-10)
            dyd = rng.standard_normal(fallback.depthwise_forward(x, wd, bd, stride).shape)
            for a, bb in zip(kernels.compiled.depthwise_backward(x, wd, dyd, stride),
                             fallback.depthwise_backward(x, wd, dyd, stride)):
                np.testing.assert_allclose(a, bb, atol=1e-10)
