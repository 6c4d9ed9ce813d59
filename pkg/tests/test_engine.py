import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from surfinspect.engine import (
    EVAL,
    TRAIN,
    BatchNormParams,
    ConvParams,
    FCParams,
    PReLUParams,
    ShapeError,
    Tensor,
    batchnorm_backward,
    batchnorm_forward,
    concat_channels,
    concat_channels_backward,
    conv2d_backward,
    conv2d_forward,
    fc_backward,
    fc_forward,
    he_init,
    logsoftmax_nll,
    maxpool2_backward,
    maxpool2_forward,
    prelu_backward,
    prelu_forward,
    residual_add,
    residual_add_backward,
)

from oracles import central_diff, naive_conv2d, naive_maxpool2, rel_error

SEEDS = range(20)
# every (k, s, p) combination used by SurfNet, FastInf and MultiVis
NETWORK_CONV_CONFIGS = [(5, 2, 2), (3, 2, 1), (1, 1, 0)]


def _conv(rng, c, o, k, s, p, dtype=np.float64):
    return ConvParams(c, o, k, s, p,
                      weight=rng.standard_normal((o, c, k, k)).astype(dtype),
                      bias=rng.standard_normal(o).astype(dtype))


class TestTensor:
    def test_shape_invariants(self):
        t = Tensor(np.zeros((2, 3, 4, 5)))
        assert t.size == 2 * 3 * 4 * 5
        t.zero_grad()
        assert t.grad.shape == t.shape

    @pytest.mark.parametrize("shape", [(3, 4), (1, 0, 2, 2), (1, 1, 1, 1, 1)])
    def test_rejects_bad_shapes(self, shape):
        with pytest.raises(ShapeError):
            Tensor(np.zeros(shape))

    def test_grad_shape_must_match(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros((1, 1, 2, 2)), grad=np.zeros((1, 1, 2, 3)))

    def test_default_dtype_is_float32(self):
        assert Tensor(np.zeros((1, 1, 2, 2), dtype=np.int32)).data.dtype == np.float32


class TestConv:
    def test_output_size_halves_128(self):
        rng = np.random.default_rng(0)
        p = _conv(rng, 1, 4, 5, 2, 2, np.float32)
        out = conv2d_forward(np.zeros((1, 1, 128, 128), np.float32), p)
        assert out.shape == (1, 4, 64, 64)

    def test_sum_of_nine_ones(self):
        p = ConvParams(1, 1, 3, 1, 0, weight=np.ones((1, 1, 3, 3), np.float32))
        out = conv2d_forward(np.ones((1, 1, 3, 3), np.float32), p)
        assert out.shape == (1, 1, 1, 1) and out[0, 0, 0, 0] == 9.0

    def test_random_case_matches_direct_loop(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((2, 3, 9, 9)).astype(np.float32)
        p = _conv(rng, 3, 4, 5, 2, 2, np.float32)
        got = conv2d_forward(x, p)
        want = naive_conv2d(x, p.weight, p.bias, 2, 2)
        assert np.abs(got - want).max() <= 1e-5

    @pytest.mark.parametrize("k,s,p", NETWORK_CONV_CONFIGS)
    def test_network_configs_match_direct_loop(self, k, s, p):
        rng = np.random.default_rng(k * 10 + s)
        x = rng.standard_normal((2, 3, 8, 8)).astype(np.float32)
        cp = _conv(rng, 3, 2, k, s, p, np.float32)
        assert np.abs(conv2d_forward(x, cp) - naive_conv2d(x, cp.weight, cp.bias, s, p)).max() <= 1e-5

    def test_shape_mismatch_names_both_shapes(self):
        rng = np.random.default_rng(0)
        p = _conv(rng, 3, 2, 3, 1, 1)
        with pytest.raises(ShapeError, match=r"\(1, 2, 5, 5\).*\(2, 3, 3, 3\)"):
            conv2d_forward(np.zeros((1, 2, 5, 5)), p)

    def test_kernel_constraints(self):
        with pytest.raises(ValueError):
            ConvParams(1, 1, 7)
        with pytest.raises(ValueError):
            ConvParams(1, 1, 1, stride=2)
        with pytest.raises(ValueError):
            ConvParams(1, 1, 1, padding=1)

    def test_zero_grad_out_gives_zero_gradients(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((1, 2, 6, 6))
        p = _conv(rng, 2, 3, 3, 2, 1)
        gi, gw, gb = conv2d_backward(x, p, np.zeros((1, 3, 3, 3)))
        assert not gi.any() and not gw.any() and not gb.any()

    def test_missing_grad_buffer_rejected(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError):
            conv2d_backward(np.zeros((1, 2, 6, 6)), _conv(rng, 2, 3, 3, 2, 1), None)

    def test_1x1_input_grad_is_transposed_weight_contraction(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 4, 5, 5))
        p = _conv(rng, 4, 3, 1, 1, 0)
        g = rng.standard_normal((2, 3, 5, 5))
        gi, _, _ = conv2d_backward(x, p, g)
        want = np.einsum("oc,nohw->nchw", p.weight[:, :, 0, 0], g)
        np.testing.assert_allclose(gi, want, rtol=1e-12, atol=1e-12)

    def test_bias_gradient_is_channel_sum(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((2, 2, 6, 6))
        p = _conv(rng, 2, 3, 3, 2, 1)
        g = rng.standard_normal((2, 3, 3, 3))
        _, _, gb = conv2d_backward(x, p, g)
        np.testing.assert_allclose(gb, g.sum(axis=(0, 2, 3)))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference_small_case(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1, 2, 6, 6))
        p = _conv(rng, 2, 3, 3, 2, 1)
        r = rng.standard_normal((1, 3, 3, 3))

        def loss():
            return float(np.sum(conv2d_forward(x, p) * r))

        gi, gw, gb = conv2d_backward(x, p, r)
        assert rel_error(gi, central_diff(loss, x)) <= 1e-3
        assert rel_error(gw, central_diff(loss, p.weight)) <= 1e-3
        assert rel_error(gb, central_diff(loss, p.bias)) <= 1e-3

    @pytest.mark.parametrize("k,s,p", NETWORK_CONV_CONFIGS)
    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference_network_configs(self, k, s, p, seed):
        rng = np.random.default_rng(1000 + seed)
        x = rng.standard_normal((2, 2, 6, 6))
        cp = _conv(rng, 2, 2, k, s, p)
        out_shape = conv2d_forward(x, cp).shape
        r = rng.standard_normal(out_shape)

        def loss():
            return float(np.sum(conv2d_forward(x, cp) * r))

        cache = {}
        conv2d_forward(x, cp, cache)
        gi, gw, gb = conv2d_backward(x, cp, r, cache)
        assert rel_error(gi, central_diff(loss, x)) <= 1e-3
        assert rel_error(gw, central_diff(loss, cp.weight)) <= 1e-3


class TestBatchNorm:
    def test_train_standardizes(self):
        rng = np.random.default_rng(0)
        x = (rng.standard_normal((8, 3, 6, 6)) * 4 + 7).astype(np.float32)
        out = batchnorm_forward(x, BatchNormParams(3), TRAIN)
        assert np.abs(out.mean(axis=(0, 2, 3))).max() < 1e-4
        assert np.abs(out.var(axis=(0, 2, 3)) - 1).max() < 1e-3

    def test_affine_contract(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((16, 2, 8, 8))
        x = (x - x.mean(axis=(0, 2, 3), keepdims=True)) / x.std(axis=(0, 2, 3), keepdims=True)
        p = BatchNormParams(2, gamma=np.full(2, 2.0), beta=np.full(2, 5.0), epsilon=1e-12)
        np.testing.assert_allclose(batchnorm_forward(x, p, TRAIN), 2 * x + 5, atol=1e-9)

    def test_running_stats_update(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((4, 2, 3, 3)) + 3
        p = BatchNormParams(2, gamma=np.ones(2), beta=np.zeros(2),
                            running_mean=np.zeros(2), running_var=np.ones(2))
        batchnorm_forward(x, p, TRAIN)
        m = x.shape[0] * 9
        np.testing.assert_allclose(p.running_mean, 0.1 * x.mean(axis=(0, 2, 3)))
        np.testing.assert_allclose(p.running_var,
                                   0.9 + 0.1 * x.var(axis=(0, 2, 3)) * m / (m - 1))

    def test_eval_is_pure_affine(self):
        rng = np.random.default_rng(3)
        p = BatchNormParams(2, running_mean=np.array([1.0, -2.0], np.float32),
                            running_var=np.array([4.0, 0.25], np.float32))
        x = rng.standard_normal((3, 2, 4, 4)).astype(np.float32)
        before = (p.running_mean.copy(), p.running_var.copy())
        a = batchnorm_forward(x, p, EVAL)
        b = batchnorm_forward(x, p, EVAL)
        assert np.array_equal(a, b)
        assert np.array_equal(before[0], p.running_mean) and np.array_equal(before[1], p.running_var)
        # affine: f(x + y) - f(y) = f(x) - f(0)
        zero = np.zeros_like(x)
        lhs = batchnorm_forward(2 * x, p, EVAL) - batchnorm_forward(x, p, EVAL)
        rhs = batchnorm_forward(x, p, EVAL) - batchnorm_forward(zero, p, EVAL)
        np.testing.assert_allclose(lhs, rhs, atol=1e-5)

    def test_single_value_per_channel_rejected(self):
        with pytest.raises(ValueError, match="N\\*H\\*W"):
            batchnorm_forward(np.zeros((1, 2, 1, 1)), BatchNormParams(2), TRAIN)

    def test_zero_grad(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((4, 3, 5, 5))
        p = BatchNormParams(3, gamma=np.ones(3), beta=np.zeros(3))
        cache = {}
        batchnorm_forward(x, p, TRAIN, cache)
        gi, gg, gb = batchnorm_backward(np.zeros_like(x), p, cache)
        assert not gi.any() and not gg.any() and not gb.any()

    def test_gamma_grad_definition(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((4, 3, 5, 5))
        p = BatchNormParams(3, gamma=rng.standard_normal(3), beta=np.zeros(3))
        cache = {}
        batchnorm_forward(x, p, TRAIN, cache)
        g = rng.standard_normal(x.shape)
        _, gg, _ = batchnorm_backward(g, p, cache)
        xhat = (x - x.mean(axis=(0, 2, 3), keepdims=True)) / np.sqrt(
            x.var(axis=(0, 2, 3), keepdims=True) + p.epsilon)
        np.testing.assert_allclose(gg, (g * xhat).sum(axis=(0, 2, 3)), rtol=1e-10)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference_train(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((4, 3, 5, 5))
        p = BatchNormParams(3, gamma=rng.standard_normal(3), beta=rng.standard_normal(3))
        r = rng.standard_normal(x.shape)

        def loss():
            q = BatchNormParams(3, gamma=p.gamma, beta=p.beta)
            return float(np.sum(batchnorm_forward(x, q, TRAIN) * r))

        cache = {}
        batchnorm_forward(x, BatchNormParams(3, gamma=p.gamma, beta=p.beta), TRAIN, cache)
        gi, gg, gb = batchnorm_backward(r, p, cache)
        assert rel_error(gi, central_diff(loss, x)) <= 1e-3
        assert rel_error(gg, central_diff(loss, p.gamma)) <= 1e-3
        assert rel_error(gb, central_diff(loss, p.beta)) <= 1e-3

    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference_eval(self, seed):
        rng = np.random.default_rng(100 + seed)
        x = rng.standard_normal((2, 3, 4, 4))
        p = BatchNormParams(3, gamma=rng.standard_normal(3), beta=rng.standard_normal(3),
                            running_mean=rng.standard_normal(3),
                            running_var=rng.uniform(0.5, 2, 3))
        r = rng.standard_normal(x.shape)

        def loss():
            return float(np.sum(batchnorm_forward(x, p, EVAL) * r))

        cache = {}
        batchnorm_forward(x, p, EVAL, cache)
        gi, gg, _ = batchnorm_backward(r, p, cache)
        assert rel_error(gi, central_diff(loss, x)) <= 1e-3
        assert rel_error(gg, central_diff(loss, p.gamma)) <= 1e-3


class TestPReLU:
    def test_definition(self):
        p = PReLUParams(np.array([0.25]))
        x = np.array([-2.0, 3.0]).reshape(1, 1, 1, 2)
        np.testing.assert_array_equal(prelu_forward(x, p).ravel(), [-0.5, 3.0])

    def test_zero_slope_is_relu(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 3, 4, 4))
        np.testing.assert_array_equal(prelu_forward(x, PReLUParams(np.zeros(3))), np.maximum(x, 0))

    def test_slopes_outside_unit_interval(self):
        x = np.array([-2.0, 3.0]).reshape(1, 1, 1, 2)
        np.testing.assert_array_equal(prelu_forward(x, PReLUParams(np.array([1.5]))).ravel(),
                                      [-3.0, 3.0])
        np.testing.assert_array_equal(prelu_forward(x, PReLUParams(np.array([-0.5]))).ravel(),
                                      [1.0, 3.0])

    def test_slope_count_checked(self):
        with pytest.raises(ShapeError):
            prelu_forward(np.zeros((1, 3, 2, 2)), PReLUParams(np.zeros(2)))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2, 3, 4, 4))
        x[np.abs(x) < 0.01] = 0.5  # keep clear of the kink
        p = PReLUParams(rng.uniform(-0.5, 1.5, 3))
        r = rng.standard_normal(x.shape)

        def loss():
            return float(np.sum(prelu_forward(x, p) * r))

        gi, gs = prelu_backward(x, p, r)
        assert rel_error(gi, central_diff(loss, x)) <= 1e-3
        assert rel_error(gs, central_diff(loss, p.slopes)) <= 1e-3


class TestMaxPool:
    def test_single_window(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
        out, idx = maxpool2_forward(x)
        assert out.item() == 4.0
        g = maxpool2_backward(np.ones((1, 1, 1, 1)), idx)
        np.testing.assert_array_equal(g.reshape(2, 2), [[0, 0], [0, 1]])

    def test_tie_goes_to_first(self):
        x = np.full((1, 1, 2, 2), 7.0)
        _, idx = maxpool2_forward(x)
        g = maxpool2_backward(np.ones((1, 1, 1, 1)), idx)
        np.testing.assert_array_equal(g.reshape(2, 2), [[1, 0], [0, 0]])

    def test_odd_dims_rejected(self):
        with pytest.raises(ShapeError):
            maxpool2_forward(np.zeros((1, 1, 3, 4)))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_matches_window_scan(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 4, size=(2, 3, 6, 8)).astype(np.float64)  # plenty of ties
        out, idx = maxpool2_forward(x)
        want, warg = naive_maxpool2(x)
        np.testing.assert_array_equal(out, want)
        np.testing.assert_array_equal(idx, warg)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference(self, seed):
        rng = np.random.default_rng(seed)
        # distinct values spaced well beyond the step size
        x = rng.permutation(2 * 2 * 4 * 4).reshape(2, 2, 4, 4).astype(np.float64) * 0.1
        r = rng.standard_normal((2, 2, 2, 2))

        def loss():
            return float(np.sum(maxpool2_forward(x)[0] * r))

        _, idx = maxpool2_forward(x)
        assert rel_error(maxpool2_backward(r, idx), central_diff(loss, x)) <= 1e-3


class TestFC:
    def test_identity_weights(self):
        x = np.array([[1.5, -2.0]]).reshape(1, 2, 1, 1)
        out = fc_forward(x, FCParams(np.eye(2), np.zeros(2)))
        np.testing.assert_array_equal(out, [[1.5, -2.0]])

    def test_zero_weights_gives_bias(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 2, 2, 2))
        out = fc_forward(x, FCParams(np.zeros((6, 8)), np.arange(6.0)))
        np.testing.assert_array_equal(out, np.tile(np.arange(6.0), (3, 1)))

    def test_feature_count_checked(self):
        with pytest.raises(ShapeError):
            fc_forward(np.zeros((1, 2, 2, 2)), FCParams(np.zeros((2, 7)), np.zeros(2)))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((3, 2, 2, 2))
        p = FCParams(rng.standard_normal((2, 8)), rng.standard_normal(2))
        r = rng.standard_normal((3, 2))

        def loss():
            return float(np.sum(fc_forward(x, p) * r))

        gi, gw, gb = fc_backward(x, p, r)
        assert rel_error(gi, central_diff(loss, x)) <= 1e-3
        assert rel_error(gw, central_diff(loss, p.weight)) <= 1e-3
        assert rel_error(gb, central_diff(loss, p.bias)) <= 1e-3


class TestResidualConcat:
    def test_identity_and_cancellation(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1, 2, 3, 3))
        np.testing.assert_array_equal(residual_add(x, np.zeros_like(x)), x)
        assert not residual_add(x, -x).any()

    def test_backward_passes_gradient_unchanged(self):
        g = np.random.default_rng(1).standard_normal((1, 2, 3, 3))
        a, b = residual_add_backward(g)
        assert np.array_equal(a, g) and np.array_equal(b, g)
        assert np.isclose(a.sum() + b.sum(), 2 * g.sum())

    def test_concat_shapes(self):
        out = concat_channels([np.zeros((1, 2, 4, 4)), np.ones((1, 3, 4, 4))])
        assert out.shape == (1, 5, 4, 4)

    def test_single_input_is_identity(self):
        x = np.random.default_rng(2).standard_normal((1, 2, 4, 4))
        np.testing.assert_array_equal(concat_channels([x]), x)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        parts = [rng.standard_normal((2, c, 4, 4)) for c in (1, 3, 2)]
        back = concat_channels_backward(concat_channels(parts), [1, 3, 2])
        for a, b in zip(parts, back):
            assert np.array_equal(a, b)

    def test_concat_backward_conserves_mass(self):
        g = np.random.default_rng(4).standard_normal((2, 6, 4, 4))
        parts = concat_channels_backward(g, [1, 3, 2])
        assert np.isclose(sum(p.sum() for p in parts), g.sum())

    def test_concat_spatial_mismatch(self):
        with pytest.raises(ShapeError):
            concat_channels([np.zeros((1, 2, 4, 4)), np.zeros((1, 2, 2, 2))])


class TestLoss:
    def test_uniform_logits(self):
        loss, _ = logsoftmax_nll(np.array([0.0, 0.0]), 0)
        assert loss == pytest.approx(np.log(2), abs=1e-12)

    def test_large_logit_stable(self):
        loss, grad = logsoftmax_nll(np.array([1000.0, 0.0]), 0)
        assert np.isfinite(loss) and loss == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(grad))

    def test_target_range(self):
        with pytest.raises(ValueError):
            logsoftmax_nll(np.zeros((1, 2)), [2])

    @pytest.mark.parametrize("seed", SEEDS)
    def test_gradient(self, seed):
        rng = np.random.default_rng(seed)
        logits = rng.standard_normal((4, 6)) * 3
        t = rng.integers(0, 6, 4)
        _, grad = logsoftmax_nll(logits, t)
        assert np.abs(grad.sum(axis=1)).max() <= 1e-6
        assert rel_error(grad, central_diff(lambda: logsoftmax_nll(logits, t)[0], logits)) <= 1e-3

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=8), st.data())
    @settings(max_examples=100, deadline=None)
    def test_gradient_rows_sum_to_zero(self, values, data):
        t = data.draw(st.integers(0, len(values) - 1))
        _, grad = logsoftmax_nll(np.array([values]), [t])
        assert abs(grad.sum()) <= 1e-6


class TestHeInit:
    def test_fan_in_two_gives_unit_std(self):
        from surfinspect.engine import he_std
        assert he_std(2) == 1.0

    def test_sample_variance(self):
        w = he_init((100_000,), 8, np.random.default_rng(0))
        assert abs(w.var() / (2 / 8) - 1) < 0.05
        assert abs(w.mean()) < 0.01

    def test_deterministic(self):
        a = he_init((4, 3, 5, 5), 75, np.random.default_rng(9))
        b = he_init((4, 3, 5, 5), 75, np.random.default_rng(9))
        assert a.dtype == np.float32 and a.tobytes() == b.tobytes()

    def test_fan_in_must_be_positive(self):
        with pytest.raises(ValueError):
            he_init((2,), 0, np.random.default_rng(0))
