"""Dense numerical core: MLP forward/backward against finite differences,
Adam, the plateau scheduler, and the logistic-regression probe trainer."""

import numpy as np
import pytest

from stc.errors import DataError, NumericalError
from stc.nn_core import (
    IDENTITY,
    RELU,
    AdamState,
    MlpParams,
    PlateauScheduler,
    adam_init,
    adam_step,
    init_mlp,
    mlp_backward,
    mlp_forward,
    plateau_step,
    train_logistic,
    zero_grads,
)


def finite_diff(fn, arrays, step=1e-5):
    """Central finite differences of a scalar function of a list of arrays."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + step
            hi = fn()
            arr[idx] = orig - step
            lo = fn()
            arr[idx] = orig
            g[idx] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for a, f in zip(analytic, numeric):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-6)
        worst = max(worst, float((np.abs(a - f) / scale).max()))
    return worst


class TestMlpForward:
    def test_identity_network(self):
        params = MlpParams(
            weights=[np.eye(3)], biases=[np.zeros(3)], activations=[IDENTITY]
        )
        x = np.array([[1.0, -2.0, 3.0], [0.0, 0.5, -1.0]])
        np.testing.assert_array_equal(mlp_forward(params, x).output, x)

    def test_relu_definition(self):
        params = MlpParams(
            weights=[np.eye(2)], biases=[np.zeros(2)], activations=[RELU]
        )
        out = mlp_forward(params, np.array([[-1.0, 2.0]])).output
        np.testing.assert_array_equal(out, [[0.0, 2.0]])

    def test_random_two_layer_shapes(self, rng):
        params = init_mlp([5, 7, 3], rng)
        out = mlp_forward(params, rng.standard_normal((4, 5))).output
        assert out.shape == (4, 3)
        assert np.all(np.isfinite(out))

    def test_dimension_mismatch_rejected(self, rng):
        params = init_mlp([5, 3], rng)
        with pytest.raises(DataError):
            mlp_forward(params, rng.standard_normal((4, 6)))


class TestMlpBackward:
    def test_zero_output_gradient(self, rng):
        params = init_mlp([4, 6, 2], rng)
        cache = mlp_forward(params, rng.standard_normal((3, 4)))
        grads, d_in = mlp_backward(params, cache, np.zeros_like(cache.output))
        for g in grads.arrays():
            np.testing.assert_array_equal(g, 0.0)
        np.testing.assert_array_equal(d_in, 0.0)

    def test_linear_layer_sum_loss(self, rng):
        # loss = sum(x @ W + b): dW = column sums of x broadcast, db = batch size
        x = rng.standard_normal((5, 3))
        params = MlpParams(
            weights=[rng.standard_normal((3, 2))],
            biases=[np.zeros(2)],
            activations=[IDENTITY],
        )
        cache = mlp_forward(params, x)
        grads, _ = mlp_backward(params, cache, np.ones_like(cache.output))
        np.testing.assert_allclose(
            grads.weights[0], np.tile(x.sum(axis=0)[:, None], (1, 2))
        )
        np.testing.assert_allclose(grads.biases[0], [5.0, 5.0])

    def test_finite_difference_agreement(self, rng):
        params = init_mlp([4, 8, 5, 3], rng)
        x = rng.standard_normal((6, 4))
        target = rng.standard_normal((6, 3))

        def loss():
            diff = mlp_forward(params, x).output - target
            return 0.5 * float((diff * diff).sum())

        cache = mlp_forward(params, x)
        analytic, _ = mlp_backward(params, cache, cache.output - target)
        numeric = finite_diff(loss, params.arrays())
        assert max_rel_error(analytic.arrays(), numeric) < 1e-4

    def test_mismatched_cache_rejected(self, rng):
        params = init_mlp([4, 3], rng)
        cache = mlp_forward(params, rng.standard_normal((2, 4)))
        with pytest.raises(DataError):
            mlp_backward(params, cache, np.zeros((5, 3)))


class TestInitMlp:
    def test_glorot_bound_and_activations(self, rng):
        params = init_mlp([10, 20, 5], rng)
        bound0 = np.sqrt(6.0 / 30)
        assert np.abs(params.weights[0]).max() <= bound0
        assert params.activations == [RELU, IDENTITY]
        for b in params.biases:
            np.testing.assert_array_equal(b, 0.0)

    def test_deterministic_under_seed(self):
        a = init_mlp([3, 4], np.random.default_rng(9))
        b = init_mlp([3, 4], np.random.default_rng(9))
        np.testing.assert_array_equal(a.weights[0], b.weights[0])


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        p = np.array([1.0, -2.0])
        state = adam_init([p], lr=0.1)
        adam_step(state, [p], [np.zeros(2)])
        np.testing.assert_array_equal(p, [1.0, -2.0])

    def test_first_step_hand_value(self):
        # bias-corrected first step with grad 1 moves by exactly -lr
        # (up to the epsilon in the denominator)
        p = np.array([0.0])
        state = adam_init([p], lr=0.001)
        adam_step(state, [p], [np.ones(1)])
        assert p[0] == pytest.approx(-0.001, rel=1e-6)
        assert state.step == 1

    def test_quadratic_convergence(self):
        w = np.array([0.0])
        state = adam_init([w], lr=0.1)
        for _ in range(100):
            adam_step(state, [w], [2.0 * (w - 3.0)])
        assert abs(w[0] - 3.0) < 0.1

    def test_non_finite_gradient_names_parameter(self):
        p = np.array([0.0])
        state = adam_init([p])
        with pytest.raises(NumericalError, match="encoder.w0"):
            adam_step(state, [p], [np.array([np.nan])], names=["encoder.w0"])

    def test_count_mismatch_rejected(self):
        p = np.array([0.0])
        state = adam_init([p])
        with pytest.raises(DataError):
            adam_step(state, [p], [np.zeros(1), np.zeros(1)])


class TestPlateauScheduler:
    def test_improving_metric_keeps_lr(self):
        sched = PlateauScheduler(lr=0.1, patience=2)
        for metric in [5.0, 4.0, 3.0, 2.0]:
            assert plateau_step(sched, metric) == 0.1

    def test_constant_metric_reduces_on_third_call(self):
        # patience 2: first call records best; two non-improving calls later
        # the lr halves
        sched = PlateauScheduler(lr=0.1, factor=0.5, patience=2)
        plateau_step(sched, 1.0)            # improvement over +inf
        assert plateau_step(sched, 1.0) == 0.1      # stall 1
        assert plateau_step(sched, 1.0) == 0.05     # stall 2 -> reduce
        assert sched.stall_count == 0

    def test_min_lr_floor(self):
        sched = PlateauScheduler(lr=1e-6, factor=0.5, patience=0, min_lr=1e-6)
        assert plateau_step(sched, 1.0) == 1e-6
        assert plateau_step(sched, 1.0) == 1e-6

    def test_lr_never_increases(self, rng):
        sched = PlateauScheduler(lr=0.1, factor=0.7, patience=1)
        last = sched.lr
        for metric in rng.uniform(0, 10, size=50):
            lr = plateau_step(sched, float(metric))
            assert lr <= last
            last = lr

    def test_non_finite_metric_rejected(self):
        sched = PlateauScheduler(lr=0.1)
        with pytest.raises(NumericalError):
            plateau_step(sched, float("nan"))


class TestTrainLogistic:
    def test_separable_blobs(self, rng):
        x = np.concatenate([
            rng.normal(-3, 0.3, size=(30, 2)), rng.normal(3, 0.3, size=(30, 2))
        ])
        y = np.array([0] * 30 + [1] * 30)
        clf = train_logistic(x, y)
        assert (clf.predict(x) == y).mean() == 1.0

    def test_chance_level_on_random_labels(self, rng):
        x = rng.standard_normal((200, 4))
        y = np.array([0, 1] * 100)
        clf = train_logistic(x, y)
        assert (clf.predict(x) == y).mean() == pytest.approx(0.5, abs=0.1)

    def test_duplicating_samples_keeps_decision_function(self, rng):
        x = rng.standard_normal((20, 3))
        y = rng.integers(0, 2, size=20)
        y[0], y[1] = 0, 1
        a = train_logistic(x, y)
        b = train_logistic(np.concatenate([x, x]), np.concatenate([y, y]))
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-8)
        np.testing.assert_allclose(a.bias, b.bias, atol=1e-8)

    def test_single_class_rejected(self, rng):
        with pytest.raises(DataError):
            train_logistic(rng.standard_normal((5, 2)), np.zeros(5, dtype=int))

    def test_deterministic(self, rng):
        x = rng.standard_normal((30, 3))
        y = np.array([0, 1, 2] * 10)
        a = train_logistic(x, y)
        b = train_logistic(x, y)
        np.testing.assert_array_equal(a.weights, b.weights)


def test_zero_grads_shapes(rng):
    params = init_mlp([4, 6, 2], rng)
    grads = zero_grads(params)
    for g, p in zip(grads.arrays(), params.arrays()):
        assert g.shape == p.shape
        np.testing.assert_array_equal(g, 0.0)
