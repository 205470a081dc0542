import math
from datetime import date, timedelta

import numpy as np
import pytest

from eventcast.dbn import (
    DbnModel,
    DbnParams,
    Rbm,
    dbn_finetune,
    dbn_forecast,
    dbn_pretrain,
    minmax_stats,
    network_loss_and_grads,
    rbm_hidden_prob,
    rbm_train,
    sliding_window_rows,
)
from eventcast.errors import DimensionMismatch, HistoryTooShort, TooFewRows
from eventcast.series import TimeSeries, TransformSpec

D0 = date(2020, 1, 1)


def bars_data(n_rows: int = 80) -> np.ndarray:
    """Two 4-pixel patterns: left bar [1,1,0,0] and right bar [0,0,1,1]."""
    rows = [[1.0, 1.0, 0.0, 0.0] if i % 2 == 0 else [0.0, 0.0, 1.0, 1.0] for i in range(n_rows)]
    return np.asarray(rows)


class TestRbm:
    def test_hidden_prob_at_zero_weights(self):
        rbm = Rbm(np.zeros((3, 4)), np.zeros(3), np.zeros(4))
        np.testing.assert_allclose(rbm_hidden_prob(rbm, np.zeros(3)), np.full(4, 0.5))

    def test_saturated_bias(self):
        rbm = Rbm(np.zeros((2, 3)), np.zeros(2), np.full(3, 10.0))
        assert np.all(rbm_hidden_prob(rbm, np.zeros(2)) > 0.9999)

    def test_single_weight_sigmoid(self):
        rbm = Rbm(np.array([[1.0]]), np.zeros(1), np.zeros(1))
        value = rbm_hidden_prob(rbm, np.array([1.0]))[0]
        assert abs(value - 1.0 / (1.0 + math.exp(-1.0))) < 1e-12
        assert abs(value - 0.7311) < 1e-4

    def test_outputs_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(0)
        rbm = Rbm(rng.normal(size=(5, 6)), rng.normal(size=5), rng.normal(size=6))
        probs = rbm_hidden_prob(rbm, rng.uniform(size=(20, 5)))
        assert np.all(probs > 0.0) and np.all(probs < 1.0)

    def test_dimension_mismatch(self):
        rbm = Rbm(np.zeros((3, 4)), np.zeros(3), np.zeros(4))
        with pytest.raises(DimensionMismatch):
            rbm_hidden_prob(rbm, np.zeros(5))

    def test_bars_reconstruction_error_halves(self):
        rbm = rbm_train(bars_data(), units=4, plr=0.2, k=1, epochs=200, batch=8, seed=1)
        errors = rbm.reconstruction_errors
        assert errors[-1] <= 0.5 * errors[0]

    def test_zero_epochs_returns_initialization(self):
        data = bars_data()
        trained = rbm_train(data, units=4, plr=0.1, k=1, epochs=0, batch=8, seed=3)
        rng = np.random.default_rng(3)
        expected = rng.normal(0.0, 0.01, (4, 4))
        np.testing.assert_array_equal(trained.W, expected)
        assert np.all(trained.b_hidden == 0.0)

    def test_deterministic_per_seed(self):
        a = rbm_train(bars_data(), units=4, plr=0.1, k=2, epochs=50, batch=8, seed=7)
        b = rbm_train(bars_data(), units=4, plr=0.1, k=2, epochs=50, batch=8, seed=7)
        np.testing.assert_array_equal(a.W, b.W)
        np.testing.assert_array_equal(a.b_hidden, b.b_hidden)
        np.testing.assert_array_equal(a.b_visible, b.b_visible)


class TestPretrain:
    def test_single_layer_equals_rbm_train(self):
        data = bars_data()
        params = DbnParams(h=1, n=4, plr=0.1, k=1, b=8, pretrain_epochs=20)
        stack = dbn_pretrain(data, params, seed=5)
        direct = rbm_train(data, units=4, plr=0.1, k=1, epochs=20, batch=8, seed=5)
        assert len(stack) == 1
        np.testing.assert_array_equal(stack[0].W, direct.W)

    def test_two_layer_shapes(self):
        rng = np.random.default_rng(11)
        data = rng.uniform(size=(100, 12))
        params = DbnParams(h=2, n=50, plr=0.001, k=1, b=10, pretrain_epochs=2)
        stack = dbn_pretrain(data, params, seed=2)
        assert stack[0].W.shape == (12, 50)
        assert stack[1].W.shape == (50, 50)

    def test_layer_two_sees_layer_one_hidden_probs(self):
        rng = np.random.default_rng(12)
        data = rng.uniform(size=(40, 6))
        params = DbnParams(h=2, n=5, plr=0.05, k=1, b=8, pretrain_epochs=3)
        stack = dbn_pretrain(data, params, seed=9)
        hidden = rbm_hidden_prob(stack[0], data)
        direct = rbm_train(hidden, units=5, plr=0.05, k=1, epochs=3, batch=8, seed=10)
        np.testing.assert_allclose(stack[1].W, direct.W, atol=1e-10)


class TestGradients:
    def test_backprop_matches_central_differences(self):
        rng = np.random.default_rng(21)
        X = rng.uniform(0.1, 0.9, (5, 3))
        y = rng.uniform(0.0, 1.0, 5)
        stack = [
            Rbm(rng.normal(0, 0.5, (3, 4)), np.zeros(3), rng.normal(0, 0.1, 4)),
            Rbm(rng.normal(0, 0.5, (4, 3)), np.zeros(4), rng.normal(0, 0.1, 3)),
        ]
        w_out = rng.normal(0, 0.5, 3)
        b_out = 0.3
        l2 = 0.01
        loss, gW, gb, gwo, gbo = network_loss_and_grads(stack, w_out, b_out, X, y, l2)
        eps = 1e-5

        def numeric(setter, getter):
            base = getter()
            setter(base + eps)
            up = network_loss_and_grads(stack, w_out, b_out, X, y, l2)[0]
            setter(base - eps)
            down = network_loss_and_grads(stack, w_out, b_out, X, y, l2)[0]
            setter(base)
            return (up - down) / (2 * eps)

        worst = 0.0
        for layer, rbm in enumerate(stack):
            for i in range(rbm.W.shape[0]):
                for j in range(rbm.W.shape[1]):
                    def set_w(v, i=i, j=j, rbm=rbm):
                        rbm.W[i, j] = v
                    fd = numeric(set_w, lambda i=i, j=j, rbm=rbm: rbm.W[i, j])
                    denom = max(abs(fd), abs(gW[layer][i, j]), 1e-8)
                    worst = max(worst, abs(fd - gW[layer][i, j]) / denom)
            for j in range(len(rbm.b_hidden)):
                def set_b(v, j=j, rbm=rbm):
                    rbm.b_hidden[j] = v
                fd = numeric(set_b, lambda j=j, rbm=rbm: rbm.b_hidden[j])
                denom = max(abs(fd), abs(gb[layer][j]), 1e-8)
                worst = max(worst, abs(fd - gb[layer][j]) / denom)
        for j in range(len(w_out)):
            def set_o(v, j=j):
                w_out[j] = v
            fd = numeric(set_o, lambda j=j: w_out[j])
            denom = max(abs(fd), abs(gwo[j]), 1e-8)
            worst = max(worst, abs(fd - gwo[j]) / denom)
        assert worst < 1e-4


class TestFinetune:
    def _toy(self, n=200, seed=31):
        rng = np.random.default_rng(seed)
        X = rng.uniform(0.0, 1.0, (n, 4))
        y = X.sum(axis=1)
        return X, y

    def test_zero_learning_rate_keeps_pretrained_weights(self):
        X, y = self._toy()
        params = DbnParams(h=1, n=8, plr=0.05, tlr=0.0, k=1, b=20, pretrain_epochs=5, max_epochs=10)
        stack = dbn_pretrain(X, params, seed=1)
        model = dbn_finetune(stack, X, y, params, seed=1)
        np.testing.assert_array_equal(model.rbm_stack[0].W, stack[0].W)
        np.testing.assert_array_equal(model.rbm_stack[0].b_hidden, stack[0].b_hidden)

    def test_learns_linear_toy_problem(self):
        X, y = self._toy(400)
        params = DbnParams(
            h=2, n=8, plr=0.05, tlr=1.0, k=1, b=10, l2=1e-6,
            pretrain_epochs=10, max_epochs=500, patience=500,
        )
        stack = dbn_pretrain(X, params, seed=2)
        model = dbn_finetune(stack, X, y, params, seed=2)
        pred = model.predict_normalized(X) * model.y_span + model.y_lo
        rmse = float(np.sqrt(np.mean((pred - y) ** 2)))
        assert rmse < 0.1 * float(y.std())

    def test_small_learning_rate_non_increasing_loss(self):
        X, y = self._toy(150)
        params = DbnParams(
            h=1, n=8, plr=0.01, tlr=1e-4, k=1, b=150, l2=0.0,
            pretrain_epochs=2, max_epochs=10, patience=10**6,
        )
        stack = dbn_pretrain(X, params, seed=3)
        losses = []
        work = [Rbm(stack[0].W.copy(), stack[0].b_visible.copy(), stack[0].b_hidden.copy())]
        rng = np.random.default_rng(0)
        w_out = rng.normal(0, 0.01, 8)
        b_out = float(y.mean())
        yn = (y - y.min()) / (y.max() - y.min())
        for _ in range(10):
            loss, gW, gb, gwo, gbo = network_loss_and_grads(work, w_out, b_out, X, yn, 0.0)
            losses.append(loss)
            work[0].W -= 1e-4 * gW[0]
            work[0].b_hidden -= 1e-4 * gb[0]
            w_out -= 1e-4 * gwo
            b_out -= 1e-4 * gbo
        assert np.all(np.diff(losses) <= 1e-12)

    def test_determinism(self):
        X, y = self._toy(120)
        params = DbnParams(h=1, n=6, plr=0.05, tlr=0.1, k=1, b=20, pretrain_epochs=5, max_epochs=30)
        stack = dbn_pretrain(X, params, seed=4)
        a = dbn_finetune(stack, X, y, params, seed=4)
        b = dbn_finetune(stack, X, y, params, seed=4)
        np.testing.assert_array_equal(a.rbm_stack[0].W, b.rbm_stack[0].W)
        np.testing.assert_array_equal(a.output_weights, b.output_weights)
        assert a.output_bias == b.output_bias

    def test_too_few_rows(self):
        X = np.zeros((5, 3))
        params = DbnParams(h=1, n=4)
        stack = [Rbm(np.zeros((3, 4)), np.zeros(3), np.zeros(4))]
        with pytest.raises(TooFewRows):
            dbn_finetune(stack, X, np.zeros(5), params)


class TestForecast:
    def _train_constant_model(self, level=100.0, n=120, seed=5):
        values = np.full(n, level)
        series = TimeSeries(D0, values, name="flat")
        params = DbnParams(
            h=1, n=8, plr=0.02, tlr=0.2, k=1, b=16, l2=0.0,
            window=7, pretrain_epochs=5, max_epochs=200, patience=30,
        )
        transformed = values  # transform none
        rows, targets = sliding_window_rows(transformed, None, params.window)
        lo, span = minmax_stats(rows)
        normalized = (rows - lo) / span
        stack = dbn_pretrain(normalized, params, seed=seed)
        model = dbn_finetune(
            stack, normalized, targets, params, seed=seed,
            transform=TransformSpec("none"), feature_stats=(lo, span),
        )
        return model, series

    def test_horizon_one_is_single_forward_pass(self):
        model, series = self._train_constant_model()
        fc = dbn_forecast(model, series, None, 1)
        window_feats = series.values[-7:].reshape(1, -1)
        expected = model.predict_transformed(window_feats)[0]
        assert fc.values[0] == expected

    def test_constant_series_forecast_within_5_percent(self):
        model, series = self._train_constant_model()
        fc = dbn_forecast(model, series, None, 10)
        assert np.all(np.abs(fc.values - 100.0) < 5.0)

    def test_contract_30_days_contiguous(self):
        model, series = self._train_constant_model()
        fc = dbn_forecast(model, series, None, 30)
        assert len(fc) == 30
        assert fc.start == series.end + timedelta(days=1)

    def test_history_too_short(self):
        model, _ = self._train_constant_model()
        short = TimeSeries(D0, np.full(3, 100.0))
        with pytest.raises(HistoryTooShort):
            dbn_forecast(model, short, None, 5)

    def test_serialization_roundtrip_bitwise(self):
        model, series = self._train_constant_model()
        clone = DbnModel.from_dict(model.to_dict())
        a = dbn_forecast(model, series, None, 10)
        b = dbn_forecast(clone, series, None, 10)
        np.testing.assert_array_equal(a.values, b.values)
