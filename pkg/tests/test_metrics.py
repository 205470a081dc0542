import math
from datetime import date

import numpy as np
import pytest

from eventcast.errors import (
    LengthMismatch,
    NegativeValue,
    SeriesTooShort,
    ZeroActual,
    ZeroDenominator,
)
from eventcast.evaluation import (
    RollingConfig,
    horizon_curve,
    mape,
    mase,
    rmsle,
    rolling_evaluate,
    score,
    training_size_curve,
)
from eventcast.series import TimeSeries

D0 = date(2020, 1, 1)


class TestRmsle:
    def test_perfect_forecast(self):
        assert rmsle([3.0, 5.0], [3.0, 5.0]) == 0.0

    def test_hand_value(self):
        # log(e) - log(1) = 1
        assert abs(rmsle([0.0], [math.e - 1.0]) - 1.0) < 1e-12

    def test_penalizes_underestimates_more(self):
        under = rmsle([10.0], [5.0])
        over = rmsle([10.0], [15.0])
        assert abs(under - math.log(11 / 6)) < 1e-12
        assert abs(over - math.log(16 / 11)) < 1e-12
        assert under > over

    def test_negative_rejected(self):
        with pytest.raises(NegativeValue):
            rmsle([-1.0], [1.0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmsle([1.0, 2.0], [1.0])


class TestMase:
    def test_perfect_forecast(self):
        assert mase([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]) == 0.0

    def test_hand_value(self):
        # numerator mean |f-a| = 1, denominator mean |diff(a)| = 1
        assert mase([1, 2, 3, 4, 5], [2, 3, 4, 5, 6]) == 1.0

    def test_constant_actuals_undefined(self):
        with pytest.raises(ZeroDenominator):
            mase([3.0, 3.0, 3.0], [1.0, 2.0, 3.0])

    def test_training_scaled_variant(self):
        value = mase([10.0, 12.0], [11.0, 13.0], scaling_series=[0.0, 2.0, 4.0])
        assert abs(value - 0.5) < 1e-12


class TestMape:
    def test_perfect_forecast(self):
        assert mape([5.0, 9.0], [5.0, 9.0]) == 0.0

    def test_hand_value(self):
        assert abs(mape([100.0, 200.0], [110.0, 180.0]) - 10.0) < 1e-12

    def test_zero_actual_rejected(self):
        with pytest.raises(ZeroActual):
            mape([100.0, 0.0], [90.0, 1.0])


class TestScaleProperties:
    def test_mase_mape_scale_free_rmsle_not(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(10.0, 100.0, 50)
        f = a * rng.uniform(0.8, 1.2, 50)
        c = 37.5
        assert abs(mase(a, f) - mase(c * a, c * f)) < 1e-10
        assert abs(mape(a, f) - mape(c * a, c * f)) < 1e-10
        assert abs(rmsle(a, f) - rmsle(c * a, c * f)) > 1e-6

    def test_zero_iff_equal(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(1.0, 10.0, 20)
        f = a.copy()
        f[7] += 0.5
        report = score(a, f)
        assert report.rmsle > 0 and report.mase > 0 and report.mape > 0


class _OracleModel:
    def __init__(self, future):
        self.future = future

    def forecast(self, horizon, calendar):
        return self.future.slice(0, horizon)


def oracle_fit_fn(full: TimeSeries):
    """Fit function that cheats: returns the true future after the train end."""

    def fit(train, calendar):
        start = len(train)
        return _OracleModel(full.slice(start, len(full)))

    return fit


class _NaiveModel:
    def __init__(self, train):
        self.last = float(train.values[-1])
        self.end = train.end

    def forecast(self, horizon, calendar):
        from datetime import timedelta

        return TimeSeries(self.end + timedelta(days=1), np.full(horizon, self.last))


def naive_fit_fn(train, calendar):
    return _NaiveModel(train)


class TestRollingProtocol:
    def test_window_enumeration_240_days(self):
        series = TimeSeries(D0, np.random.default_rng(1).uniform(50, 60, 240))
        report = rolling_evaluate(oracle_fit_fn(series), series, None, RollingConfig(30, 7, 180))
        assert [w.origin_index for w in report.windows] == [180, 187, 194, 201, 208]

    def test_exactly_one_window(self):
        series = TimeSeries(D0, np.random.default_rng(2).uniform(50, 60, 210))
        report = rolling_evaluate(oracle_fit_fn(series), series, None, RollingConfig(30, 7, 180))
        assert len(report.windows) == 1

    def test_perfect_oracle_scores_zero(self):
        series = TimeSeries(D0, np.random.default_rng(3).uniform(50, 60, 240))
        report = rolling_evaluate(oracle_fit_fn(series), series, None, RollingConfig(30, 7, 180))
        agg = report.aggregate
        assert agg.rmsle == 0.0 and agg.mase == 0.0 and agg.mape == 0.0

    def test_too_short(self):
        series = TimeSeries(D0, np.arange(100.0) + 1.0)
        with pytest.raises(SeriesTooShort):
            rolling_evaluate(naive_fit_fn, series, None, RollingConfig(30, 7, 180))

    def test_causality_no_future_data_in_fit(self):
        series = TimeSeries(D0, np.random.default_rng(4).uniform(50, 60, 240))
        seen = []

        def tripwire_fit(train, calendar):
            seen.append((train.end, len(train)))
            return _NaiveModel(train)

        report = rolling_evaluate(tripwire_fit, series, None, RollingConfig(30, 7, 180))
        for window, (train_end, train_len) in zip(report.windows, seen):
            assert train_end < window.origin_date
            assert train_len == window.origin_index

    def test_origins_strictly_increasing_by_step(self):
        series = TimeSeries(D0, np.random.default_rng(6).uniform(50, 60, 260))
        report = rolling_evaluate(naive_fit_fn, series, None, RollingConfig(30, 7, 180))
        diffs = np.diff([w.origin_index for w in report.windows])
        assert np.all(diffs == 7)

    def test_report_serialization_roundtrip(self):
        series = TimeSeries(D0, np.random.default_rng(7).uniform(50, 60, 240))
        report = rolling_evaluate(naive_fit_fn, series, None, RollingConfig(30, 7, 180))
        assert report.to_csv().startswith("origin_date,metric,value")
        assert '"aggregate"' in report.to_json()


class TestHorizonCurve:
    def test_oracle_curve_is_flat_zero(self):
        series = TimeSeries(D0, np.random.default_rng(8).uniform(50, 60, 240))
        report = rolling_evaluate(oracle_fit_fn(series), series, None, RollingConfig(30, 7, 180))
        curve = horizon_curve(report, "mape")
        assert len(curve) == 30
        np.testing.assert_allclose(curve, 0.0)

    def test_random_walk_error_grows_with_horizon(self):
        from scipy.stats import spearmanr

        rhos = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            values = 1000.0 + np.cumsum(rng.normal(0.0, 5.0, 300))
            values = np.maximum(values, 1.0)
            series = TimeSeries(D0, values)
            report = rolling_evaluate(naive_fit_fn, series, None, RollingConfig(30, 7, 180))
            curve = horizon_curve(report, "mape")
            rhos.append(spearmanr(np.arange(1, 31), curve).statistic)
        assert float(np.mean(rhos)) > 0.8


class TestTrainingSizeCurve:
    def test_single_size_matches_rolling_window(self):
        series = TimeSeries(D0, np.random.default_rng(9).uniform(50, 60, 210))
        curve = training_size_curve(naive_fit_fn, series, None, [180], horizon=30)
        report = rolling_evaluate(naive_fit_fn, series, None, RollingConfig(30, 7, 180))
        assert len(curve) == 1
        assert curve[0][1].mape == report.windows[0].metrics.mape

    def test_output_length(self):
        series = TimeSeries(D0, np.random.default_rng(10).uniform(50, 60, 400))
        curve = training_size_curve(naive_fit_fn, series, None, [90, 180, 360], horizon=30)
        assert [size for size, _ in curve] == [90, 180, 360]

    def test_yearly_structure_rewards_long_training(self):
        class SeasonalNaive:
            def __init__(self, train):
                self.train = train

            def forecast(self, horizon, calendar):
                from datetime import timedelta

                values = self.train.values
                if len(values) >= 360:
                    out = [values[len(values) - 360 + h] for h in range(horizon)]
                else:
                    out = [values[-1]] * horizon
                return TimeSeries(self.train.end + timedelta(days=1), out)

        def fit(train, calendar):
            return SeasonalNaive(train)

        wins = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            t = np.arange(420)
            values = 100.0 + 50.0 * np.sin(2 * np.pi * t / 360.0) + rng.normal(0.0, 0.5, 420)
            series = TimeSeries(D0, values)
            curve = dict(training_size_curve(fit, series, None, [90, 360], horizon=30))
            if curve[360].mape <= curve[90].mape:
                wins += 1
        assert wins >= 15
