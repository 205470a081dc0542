import warnings
from datetime import date

import numpy as np
import pytest

from eventcast.errors import InsufficientUniqueValues, MissingCovariate
from eventcast.features import DesignMatrix
from eventcast.gam import (
    FittedGam,
    SmoothTerm,
    build_basis,
    default_game_formula,
    fit_gam,
    penalty_matrix,
    predict_gam,
    second_difference_matrix,
    term_contribution,
)

D0 = date(2020, 1, 6)  # a Monday


def matrix(**columns) -> DesignMatrix:
    names = tuple(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    return DesignMatrix(D0, names, data)


class TestBasis:
    def test_partition_of_unity(self):
        x = np.linspace(0.0, 10.0, 200)
        B = build_basis(SmoothTerm("x", "pspline", n_basis=8), x)
        np.testing.assert_allclose(B.sum(axis=1), np.ones(200), atol=1e-10)

    def test_cyclic_wraps_exactly(self):
        term = SmoothTerm("x", "cyclic_pspline", n_basis=6, period=7.0)
        B = build_basis(term, np.array([0.0, 7.0]))
        np.testing.assert_allclose(B[0], B[1], atol=1e-10)

    def test_cyclic_partition_of_unity(self):
        term = SmoothTerm("x", "cyclic_cubic", n_basis=9, period=12.0)
        B = build_basis(term, np.linspace(0, 12, 100))
        np.testing.assert_allclose(B.sum(axis=1), np.ones(100), atol=1e-10)

    def test_random_effect_onehot(self):
        B = build_basis(SmoothTerm("g", "random_effect"), np.array([0.0, 1.0, 2.0, 1.0, 0.0]))
        assert B.shape == (5, 3)
        np.testing.assert_allclose(B.sum(axis=1), np.ones(5))
        assert set(np.unique(B)) == {0.0, 1.0}

    def test_insufficient_unique_values(self):
        with pytest.raises(InsufficientUniqueValues):
            build_basis(SmoothTerm("x", "pspline", n_basis=6), np.array([0.0, 1.0] * 10))


class TestPenalty:
    def test_second_difference_matrix(self):
        D = second_difference_matrix(4)
        np.testing.assert_allclose(D, [[1, -2, 1, 0], [0, 1, -2, 1]])

    def test_pspline_penalty_is_DtD(self):
        S = penalty_matrix(SmoothTerm("x", "pspline", n_basis=5))
        D = second_difference_matrix(5)
        np.testing.assert_allclose(S, D.T @ D)

    def test_constant_vector_in_null_space(self):
        for kind, period in (("pspline", None), ("cyclic_pspline", 7.0), ("cyclic_cubic", 7.0)):
            S = penalty_matrix(SmoothTerm("x", kind, n_basis=6, period=period))
            ones = np.ones(6)
            assert abs(ones @ S @ ones) < 1e-8

    def test_all_penalties_psd(self):
        metas = {
            "thinplate_lowrank": {"knots": [0.0, 1.0, 3.0, 7.0], "spread": 7.0, "center": 2.0},
            "random_effect": {"levels": [0.0, 1.0, 2.0]},
        }
        for kind, period in (
            ("pspline", None),
            ("cyclic_pspline", 7.0),
            ("cyclic_cubic", 12.0),
            ("thinplate_lowrank", None),
            ("random_effect", None),
        ):
            term = SmoothTerm("x", kind, n_basis=5, period=period)
            S = penalty_matrix(term, metas.get(kind))
            eigvals = np.linalg.eigvalsh((S + S.T) / 2)
            assert eigvals.min() >= -1e-10, kind


class TestFit:
    def test_weekly_group_means_recovered(self):
        rng = np.random.default_rng(0)
        dow = np.tile(np.arange(7.0), 30)
        means = np.array([10.0, 12.0, 9.0, 14.0, 11.0, 8.0, 13.0])
        y = means[dow.astype(int)]
        data = matrix(day_of_week=dow)
        model = fit_gam(y, data, [SmoothTerm("day_of_week", "cyclic_pspline", n_basis=7, period=7.0, lam=1e-8)])
        fitted = predict_gam(model, data)
        np.testing.assert_allclose(fitted, y, atol=1e-3)

    def test_huge_lambda_collapses_to_null_space(self):
        rng = np.random.default_rng(1)
        x = np.linspace(0.0, 10.0, 120)
        y = np.sin(x) + 0.3 * x + rng.normal(0, 0.1, 120)
        data = matrix(x=x)
        model = fit_gam(y, data, [SmoothTerm("x", "pspline", n_basis=10, lam=1e8)])
        fitted = predict_gam(model, data)
        slope, intercept = np.polyfit(x, y, 1)
        np.testing.assert_allclose(fitted, slope * x + intercept, atol=1e-3)

    def test_intercept_only(self):
        y = np.array([4.0, 6.0, 8.0, 2.0])
        model = fit_gam(y, matrix(x=[1.0, 2.0, 3.0, 4.0]), [])
        assert abs(model.intercept - 5.0) < 1e-12
        np.testing.assert_allclose(predict_gam(model, matrix(x=[9.0])), [5.0])

    def test_predict_training_equals_fitted(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 10, 150)
        y = np.cos(x) + rng.normal(0, 0.2, 150)
        data = matrix(x=x)
        model = fit_gam(y, data, [SmoothTerm("x", "pspline", n_basis=12)])
        np.testing.assert_allclose(predict_gam(model, data), model.fitted, atol=1e-10)

    def test_cyclic_weekly_continuity(self):
        rng = np.random.default_rng(3)
        dow = np.tile(np.arange(7.0), 40)
        y = np.sin(2 * np.pi * dow / 7) + rng.normal(0, 0.1, 280)
        model = fit_gam(y, matrix(day_of_week=dow), [SmoothTerm("day_of_week", "cyclic_pspline", n_basis=7, period=7.0)])
        s0 = term_contribution(model, "day_of_week", [0.0])[0]
        s7 = term_contribution(model, "day_of_week", [7.0])[0]
        assert abs(s0 - s7) < 1e-8

    def test_zero_lambda_matches_ols(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 10, 100)
        y = 0.5 * x + np.sin(x) + rng.normal(0, 0.3, 100)
        data = matrix(x=x)
        term = SmoothTerm("x", "pspline", n_basis=8, lam=0.0)
        model = fit_gam(y, data, [term])
        X = np.column_stack([np.ones(100), build_basis(term, x)])
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        np.testing.assert_allclose(predict_gam(model, data), X @ beta, atol=1e-8)

    def test_edf_decreases_with_lambda(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 10, 200)
        y = np.sin(x) + rng.normal(0, 0.2, 200)
        data = matrix(x=x)
        lams = np.logspace(-4, 6, 10)
        edfs = []
        for lam in lams:
            model = fit_gam(y, data, [SmoothTerm("x", "pspline", n_basis=10, lam=float(lam))])
            edfs.append(model.terms[0].edf)
        diffs = np.diff(edfs)
        assert np.all(diffs <= 1e-8)
        assert all(0.0 <= e <= 10.0 for e in edfs)

    def test_gcv_lambda_invariant_to_y_scale(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(0, 10, 150)
        y = np.sin(x) + rng.normal(0, 0.2, 150)
        data = matrix(x=x)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m1 = fit_gam(y, data, [SmoothTerm("x", "pspline", n_basis=10)])
            m2 = fit_gam(25.0 * y, data, [SmoothTerm("x", "pspline", n_basis=10)])
        assert m1.terms[0].lam == m2.terms[0].lam

    def test_sum_to_zero_constraints(self):
        rng = np.random.default_rng(7)
        n = 210
        dow = np.tile(np.arange(7.0), 30)
        x = rng.uniform(0, 10, n)
        g = rng.integers(0, 3, n).astype(float)
        y = np.sin(x) + dow * 0.2 + g + rng.normal(0, 0.1, n)
        data = matrix(day_of_week=dow, x=x, g=g)
        terms = [
            SmoothTerm("day_of_week", "cyclic_pspline", n_basis=7, period=7.0),
            SmoothTerm("x", "pspline", n_basis=8),
            SmoothTerm("g", "random_effect"),
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = fit_gam(y, data, terms)
        for name, column in (("day_of_week", dow), ("x", x), ("g", g)):
            contribution = term_contribution(model, name, column)
            assert abs(contribution.sum()) < 1e-6

    def test_unseen_random_effect_level_contributes_zero(self):
        rng = np.random.default_rng(8)
        g = np.array([0.0, 1.0, 2.0] * 20)
        y = g * 2.0 + rng.normal(0, 0.1, 60)
        model = fit_gam(y, matrix(g=g), [SmoothTerm("g", "random_effect", lam=1e-6)])
        assert term_contribution(model, "g", [99.0])[0] == 0.0

    def test_missing_covariate(self):
        y = np.arange(10.0)
        model = fit_gam(y, matrix(x=np.arange(10.0)), [SmoothTerm("x", "linear")])
        with pytest.raises(MissingCovariate):
            predict_gam(model, matrix(z=np.arange(5.0)))

    def test_serialization_roundtrip(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0, 10, 120)
        y = np.sin(x) + rng.normal(0, 0.2, 120)
        data = matrix(x=x)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = fit_gam(y, data, [SmoothTerm("x", "pspline", n_basis=9)])
        clone = FittedGam.from_dict(model.to_dict())
        np.testing.assert_array_equal(predict_gam(clone, data), predict_gam(model, data))


class TestDefaultFormula:
    def test_gacha_gets_four_basis_pspline(self):
        terms = {t.covariate: t for t in default_game_formula(["gacha", "holiday"])}
        assert terms["gacha"].kind == "pspline" and terms["gacha"].n_basis == 4

    def test_temperature_gets_yearly_cyclic_cubic(self):
        terms = {t.covariate: t for t in default_game_formula(["temperature"])}
        assert terms["temperature"].kind == "cyclic_cubic"
        assert terms["temperature"].period == 365.25

    def test_empty_input_keeps_seasonal_terms(self):
        terms = default_game_formula([])
        assert [t.covariate for t in terms] == ["day_of_week", "month"]
        assert all(t.kind == "cyclic_pspline" for t in terms)

    def test_marketing_linear_events_thinplate(self):
        terms = {t.covariate: t for t in default_game_formula(["marketing", "event_raid"])}
        assert terms["marketing"].kind == "linear"
        assert terms["event_raid"].kind == "thinplate_lowrank"
