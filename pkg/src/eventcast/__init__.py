"""Forecasting and what-if simulation for event-driven daily KPI series.

Four model families (dynamic-regression ARIMA, gradient boosting,
penalized-spline additive models, deep belief networks) share one
training surface and one ``forecast(horizon, calendar)`` contract, with
rolling-origin evaluation and scenario simulation on top.
"""

from .arima import ArimaOrder, FittedArima, fit_arima, forecast_arima, information_criteria, select_order
from .dbn import DbnModel, DbnParams, Rbm, dbn_finetune, dbn_forecast, dbn_pretrain, rbm_train
from .evaluation import (
    MetricReport,
    RollingConfig,
    RollingReport,
    horizon_curve,
    mape,
    mase,
    rmsle,
    rolling_evaluate,
    training_size_curve,
)
from .features import (
    DesignMatrix,
    EventCalendar,
    EventRecord,
    calendar_features,
    decay_profile,
    encode_calendar,
    join_covariates,
)
from .forecasters import FAMILIES, ForecastModel, model_from_dict, model_from_json, train_model
from .gam import FittedGam, SmoothTerm, build_basis, default_game_formula, fit_gam, penalty_matrix, predict_gam
from .gbm import GbmEnsemble, GbmParams, RegressionTree, fit_gbm, fit_tree, negative_gradient, predict_gbm
from .presets import ARIMA_PRESETS, DBN_PRESETS, GBM_PRESETS
from .series import (
    DifferenceSpec,
    TimeSeries,
    TransformSpec,
    acf,
    default_boxcox_lambda,
    difference,
    integrate,
    inverse_transform,
    pacf,
    read_series_csv,
    transform,
)
from .simulation import (
    Scenario,
    ScenarioResult,
    SynthConfig,
    compare_scenarios,
    generate_synthetic,
    simulate_scenario,
)

__version__ = "0.1.0"
