"""Uniform training and forecasting layer over the four model families.

Every family trains from the same inputs (a daily series plus an event
calendar) but consumes different covariate encodings:

* dynamic regression: event dummies and temperature only, since the
  seasonal ARIMA terms already carry day-of-week structure;
* gradient boosting and the network: event dummies plus one-hot
  day-of-week/month columns;
* the additive model: event dummies plus raw cyclic indices, smoothed by
  its formula.

Trained models share ``forecast(horizon, calendar)`` returning raw-unit
series, and serialize to versioned JSON documents that reproduce
forecasts bit-for-bit after a round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from . import arima as arima_mod
from . import dbn as dbn_mod
from . import gam as gam_mod
from . import gbm as gbm_mod
from .errors import ColumnMismatch, RangeOutsideCalendar
from .features import DesignMatrix, EventCalendar, calendar_features, encode_calendar, join_covariates
from .presets import ARIMA_PRESETS, DBN_PRESETS, GBM_PRESETS
from .series import TimeSeries, TransformSpec, default_boxcox_lambda, transform_values

__all__ = [
    "FAMILIES",
    "ForecastModel",
    "train_model",
    "model_from_dict",
    "model_from_json",
    "default_transform_for",
]

FAMILIES = ("arima", "gbm", "gam", "dbn")


def default_transform_for(family: str, target: str, series: TimeSeries) -> TransformSpec:
    """Production transform policy: Box-Cox for sales, log for playtime,
    nothing for the additive model."""
    if family == "gam":
        return TransformSpec("none")
    if target == "sales":
        return TransformSpec("boxcox", default_boxcox_lambda(series))
    return TransformSpec("log")


def _registered(calendar: EventCalendar | None, subtypes: tuple[str, ...]) -> EventCalendar:
    base = EventCalendar(subtypes=subtypes)
    if calendar is None:
        return base
    return calendar.merged(base)


def _build_features(
    calendar: EventCalendar | None,
    subtypes: tuple[str, ...],
    start: date,
    days: int,
    flavor: str,
) -> DesignMatrix:
    events = encode_calendar(_registered(calendar, subtypes), start, days)
    if flavor == "events":
        return events
    if flavor == "events+onehot":
        return join_covariates(events, calendar_features(start, days, include_onehot=True))
    if flavor == "events+cyclic":
        return join_covariates(events, calendar_features(start, days, include_onehot=False))
    raise ValueError(f"unknown feature flavor {flavor!r}")


class ForecastModel:
    """Base for trained family adapters."""

    family: str

    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _future_matrix(model, horizon: int, calendar: EventCalendar | None) -> DesignMatrix:
    start = model.train_end + timedelta(days=1)
    X = _build_features(calendar, model.subtypes, start, horizon, model.flavor)
    missing = [c for c in model.columns if c not in X.column_names]
    if missing:
        raise ColumnMismatch(f"future covariates lack training columns {missing}")
    return X.select(model.columns)


@dataclass
class ArimaForecastModel(ForecastModel):
    family = "arima"
    fitted: arima_mod.FittedArima
    columns: tuple[str, ...]
    subtypes: tuple[str, ...]
    flavor: str
    train_end: date

    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries:
        X = _future_matrix(self, horizon, calendar) if self.columns else None
        return arima_mod.forecast_arima(self.fitted, horizon, X)

    def to_dict(self) -> dict:
        return {
            "family": "arima",
            "version": 1,
            "columns": list(self.columns),
            "subtypes": list(self.subtypes),
            "flavor": self.flavor,
            "train_end": self.train_end.isoformat(),
            "artifact": self.fitted.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ArimaForecastModel":
        return cls(
            fitted=arima_mod.FittedArima.from_dict(doc["artifact"]),
            columns=tuple(doc["columns"]),
            subtypes=tuple(doc["subtypes"]),
            flavor=doc["flavor"],
            train_end=date.fromisoformat(doc["train_end"]),
        )


@dataclass
class GbmForecastModel(ForecastModel):
    family = "gbm"
    ensemble: gbm_mod.GbmEnsemble
    transform: TransformSpec
    columns: tuple[str, ...]
    subtypes: tuple[str, ...]
    flavor: str
    train_end: date
    series_name: str

    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries:
        X = _future_matrix(self, horizon, calendar)
        pred = gbm_mod.predict_gbm(self.ensemble, X.data)
        from .series import inverse_transform_values

        return TimeSeries(self.train_end + timedelta(days=1), inverse_transform_values(pred, self.transform), self.series_name)

    def to_dict(self) -> dict:
        return {
            "family": "gbm",
            "version": 1,
            "columns": list(self.columns),
            "subtypes": list(self.subtypes),
            "flavor": self.flavor,
            "train_end": self.train_end.isoformat(),
            "series_name": self.series_name,
            "transform": self.transform.to_dict(),
            "artifact": self.ensemble.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GbmForecastModel":
        return cls(
            ensemble=gbm_mod.GbmEnsemble.from_dict(doc["artifact"]),
            transform=TransformSpec.from_dict(doc["transform"]),
            columns=tuple(doc["columns"]),
            subtypes=tuple(doc["subtypes"]),
            flavor=doc["flavor"],
            train_end=date.fromisoformat(doc["train_end"]),
            series_name=doc["series_name"],
        )


@dataclass
class GamForecastModel(ForecastModel):
    family = "gam"
    fitted: gam_mod.FittedGam
    columns: tuple[str, ...]
    subtypes: tuple[str, ...]
    flavor: str
    train_end: date
    series_name: str

    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries:
        X = _future_matrix(self, horizon, calendar)
        pred = gam_mod.predict_gam(self.fitted, X)
        return TimeSeries(self.train_end + timedelta(days=1), np.maximum(pred, 0.0), self.series_name)

    def to_dict(self) -> dict:
        return {
            "family": "gam",
            "version": 1,
            "columns": list(self.columns),
            "subtypes": list(self.subtypes),
            "flavor": self.flavor,
            "train_end": self.train_end.isoformat(),
            "series_name": self.series_name,
            "artifact": self.fitted.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GamForecastModel":
        return cls(
            fitted=gam_mod.FittedGam.from_dict(doc["artifact"]),
            columns=tuple(doc["columns"]),
            subtypes=tuple(doc["subtypes"]),
            flavor=doc["flavor"],
            train_end=date.fromisoformat(doc["train_end"]),
            series_name=doc["series_name"],
        )


@dataclass
class DbnForecastModel(ForecastModel):
    family = "dbn"
    model: dbn_mod.DbnModel
    columns: tuple[str, ...]
    subtypes: tuple[str, ...]
    flavor: str
    train_end: date
    history_tail: np.ndarray  # raw values, window long
    series_name: str

    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries:
        Xf = _future_matrix(self, horizon, calendar).data if self.columns else None
        window = self.model.params.window
        history = TimeSeries(
            self.train_end - timedelta(days=window - 1), self.history_tail, self.series_name
        )
        return dbn_mod.dbn_forecast(self.model, history, Xf, horizon)

    def to_dict(self) -> dict:
        return {
            "family": "dbn",
            "version": 1,
            "columns": list(self.columns),
            "subtypes": list(self.subtypes),
            "flavor": self.flavor,
            "train_end": self.train_end.isoformat(),
            "series_name": self.series_name,
            "history_tail": [float(v) for v in self.history_tail],
            "artifact": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DbnForecastModel":
        return cls(
            model=dbn_mod.DbnModel.from_dict(doc["artifact"]),
            columns=tuple(doc["columns"]),
            subtypes=tuple(doc["subtypes"]),
            flavor=doc["flavor"],
            train_end=date.fromisoformat(doc["train_end"]),
            history_tail=np.asarray(doc["history_tail"], dtype=float),
            series_name=doc["series_name"],
        )


def _resolve_transform(params: dict, series: TimeSeries, family: str) -> TransformSpec:
    spec = params.get("transform")
    if spec is None:
        target = params.get("target", "sales")
        return default_transform_for(family, target, series)
    if isinstance(spec, dict):
        if spec.get("lam") == "auto":
            return TransformSpec("boxcox", default_boxcox_lambda(series))
        return TransformSpec.from_dict(spec)
    if spec == "none":
        return TransformSpec("none")
    if spec == "log":
        return TransformSpec("log")
    raise ValueError(f"unrecognized transform {spec!r}")


def _drop_constant_columns(X: DesignMatrix) -> DesignMatrix:
    keep = [name for i, name in enumerate(X.column_names) if np.ptp(X.data[:, i]) > 0.0]
    return X.select(keep)


def _train_arima(series, calendar, params, seed):
    if "order" in params:
        order = arima_mod.ArimaOrder.from_dict(params["order"])
    elif "preset" in params:
        order = ARIMA_PRESETS[params["preset"]]
    else:
        order = ARIMA_PRESETS["aoi_sales"]
    transform = _resolve_transform(params, series, "arima")
    subtypes = calendar.subtypes if calendar is not None else ()
    X = _build_features(calendar, subtypes, series.start, len(series), "events")
    X = _drop_constant_columns(X)
    fitted = arima_mod.fit_arima(
        series,
        order,
        X=X if X.n_columns else None,
        transform=transform,
        difference_regressors=bool(params.get("difference_regressors", True)),
    )
    return ArimaForecastModel(
        fitted=fitted,
        columns=X.column_names if X.n_columns else (),
        subtypes=subtypes,
        flavor="events",
        train_end=series.end,
    )


def _train_gbm(series, calendar, params, seed):
    transform = _resolve_transform(params, series, "gbm")
    if "preset" in params:
        gbm_params = GBM_PRESETS[params["preset"]]
    else:
        fields = {k: params[k] for k in ("max_depth", "eta", "n_rounds", "min_samples_leaf", "early_stopping_rounds") if k in params}
        fields.setdefault("max_depth", 3)
        fields.setdefault("eta", 0.1)
        fields.setdefault("n_rounds", 200)
        gbm_params = gbm_mod.GbmParams(**fields)
    subtypes = calendar.subtypes if calendar is not None else ()
    X = _build_features(calendar, subtypes, series.start, len(series), "events+onehot")
    y = transform_values(series.values, transform)
    validation = None
    if gbm_params.early_stopping_rounds is not None:
        split = max(int(len(y) * 0.8), 1)  # time-ordered tail split keeps causality
        validation = (X.data[split:], y[split:])
        ensemble = gbm_mod.fit_gbm(X.data[:split], y[:split], gbm_params, validation)
    else:
        ensemble = gbm_mod.fit_gbm(X.data, y, gbm_params)
    return GbmForecastModel(
        ensemble=ensemble,
        transform=transform,
        columns=X.column_names,
        subtypes=subtypes,
        flavor="events+onehot",
        train_end=series.end,
        series_name=series.name,
    )


def _sanitize_terms(terms, X: DesignMatrix):
    """Downgrade smooths whose covariates cannot support their basis."""
    out = []
    for term in terms:
        if term.covariate not in X.column_names:
            continue
        column = X.column(term.covariate)
        uniq = len(np.unique(column))
        if uniq < 2:
            continue
        if term.kind in ("pspline", "thinplate_lowrank") and uniq < term.n_basis:
            if uniq >= 4:
                term = gam_mod.SmoothTerm(term.covariate, term.kind, n_basis=uniq, lam=term.lam)
            else:
                term = gam_mod.SmoothTerm(term.covariate, "linear")
        out.append(term)
    return out


def _train_gam(series, calendar, params, seed):
    subtypes = calendar.subtypes if calendar is not None else ()
    X = _build_features(calendar, subtypes, series.start, len(series), "events+cyclic")
    if "terms" in params:
        terms = [gam_mod.SmoothTerm.from_dict(t) for t in params["terms"]]
    else:
        terms = gam_mod.default_game_formula(X.column_names)
    terms = _sanitize_terms(terms, X)
    fitted = gam_mod.fit_gam(series.values, X, terms)
    return GamForecastModel(
        fitted=fitted,
        columns=X.column_names,
        subtypes=subtypes,
        flavor="events+cyclic",
        train_end=series.end,
        series_name=series.name,
    )


def _train_dbn(series, calendar, params, seed):
    transform = _resolve_transform(params, series, "dbn")
    if "preset" in params:
        dbn_params = DBN_PRESETS[params["preset"]]
    else:
        fields = {
            k: params[k]
            for k in ("h", "n", "plr", "tlr", "k", "b", "l2", "window", "max_epochs", "pretrain_epochs", "patience")
            if k in params
        }
        fields.setdefault("h", 2)
        fields.setdefault("n", 16)
        fields.setdefault("plr", 0.01)
        fields.setdefault("tlr", 0.5)
        fields.setdefault("b", 20)
        fields.setdefault("max_epochs", 300)
        dbn_params = dbn_mod.DbnParams(**fields)
    subtypes = calendar.subtypes if calendar is not None else ()
    X = _build_features(calendar, subtypes, series.start, len(series), "events+onehot")
    X = X.select([c for c in X.column_names if c not in ("day_of_week", "month")])
    transformed = transform_values(series.values, transform)
    rows, targets = dbn_mod.sliding_window_rows(transformed, X.data, dbn_params.window)
    lo, span = dbn_mod.minmax_stats(rows)
    normalized = (rows - lo) / span
    stack = dbn_mod.dbn_pretrain(normalized, dbn_params, seed=seed)
    model = dbn_mod.dbn_finetune(
        stack,
        normalized,
        targets,
        dbn_params,
        seed=seed,
        transform=transform,
        feature_stats=(lo, span),
        covariate_names=X.column_names,
    )
    return DbnForecastModel(
        model=model,
        columns=X.column_names,
        subtypes=subtypes,
        flavor="events+onehot",
        train_end=series.end,
        history_tail=np.asarray(series.values[-dbn_params.window :]),
        series_name=series.name,
    )


_TRAINERS = {"arima": _train_arima, "gbm": _train_gbm, "gam": _train_gam, "dbn": _train_dbn}


def train_model(
    family: str,
    series: TimeSeries,
    calendar: EventCalendar | None = None,
    params: dict | None = None,
    seed: int = 0,
) -> ForecastModel:
    """Train one family on a series plus calendar with JSON-able params."""
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    if calendar is not None and not calendar.covers(series.start, len(series)):
        raise RangeOutsideCalendar("calendar does not cover the training series")
    return _TRAINERS[family](series, calendar, params or {}, seed)


_LOADERS = {
    "arima": ArimaForecastModel.from_dict,
    "gbm": GbmForecastModel.from_dict,
    "gam": GamForecastModel.from_dict,
    "dbn": DbnForecastModel.from_dict,
}


def model_from_dict(doc: dict) -> ForecastModel:
    family = doc.get("family")
    if family not in _LOADERS:
        raise ValueError(f"unknown model family {family!r} in document")
    return _LOADERS[family](doc)


def model_from_json(text: str) -> ForecastModel:
    return model_from_dict(json.loads(text))


class NaiveLastValue(ForecastModel):
    """Benchmark forecaster: repeats the last observed value."""

    family = "naive"

    def __init__(self, series: TimeSeries):
        self.last = float(series.values[-1])
        self.train_end = series.end
        self.series_name = series.name

    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries:
        return TimeSeries(
            self.train_end + timedelta(days=1), np.full(horizon, self.last), self.series_name
        )
