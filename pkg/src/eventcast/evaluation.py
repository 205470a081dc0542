"""Forecast error metrics and the rolling-origin validation protocol.

Metrics follow the usual definitions: RMSLE on log(x+1), MASE scaled by
the mean absolute one-step naive error, MAPE in percent. MASE scales by
the evaluation window's own actuals by default; pass the training series
as ``scaling_series`` for the classical in-sample variant.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    LengthMismatch,
    NegativeValue,
    SeriesTooShort,
    ZeroActual,
    ZeroDenominator,
)
from .features import EventCalendar
from .series import TimeSeries

__all__ = [
    "MetricReport",
    "RollingConfig",
    "RollingWindow",
    "RollingReport",
    "rmsle",
    "mase",
    "mape",
    "score",
    "rolling_evaluate",
    "horizon_curve",
    "training_size_curve",
]


class SupportsForecast(Protocol):
    def forecast(self, horizon: int, calendar: EventCalendar | None) -> TimeSeries: ...


FitFunction = Callable[[TimeSeries, "EventCalendar | None"], SupportsForecast]


def _pair(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape or a.ndim != 1:
        raise LengthMismatch(f"actual and forecast lengths differ: {a.shape} vs {f.shape}")
    return a, f


def rmsle(actual, forecast) -> float:
    """Root mean squared logarithmic error, sqrt(mean((log(f+1)-log(a+1))^2))."""
    a, f = _pair(actual, forecast)
    if np.any(a < 0) or np.any(f < 0):
        raise NegativeValue("rmsle requires non-negative values")
    diff = np.log1p(f) - np.log1p(a)
    return float(np.sqrt(np.mean(diff * diff)))


def mase(actual, forecast, scaling_series=None) -> float:
    """Mean absolute error scaled by a naive one-step error.

    The denominator is the mean absolute first difference of
    ``scaling_series``, defaulting to the evaluation-window actuals.
    """
    a, f = _pair(actual, forecast)
    scale = a if scaling_series is None else np.asarray(scaling_series, dtype=float)
    if len(scale) < 2:
        raise ZeroDenominator("scaling series needs at least two observations")
    denom = float(np.mean(np.abs(np.diff(scale))))
    if denom == 0.0:
        raise ZeroDenominator("scaling series is constant; MASE undefined")
    return float(np.mean(np.abs(f - a)) / denom)


def mape(actual, forecast) -> float:
    """Mean absolute percentage error, in percent."""
    a, f = _pair(actual, forecast)
    if np.any(a == 0):
        raise ZeroActual("MAPE undefined when actuals contain zero")
    return float(100.0 * np.mean(np.abs((f - a) / a)))


@dataclass(frozen=True)
class MetricReport:
    rmsle: float
    mase: float
    mape: float
    n: int

    def to_dict(self) -> dict:
        return {"rmsle": self.rmsle, "mase": self.mase, "mape": self.mape, "n": self.n}


def score(actual, forecast, scaling_series=None) -> MetricReport:
    """All three metrics over one actual/forecast pair."""
    a, f = _pair(actual, forecast)
    return MetricReport(
        rmsle=rmsle(a, f),
        mase=mase(a, f, scaling_series),
        mape=mape(a, f),
        n=len(a),
    )


@dataclass(frozen=True)
class RollingConfig:
    """Rolling-origin protocol: 30-day horizon, 7-day steps, 180-day minimum."""

    horizon: int = 30
    step: int = 7
    min_train: int = 180

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.step < 1 or self.min_train < 1:
            raise ValueError("horizon, step and min_train must all be positive")


@dataclass(frozen=True)
class RollingWindow:
    origin_index: int
    origin_date: date
    actual: np.ndarray
    forecast: np.ndarray
    metrics: MetricReport


@dataclass(frozen=True)
class RollingReport:
    windows: tuple[RollingWindow, ...]
    config: RollingConfig

    @property
    def aggregate(self) -> MetricReport:
        """Arithmetic mean of the per-window metrics."""
        return MetricReport(
            rmsle=float(np.mean([w.metrics.rmsle for w in self.windows])),
            mase=float(np.mean([w.metrics.mase for w in self.windows])),
            mape=float(np.mean([w.metrics.mape for w in self.windows])),
            n=sum(w.metrics.n for w in self.windows),
        )

    def to_csv(self) -> str:
        """One row per window per metric."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["origin_date", "metric", "value"])
        for window in self.windows:
            for name in ("rmsle", "mase", "mape"):
                writer.writerow([window.origin_date.isoformat(), name, repr(getattr(window.metrics, name))])
        agg = self.aggregate
        for name in ("rmsle", "mase", "mape"):
            writer.writerow(["average", name, repr(getattr(agg, name))])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "config": {
                "horizon": self.config.horizon,
                "step": self.config.step,
                "min_train": self.config.min_train,
            },
            "windows": [
                {
                    "origin_date": w.origin_date.isoformat(),
                    "metrics": w.metrics.to_dict(),
                    "actual": [float(v) for v in w.actual],
                    "forecast": [float(v) for v in w.forecast],
                }
                for w in self.windows
            ],
            "aggregate": self.aggregate.to_dict(),
        }
        return json.dumps(doc, indent=2)


def rolling_evaluate(
    fit_fn: FitFunction,
    series: TimeSeries,
    calendar: EventCalendar | None,
    config: RollingConfig = RollingConfig(),
    scaling: str = "window",
) -> RollingReport:
    """Fit-and-score over rolling origins.

    For each origin o in {min_train, min_train+step, ...} with
    o + horizon <= length: fit on days [0, o), forecast the next
    ``horizon`` days using the true future covariates from the calendar,
    and score all three metrics. ``scaling="train"`` switches MASE to the
    classical in-sample denominator.
    """
    n = len(series)
    if n < config.min_train + config.horizon:
        raise SeriesTooShort(
            f"need at least {config.min_train + config.horizon} observations, got {n}"
        )
    windows = []
    origin = config.min_train
    while origin + config.horizon <= n:
        train = series.slice(0, origin)
        model = fit_fn(train, calendar)
        fc = model.forecast(config.horizon, calendar)
        actual = series.values[origin : origin + config.horizon]
        predicted = np.asarray(fc.values, dtype=float)
        if len(predicted) != config.horizon:
            raise LengthMismatch(
                f"fit_fn forecast returned {len(predicted)} values, expected {config.horizon}"
            )
        scaling_series = train.values if scaling == "train" else None
        windows.append(
            RollingWindow(
                origin_index=origin,
                origin_date=series.start + timedelta(days=origin),
                actual=actual,
                forecast=predicted,
                metrics=score(actual, predicted, scaling_series),
            )
        )
        origin += config.step
    return RollingReport(tuple(windows), config)


def horizon_curve(report: RollingReport, metric: str = "mape") -> np.ndarray:
    """Error at forecast day h (1..horizon), aggregated across windows."""
    if not report.windows:
        raise ValueError("report has no windows")
    horizon = report.config.horizon
    actual = np.stack([w.actual for w in report.windows])
    forecast = np.stack([w.forecast for w in report.windows])
    if metric == "mape":
        if np.any(actual == 0):
            raise ZeroActual("MAPE curve undefined when actuals contain zero")
        return 100.0 * np.mean(np.abs((forecast - actual) / actual), axis=0)
    if metric == "rmsle":
        if np.any(actual < 0) or np.any(forecast < 0):
            raise NegativeValue("rmsle requires non-negative values")
        diff = np.log1p(forecast) - np.log1p(actual)
        return np.sqrt(np.mean(diff * diff, axis=0))
    if metric == "mase":
        denoms = []
        for w in report.windows:
            d = float(np.mean(np.abs(np.diff(w.actual))))
            if d == 0.0:
                raise ZeroDenominator("constant window actuals; MASE curve undefined")
            denoms.append(d)
        denoms_arr = np.asarray(denoms)[:, None]
        return np.mean(np.abs(forecast - actual) / denoms_arr, axis=0)
    raise ValueError(f"unknown metric {metric!r}")


def horizon_curve_csv(report: RollingReport) -> str:
    """Plot-ready per-horizon-day CSV with all three metric curves."""
    curves = {name: horizon_curve(report, name) for name in ("rmsle", "mase", "mape")}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["horizon_day", "rmsle", "mase", "mape"])
    for h in range(report.config.horizon):
        writer.writerow(
            [h + 1, repr(float(curves["rmsle"][h])), repr(float(curves["mase"][h])), repr(float(curves["mape"][h]))]
        )
    return buf.getvalue()


def training_size_curve(
    fit_fn: FitFunction,
    series: TimeSeries,
    calendar: EventCalendar | None,
    sizes: Sequence[int],
    horizon: int,
) -> list[tuple[int, MetricReport]]:
    """Error as a function of training-set size at a fixed origin.

    Each size fits on the most recent ``size`` days ending at the last
    origin that leaves ``horizon`` days of actuals to score.
    """
    n = len(series)
    if not sizes:
        raise ValueError("sizes must be non-empty")
    if max(sizes) + horizon > n:
        raise SeriesTooShort(
            f"need at least {max(sizes) + horizon} observations, got {n}"
        )
    origin = n - horizon
    actual = series.values[origin:]
    out = []
    for size in sizes:
        train = series.slice(origin - size, origin)
        model = fit_fn(train, calendar)
        fc = model.forecast(horizon, calendar)
        out.append((int(size), score(actual, np.asarray(fc.values, dtype=float))))
    return out


def training_size_curve_csv(curve: list[tuple[int, MetricReport]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["training_days", "rmsle", "mase", "mape"])
    for size, report in curve:
        writer.writerow([size, repr(report.rmsle), repr(report.mase), repr(report.mape)])
    return buf.getvalue()
