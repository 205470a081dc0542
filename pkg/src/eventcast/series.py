"""Daily time-series container plus the stationarity toolbox.

Holds the value type shared by every model family (:class:`TimeSeries`)
and the transforms applied before fitting: Box-Cox / log variance
stabilization, ordinary and seasonal differencing with exact inverses,
and ACF/PACF diagnostics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DomainError,
    HeadLengthMismatch,
    LagTooLarge,
    MissingDates,
    NonPositiveValue,
    SeriesTooShort,
)

__all__ = [
    "TimeSeries",
    "TransformSpec",
    "DifferenceSpec",
    "transform",
    "inverse_transform",
    "difference",
    "integrate",
    "difference_poly",
    "acf",
    "pacf",
    "default_boxcox_lambda",
    "read_series_csv",
    "write_series_csv",
]


def _freeze(values: Iterable[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("series values must be one-dimensional")
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TimeSeries:
    """Evenly spaced daily observations; index i falls on start + i days."""

    start: date
    values: np.ndarray
    name: str = "series"

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _freeze(self.values))
        if len(self.values) < 1:
            raise ValueError("series must have at least one observation")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> date:
        """Date of the last observation."""
        return self.start + timedelta(days=len(self.values) - 1)

    @property
    def dates(self) -> list[date]:
        return [self.start + timedelta(days=i) for i in range(len(self.values))]

    def slice(self, begin: int, stop: int) -> "TimeSeries":
        """Positional slice keeping dates aligned."""
        if not 0 <= begin < stop <= len(self.values):
            raise ValueError(f"invalid slice [{begin}, {stop}) for length {len(self.values)}")
        return TimeSeries(self.start + timedelta(days=begin), self.values[begin:stop], self.name)

    def with_values(self, values: Iterable[float]) -> "TimeSeries":
        return TimeSeries(self.start, values, self.name)


@dataclass(frozen=True)
class TransformSpec:
    """Variance-stabilizing transform: Box-Cox with exponent ``lam``.

    ``kind="log"`` is the lam=0 special case and ``kind="none"`` the
    identity; ``lam`` is ignored for both.
    """

    kind: str = "none"
    lam: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("boxcox", "log", "none"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")

    @property
    def effective_lambda(self) -> float:
        return 0.0 if self.kind == "log" else self.lam

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lam": self.lam}

    @classmethod
    def from_dict(cls, doc: dict) -> "TransformSpec":
        return cls(kind=doc["kind"], lam=float(doc.get("lam", 0.0)))


@dataclass(frozen=True)
class DifferenceSpec:
    """Ordinary order d and seasonal order D at season length m (days)."""

    d: int = 0
    D: int = 0
    m: int = 1

    def __post_init__(self) -> None:
        if not (0 <= self.d <= 2):
            raise ValueError("d must be in 0..2")
        if not (0 <= self.D <= 1):
            raise ValueError("D must be in 0..1")
        if self.m < 1:
            raise ValueError("season length m must be >= 1")

    @property
    def span(self) -> int:
        """Observations consumed: d + D*m."""
        return self.d + self.D * self.m


def _apply_boxcox(values: np.ndarray, lam: float) -> np.ndarray:
    if lam == 0.0:
        if np.any(values <= 0):
            raise NonPositiveValue("log transform requires strictly positive values")
        return np.log(values)
    if lam < 0 and np.any(values <= 0):
        raise NonPositiveValue("Box-Cox with lambda <= 0 requires strictly positive values")
    if np.any(values < 0):
        raise NonPositiveValue("Box-Cox transform requires non-negative values")
    return (np.power(values, lam) - 1.0) / lam


def transform(series: TimeSeries, spec: TransformSpec) -> TimeSeries:
    """Apply the Box-Cox family transform elementwise.

    (y^lam - 1)/lam for lam != 0, ln y for lam = 0; ``none`` is the
    identity. Raises :class:`NonPositiveValue` when a value is outside
    the transform's domain.
    """
    if spec.kind == "none":
        return series
    return series.with_values(_apply_boxcox(series.values, spec.effective_lambda))


def inverse_transform(series: TimeSeries, spec: TransformSpec) -> TimeSeries:
    """Exact inverse of :func:`transform` (identity for ``none``)."""
    if spec.kind == "none":
        return series
    lam = spec.effective_lambda
    z = series.values
    if lam == 0.0:
        return series.with_values(np.exp(z))
    base = 1.0 + lam * z
    if np.any(base <= 0):
        raise DomainError("inverse Box-Cox undefined: 1 + lambda*y must be positive")
    return series.with_values(np.power(base, 1.0 / lam))


def transform_values(values: np.ndarray, spec: TransformSpec) -> np.ndarray:
    """Array-level variant of :func:`transform` used by the model adapters."""
    if spec.kind == "none":
        return np.asarray(values, dtype=float)
    return _apply_boxcox(np.asarray(values, dtype=float), spec.effective_lambda)


def inverse_transform_values(values: np.ndarray, spec: TransformSpec) -> np.ndarray:
    if spec.kind == "none":
        return np.asarray(values, dtype=float)
    lam = spec.effective_lambda
    z = np.asarray(values, dtype=float)
    if lam == 0.0:
        return np.exp(z)
    base = 1.0 + lam * z
    if np.any(base <= 0):
        raise DomainError("inverse Box-Cox undefined: 1 + lambda*y must be positive")
    return np.power(base, 1.0 / lam)


def difference_poly(spec: DifferenceSpec) -> np.ndarray:
    """Coefficients c of (1-L)^d (1-L^m)^D so that y*_t = sum_k c_k y_{t-k}."""
    poly = np.array([1.0])
    for _ in range(spec.d):
        poly = np.convolve(poly, [1.0, -1.0])
    seasonal = np.zeros(spec.m + 1)
    seasonal[0], seasonal[-1] = 1.0, -1.0
    for _ in range(spec.D):
        poly = np.convolve(poly, seasonal)
    return poly


def difference(series: TimeSeries, spec: DifferenceSpec) -> TimeSeries:
    """Apply (1-L)^d (1-L^m)^D; output is shorter by d + D*m days."""
    span = spec.span
    if len(series) <= span:
        raise SeriesTooShort(
            f"need more than {span} observations to difference, got {len(series)}"
        )
    values = difference_values(series.values, spec)
    return TimeSeries(series.start + timedelta(days=span), values, series.name)


def difference_values(values: np.ndarray, spec: DifferenceSpec) -> np.ndarray:
    out = np.asarray(values, dtype=float)
    for _ in range(spec.d):
        out = out[1:] - out[:-1]
    for _ in range(spec.D):
        out = out[spec.m:] - out[: -spec.m]
    return out


def integrate(diffed: TimeSeries, spec: DifferenceSpec, head: Sequence[float]) -> TimeSeries:
    """Undo :func:`difference` given the d + D*m leading raw values."""
    span = spec.span
    if len(head) != span:
        raise HeadLengthMismatch(f"head must supply exactly {span} values, got {len(head)}")
    values = integrate_values(diffed.values, spec, head)
    return TimeSeries(diffed.start - timedelta(days=span), values, diffed.name)


def integrate_values(diffed: np.ndarray, spec: DifferenceSpec, head: Sequence[float]) -> np.ndarray:
    span = spec.span
    poly = difference_poly(spec)
    out = np.empty(span + len(diffed))
    out[:span] = np.asarray(head, dtype=float)
    # y_t = y*_t - sum_{k>=1} c_k y_{t-k}, with c_0 = 1
    for i, z in enumerate(np.asarray(diffed, dtype=float)):
        t = span + i
        acc = z
        for k in range(1, len(poly)):
            if poly[k] != 0.0:
                acc -= poly[k] * out[t - k]
        out[t] = acc
    return out


def acf(series: TimeSeries, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_0..r_max_lag (biased normalization).

    A zero-variance series returns 0 for every lag >= 1 so downstream
    order diagnostics see "no structure" rather than NaN.
    """
    n = len(series)
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if max_lag >= n:
        raise LagTooLarge(f"max_lag {max_lag} must be < series length {n}")
    x = series.values - series.values.mean()
    denom = float(np.dot(x, x))
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom <= 0.0 or np.ptp(series.values) == 0.0:
        return out
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(x[k:], x[:-k])) / denom
    return out


def pacf(series: TimeSeries, max_lag: int) -> np.ndarray:
    """Partial autocorrelations via the Durbin-Levinson recursion.

    Returned array is indexed by lag (entry 0 is 1 by convention);
    entry 1 equals acf lag 1 exactly.
    """
    n = len(series)
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if max_lag >= n / 2:
        raise LagTooLarge(f"max_lag {max_lag} must be < half the series length {n}")
    r = acf(series, max_lag)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if np.all(r[1:] == 0.0):
        return out
    phi_prev = np.zeros(0)
    for k in range(1, max_lag + 1):
        if k == 1:
            alpha = r[1]
        else:
            num = r[k] - float(np.dot(phi_prev, r[k - 1:0:-1]))
            den = 1.0 - float(np.dot(phi_prev, r[1:k]))
            alpha = num / den if abs(den) > 1e-12 else 0.0
        out[k] = alpha
        phi = np.empty(k)
        phi[:-1] = phi_prev - alpha * phi_prev[::-1]
        phi[-1] = alpha
        phi_prev = phi
    return out


def default_boxcox_lambda(
    series: TimeSeries,
    grid: Sequence[float] = (-1.0, -0.5, 0.0, 0.5, 1.0),
    block: int = 7,
) -> float:
    """Guerrero-style grid search for the Box-Cox exponent.

    Splits the series into blocks of ``block`` days and picks the lambda
    minimizing the coefficient of variation of s_i / m_i^(1-lambda)
    across blocks, where m_i and s_i are the block mean and standard
    deviation of the raw values.
    """
    values = series.values
    if np.any(values <= 0):
        raise NonPositiveValue("lambda search requires strictly positive values")
    n_blocks = len(values) // block
    if n_blocks < 2:
        return 1.0
    chunks = values[: n_blocks * block].reshape(n_blocks, block)
    means = chunks.mean(axis=1)
    sds = chunks.std(axis=1, ddof=1)
    best_lam, best_cv = 1.0, math.inf
    for lam in grid:
        ratios = sds / np.power(means, 1.0 - lam)
        mean_ratio = ratios.mean()
        if mean_ratio <= 0:
            continue
        cv = ratios.std(ddof=1) / mean_ratio
        if cv < best_cv:
            best_cv, best_lam = cv, lam
    return best_lam


def read_series_csv(path, name: str | None = None) -> TimeSeries:
    """Ingest a two-column ``date,value`` CSV (ISO dates, header required).

    Gaps in the daily grid are rejected, naming the first missing date.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_series_csv(fh.read(), name=name or str(path))


def parse_series_csv(text: str, name: str = "series") -> TimeSeries:
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise ValueError("empty CSV")
    header = [h.strip().lower() for h in rows[0]]
    if header[:2] != ["date", "value"]:
        raise ValueError("CSV must start with a 'date,value' header row")
    dates: list[date] = []
    values: list[float] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 2:
            raise ValueError(f"line {lineno}: expected two columns")
        dates.append(date.fromisoformat(row[0].strip()))
        values.append(float(row[1]))
    if not dates:
        raise ValueError("CSV has a header but no data rows")
    for prev, cur in zip(dates, dates[1:]):
        expected = prev + timedelta(days=1)
        if cur != expected:
            raise MissingDates(
                f"daily series has a gap: missing {expected.isoformat()}",
                first_missing=expected,
            )
    return TimeSeries(dates[0], values, name=name)


def write_series_csv(series: TimeSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for day, value in zip(series.dates, series.values):
            writer.writerow([day.isoformat(), repr(float(value))])
