"""Seasonal ARIMA and its dynamic-regression extension.

The model on the transformed scale is

    phi(L) PHI(L^m) (1-L)^d (1-L^m)^D [y_t - sum_r gamma_r x_rt]
        = theta(L) THETA(L^m) eps_t  (+ mean when undifferenced)

so covariates are differenced exactly like the target and the ARMA
structure applies to the regression remainder. Estimation minimizes the
conditional sum of squares with Nelder-Mead over unconstrained
coordinates: partial-autocorrelation (tanh) reparameterization keeps the
AR/MA polynomials inside the stationary/invertible region, and
Hannan-Rissanen style regressions supply starting values. Everything is
deterministic; refits are bit-identical.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
from scipy.optimize import minimize

from .errors import (
    AllFitsFailed,
    ColumnMismatch,
    MissingFutureCovariates,
    NonInvertibleEstimate,
    SeriesTooShort,
    SingularDesign,
)
from .features import DesignMatrix
from .series import (
    DifferenceSpec,
    TimeSeries,
    TransformSpec,
    difference_poly,
    difference_values,
    inverse_transform_values,
    transform_values,
)

__all__ = [
    "ArimaOrder",
    "FittedArima",
    "fit_arima",
    "forecast_arima",
    "information_criteria",
    "select_order",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ArimaOrder:
    """(p,d,q)(P,D,Q)_m orders."""

    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    m: int = 1

    def __post_init__(self) -> None:
        for name in ("p", "q", "P", "Q"):
            v = getattr(self, name)
            if not 0 <= v <= 5:
                raise ValueError(f"{name} must be in 0..5, got {v}")
        if not 0 <= self.d <= 2:
            raise ValueError("d must be in 0..2")
        if not 0 <= self.D <= 1:
            raise ValueError("D must be in 0..1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if (self.P or self.Q or self.D) and self.m < 2:
            raise ValueError("seasonal terms require m >= 2")

    @property
    def n_ar(self) -> int:
        return self.p + self.P * self.m

    @property
    def n_ma(self) -> int:
        return self.q + self.Q * self.m

    @property
    def span(self) -> int:
        return self.d + self.D * self.m

    def diff_spec(self) -> DifferenceSpec:
        return DifferenceSpec(self.d, self.D, self.m)

    def label(self) -> str:
        return f"({self.p},{self.d},{self.q})({self.P},{self.D},{self.Q})_{self.m}"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("p", "d", "q", "P", "D", "Q", "m")}

    @classmethod
    def from_dict(cls, doc: dict) -> "ArimaOrder":
        return cls(**{k: int(doc[k]) for k in ("p", "d", "q", "P", "D", "Q", "m")})


# --- stationarity-preserving reparameterization ----------------------------


def _pacf_to_coeffs(r: np.ndarray) -> np.ndarray:
    """Durbin-Levinson map from partial autocorrelations in (-1,1) to a
    stationary AR coefficient vector."""
    phi = np.zeros(0)
    for rk in r:
        new = np.empty(len(phi) + 1)
        new[:-1] = phi - rk * phi[::-1]
        new[-1] = rk
        phi = new
    return phi


def _coeffs_to_pacf(phi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_pacf_to_coeffs`; clips toward the interior if the
    input is not strictly stationary (used for starting values only)."""
    work = np.asarray(phi, dtype=float).copy()
    out = np.zeros(len(work))
    for k in range(len(work), 0, -1):
        rk = work[k - 1]
        rk = float(np.clip(rk, -0.95, 0.95))
        out[k - 1] = rk
        if k > 1:
            denom = 1.0 - rk * rk
            prev = (work[: k - 1] + rk * work[: k - 1][::-1]) / denom
            work = prev
    return out


def _unconstrained_to_ar(u: np.ndarray) -> np.ndarray:
    return _pacf_to_coeffs(np.tanh(u))


def _ar_to_unconstrained(phi: np.ndarray) -> np.ndarray:
    return np.arctanh(np.clip(_coeffs_to_pacf(phi), -0.999, 0.999))


def _expand_ar(phi: np.ndarray, sphi: np.ndarray, m: int) -> np.ndarray:
    """Lag coefficients of phi(L)*PHI(L^m) written as 1 - sum a_i L^i."""
    a = np.r_[1.0, -phi]
    b = np.zeros(len(sphi) * m + 1)
    b[0] = 1.0
    for j, c in enumerate(sphi, start=1):
        b[j * m] = -c
    prod = np.convolve(a, b)
    return -prod[1:]


def _expand_ma(theta: np.ndarray, stheta: np.ndarray, m: int) -> np.ndarray:
    """Lag coefficients of theta(L)*THETA(L^m) written as 1 + sum b_j L^j."""
    a = np.r_[1.0, theta]
    b = np.zeros(len(stheta) * m + 1)
    b[0] = 1.0
    for j, c in enumerate(stheta, start=1):
        b[j * m] = c
    prod = np.convolve(a, b)
    return prod[1:]


def _css_residuals(u: np.ndarray, arf: np.ndarray, maf: np.ndarray) -> np.ndarray:
    """Zero-initialized conditional residuals.

    Pre-sample values and innovations are treated as 0, so every model
    order produces one residual per observation and log-likelihoods stay
    comparable across a selection grid.
    """
    n_ar, n_ma, n = len(arf), len(maf), len(u)
    if n_ma == 0:
        if n_ar == 0:
            return u.copy()
        upad = np.concatenate([np.zeros(n_ar), u])
        pred = np.zeros(n)
        for i in range(1, n_ar + 1):
            if arf[i - 1] != 0.0:
                pred += arf[i - 1] * upad[n_ar - i : n_ar - i + n]
        return u - pred
    e = np.zeros(n)
    for t in range(n):
        acc = u[t]
        for i in range(1, min(n_ar, t) + 1):
            acc -= arf[i - 1] * u[t - i]
        for j in range(1, min(n_ma, t) + 1):
            acc -= maf[j - 1] * e[t - j]
        e[t] = acc
    return e


def _roots_outside_unit_circle(poly_lags: np.ndarray, sign: float) -> bool:
    """Check roots of 1 + sign*sum(c_i L^i) lie outside the unit circle."""
    if len(poly_lags) == 0:
        return True
    coeffs = np.r_[1.0, sign * poly_lags]  # ascending in L
    roots = np.roots(coeffs[::-1])
    return bool(np.all(np.abs(roots) > 1.0))


@dataclass
class FittedArima:
    """Coefficients plus the training tail needed to forecast."""

    order: ArimaOrder
    ar: np.ndarray
    ma: np.ndarray
    seasonal_ar: np.ndarray
    seasonal_ma: np.ndarray
    regression: np.ndarray
    mean: float | None
    sigma2: float
    loglik: float
    n_effective: int
    transform: TransformSpec
    column_names: tuple[str, ...]
    difference_regressors: bool
    tail_transformed: np.ndarray  # last d + D*m transformed observations
    tail_noise: np.ndarray  # last p + P*m regression-adjusted differenced values
    tail_residuals: np.ndarray  # last q + Q*m innovations
    tail_covariates: np.ndarray | None  # last d + D*m raw covariate rows
    series_end: date
    series_name: str
    residuals: np.ndarray | None = None  # in-sample innovations; not serialized

    @property
    def n_params(self) -> int:
        k = len(self.regression)
        return (
            self.order.p + self.order.q + self.order.P + self.order.Q
            + k + (1 if self.mean is not None else 0) + 1  # +1 for the variance
        )

    def forecast(self, horizon: int, X: DesignMatrix | None = None) -> TimeSeries:
        return forecast_arima(self, horizon, X)

    def to_dict(self) -> dict:
        return {
            "format": "eventcast-arima",
            "version": 1,
            "order": self.order.to_dict(),
            "ar": [float(v) for v in self.ar],
            "ma": [float(v) for v in self.ma],
            "seasonal_ar": [float(v) for v in self.seasonal_ar],
            "seasonal_ma": [float(v) for v in self.seasonal_ma],
            "regression": [float(v) for v in self.regression],
            "mean": self.mean,
            "sigma2": float(self.sigma2),
            "loglik": float(self.loglik),
            "n_effective": int(self.n_effective),
            "transform": self.transform.to_dict(),
            "column_names": list(self.column_names),
            "difference_regressors": self.difference_regressors,
            "tail_transformed": [float(v) for v in self.tail_transformed],
            "tail_noise": [float(v) for v in self.tail_noise],
            "tail_residuals": [float(v) for v in self.tail_residuals],
            "tail_covariates": None
            if self.tail_covariates is None
            else [[float(v) for v in row] for row in self.tail_covariates],
            "series_end": self.series_end.isoformat(),
            "series_name": self.series_name,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedArima":
        if doc.get("format") != "eventcast-arima":
            raise ValueError("not an arima model document")
        return cls(
            order=ArimaOrder.from_dict(doc["order"]),
            ar=np.asarray(doc["ar"], dtype=float),
            ma=np.asarray(doc["ma"], dtype=float),
            seasonal_ar=np.asarray(doc["seasonal_ar"], dtype=float),
            seasonal_ma=np.asarray(doc["seasonal_ma"], dtype=float),
            regression=np.asarray(doc["regression"], dtype=float),
            mean=None if doc["mean"] is None else float(doc["mean"]),
            sigma2=float(doc["sigma2"]),
            loglik=float(doc["loglik"]),
            n_effective=int(doc["n_effective"]),
            transform=TransformSpec.from_dict(doc["transform"]),
            column_names=tuple(doc["column_names"]),
            difference_regressors=bool(doc["difference_regressors"]),
            tail_transformed=np.asarray(doc["tail_transformed"], dtype=float),
            tail_noise=np.asarray(doc["tail_noise"], dtype=float),
            tail_residuals=np.asarray(doc["tail_residuals"], dtype=float),
            tail_covariates=None
            if doc["tail_covariates"] is None
            else np.asarray(doc["tail_covariates"], dtype=float),
            series_end=date.fromisoformat(doc["series_end"]),
            series_name=doc["series_name"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def fit_arima(
    series: TimeSeries,
    order: ArimaOrder,
    X: DesignMatrix | None = None,
    transform: TransformSpec = TransformSpec("none"),
    include_mean: bool | None = None,
    difference_regressors: bool = True,
) -> FittedArima:
    """Estimate by conditional sum of squares.

    Regression and ARMA coefficients are fitted jointly; covariates are
    differenced like the target unless ``difference_regressors=False``
    (raw regressors with ARMA errors). The mean term defaults to "only
    when undifferenced".
    """
    n = len(series)
    k = X.n_columns if X is not None else 0
    min_len = 5 * (order.p + order.q + order.P + order.Q) + order.span + k + 10
    if n < min_len:
        raise SeriesTooShort(f"order {order.label()} with {k} covariates needs >= {min_len} observations, got {n}")
    if X is not None:
        if X.start != series.start or len(X) != n:
            raise ColumnMismatch("covariate rows must align with the series dates")

    z = transform_values(series.values, transform)
    dspec = order.diff_spec()
    w = difference_values(z, dspec)
    V = None
    if k:
        V = X.data
        if difference_regressors:
            V = np.column_stack([difference_values(V[:, j], dspec) for j in range(k)])
        else:
            V = V[order.span :]
        if np.linalg.matrix_rank(V) < k:
            raise SingularDesign("covariate columns are collinear after differencing")
    if include_mean is None:
        include_mean = order.span == 0
    nw = len(w)

    # Hannan-Rissanen style starting values
    gamma0 = np.zeros(k)
    mean0 = 0.0
    if k or include_mean:
        cols = []
        if k:
            cols.append(V)
        if include_mean:
            cols.append(np.ones((nw, 1)))
        M = np.hstack(cols)
        beta, *_ = np.linalg.lstsq(M, w, rcond=None)
        if k:
            gamma0 = beta[:k]
        if include_mean:
            mean0 = float(beta[-1])
    u0 = w - (V @ gamma0 if k else 0.0) - mean0
    phi0, theta0, sphi0, stheta0 = _initial_arma(u0, order)

    x0_parts = []
    if order.p:
        x0_parts.append(_ar_to_unconstrained(phi0))
    if order.q:
        x0_parts.append(_ar_to_unconstrained(-theta0))
    if order.P:
        x0_parts.append(_ar_to_unconstrained(sphi0))
    if order.Q:
        x0_parts.append(_ar_to_unconstrained(-stheta0))
    if k:
        x0_parts.append(gamma0)
    if include_mean:
        x0_parts.append(np.array([mean0]))
    x0 = np.concatenate(x0_parts) if x0_parts else np.zeros(0)

    def unpack(params: np.ndarray):
        i = 0
        phi = _unconstrained_to_ar(params[i : i + order.p]); i += order.p
        theta = -_unconstrained_to_ar(params[i : i + order.q]); i += order.q
        sphi = _unconstrained_to_ar(params[i : i + order.P]); i += order.P
        stheta = -_unconstrained_to_ar(params[i : i + order.Q]); i += order.Q
        gamma = params[i : i + k]; i += k
        mu = float(params[i]) if include_mean else 0.0
        return phi, theta, sphi, stheta, gamma, mu

    n_ar = order.n_ar

    def objective(params: np.ndarray) -> float:
        phi, theta, sphi, stheta, gamma, mu = unpack(params)
        u = w - (V @ gamma if k else 0.0) - mu
        e = _css_residuals(u, _expand_ar(phi, sphi, order.m), _expand_ma(theta, stheta, order.m))
        sse = float(e @ e)
        return sse if np.isfinite(sse) else 1e300

    if len(x0):
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxiter": 400 * max(len(x0), 1), "xatol": 1e-6, "fatol": 1e-10, "adaptive": len(x0) > 4},
        )
        params = result.x
    else:
        params = x0

    phi, theta, sphi, stheta, gamma, mu = unpack(params)
    if not (
        _roots_outside_unit_circle(-np.asarray(phi), 1.0)
        and _roots_outside_unit_circle(np.asarray(theta), 1.0)
        and _roots_outside_unit_circle(-np.asarray(sphi), 1.0)
        and _roots_outside_unit_circle(np.asarray(stheta), 1.0)
    ):
        raise NonInvertibleEstimate("estimate left the stationary/invertible region")

    u = w - (V @ gamma if k else 0.0) - mu
    arf = _expand_ar(phi, sphi, order.m)
    maf = _expand_ma(theta, stheta, order.m)
    e = _css_residuals(u, arf, maf)
    n_eff = nw
    sse = float(e @ e)
    sigma2 = sse / n_eff
    if sigma2 <= 0:
        sigma2 = 1e-300
    loglik = -0.5 * n_eff * (np.log(2.0 * np.pi * sigma2) + 1.0)

    span = order.span
    return FittedArima(
        order=order,
        ar=np.asarray(phi),
        ma=np.asarray(theta),
        seasonal_ar=np.asarray(sphi),
        seasonal_ma=np.asarray(stheta),
        regression=np.asarray(gamma),
        mean=mu if include_mean else None,
        sigma2=sigma2,
        loglik=loglik,
        n_effective=n_eff,
        transform=transform,
        column_names=X.column_names if X is not None else (),
        difference_regressors=difference_regressors,
        tail_transformed=z[len(z) - span :] if span else np.zeros(0),
        tail_noise=u[nw - n_ar :] if n_ar else np.zeros(0),
        tail_residuals=e[nw - order.n_ma :] if order.n_ma else np.zeros(0),
        tail_covariates=X.data[n - span :] if (X is not None and span) else (np.zeros((0, k)) if k else None),
        series_end=series.end,
        series_name=series.name,
        residuals=e,
    )


def _initial_arma(u0: np.ndarray, order: ArimaOrder):
    """Hannan-Rissanen two-stage starting values (long-AR residual proxy)."""
    nw = len(u0)
    phi0 = np.zeros(order.p)
    theta0 = np.zeros(order.q)
    sphi0 = np.zeros(order.P)
    stheta0 = np.zeros(order.Q)
    ar_lags = list(range(1, order.p + 1)) + [j * order.m for j in range(1, order.P + 1)]
    ma_lags = list(range(1, order.q + 1)) + [j * order.m for j in range(1, order.Q + 1)]
    ar_lags = sorted(set(ar_lags))
    ma_lags = sorted(set(ma_lags))
    if not ar_lags and not ma_lags:
        return phi0, theta0, sphi0, stheta0
    long_order = min(max(20, 2 * (order.n_ar + order.n_ma)), nw // 3)
    max_lag = max(ar_lags + ma_lags)
    if long_order < 1 or nw <= long_order + max_lag + 5:
        return phi0, theta0, sphi0, stheta0
    rows = nw - long_order
    lagmat = np.column_stack([u0[long_order - i : nw - i] for i in range(1, long_order + 1)])
    coef, *_ = np.linalg.lstsq(lagmat, u0[long_order:], rcond=None)
    eps = np.zeros(nw)
    eps[long_order:] = u0[long_order:] - lagmat @ coef
    start = long_order + max_lag
    cols = [u0[start - lag : nw - lag] for lag in ar_lags]
    cols += [eps[start - lag : nw - lag] for lag in ma_lags]
    M = np.column_stack(cols) if cols else np.zeros((nw - start, 0))
    try:
        beta, *_ = np.linalg.lstsq(M, u0[start:], rcond=None)
    except np.linalg.LinAlgError:
        return phi0, theta0, sphi0, stheta0
    values = dict(zip([("ar", lag) for lag in ar_lags] + [("ma", lag) for lag in ma_lags], beta))
    for i in range(1, order.p + 1):
        phi0[i - 1] = values.get(("ar", i), 0.0)
    for j in range(1, order.P + 1):
        sphi0[j - 1] = values.get(("ar", j * order.m), 0.0) if j * order.m not in range(1, order.p + 1) else 0.0
    for i in range(1, order.q + 1):
        theta0[i - 1] = values.get(("ma", i), 0.0)
    for j in range(1, order.Q + 1):
        stheta0[j - 1] = values.get(("ma", j * order.m), 0.0) if j * order.m not in range(1, order.q + 1) else 0.0
    return phi0, theta0, sphi0, stheta0


def forecast_arima(model: FittedArima, horizon: int, X: DesignMatrix | None = None) -> TimeSeries:
    """Point forecasts: run the recursion with future innovations at zero,
    undo differencing, and invert the transform back to raw units."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    k = len(model.regression)
    if k:
        if X is None:
            raise MissingFutureCovariates("model has regression terms; future covariates required")
        if tuple(X.column_names) != tuple(model.column_names):
            raise ColumnMismatch(
                f"future covariate columns {X.column_names} do not match training columns {model.column_names}"
            )
        if len(X) < horizon:
            raise MissingFutureCovariates(f"need {horizon} future covariate rows, got {len(X)}")
        future_rows = X.data[:horizon]
    elif X is not None and X.n_columns and model.column_names:
        raise ColumnMismatch("model was trained without covariates")

    order = model.order
    span = order.span
    arf = _expand_ar(model.ar, model.seasonal_ar, order.m)
    maf = _expand_ma(model.ma, model.seasonal_ma, order.m)
    n_ar, n_ma = len(arf), len(maf)
    mu = model.mean if model.mean is not None else 0.0

    if k:
        if model.difference_regressors and span:
            stacked = np.vstack([model.tail_covariates, future_rows])
            dspec = order.diff_spec()
            V_future = np.column_stack(
                [difference_values(stacked[:, j], dspec) for j in range(k)]
            )
        else:
            V_future = future_rows
    else:
        V_future = None

    u_ext = np.concatenate([model.tail_noise, np.zeros(horizon)])
    e_ext = np.concatenate([model.tail_residuals, np.zeros(horizon)])
    diffed = np.zeros(horizon)
    for h in range(horizon):
        t = n_ar + h
        acc = 0.0
        for i in range(1, n_ar + 1):
            acc += arf[i - 1] * u_ext[t - i]
        te = n_ma + h
        for j in range(1, n_ma + 1):
            if te - j < n_ma:  # past residuals only; future innovations are zero
                acc += maf[j - 1] * e_ext[te - j]
        u_ext[t] = acc
        diffed[h] = acc + mu + (float(V_future[h] @ model.regression) if k else 0.0)

    # undo differencing with the stored tail of transformed observations
    if span:
        poly = difference_poly(order.diff_spec())
        buf = np.concatenate([model.tail_transformed, np.zeros(horizon)])
        for h in range(horizon):
            t = span + h
            acc = diffed[h]
            for lag in range(1, len(poly)):
                if poly[lag] != 0.0:
                    acc -= poly[lag] * buf[t - lag]
            buf[t] = acc
        levels = buf[span:]
    else:
        levels = diffed
    raw = inverse_transform_values(levels, model.transform)
    return TimeSeries(model.series_end + timedelta(days=1), raw, model.series_name)


def information_criteria(model: FittedArima) -> tuple[float, float]:
    """AIC and BIC from the CSS Gaussian log-likelihood."""
    npar = model.n_params
    aic = -2.0 * model.loglik + 2.0 * npar
    bic = -2.0 * model.loglik + npar * np.log(model.n_effective)
    return float(aic), float(bic)


def select_order(
    series: TimeSeries,
    X: DesignMatrix | None,
    grid,
    criterion: str = "aic",
    transform: TransformSpec = TransformSpec("none"),
) -> tuple[ArimaOrder, FittedArima]:
    """Fit every order in the grid, return the criterion minimizer.

    Failed fits are skipped (logged); if everything fails the error
    reports each failure.
    """
    if criterion not in ("aic", "bic"):
        raise ValueError("criterion must be 'aic' or 'bic'")
    grid = list(grid)
    if not grid:
        raise ValueError("order grid must be non-empty")
    best: tuple[float, ArimaOrder, FittedArima] | None = None
    failures: list[str] = []
    for order in grid:
        try:
            model = fit_arima(series, order, X=X, transform=transform)
        except Exception as err:  # noqa: BLE001 - survey fit, report later
            failures.append(f"{order.label()}: {err}")
            logger.warning("order %s failed to fit: %s", order.label(), err)
            continue
        aic, bic = information_criteria(model)
        value = aic if criterion == "aic" else bic
        if best is None or value < best[0]:
            best = (value, order, model)
    if best is None:
        raise AllFitsFailed("every order in the grid failed: " + "; ".join(failures))
    return best[1], best[2]
