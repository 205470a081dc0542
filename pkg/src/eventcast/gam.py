"""Penalized-spline additive model with identity link and Gaussian errors.

Smooths are built from uniform cubic B-splines (wrapped around the
period for cyclic terms), low-rank radial bases, plain linear columns,
or ridge-penalized categorical intercepts standing in for random
effects. Fitting minimizes

    ||y - b0 - sum_i B_i beta_i||^2 + sum_i lambda_i beta_i' S_i beta_i

under per-smooth sum-to-zero constraints, with "auto" lambdas chosen by
GCV over a log-spaced grid, coordinate-wise with two sweeps.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import InsufficientUniqueValues, MissingCovariate, SingularSystem
from .features import DesignMatrix

__all__ = [
    "SmoothTerm",
    "FittedGam",
    "GridExhausted",
    "build_basis",
    "penalty_matrix",
    "second_difference_matrix",
    "fit_gam",
    "predict_gam",
    "default_game_formula",
]

SPLINE_KINDS = ("cyclic_pspline", "cyclic_cubic", "pspline", "thinplate_lowrank")
CYCLIC_KINDS = ("cyclic_pspline", "cyclic_cubic")

LAMBDA_GRID = np.logspace(-6.0, 6.0, 30)


class GridExhausted(UserWarning):
    """GCV minimum landed on the edge of the lambda grid."""


@dataclass(frozen=True)
class SmoothTerm:
    """One additive component: a smooth of a single covariate."""

    covariate: str
    kind: str = "pspline"
    n_basis: int = 10
    period: float | None = None
    lam: float | str = "auto"

    def __post_init__(self) -> None:
        if self.kind not in SPLINE_KINDS + ("linear", "random_effect"):
            raise ValueError(f"unknown smooth kind {self.kind!r}")
        if self.kind in CYCLIC_KINDS and (self.period is None or self.period <= 0):
            raise ValueError(f"{self.kind} requires a positive period")
        if self.kind in SPLINE_KINDS and self.n_basis < 4:
            raise ValueError("spline terms need n_basis >= 4")
        if isinstance(self.lam, str):
            if self.lam != "auto":
                raise ValueError("lam must be a non-negative number or 'auto'")
        elif self.lam < 0:
            raise ValueError("lam must be non-negative")

    def to_dict(self) -> dict:
        return {
            "covariate": self.covariate,
            "kind": self.kind,
            "n_basis": self.n_basis,
            "period": self.period,
            "lam": self.lam,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SmoothTerm":
        return cls(
            covariate=doc["covariate"],
            kind=doc["kind"],
            n_basis=int(doc["n_basis"]),
            period=doc["period"],
            lam=doc["lam"],
        )


def _cardinal_cubic(u: np.ndarray) -> np.ndarray:
    """Uniform cubic B-spline with integer knots, support [0, 4]."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = (u >= 0) & (u < 1)
    out[m] = u[m] ** 3 / 6.0
    m = (u >= 1) & (u < 2)
    v = u[m]
    out[m] = (-3 * v**3 + 12 * v**2 - 12 * v + 4) / 6.0
    m = (u >= 2) & (u < 3)
    v = u[m]
    out[m] = (3 * v**3 - 24 * v**2 + 60 * v - 44) / 6.0
    m = (u >= 3) & (u <= 4)
    v = u[m]
    out[m] = (4 - v) ** 3 / 6.0
    return out


def _cardinal_cubic_dd(u: np.ndarray) -> np.ndarray:
    """Second derivative of :func:`_cardinal_cubic`, piecewise linear."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = (u >= 0) & (u < 1)
    out[m] = u[m]
    m = (u >= 1) & (u < 2)
    out[m] = -3 * u[m] + 4
    m = (u >= 2) & (u < 3)
    out[m] = 3 * u[m] - 8
    m = (u >= 3) & (u <= 4)
    out[m] = 4 - u[m]
    return out


def _bspline_design(x: np.ndarray, xmin: float, h: float, n: int) -> np.ndarray:
    """Open uniform B-spline basis: n columns on knots xmin + (j-3)h."""
    u = (x - xmin) / h
    cols = [_cardinal_cubic(u - j + 3) for j in range(n)]
    return np.column_stack(cols)


def _cyclic_design(x: np.ndarray, period: float, n: int) -> np.ndarray:
    """Wrapped uniform B-spline basis on the circle of given period."""
    h = period / n
    u = np.mod(x, period) / h
    cols = [_cardinal_cubic(np.mod(u - j, n)) for j in range(n)]
    return np.column_stack(cols)


def second_difference_matrix(n_basis: int, cyclic: bool = False) -> np.ndarray:
    """Second-order difference operator D with rows [1, -2, 1].

    The cyclic form wraps around so constants (and only constants) stay
    in the null space on the circle.
    """
    if cyclic:
        D = np.zeros((n_basis, n_basis))
        for i in range(n_basis):
            D[i, i] = 1.0
            D[i, (i + 1) % n_basis] = -2.0
            D[i, (i + 2) % n_basis] = 1.0
        return D
    D = np.zeros((n_basis - 2, n_basis))
    for i in range(n_basis - 2):
        D[i, i : i + 3] = (1.0, -2.0, 1.0)
    return D


def _cyclic_curvature_penalty(n: int, period: float) -> np.ndarray:
    """Exact integrated squared second derivative for the wrapped basis.

    The integrand is piecewise quadratic per knot segment, so 3-point
    Gauss-Legendre is exact.
    """
    h = period / n
    gauss_u = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
    gauss_w = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
    S = np.zeros((n, n))
    for seg in range(n):
        # map quadrature nodes into segment [seg*h, (seg+1)*h)
        xg = (seg + 0.5 + 0.5 * gauss_u) * h
        u = xg / h
        vals = np.column_stack([_cardinal_cubic_dd(np.mod(u - j, n)) for j in range(n)]) / h**2
        for g in range(3):
            S += gauss_w[g] * (h / 2.0) * np.outer(vals[g], vals[g])
    return S


def _psd_clip(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((S + S.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals) @ vecs.T


def _term_design(term: SmoothTerm, x: np.ndarray) -> tuple[np.ndarray, dict]:
    """Basis matrix plus the construction metadata needed at predict time."""
    x = np.asarray(x, dtype=float)
    if term.kind == "pspline":
        uniq = np.unique(x)
        if len(uniq) < term.n_basis:
            raise InsufficientUniqueValues(
                f"{term.covariate!r} has {len(uniq)} unique values, needs >= {term.n_basis}"
            )
        xmin, xmax = float(uniq[0]), float(uniq[-1])
        h = (xmax - xmin) / (term.n_basis - 3)
        return _bspline_design(x, xmin, h, term.n_basis), {"xmin": xmin, "h": h}
    if term.kind in CYCLIC_KINDS:
        return _cyclic_design(x, float(term.period), term.n_basis), {"period": float(term.period)}
    if term.kind == "thinplate_lowrank":
        uniq = np.unique(x)
        if len(uniq) < term.n_basis:
            raise InsufficientUniqueValues(
                f"{term.covariate!r} has {len(uniq)} unique values, needs >= {term.n_basis}"
            )
        n_rad = term.n_basis - 1
        knots = np.quantile(uniq, np.linspace(0.0, 1.0, n_rad))
        spread = float(uniq[-1] - uniq[0])
        center = float(x.mean())
        meta = {"knots": [float(k) for k in knots], "spread": spread, "center": center}
        return _thinplate_columns(x, meta), meta
    if term.kind == "linear":
        center = float(x.mean())
        return (x - center).reshape(-1, 1), {"center": center}
    if term.kind == "random_effect":
        levels = [float(v) for v in np.unique(x)]
        meta = {"levels": levels}
        return _onehot_columns(x, levels), meta
    raise ValueError(f"unknown smooth kind {term.kind!r}")


def _thinplate_columns(x: np.ndarray, meta: dict) -> np.ndarray:
    knots = np.asarray(meta["knots"])
    spread = meta["spread"]
    linear = ((x - meta["center"]) / spread).reshape(-1, 1)
    radial = np.abs(x[:, None] - knots[None, :]) / spread
    return np.hstack([linear, radial**3])


def _onehot_columns(x: np.ndarray, levels: list[float]) -> np.ndarray:
    out = np.zeros((len(x), len(levels)))
    for j, level in enumerate(levels):
        out[:, j] = (x == level).astype(float)
    return out


def _term_basis_from_meta(term: SmoothTerm, meta: dict, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if term.kind == "pspline":
        return _bspline_design(x, meta["xmin"], meta["h"], term.n_basis)
    if term.kind in CYCLIC_KINDS:
        return _cyclic_design(x, meta["period"], term.n_basis)
    if term.kind == "thinplate_lowrank":
        return _thinplate_columns(x, meta)
    if term.kind == "linear":
        return (x - meta["center"]).reshape(-1, 1)
    if term.kind == "random_effect":
        return _onehot_columns(x, meta["levels"])
    raise ValueError(f"unknown smooth kind {term.kind!r}")


def build_basis(term: SmoothTerm, x) -> np.ndarray:
    """Evaluate the term's basis on fit data (knots derived from x)."""
    return _term_design(term, np.asarray(x, dtype=float))[0]


def penalty_matrix(term: SmoothTerm, meta: dict | None = None) -> np.ndarray:
    """Roughness penalty S for the term's coefficients.

    P-splines use the squared second difference (wrapped for the cyclic
    variant), cyclic cubic smooths the exact integrated squared second
    derivative, and random effects an identity ridge. The thin-plate
    penalty depends on the fitted knots, so it needs the fit metadata.
    """
    if term.kind == "pspline":
        D = second_difference_matrix(term.n_basis)
        return D.T @ D
    if term.kind == "cyclic_pspline":
        D = second_difference_matrix(term.n_basis, cyclic=True)
        return D.T @ D
    if term.kind == "cyclic_cubic":
        return _cyclic_curvature_penalty(term.n_basis, float(term.period))
    if term.kind == "random_effect":
        if meta is None:
            raise ValueError("random_effect penalty needs the fitted level count")
        return np.eye(len(meta["levels"]))
    if term.kind == "thinplate_lowrank":
        if meta is None:
            raise ValueError("thin-plate penalty depends on fitted knots; pass the fit metadata")
        knots = np.asarray(meta["knots"])
        spread = meta["spread"]
        E = (np.abs(knots[:, None] - knots[None, :]) / spread) ** 3
        S = np.zeros((len(knots) + 1, len(knots) + 1))
        S[1:, 1:] = _psd_clip(E)
        return S
    if term.kind == "linear":
        return np.zeros((1, 1))
    raise ValueError(f"unknown smooth kind {term.kind!r}")


@dataclass
class FittedTerm:
    term: SmoothTerm
    meta: dict
    coefficients: np.ndarray  # in the original (unconstrained) basis
    lam: float
    edf: float

    def to_dict(self) -> dict:
        return {
            "term": self.term.to_dict(),
            "meta": self.meta,
            "coefficients": [float(c) for c in self.coefficients],
            "lam": float(self.lam),
            "edf": float(self.edf),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedTerm":
        return cls(
            term=SmoothTerm.from_dict(doc["term"]),
            meta=doc["meta"],
            coefficients=np.asarray(doc["coefficients"], dtype=float),
            lam=float(doc["lam"]),
            edf=float(doc["edf"]),
        )


@dataclass
class FittedGam:
    intercept: float
    terms: list[FittedTerm]
    sigma2: float
    edf_total: float
    gcv: float
    fitted: np.ndarray | None = None  # training-sample fit; not serialized

    def predict(self, data: DesignMatrix) -> np.ndarray:
        return predict_gam(self, data)

    def to_dict(self) -> dict:
        return {
            "format": "eventcast-gam",
            "version": 1,
            "intercept": float(self.intercept),
            "terms": [t.to_dict() for t in self.terms],
            "sigma2": float(self.sigma2),
            "edf_total": float(self.edf_total),
            "gcv": float(self.gcv),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedGam":
        if doc.get("format") != "eventcast-gam":
            raise ValueError("not a gam model document")
        return cls(
            intercept=float(doc["intercept"]),
            terms=[FittedTerm.from_dict(t) for t in doc["terms"]],
            sigma2=float(doc["sigma2"]),
            edf_total=float(doc["edf_total"]),
            gcv=float(doc["gcv"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Block:
    """Per-term constrained design block inside the stacked system."""

    def __init__(self, term: SmoothTerm, basis: np.ndarray, penalty: np.ndarray, meta: dict):
        self.term = term
        self.meta = meta
        if term.kind == "linear":
            self.Z = None
            self.design = basis
            self.penalty = penalty
        else:
            col_sums = basis.sum(axis=0)
            norm = float(np.linalg.norm(col_sums))
            if norm < 1e-12:
                self.Z = np.eye(basis.shape[1])
            else:
                q, _ = np.linalg.qr(
                    np.column_stack([col_sums / norm]), mode="complete"
                )
                self.Z = q[:, 1:]
            self.design = basis @ self.Z
            self.penalty = self.Z.T @ penalty @ self.Z

    @property
    def width(self) -> int:
        return self.design.shape[1]

    def unconstrained(self, alpha: np.ndarray) -> np.ndarray:
        return alpha if self.Z is None else self.Z @ alpha


def _solve_penalized(
    X: np.ndarray,
    y: np.ndarray,
    blocks: list[_Block],
    offsets: list[int],
    lams: list[float],
) -> tuple[np.ndarray, float, np.ndarray]:
    """Return (beta, rss, per-coefficient edf diag) for given lambdas."""
    XtX = X.T @ X
    A = XtX.copy()
    for block, offset, lam in zip(blocks, offsets, lams):
        k = block.width
        A[offset : offset + k, offset : offset + k] += lam * block.penalty
    try:
        factor = cho_factor(A)
    except LinAlgError as err:
        raise SingularSystem(f"penalized normal equations are singular: {err}") from err
    beta = cho_solve(factor, X.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    edf_diag = np.diag(cho_solve(factor, XtX))
    return beta, rss, edf_diag


def fit_gam(y, data: DesignMatrix, terms: Sequence[SmoothTerm]) -> FittedGam:
    """Fit the additive model by constrained penalized least squares."""
    y = np.asarray(y, dtype=float)
    if len(y) != len(data):
        raise ValueError("y and design matrix must have the same number of rows")
    blocks: list[_Block] = []
    for term in terms:
        if term.covariate not in data.column_names:
            raise MissingCovariate(f"design matrix lacks column {term.covariate!r}")
        basis, meta = _term_design(term, data.column(term.covariate))
        blocks.append(_Block(term, basis, penalty_matrix(term, meta), meta))

    n = len(y)
    total_width = 1 + sum(b.width for b in blocks)
    if n < total_width:
        raise ValueError(f"need at least {total_width} rows for {total_width} coefficients, got {n}")

    X = np.empty((n, total_width))
    X[:, 0] = 1.0
    offsets = []
    col = 1
    for block in blocks:
        offsets.append(col)
        X[:, col : col + block.width] = block.design
        col += block.width

    lams: list[float] = []
    auto_idx: list[int] = []
    for i, block in enumerate(blocks):
        if block.term.lam == "auto":
            if block.term.kind == "linear":
                lams.append(0.0)
            else:
                lams.append(1.0)
                auto_idx.append(i)
        else:
            lams.append(float(block.term.lam))

    def gcv_of(cur: list[float]) -> float:
        _, rss, edf_diag = _solve_penalized(X, y, blocks, offsets, cur)
        edf_total = float(edf_diag.sum())
        return n * rss / (n - edf_total) ** 2

    if auto_idx:
        for _ in range(2):  # two coordinate sweeps
            for i in auto_idx:
                scores = []
                for lam in LAMBDA_GRID:
                    trial = list(lams)
                    trial[i] = float(lam)
                    scores.append(gcv_of(trial))
                best = int(np.argmin(scores))
                lams[i] = float(LAMBDA_GRID[best])
                if best in (0, len(LAMBDA_GRID) - 1):
                    warnings.warn(
                        f"GCV minimum for {blocks[i].term.covariate!r} sits on the lambda grid edge",
                        GridExhausted,
                    )

    beta, rss, edf_diag = _solve_penalized(X, y, blocks, offsets, lams)
    edf_total = float(edf_diag.sum())
    fitted_terms = []
    for block, offset, lam in zip(blocks, offsets, lams):
        alpha = beta[offset : offset + block.width]
        fitted_terms.append(
            FittedTerm(
                term=block.term,
                meta=block.meta,
                coefficients=block.unconstrained(alpha),
                lam=lam,
                edf=float(edf_diag[offset : offset + block.width].sum()),
            )
        )
    denom = max(n - edf_total, 1e-12)
    return FittedGam(
        intercept=float(beta[0]),
        terms=fitted_terms,
        sigma2=rss / denom,
        edf_total=edf_total,
        gcv=n * rss / (n - edf_total) ** 2,
        fitted=X @ beta,
    )


def predict_gam(model: FittedGam, data: DesignMatrix) -> np.ndarray:
    """intercept + sum of smooth contributions on new rows.

    Random-effect levels unseen in training contribute zero (the
    population mean).
    """
    out = np.full(len(data), model.intercept)
    for fitted in model.terms:
        if fitted.term.covariate not in data.column_names:
            raise MissingCovariate(f"prediction data lacks column {fitted.term.covariate!r}")
        basis = _term_basis_from_meta(fitted.term, fitted.meta, data.column(fitted.term.covariate))
        out += basis @ fitted.coefficients
    return out


def term_contribution(model: FittedGam, name: str, x) -> np.ndarray:
    """Evaluate one fitted smooth at arbitrary covariate values."""
    for fitted in model.terms:
        if fitted.term.covariate == name:
            basis = _term_basis_from_meta(fitted.term, fitted.meta, np.asarray(x, dtype=float))
            return basis @ fitted.coefficients
    raise MissingCovariate(f"model has no term on {name!r}")


def default_game_formula(columns: Sequence[str]) -> list[SmoothTerm]:
    """Term list mirroring the production setup for game KPI series.

    Weekly and monthly cyclic P-splines are always included; gacha gets
    a 4-basis P-spline matching its four scale values, temperature a
    cyclic cubic smooth over the year, marketing and promotions enter
    linearly, and other event columns get low-rank radial smooths.
    """
    terms = [
        SmoothTerm("day_of_week", "cyclic_pspline", n_basis=7, period=7.0),
        SmoothTerm("month", "cyclic_pspline", n_basis=12, period=12.0),
    ]
    for name in columns:
        if name in ("day_of_week", "month") or name.startswith(("dow_", "month_")):
            continue
        if name == "gacha":
            terms.append(SmoothTerm("gacha", "pspline", n_basis=4))
        elif name == "temperature":
            terms.append(SmoothTerm("temperature", "cyclic_cubic", n_basis=10, period=365.25))
        elif name in ("marketing", "promotion"):
            terms.append(SmoothTerm(name, "linear"))
        else:
            terms.append(SmoothTerm(name, "thinplate_lowrank", n_basis=10))
    return terms
