"""Deep belief network forecaster.

A stack of restricted Boltzmann machines is pre-trained greedily with
CD-k contrastive divergence, then the whole network plus a linear output
head is fine-tuned as a feed-forward regressor by mini-batch gradient
descent on squared error with L2 decay. Inputs are min-max normalized to
[0, 1] so the binary-visible RBM formulation applies; all sampling is
driven by one seed, so training is bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyData,
    HistoryTooShort,
    TooFewRows,
)
from .series import TimeSeries, TransformSpec, inverse_transform_values, transform_values

__all__ = [
    "Rbm",
    "DbnParams",
    "DbnModel",
    "rbm_hidden_prob",
    "rbm_visible_prob",
    "rbm_train",
    "dbn_pretrain",
    "dbn_finetune",
    "dbn_forecast",
    "sliding_window_rows",
]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


@dataclass
class Rbm:
    """Weights between a visible and a hidden layer, plus biases."""

    W: np.ndarray  # (n_visible, n_hidden)
    b_visible: np.ndarray
    b_hidden: np.ndarray
    reconstruction_errors: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.W.shape != (len(self.b_visible), len(self.b_hidden)):
            raise DimensionMismatch("RBM weight and bias shapes are inconsistent")

    def to_dict(self) -> dict:
        return {
            "W": [[float(v) for v in row] for row in self.W],
            "b_visible": [float(v) for v in self.b_visible],
            "b_hidden": [float(v) for v in self.b_hidden],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Rbm":
        return cls(
            W=np.asarray(doc["W"], dtype=float),
            b_visible=np.asarray(doc["b_visible"], dtype=float),
            b_hidden=np.asarray(doc["b_hidden"], dtype=float),
        )


@dataclass(frozen=True)
class DbnParams:
    """Architecture and training hyperparameters (Table-style naming:
    h layers of n units, plr/tlr learning rates, CD-k, batch size b)."""

    h: int = 2
    n: int = 50
    plr: float = 0.0001
    tlr: float = 0.01
    k: int = 1
    b: int = 50
    l2: float = 0.0001
    window: int = 14
    max_epochs: int = 2000
    pretrain_epochs: int = 30
    patience: int = 20

    def __post_init__(self) -> None:
        for name in ("h", "n", "k", "b", "window", "max_epochs", "pretrain_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("plr", "tlr", "l2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "h", "n", "plr", "tlr", "k", "b", "l2", "window", "max_epochs", "pretrain_epochs", "patience"
        )}

    @classmethod
    def from_dict(cls, doc: dict) -> "DbnParams":
        return cls(**doc)


def rbm_hidden_prob(rbm: Rbm, v: np.ndarray) -> np.ndarray:
    """P(hidden unit on | visible), elementwise sigmoid of b_h + W'v."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != rbm.W.shape[0]:
        raise DimensionMismatch(f"visible dimension {v.shape[-1]} != {rbm.W.shape[0]}")
    return _sigmoid(v @ rbm.W + rbm.b_hidden)


def rbm_visible_prob(rbm: Rbm, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape[-1] != rbm.W.shape[1]:
        raise DimensionMismatch(f"hidden dimension {h.shape[-1]} != {rbm.W.shape[1]}")
    return _sigmoid(h @ rbm.W.T + rbm.b_visible)


def rbm_train(
    data: np.ndarray,
    units: int,
    plr: float,
    k: int = 1,
    epochs: int = 10,
    batch: int = 10,
    seed: int = 0,
) -> Rbm:
    """CD-k contrastive divergence on rows in [0, 1].

    Hidden states are sampled during the Gibbs chain; visible
    reconstructions use probabilities. Zero epochs returns the seeded
    initialization untouched.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise EmptyData("rbm training data must be a non-empty matrix")
    if len(data) < batch:
        raise EmptyData(f"need at least one full batch ({batch} rows), got {len(data)}")
    rng = np.random.default_rng(seed)
    n, d = data.shape
    rbm = Rbm(
        W=rng.normal(0.0, 0.01, (d, units)),
        b_visible=np.zeros(d),
        b_hidden=np.zeros(units),
    )
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_err = 0.0
        n_batches = 0
        for start in range(0, n - batch + 1, batch):
            v0 = data[order[start : start + batch]]
            h0_prob = rbm_hidden_prob(rbm, v0)
            h_state = (rng.uniform(size=h0_prob.shape) < h0_prob).astype(float)
            for step in range(k):
                v_prob = rbm_visible_prob(rbm, h_state)
                h_prob = rbm_hidden_prob(rbm, v_prob)
                if step < k - 1:
                    h_state = (rng.uniform(size=h_prob.shape) < h_prob).astype(float)
            m = len(v0)
            rbm.W += plr * (v0.T @ h0_prob - v_prob.T @ h_prob) / m
            rbm.b_visible += plr * np.mean(v0 - v_prob, axis=0)
            rbm.b_hidden += plr * np.mean(h0_prob - h_prob, axis=0)
            epoch_err += float(np.mean((v0 - v_prob) ** 2))
            n_batches += 1
        rbm.reconstruction_errors.append(epoch_err / max(n_batches, 1))
        if not (np.all(np.isfinite(rbm.W)) and np.all(np.isfinite(rbm.b_hidden))):
            raise FloatingPointError("RBM weights diverged to non-finite values")
    return rbm


def dbn_pretrain(X: np.ndarray, params: DbnParams, seed: int = 0) -> list[Rbm]:
    """Greedy layer-wise pre-training: layer k trains on the hidden
    probabilities of layer k-1."""
    activations = np.asarray(X, dtype=float)
    stack: list[Rbm] = []
    for layer in range(params.h):
        rbm = rbm_train(
            activations,
            units=params.n,
            plr=params.plr,
            k=params.k,
            epochs=params.pretrain_epochs,
            batch=params.b,
            seed=seed + layer,
        )
        stack.append(rbm)
        activations = rbm_hidden_prob(rbm, activations)
    return stack


def _forward(stack: list[Rbm], w_out: np.ndarray, b_out: float, X: np.ndarray):
    activations = [np.asarray(X, dtype=float)]
    for rbm in stack:
        activations.append(_sigmoid(activations[-1] @ rbm.W + rbm.b_hidden))
    yhat = activations[-1] @ w_out + b_out
    return yhat, activations


def network_loss_and_grads(
    stack: list[Rbm],
    w_out: np.ndarray,
    b_out: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
):
    """Mean squared error (with L2 on weights) and its analytic gradient.

    Loss = mean((yhat-y)^2)/2 + l2/2 * sum of squared weights; returns
    (loss, [dW per layer], [db per layer], dw_out, db_out).
    """
    n = len(y)
    yhat, activations = _forward(stack, w_out, b_out, X)
    err = yhat - y
    loss = float(err @ err) / (2.0 * n)
    loss += 0.5 * l2 * (sum(float(np.sum(r.W**2)) for r in stack) + float(w_out @ w_out))
    delta_out = err / n
    grad_w_out = activations[-1].T @ delta_out + l2 * w_out
    grad_b_out = float(delta_out.sum())
    grads_W = [np.zeros_like(r.W) for r in stack]
    grads_b = [np.zeros_like(r.b_hidden) for r in stack]
    delta = np.outer(delta_out, w_out) * activations[-1] * (1.0 - activations[-1])
    for idx in range(len(stack) - 1, -1, -1):
        grads_W[idx] = activations[idx].T @ delta + l2 * stack[idx].W
        grads_b[idx] = delta.sum(axis=0)
        if idx > 0:
            a = activations[idx]
            delta = (delta @ stack[idx].W.T) * a * (1.0 - a)
    return loss, grads_W, grads_b, grad_w_out, grad_b_out


@dataclass
class DbnModel:
    """Fine-tuned network plus the statistics needed to run it on raw data."""

    rbm_stack: list[Rbm]
    output_weights: np.ndarray
    output_bias: float
    feature_lo: np.ndarray
    feature_span: np.ndarray
    y_lo: float
    y_span: float
    params: DbnParams
    transform: TransformSpec
    seed: int
    covariate_names: tuple[str, ...] = ()
    validation_curve: list[float] = field(default_factory=list)

    def predict_normalized(self, X: np.ndarray) -> np.ndarray:
        yhat, _ = _forward(self.rbm_stack, self.output_weights, self.output_bias, X)
        return yhat

    def predict_transformed(self, rows: np.ndarray) -> np.ndarray:
        """Rows are raw sliding-window features; output is on the
        transformed target scale."""
        normalized = (np.asarray(rows, dtype=float) - self.feature_lo) / self.feature_span
        return self.predict_normalized(np.clip(normalized, 0.0, 1.0)) * self.y_span + self.y_lo

    def to_dict(self) -> dict:
        return {
            "format": "eventcast-dbn",
            "version": 1,
            "rbm_stack": [r.to_dict() for r in self.rbm_stack],
            "output_weights": [float(v) for v in self.output_weights],
            "output_bias": float(self.output_bias),
            "feature_lo": [float(v) for v in self.feature_lo],
            "feature_span": [float(v) for v in self.feature_span],
            "y_lo": float(self.y_lo),
            "y_span": float(self.y_span),
            "params": self.params.to_dict(),
            "transform": self.transform.to_dict(),
            "seed": int(self.seed),
            "covariate_names": list(self.covariate_names),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DbnModel":
        if doc.get("format") != "eventcast-dbn":
            raise ValueError("not a dbn model document")
        return cls(
            rbm_stack=[Rbm.from_dict(r) for r in doc["rbm_stack"]],
            output_weights=np.asarray(doc["output_weights"], dtype=float),
            output_bias=float(doc["output_bias"]),
            feature_lo=np.asarray(doc["feature_lo"], dtype=float),
            feature_span=np.asarray(doc["feature_span"], dtype=float),
            y_lo=float(doc["y_lo"]),
            y_span=float(doc["y_span"]),
            params=DbnParams.from_dict(doc["params"]),
            transform=TransformSpec.from_dict(doc["transform"]),
            seed=int(doc["seed"]),
            covariate_names=tuple(doc["covariate_names"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def minmax_stats(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (lo, span) with span floored at a tiny positive value."""
    rows = np.asarray(rows, dtype=float)
    lo = rows.min(axis=0)
    span = rows.max(axis=0) - lo
    span = np.where(span <= 0, 1.0, span)
    return lo, span


def dbn_finetune(
    stack: list[Rbm],
    X: np.ndarray,
    y: np.ndarray,
    params: DbnParams,
    seed: int = 0,
    transform: TransformSpec = TransformSpec("none"),
    feature_stats: tuple[np.ndarray, np.ndarray] | None = None,
    y_stats: tuple[float, float] | None = None,
    covariate_names: tuple[str, ...] = (),
) -> DbnModel:
    """Back-propagation fine-tuning with an 80/20 random split.

    ``X`` must already be normalized to [0, 1]; ``y`` is normalized
    internally unless ``y_stats`` is given. Training stops once the
    validation loss has not improved for ``patience`` epochs and the
    best-validation-epoch weights are returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to fine-tune, got {n}")
    if len(X) != n:
        raise DimensionMismatch("X and y row counts differ")
    rng = np.random.default_rng(seed)

    if y_stats is None:
        y_lo = float(y.min())
        y_span = float(y.max() - y.min()) or 1.0
    else:
        y_lo, y_span = y_stats
    yn = (y - y_lo) / y_span

    order = rng.permutation(n)
    n_train = max(int(round(0.8 * n)), 1)
    n_train = min(n_train, n - 1)
    train_idx, val_idx = order[:n_train], order[n_train:]
    Xt, yt = X[train_idx], yn[train_idx]
    Xv, yv = X[val_idx], yn[val_idx]

    work = [Rbm(r.W.copy(), r.b_visible.copy(), r.b_hidden.copy()) for r in stack]
    w_out = rng.normal(0.0, 0.01, work[-1].W.shape[1])
    b_out = float(yt.mean())

    def val_loss() -> float:
        pred, _ = _forward(work, w_out, b_out, Xv)
        return float(np.mean((pred - yv) ** 2))

    best = {
        "loss": val_loss(),
        "W": [r.W.copy() for r in work],
        "b": [r.b_hidden.copy() for r in work],
        "w_out": w_out.copy(),
        "b_out": b_out,
        "epoch": -1,
    }
    curve = [best["loss"]]
    batch = min(params.b, n_train)
    for epoch in range(params.max_epochs):
        idx = rng.permutation(n_train)
        for start in range(0, n_train, batch):
            sel = idx[start : start + batch]
            _, gW, gb, gwo, gbo = network_loss_and_grads(work, w_out, b_out, Xt[sel], yt[sel], params.l2)
            for r, dW, db in zip(work, gW, gb):
                r.W -= params.tlr * dW
                r.b_hidden -= params.tlr * db
            w_out -= params.tlr * gwo
            b_out -= params.tlr * gbo
        for r in work:
            if not (np.all(np.isfinite(r.W)) and np.all(np.isfinite(r.b_hidden))):
                raise FloatingPointError(f"weights diverged at epoch {epoch}")
        loss = val_loss()
        curve.append(loss)
        if loss < best["loss"]:
            best = {
                "loss": loss,
                "W": [r.W.copy() for r in work],
                "b": [r.b_hidden.copy() for r in work],
                "w_out": w_out.copy(),
                "b_out": b_out,
                "epoch": epoch,
            }
        elif epoch - best["epoch"] >= params.patience:
            break

    final_stack = [
        Rbm(W, orig.b_visible.copy(), b)
        for W, b, orig in zip(best["W"], best["b"], stack)
    ]
    if feature_stats is None:
        lo = np.zeros(X.shape[1])
        span = np.ones(X.shape[1])
    else:
        lo, span = feature_stats
    return DbnModel(
        rbm_stack=final_stack,
        output_weights=best["w_out"],
        output_bias=best["b_out"],
        feature_lo=np.asarray(lo, dtype=float),
        feature_span=np.asarray(span, dtype=float),
        y_lo=y_lo,
        y_span=y_span,
        params=params,
        transform=transform,
        seed=seed,
        covariate_names=covariate_names,
        validation_curve=curve,
    )


def sliding_window_rows(
    values: np.ndarray, covariates: np.ndarray | None, window: int
) -> tuple[np.ndarray, np.ndarray]:
    """Supervised rows: [window past values, today's covariates] -> today.

    ``values`` are on the transformed target scale; row t predicts
    values[t] from values[t-window:t].
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n <= window:
        raise HistoryTooShort(f"need more than {window} observations, got {n}")
    rows = []
    for t in range(window, n):
        feats = values[t - window : t]
        if covariates is not None:
            feats = np.concatenate([feats, covariates[t]])
        rows.append(feats)
    return np.asarray(rows), values[window:]


def dbn_forecast(
    model: DbnModel,
    history: TimeSeries,
    Xfuture: np.ndarray | None,
    horizon: int,
) -> TimeSeries:
    """Iterated one-step forecasts over a sliding window.

    Each step consumes the last ``window`` transformed values plus that
    day's covariate row, then appends its own prediction to the window.
    """
    window = model.params.window
    if len(history) < window:
        raise HistoryTooShort(f"history must hold at least {window} observations")
    n_cov = len(model.covariate_names)
    if n_cov:
        if Xfuture is None:
            raise DimensionMismatch("model uses covariates; future rows required")
        Xfuture = np.asarray(Xfuture, dtype=float)
        if Xfuture.shape[0] < horizon or Xfuture.shape[1] != n_cov:
            raise DimensionMismatch(
                f"future covariates must be {horizon}x{n_cov}, got {Xfuture.shape}"
            )
    buffer = list(transform_values(history.values, model.transform)[-window:])
    out = np.empty(horizon)
    for h in range(horizon):
        feats = np.asarray(buffer[-window:], dtype=float)
        if n_cov:
            feats = np.concatenate([feats, Xfuture[h]])
        pred = float(model.predict_transformed(feats.reshape(1, -1))[0])
        buffer.append(pred)
        out[h] = pred
    raw = inverse_transform_values(out, model.transform)
    return TimeSeries(history.end + timedelta(days=1), raw, history.name)
