"""Gradient-boosted regression trees under squared-error loss.

Each round fits an exact-greedy variance-reduction tree to the negative
gradient (the residual, for squared error) and adds it with constant
shrinkage ``eta``. Datasets here are a few thousand rows at most, so
splits scan every distinct threshold; no histogramming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ColumnMismatch, DegenerateInput, EmptyData, LengthMismatch

__all__ = [
    "GbmParams",
    "RegressionTree",
    "GbmEnsemble",
    "negative_gradient",
    "fit_tree",
    "fit_gbm",
    "predict_gbm",
]


@dataclass(frozen=True)
class GbmParams:
    max_depth: int = 3
    eta: float = 0.1
    n_rounds: int = 100
    min_samples_leaf: int = 1
    early_stopping_rounds: int | None = None

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be positive")
        if self.early_stopping_rounds is not None and self.early_stopping_rounds < 1:
            raise ValueError("early_stopping_rounds must be positive")


@dataclass
class RegressionTree:
    """Binary tree in flat arrays; feature -1 marks a leaf node."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def _add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if row[self.feature[node]] < self.threshold[node] else self.right[node]
            out[i] = self.value[node]
        return out

    def to_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": [float(t) for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
            "value": [float(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionTree":
        return cls(
            feature=[int(v) for v in doc["feature"]],
            threshold=[float(v) for v in doc["threshold"]],
            left=[int(v) for v in doc["left"]],
            right=[int(v) for v in doc["right"]],
            value=[float(v) for v in doc["value"]],
        )


def negative_gradient(y, f) -> np.ndarray:
    """-dL/df for squared-error loss L = 0.5*(y-f)^2, i.e. the residual."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise LengthMismatch(f"lengths differ: {y.shape} vs {f.shape}")
    return y - f


def _best_split(X: np.ndarray, z: np.ndarray, min_leaf: int) -> tuple[int, float, float] | None:
    """Scan all features for the max variance-reduction split.

    Ties resolve to the lowest feature index, then lowest threshold,
    because candidates are visited in that order and only strictly
    better gains replace the incumbent.
    """
    n = len(z)
    total_sum = z.sum()
    total_sq = float(z @ z)
    parent_sse = total_sq - total_sum**2 / n
    best: tuple[int, float, float] | None = None
    best_gain = 0.0
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        zs = z[order]
        csum = np.cumsum(zs)
        csq = np.cumsum(zs * zs)
        for i in range(min_leaf, n - min_leaf + 1):
            if i == n or xs[i - 1] == xs[i]:
                continue
            left_sse = csq[i - 1] - csum[i - 1] ** 2 / i
            right_sum = total_sum - csum[i - 1]
            right_sse = (total_sq - csq[i - 1]) - right_sum**2 / (n - i)
            gain = parent_sse - left_sse - right_sse
            if gain > best_gain:
                best_gain = gain
                best = (j, float((xs[i - 1] + xs[i]) / 2.0), gain)
    return best


def fit_tree(X, z, params: GbmParams) -> RegressionTree:
    """Greedy variance-reduction regression tree; leaves hold mean(z)."""
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)
    if X.ndim != 2 or len(X) != len(z):
        raise LengthMismatch("X rows and z must align")
    if len(z) < 2 * params.min_samples_leaf:
        raise ValueError(f"need at least {2 * params.min_samples_leaf} rows to fit a tree")
    if np.ptp(z) > 0.0 and np.all(X == X[0]):
        raise DegenerateInput("all feature rows identical; targets cannot be separated")

    tree = RegressionTree()

    def build(rows: np.ndarray, depth: int) -> int:
        node = tree._add_node()
        zsub = z[rows]
        tree.value[node] = float(zsub.mean())
        if depth >= params.max_depth or len(rows) < 2 * params.min_samples_leaf or np.ptp(zsub) == 0.0:
            return node
        split = _best_split(X[rows], zsub, params.min_samples_leaf)
        if split is None:
            return node
        feature, threshold, _ = split
        mask = X[rows, feature] < threshold
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        tree.left[node] = build(rows[mask], depth + 1)
        tree.right[node] = build(rows[~mask], depth + 1)
        return node

    build(np.arange(len(z)), 0)
    return tree


@dataclass
class GbmEnsemble:
    """base_score + eta * sum of tree outputs, trees in training order."""

    base_score: float
    eta: float
    trees: list[RegressionTree]
    n_features: int
    train_rmse: list[float] = field(default_factory=list)
    validation_loss: list[float] = field(default_factory=list)
    best_round: int | None = None

    def predict(self, X) -> np.ndarray:
        return predict_gbm(self, X)

    def to_dict(self) -> dict:
        return {
            "format": "eventcast-gbm",
            "version": 1,
            "base_score": float(self.base_score),
            "eta": float(self.eta),
            "n_features": int(self.n_features),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GbmEnsemble":
        if doc.get("format") != "eventcast-gbm":
            raise ValueError("not a gbm model document")
        return cls(
            base_score=float(doc["base_score"]),
            eta=float(doc["eta"]),
            trees=[RegressionTree.from_dict(t) for t in doc["trees"]],
            n_features=int(doc["n_features"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def fit_gbm(X, y, params: GbmParams, validation: tuple | None = None) -> GbmEnsemble:
    """Boost trees on residuals; optionally early-stop on a validation set.

    With early stopping the returned ensemble is truncated to the best
    validation round, so its validation loss is the best seen.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyData("no training rows")
    if len(y) < 10:
        raise EmptyData(f"need at least 10 training rows, got {len(y)}")
    if X.ndim != 2 or len(X) != len(y):
        raise LengthMismatch("X rows and y must align")

    base = float(y.mean())
    model = GbmEnsemble(base_score=base, eta=params.eta, trees=[], n_features=X.shape[1])
    f = np.full(len(y), base)
    if validation is not None:
        Xv = np.asarray(validation[0], dtype=float)
        yv = np.asarray(validation[1], dtype=float)
        fv = np.full(len(yv), base)
        best_loss = float(np.mean((yv - fv) ** 2))
        model.validation_loss.append(best_loss)
        best_round = -1  # -1 means the bare base score
    for r in range(params.n_rounds):
        z = negative_gradient(y, f)
        if np.ptp(z) == 0.0 and np.all(z == 0.0):
            break
        tree = fit_tree(X, z, params)
        f = f + params.eta * tree.predict(X)
        model.trees.append(tree)
        model.train_rmse.append(float(np.sqrt(np.mean((y - f) ** 2))))
        if validation is not None:
            fv = fv + params.eta * tree.predict(Xv)
            loss = float(np.mean((yv - fv) ** 2))
            model.validation_loss.append(loss)
            if loss < best_loss:
                best_loss = loss
                best_round = r
            elif params.early_stopping_rounds is not None and r - best_round >= params.early_stopping_rounds:
                break
    if validation is not None:
        model.best_round = best_round
        model.trees = model.trees[: best_round + 1]
    return model


def predict_gbm(model: GbmEnsemble, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ColumnMismatch(
            f"expected {model.n_features} feature columns, got {X.shape[1] if X.ndim == 2 else 'non-matrix'}"
        )
    out = np.full(len(X), model.base_score)
    for tree in model.trees:
        out += model.eta * tree.predict(X)
    return out
