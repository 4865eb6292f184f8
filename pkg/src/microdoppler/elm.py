"""Extreme learning machine with ReLU hidden activation.

Random fixed hidden layer, closed-form ridge least-squares output weights.
Features are z-scored with training-set statistics stored on the model;
zero-variance feature columns normalize to 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "ElmConfig",
    "ElmModel",
    "elm_train",
    "elm_predict",
    "evaluate",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "elm-v1"


@dataclass(frozen=True)
class ElmConfig:
    hidden_units: int = 200
    ridge_lambda: float = 1e-6
    weight_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if not self.weight_scale > 0:
            raise ValueError("weight_scale must be > 0")


@dataclass(frozen=True)
class ElmModel:
    input_weights: np.ndarray  # hidden_units x n_features
    biases: np.ndarray  # hidden_units
    output_weights: np.ndarray  # hidden_units x n_classes
    label_map: tuple  # class labels in score-column order
    feature_means: np.ndarray
    feature_stds: np.ndarray  # zero-variance columns recorded as 0 here
    config: ElmConfig

    @property
    def n_features(self) -> int:
        return self.input_weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.output_weights.shape[1]


def _normalize(X: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    safe = np.where(stds > 0, stds, 1.0)
    return (X - means) / safe


def _hidden(X_norm: np.ndarray, model_w: np.ndarray, model_b: np.ndarray) -> np.ndarray:
    return np.maximum(X_norm @ model_w.T + model_b, 0.0)


def elm_train(X, y, cfg: ElmConfig | None = None) -> ElmModel:
    """Train output weights in closed form on ReLU random features.

    With ``ridge_lambda > 0`` the normal equations ``(H'H + lambda I)`` are
    solved by Cholesky factorization; with ``ridge_lambda = 0`` the
    minimum-norm least-squares solution is used, which interpolates the
    training set whenever the hidden feature matrix has full row rank.
    """
    if cfg is None:
        cfg = ElmConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be n x d with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    labels = tuple(np.unique(y).tolist())
    if X.shape[0] < len(labels):
        raise ValueError("need at least one sample per class")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    X_norm = _normalize(X, means, stds)

    rng = np.random.default_rng(cfg.rng_seed)
    W = rng.uniform(-cfg.weight_scale, cfg.weight_scale, size=(cfg.hidden_units, X.shape[1]))
    b = rng.uniform(-cfg.weight_scale, cfg.weight_scale, size=cfg.hidden_units)
    H = _hidden(X_norm, W, b)

    targets = np.zeros((X.shape[0], len(labels)))
    label_index = {lab: i for i, lab in enumerate(labels)}
    for row, lab in enumerate(y.tolist()):
        targets[row, label_index[lab]] = 1.0

    if cfg.ridge_lambda > 0:
        gram = H.T @ H + cfg.ridge_lambda * np.eye(cfg.hidden_units)
        try:
            beta = cho_solve(cho_factor(gram), H.T @ targets)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular hidden matrix; increase ridge_lambda") from exc
    else:
        beta, *_ = np.linalg.lstsq(H, targets, rcond=None)
    if not np.all(np.isfinite(beta)):
        raise ValueError("singular hidden matrix; increase ridge_lambda")

    return ElmModel(
        input_weights=W,
        biases=b,
        output_weights=beta,
        label_map=labels,
        feature_means=means,
        feature_stds=stds,
        config=cfg,
    )


def elm_predict(model: ElmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and raw class scores for a feature matrix.

    Ties in the score argmax resolve to the lowest label index.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} feature columns, got {X.shape}")
    X_norm = _normalize(X, model.feature_means, model.feature_stds)
    scores = _hidden(X_norm, model.input_weights, model.biases) @ model.output_weights
    labels = np.array([model.label_map[i] for i in np.argmax(scores, axis=1)])
    return labels, scores


def evaluate(model: ElmModel, X, y) -> dict:
    """Accuracy (%), per-class recall, and confusion matrix on a test set.

    Confusion rows are true classes, columns predicted, both in
    ``label_map`` order; row sums equal per-class support.
    """
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("empty test set")
    predicted, _ = elm_predict(model, X)
    index = {lab: i for i, lab in enumerate(model.label_map)}
    n = len(model.label_map)
    confusion = np.zeros((n, n), dtype=np.int64)
    for true, pred in zip(y.tolist(), predicted.tolist()):
        if true not in index:
            raise ValueError(f"label {true!r} not seen at training time")
        confusion[index[true], index[pred]] += 1
    support = confusion.sum(axis=1)
    recall = np.divide(np.diag(confusion), support, out=np.zeros(n), where=support > 0)
    return {
        "accuracy_pct": 100.0 * float(np.trace(confusion)) / float(y.size),
        "per_class_recall": {str(lab): float(r) for lab, r in zip(model.label_map, recall)},
        "confusion": confusion.tolist(),
        "labels": [str(lab) for lab in model.label_map],
        "n_samples": int(y.size),
    }


def save_model(model: ElmModel, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "input_weights": model.input_weights.tolist(),
        "biases": model.biases.tolist(),
        "output_weights": model.output_weights.tolist(),
        "label_map": list(model.label_map),
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "config": {
            "hidden_units": model.config.hidden_units,
            "ridge_lambda": model.config.ridge_lambda,
            "weight_scale": model.config.weight_scale,
            "rng_seed": model.config.rng_seed,
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ElmModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format: {doc.get('format')!r}")
    return ElmModel(
        input_weights=np.array(doc["input_weights"], dtype=np.float64),
        biases=np.array(doc["biases"], dtype=np.float64),
        output_weights=np.array(doc["output_weights"], dtype=np.float64),
        label_map=tuple(doc["label_map"]),
        feature_means=np.array(doc["feature_means"], dtype=np.float64),
        feature_stds=np.array(doc["feature_stds"], dtype=np.float64),
        config=ElmConfig(**doc["config"]),
    )
