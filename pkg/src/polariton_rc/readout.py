"""Multinomial logistic-regression output layer.

The objective is mean cross-entropy + (l2/2)*||W||^2 (bias row excluded) on
standardized features, minimized from zero initialization by either
fixed-step full-batch gradient descent or L-BFGS. Both stop on the
gradient infinity-norm. The weight matrix carries the bias in row 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import DataError, DivergenceError, FormatError, ParameterError

N_CLASSES = 10


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray  # (samples, D)
    labels: np.ndarray  # (samples,)

    def __post_init__(self):
        if self.X.ndim != 2 or len(self.X) != len(self.labels):
            raise DataError(f"features {self.X.shape} do not match {len(self.labels)} labels")

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def rows(self, index) -> "FeatureMatrix":
        return FeatureMatrix(self.X[index], self.labels[index])


@dataclass(frozen=True)
class ReadoutModel:
    weights: np.ndarray  # (D + 1, 10)
    feature_means: np.ndarray
    feature_stds: np.ndarray
    iterations: int = 0
    final_loss: float = float("nan")
    grad_norm: float = float("nan")

    @property
    def n_features(self) -> int:
        return len(self.feature_means)


def standardize_fit(X) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population std; constant columns get std 1."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ParameterError("standardization needs at least two training rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0] = 1.0
    return means, stds


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _with_bias(Xs: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((len(Xs), 1)), Xs])


def loss_and_grad(weights, Xb, onehot, l2: float) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy + (l2/2)*||W[1:]||^2 and its gradient.

    Returns (total loss, gradient, data term alone).
    """
    with np.errstate(over="ignore", invalid="ignore"):
        z = Xb @ weights
        z = z - z.max(axis=1, keepdims=True)
        logsum = np.log(np.exp(z).sum(axis=1))
        data = float(np.mean(logsum - (z * onehot).sum(axis=1)))
        p = np.exp(z - logsum[:, None])
        grad = Xb.T @ (p - onehot) / len(Xb)
        grad[1:] += l2 * weights[1:]
        penalty = 0.5 * l2 * float(np.sum(weights[1:] ** 2))
    return data + penalty, grad, data


def train_logreg(
    features: FeatureMatrix,
    l2: float = 1e-4,
    lr: float = 0.5,
    max_iters: int = 5000,
    grad_tol: float = 1e-6,
    standardize: bool = True,
    solver: str = "lbfgs",
) -> ReadoutModel:
    """Fit the readout. ``lr`` is used by ``solver="gd"`` only."""
    X = np.asarray(features.X, dtype=np.float64)
    y = np.asarray(features.labels)
    if len(X) == 0:
        raise ParameterError("empty training set")
    if l2 < 0 or lr <= 0:
        raise ParameterError("need l2 >= 0 and lr > 0")
    if solver not in ("gd", "lbfgs"):
        raise ParameterError(f"unknown solver {solver!r}")
    if standardize:
        means, stds = standardize_fit(X)
    else:
        means, stds = np.zeros(X.shape[1]), np.ones(X.shape[1])
    Xb = _with_bias((X - means) / stds)
    onehot = np.eye(N_CLASSES)[y]
    W = np.zeros((Xb.shape[1], N_CLASSES))

    if solver == "lbfgs" and max_iters > 0:
        def fun(w):
            loss, grad, _ = loss_and_grad(w.reshape(W.shape), Xb, onehot, l2)
            if not np.isfinite(loss):
                raise DivergenceError("non-finite loss during L-BFGS")
            return loss, grad.ravel()

        res = minimize(
            fun, W.ravel(), jac=True, method="L-BFGS-B",
            options={"maxiter": max_iters, "gtol": grad_tol, "ftol": 0.0, "maxcor": 20},
        )
        W = res.x.reshape(W.shape)
        loss, grad, _ = loss_and_grad(W, Xb, onehot, l2)
        return ReadoutModel(W, means, stds, iterations=int(res.nit), final_loss=loss,
                            grad_norm=float(np.abs(grad).max()))

    it = 0
    while True:
        loss, grad, _ = loss_and_grad(W, Xb, onehot, l2)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became {loss} at iteration {it}; lower the learning rate")
        gnorm = float(np.abs(grad).max())
        if gnorm < grad_tol or it >= max_iters:
            break
        W -= lr * grad
        it += 1
    return ReadoutModel(W, means, stds, iterations=it, final_loss=loss, grad_norm=gnorm)


def training_loss(model: ReadoutModel, features: FeatureMatrix) -> float:
    """Mean cross-entropy of ``model`` on ``features``, without the penalty."""
    Xb = _with_bias((features.X - model.feature_means) / model.feature_stds)
    _, _, data = loss_and_grad(model.weights, Xb, np.eye(N_CLASSES)[features.labels], 0.0)
    return data


def scores(model: ReadoutModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ParameterError(f"model expects {model.n_features} features, got {X.shape[1]}")
    return _with_bias((X - model.feature_means) / model.feature_stds) @ model.weights


def predict(model: ReadoutModel, X) -> np.ndarray:
    # np.argmax returns the first maximum: ties go to the lowest class id
    return np.argmax(scores(model, X), axis=1)


def accuracy(pred, labels) -> float:
    pred, labels = np.asarray(pred), np.asarray(labels)
    if pred.shape != labels.shape:
        raise ParameterError("prediction and label counts differ")
    if len(labels) == 0:
        raise ParameterError("accuracy of an empty set is undefined")
    return float(np.mean(pred == labels))


def confusion(pred, labels) -> np.ndarray:
    """10x10 counts, rows = true class, columns = predicted class."""
    out = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(out, (np.asarray(labels), np.asarray(pred)), 1)
    return out


def concat_ensemble(feature_sets) -> FeatureMatrix:
    """Stack aligned feature matrices side by side."""
    feature_sets = list(feature_sets)
    if not feature_sets:
        raise ParameterError("need at least one feature set")
    labels = feature_sets[0].labels
    for fs in feature_sets[1:]:
        if len(fs.labels) != len(labels) or not np.array_equal(fs.labels, labels):
            raise DataError("feature sets disagree on row labels")
    return FeatureMatrix(np.hstack([fs.X for fs in feature_sets]), labels)


def save_model(path, model: ReadoutModel) -> None:
    rows = [
        f"D={model.n_features}",
        "means," + ",".join(repr(float(v)) for v in model.feature_means),
        "stds," + ",".join(repr(float(v)) for v in model.feature_stds),
    ]
    rows += [",".join(repr(float(v)) for v in r) for r in model.weights]
    Path(path).write_text("\n".join(rows) + "\n")


def load_model(path) -> ReadoutModel:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("D="):
        raise FormatError(f"{path}: missing D= header")
    D = int(lines[0][2:])
    means = np.array([float(v) for v in lines[1].split(",")[1:]])
    stds = np.array([float(v) for v in lines[2].split(",")[1:]])
    weights = np.array([[float(v) for v in ln.split(",")] for ln in lines[3:] if ln])
    if means.shape != (D,) or stds.shape != (D,) or weights.shape != (D + 1, N_CLASSES):
        raise FormatError(f"{path}: inconsistent shapes for D={D}")
    return ReadoutModel(weights, means, stds)
