"""Multinomial Naive Bayes, one-vs-rest hinge SGD, and brute-force k-NN."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from ..dataset import Dataset
from ..errors import DatasetError, HyperparameterError
from .base import array, as_csr, csr_from_payload, csr_payload, masked_argmax, present_classes


# --- Naive Bayes ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MultinomialNBModel:
    kind = "nbc"
    alpha: float
    class_log_prior: np.ndarray
    feature_log_prob: np.ndarray

    @property
    def n_features(self) -> int:
        return self.feature_log_prob.shape[1]

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = as_csr(X)
        return np.asarray(X @ self.feature_log_prob.T) + self.class_log_prior[None, :]

    def predict_log_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        top = jll.max(axis=1, keepdims=True)
        return jll - (top + np.log(np.exp(jll - top).sum(axis=1, keepdims=True)))

    def predict_matrix(self, X) -> np.ndarray:
        # absent classes carry a -inf prior and can never win
        return np.argmax(self.joint_log_likelihood(X), axis=1).astype(np.int64)

    def to_payload(self) -> dict:
        return {"alpha": self.alpha, "class_log_prior": self.class_log_prior.tolist(),
                "feature_log_prob": self.feature_log_prob.tolist()}

    @classmethod
    def from_payload(cls, d) -> "MultinomialNBModel":
        return cls(float(d["alpha"]), array(d["class_log_prior"]), array(d["feature_log_prob"]))


def fit_nbc(dataset: Dataset, alpha: float = 0.1) -> MultinomialNBModel:
    """Smoothed multinomial NB; TF-IDF weights act as fractional counts."""
    if not alpha > 0:
        raise HyperparameterError("alpha must be > 0")
    if len(dataset) == 0:
        raise DatasetError("empty dataset")
    X = dataset.X
    if X.data.size and X.data.min() < 0:
        raise DatasetError("multinomial NB needs nonnegative feature values")
    C, V = dataset.n_classes, dataset.n_features
    # per-class feature totals in one pass over the stored entries
    entry_class = np.repeat(dataset.labels, np.diff(X.indptr))
    counts = np.bincount(entry_class * V + X.indices, weights=X.data, minlength=C * V).reshape(C, V)
    smoothed = counts + alpha
    feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    class_count = np.bincount(dataset.labels, minlength=C).astype(np.float64)
    with np.errstate(divide="ignore"):
        class_log_prior = np.log(class_count) - np.log(class_count.sum())
    return MultinomialNBModel(float(alpha), class_log_prior, feature_log_prob)


# --- SGD ----------------------------------------------------------------------


@numba.njit(cache=True)
def _sgd_epoch(indptr, indices, data, y, order, v, state, eta0, lam):
    # state = [scale, bias, t]; the weight vector is scale * v
    scale, b, t = state[0], state[1], state[2]
    for s in range(order.size):
        i = order[s]
        eta = eta0 / (1.0 + eta0 * lam * t)
        dot = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            dot += v[indices[k]] * data[k]
        margin = y[i] * (scale * dot + b)
        shrink = 1.0 - eta * lam
        if shrink <= 0.0:
            v[:] = 0.0
            scale = 1.0
        else:
            scale *= shrink
        if margin < 1.0:
            coef = eta * y[i] / scale
            for k in range(indptr[i], indptr[i + 1]):
                v[indices[k]] += coef * data[k]
            b += eta * y[i]
        if scale < 1e-9:
            v *= scale
            scale = 1.0
        t += 1.0
    state[0], state[1], state[2] = scale, b, t


@dataclass(frozen=True, eq=False)
class SGDLinearModel:
    kind = "sgd"
    weights: np.ndarray
    bias: np.ndarray
    present: np.ndarray
    config: dict
    epoch_objective: tuple = ()

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(as_csr(X) @ self.weights.T) + self.bias[None, :]

    def predict_matrix(self, X) -> np.ndarray:
        return masked_argmax(self.decision_function(X), self.present)

    def to_payload(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist(),
                "present": self.present.tolist(), "config": dict(self.config),
                "epoch_objective": list(self.epoch_objective)}

    @classmethod
    def from_payload(cls, d) -> "SGDLinearModel":
        return cls(array(d["weights"]), array(d["bias"]), array(d["present"], bool), dict(d["config"]),
                   tuple(d.get("epoch_objective", ())))


def hinge_objective(X, y_pm, w, b, lam) -> float:
    margins = y_pm * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.maximum(0.0, 1.0 - margins).mean())


def fit_sgd(dataset: Dataset, seed: int = 0, eta0: float = 0.1, l2_lambda: float = 1e-4,
            epochs: int = 20) -> SGDLinearModel:
    """One-vs-rest linear SVM objective minimized by plain SGD.

    Each step draws the next example of a per-epoch seeded permutation;
    the step size decays as ``eta0 / (1 + eta0 * l2_lambda * t)``.
    """
    if epochs < 0 or not eta0 > 0 or l2_lambda < 0:
        raise HyperparameterError("need epochs >= 0, eta0 > 0, l2_lambda >= 0")
    if dataset.n_classes < 2:
        raise DatasetError("SGD needs at least 2 classes")
    if len(dataset) == 0:
        raise DatasetError("empty dataset")
    X = dataset.X
    n, p = X.shape
    C = dataset.n_classes
    rng = np.random.default_rng(seed)
    orders = [rng.permutation(n).astype(np.int64) for _ in range(epochs)]
    W = np.zeros((C, p))
    bias = np.zeros(C)
    objective = np.zeros(epochs)
    indptr = X.indptr.astype(np.int64)
    indices = X.indices.astype(np.int64)
    for c in range(C):
        y = np.where(dataset.labels == c, 1.0, -1.0)
        v = np.zeros(p)
        state = np.array([1.0, 0.0, 0.0])
        for e in range(epochs):
            _sgd_epoch(indptr, indices, X.data, y, orders[e], v, state, eta0, l2_lambda)
            objective[e] += hinge_objective(X, y, state[0] * v, state[1], l2_lambda)
        W[c] = state[0] * v
        bias[c] = state[1]
    config = {"eta0": eta0, "l2_lambda": l2_lambda, "epochs": epochs, "seed": seed, "loss": "hinge"}
    return SGDLinearModel(W, bias, present_classes(dataset.labels, C), config, tuple(objective.tolist()))


# --- k-NN -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KNNModel:
    kind = "knn"
    stored_rows: sp.csr_matrix
    stored_labels: np.ndarray
    k: int
    n_classes: int

    @property
    def n_features(self) -> int:
        return self.stored_rows.shape[1]

    def squared_distances(self, X) -> np.ndarray:
        X = as_csr(X)
        xx = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        ss = np.asarray(self.stored_rows.multiply(self.stored_rows).sum(axis=1)).ravel()
        cross = np.asarray((X @ self.stored_rows.T).todense())
        return np.maximum(xx[:, None] + ss[None, :] - 2.0 * cross, 0.0)

    def predict_matrix(self, X) -> np.ndarray:
        D = self.squared_distances(X)
        out = np.empty(D.shape[0], dtype=np.int64)
        for q in range(D.shape[0]):
            # stable sort: equal distances keep the lower stored-row index first
            nearest = np.argsort(D[q], kind="stable")[: self.k]
            labs = self.stored_labels[nearest]
            votes = np.bincount(labs, minlength=self.n_classes)
            tied = votes == votes.max()
            # vote tie: class of the nearest neighbour among the tied classes
            out[q] = labs[np.flatnonzero(tied[labs])[0]]
        return out

    def to_payload(self) -> dict:
        return {"stored_rows": csr_payload(self.stored_rows), "stored_labels": self.stored_labels.tolist(),
                "k": self.k, "n_classes": self.n_classes}

    @classmethod
    def from_payload(cls, d) -> "KNNModel":
        return cls(csr_from_payload(d["stored_rows"]), array(d["stored_labels"], np.int64), int(d["k"]),
                   int(d["n_classes"]))


def fit_knn(dataset: Dataset, k: int = 13) -> KNNModel:
    if k < 1:
        raise HyperparameterError("k must be >= 1")
    if k > len(dataset):
        raise DatasetError(f"k={k} exceeds the {len(dataset)} stored rows")
    return KNNModel(dataset.X.copy(), dataset.labels.copy(), int(k), dataset.n_classes)
