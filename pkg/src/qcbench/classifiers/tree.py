"""Decision trees, a bagged random forest, and multinomial gradient boosting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..errors import DatasetError, HyperparameterError
from . import _tree_kernels as K
from .base import array, as_csr, masked_argmax, present_classes

CRITERIA = {"entropy": K.ENTROPY, "variance": K.VARIANCE}


def entropy(class_counts) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return 0.0
    return float(K.entropy_bits(counts, total))


def information_gain(parent, left, right) -> float:
    parent, left, right = (np.asarray(a, dtype=np.float64) for a in (parent, left, right))
    if not np.allclose(parent, left + right):
        raise ValueError("parent counts must equal left + right")
    n = parent.sum()
    if n <= 0:
        return 0.0
    return entropy(parent) - left.sum() / n * entropy(left) - right.sum() / n * entropy(right)


def _csr_arrays(X):
    X = as_csr(X)
    return X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Array-encoded binary tree; rows with ``x[feature] <= threshold`` go left.

    ``value`` holds weighted class counts (entropy trees) or the leaf mean
    (variance trees); leaves have ``left == right == -1``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    criterion: str = "entropy"
    n_node_samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, node: int) -> bool:
        return self.left[node] == -1

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if not self.is_leaf(node):
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return best

    def apply(self, X) -> np.ndarray:
        indptr, indices, data = _csr_arrays(X)
        return K.apply_tree(indptr, indices, data, self.feature, self.threshold, self.left, self.right)

    def leaf_votes(self) -> np.ndarray:
        return np.argmax(self.value, axis=1).astype(np.int64)

    def predict_matrix(self, X) -> np.ndarray:
        leaves = self.apply(X)
        if self.criterion == "entropy":
            return self.leaf_votes()[leaves]
        return self.value[leaves, 0]

    def to_payload(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist(), "criterion": self.criterion}

    @classmethod
    def from_payload(cls, d) -> "DecisionTree":
        return cls(array(d["feature"], np.int64), array(d["threshold"]), array(d["left"], np.int64),
                   array(d["right"], np.int64), array(d["value"]).reshape(len(d["feature"]), -1),
                   d["criterion"])


def build_tree(X, y, criterion: str = "entropy", n_classes: int | None = None, max_depth: int | None = None,
               min_samples_split: int = 2, max_features: int | None = None, seed: int = 0,
               sample_weight=None) -> DecisionTree:
    """Greedy best-first-found split search with midpoint thresholds.

    Ties in gain go to the lower feature index, then the lower threshold.
    ``max_features`` draws that many of the node's non-constant features.
    """
    if criterion not in CRITERIA:
        raise HyperparameterError(f"unknown criterion {criterion!r}")
    indptr, indices, data = _csr_arrays(X)
    n, p = indptr.size - 1, as_csr(X).shape[1]
    if n == 0:
        raise DatasetError("cannot grow a tree on empty data")
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if not np.any(w > 0):
        raise DatasetError("all sample weights are zero")
    if criterion == "entropy":
        y_class = np.asarray(y, dtype=np.int64)
        C = int(n_classes if n_classes is not None else y_class.max() + 1)
        y_reg = np.zeros(n)
    else:
        y_reg = np.asarray(y, dtype=np.float64)
        y_class = np.zeros(n, dtype=np.int64)
        C = 0
    out = K.grow_tree(indptr, indices, data, p, w, y_class, y_reg, C, CRITERIA[criterion],
                      -1 if max_depth is None else int(max_depth), int(min_samples_split),
                      0 if max_features is None else int(max_features), np.uint64(seed % 2**64))
    feature, threshold, left, right, value, n_samples = out
    return DecisionTree(feature, threshold, left, right, value, criterion, n_samples)


# --- random forest ------------------------------------------------------------


def _resolve_max_features(max_features, p: int) -> int:
    if max_features in (None, "all"):
        return 0
    if max_features == "sqrt":
        return max(1, int(math.floor(math.sqrt(p))))
    if max_features == "log2":
        return max(1, int(math.floor(math.log2(max(p, 1)))))
    mf = int(max_features)
    if mf < 1:
        raise HyperparameterError("max_features must be >= 1")
    return mf


@dataclass(frozen=True, eq=False)
class RandomForestModel:
    kind = "rf"
    trees: tuple
    n_classes: int
    n_features: int
    features_per_split: int
    bootstrap: bool
    seed: int

    def __post_init__(self):
        offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
        for t, tree in enumerate(self.trees):
            offsets[t + 1] = offsets[t] + tree.n_nodes
        cat = (lambda name: np.concatenate([getattr(t, name) for t in self.trees]))
        object.__setattr__(self, "_packed", (
            offsets, cat("feature"), cat("threshold"), cat("left"), cat("right"),
            np.concatenate([t.leaf_votes() for t in self.trees]),
        ))

    def votes(self, X) -> np.ndarray:
        indptr, indices, data = _csr_arrays(X)
        offsets, feature, threshold, left, right, vote = self._packed
        return K.forest_votes(indptr, indices, data, offsets, feature, threshold, left, right, vote,
                              self.n_classes)

    def predict_matrix(self, X) -> np.ndarray:
        return np.argmax(self.votes(X), axis=1).astype(np.int64)

    def to_payload(self) -> dict:
        return {"trees": [t.to_payload() for t in self.trees], "n_classes": self.n_classes,
                "n_features": self.n_features, "features_per_split": self.features_per_split,
                "bootstrap": self.bootstrap, "seed": self.seed}

    @classmethod
    def from_payload(cls, d) -> "RandomForestModel":
        return cls(tuple(DecisionTree.from_payload(t) for t in d["trees"]), int(d["n_classes"]),
                   int(d["n_features"]), int(d["features_per_split"]), bool(d["bootstrap"]), int(d["seed"]))


def fit_rf(dataset: Dataset, n_trees: int = 500, seed: int = 0, max_features="sqrt", max_depth=None,
           min_samples_split: int = 2, bootstrap: bool = True) -> RandomForestModel:
    """Bagged entropy trees; tree ``i`` draws everything from the stream (seed, i)."""
    if n_trees < 1:
        raise HyperparameterError("n_trees must be >= 1")
    if len(dataset) == 0:
        raise DatasetError("empty dataset")
    n, p = dataset.X.shape
    mf = _resolve_max_features(max_features, p)
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng([seed, i])
        if bootstrap:
            w = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
        else:
            w = np.ones(n)
        tree_seed = int(rng.integers(0, 2**63))
        trees.append(build_tree(dataset.X, dataset.labels, "entropy", dataset.n_classes, max_depth,
                                min_samples_split, mf or None, tree_seed, w))
    return RandomForestModel(tuple(trees), dataset.n_classes, p, mf, bool(bootstrap), int(seed))


# --- gradient boosting --------------------------------------------------------


def _softmax(F):
    top = np.max(F, axis=1, keepdims=True)
    E = np.exp(F - top)
    return E / E.sum(axis=1, keepdims=True)


def multinomial_deviance(F, labels) -> float:
    """Mean negative log-likelihood of the softmax of raw scores ``F``."""
    top = np.max(F, axis=1, keepdims=True)
    logz = top[:, 0] + np.log(np.exp(F - top).sum(axis=1))
    return float(np.mean(logz - F[np.arange(len(labels)), labels]))


@dataclass(frozen=True, eq=False)
class GradientBoostingModel:
    kind = "gbc"
    initial_scores: np.ndarray
    stages: tuple  # stages[s][c] is a DecisionTree or None for absent classes
    learning_rate: float
    n_features: int
    present: np.ndarray
    train_deviance: tuple = ()

    def raw_scores(self, X) -> np.ndarray:
        X = as_csr(X)
        F = np.tile(self.initial_scores, (X.shape[0], 1))
        for stage in self.stages:
            for c, tree in enumerate(stage):
                if tree is not None:
                    F[:, c] += self.learning_rate * tree.predict_matrix(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.raw_scores(X))

    def predict_matrix(self, X) -> np.ndarray:
        return masked_argmax(self.raw_scores(X), self.present)

    def to_payload(self) -> dict:
        return {"initial_scores": self.initial_scores.tolist(), "learning_rate": self.learning_rate,
                "n_features": self.n_features, "present": self.present.tolist(),
                "train_deviance": list(self.train_deviance),
                "stages": [[None if t is None else t.to_payload() for t in st] for st in self.stages]}

    @classmethod
    def from_payload(cls, d) -> "GradientBoostingModel":
        stages = tuple(tuple(None if t is None else DecisionTree.from_payload(t) for t in st)
                       for st in d["stages"])
        return cls(array(d["initial_scores"]), stages, float(d["learning_rate"]), int(d["n_features"]),
                   array(d["present"], bool), tuple(d.get("train_deviance", ())))


def fit_gbc(dataset: Dataset, n_stages: int = 100, learning_rate: float = 0.1, max_depth: int = 3,
            seed: int = 0) -> GradientBoostingModel:
    """Stagewise multinomial-deviance boosting with one regression tree per class.

    Trees are grown on the residuals ``onehot - softmax(F)`` by variance
    reduction; each leaf then takes the Newton step
    ``sum(r) / sum(|r| (1 - |r|))``.  ``seed`` is accepted for interface
    symmetry; the procedure has no random component.
    """
    if n_stages < 0 or learning_rate < 0 or max_depth < 1:
        raise HyperparameterError("need n_stages >= 0, learning_rate >= 0, max_depth >= 1")
    if dataset.n_classes < 2:
        raise DatasetError("gradient boosting needs at least 2 classes")
    if len(dataset) == 0:
        raise DatasetError("empty dataset")
    X, y, C = dataset.X, dataset.labels, dataset.n_classes
    n = len(y)
    present = present_classes(y, C)
    prior = np.bincount(y, minlength=C) / n
    with np.errstate(divide="ignore"):
        init = np.log(prior)
    F = np.tile(init, (n, 1))
    onehot = np.zeros((n, C))
    onehot[np.arange(n), y] = 1.0
    indptr, indices, data = _csr_arrays(X)
    stages = []
    deviance = []
    for _ in range(n_stages):
        P = _softmax(F)
        stage = []
        for c in range(C):
            if not present[c]:
                stage.append(None)
                continue
            r = onehot[:, c] - P[:, c]
            tree = build_tree(X, r, "variance", max_depth=max_depth)
            leaves = K.apply_tree(indptr, indices, data, tree.feature, tree.threshold, tree.left, tree.right)
            num = np.bincount(leaves, weights=r, minlength=tree.n_nodes)
            den = np.bincount(leaves, weights=np.abs(r) * (1.0 - np.abs(r)), minlength=tree.n_nodes)
            gamma = np.zeros(tree.n_nodes)
            ok = np.abs(den) >= 1e-150
            gamma[ok] = num[ok] / den[ok]
            tree = DecisionTree(tree.feature, tree.threshold, tree.left, tree.right, gamma[:, None],
                                "variance", tree.n_node_samples)
            stage.append(tree)
            F[:, c] += learning_rate * gamma[leaves]
        stages.append(tuple(stage))
        deviance.append(multinomial_deviance(F, y))
    return GradientBoostingModel(init, tuple(stages), float(learning_rate), X.shape[1], present,
                                 tuple(deviance))
