"""RBF-kernel SVM trained by SMO, combined one-vs-one."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from ..dataset import Dataset
from ..errors import DatasetError, HyperparameterError
from ._smo_kernels import smo_train
from .base import array, as_csr, csr_from_payload, csr_payload, present_classes


def kernel_rbf(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two SparseVectors."""
    if not gamma > 0:
        raise HyperparameterError("gamma must be > 0")
    common, ix, iy = np.intersect1d(x.indices, y.indices, assume_unique=True, return_indices=True)
    d2 = float(x.values @ x.values + y.values @ y.values - 2.0 * (x.values[ix] @ y.values[iy]))
    return math.exp(-gamma * max(d2, 0.0))


def rbf_matrix(A, B, gamma: float) -> np.ndarray:
    A, B = as_csr(A), as_csr(B)
    aa = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    bb = np.asarray(B.multiply(B).sum(axis=1)).ravel()
    cross = np.asarray((A @ B.T).todense())
    return np.exp(-gamma * np.maximum(aa[:, None] + bb[None, :] - 2.0 * cross, 0.0))


def scale_gamma(X) -> float:
    """1 / (p * Var) over every entry of X, implicit zeros included."""
    X = as_csr(X)
    n, p = X.shape
    total = n * p
    if total == 0:
        return 1.0
    mean = X.data.sum() / total
    var = (X.data @ X.data) / total - mean * mean
    return 1.0 / (p * var) if var > 0 else 1.0


@dataclass(frozen=True, eq=False)
class BinarySVM:
    """Support rows with dual coefficients alpha_i * y_i and intercept b."""

    support_rows: sp.csr_matrix
    dual_coef: np.ndarray
    intercept: float
    C: float
    gamma: float
    support_index: np.ndarray | None = None  # positions in the training rows
    converged: bool = True

    @property
    def n_support(self) -> int:
        return self.dual_coef.size

    def decision_function(self, X) -> np.ndarray:
        if self.n_support == 0:
            return np.full(as_csr(X).shape[0], self.intercept)
        return rbf_matrix(X, self.support_rows, self.gamma) @ self.dual_coef + self.intercept

    def predict_sign(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) > 0, 1, -1)


def train_smo(X, y, C: float = 1.0, gamma: float = 1.0, tol: float = 1e-3, max_passes: int = 2,
              eps: float = 1e-8, cache_mb: float = 256.0, seed: int = 0, max_steps: int | None = None) -> BinarySVM:
    """Solve the soft-margin dual for labels y in {-1, +1}."""
    X = as_csr(X)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DatasetError("binary labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise DatasetError("SMO needs both labels present")
    if not C > 0 or not gamma > 0 or not tol > 0:
        raise HyperparameterError("C, gamma and tol must be > 0")
    n = y.size
    cache_rows = int(cache_mb * 2**20 // (8 * n))
    if max_steps is None:
        max_steps = 1000 * n + 100_000
    alpha, b, converged, _ = smo_train(X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data,
                                       X.shape[1], y, float(C), float(gamma), float(tol), float(eps),
                                       int(max_passes), cache_rows, np.uint64(seed % 2**64), int(max_steps))
    sv = np.flatnonzero(alpha > 0)
    return BinarySVM(X[sv], alpha[sv] * y[sv], float(b), float(C), float(gamma), sv, bool(converged))


def kkt_violations(machine: BinarySVM, X, y, alpha, tol: float) -> int:
    """Count training points violating the KKT conditions by more than tol."""
    r = (machine.decision_function(X) - y) * y
    C = machine.C
    return int(np.sum(((r < -tol) & (alpha < C)) | ((r > tol) & (alpha > 0))))


@dataclass(frozen=True, eq=False)
class OvOSVM:
    kind = "svm"
    pairs: tuple  # (i, j) with i < j; class i is the +1 side
    support_rows: sp.csr_matrix  # union of support rows of all machines
    machine_index: tuple  # per machine, row positions within support_rows
    machine_coef: tuple
    machine_intercept: np.ndarray
    present: np.ndarray
    n_classes: int
    n_features: int
    gamma: float
    C: float

    def pairwise_decisions(self, X) -> np.ndarray:
        X = as_csr(X)
        out = np.zeros((X.shape[0], len(self.pairs)))
        if not self.pairs:
            return out
        Kx = rbf_matrix(X, self.support_rows, self.gamma) if self.support_rows.shape[0] else None
        for m in range(len(self.pairs)):
            idx = self.machine_index[m]
            dec = np.full(X.shape[0], self.machine_intercept[m])
            if idx.size:
                dec = Kx[:, idx] @ self.machine_coef[m] + self.machine_intercept[m]
            out[:, m] = dec
        return out

    def predict_matrix(self, X) -> np.ndarray:
        X = as_csr(X)
        n = X.shape[0]
        if not self.pairs:
            return np.full(n, int(np.flatnonzero(self.present)[0]), dtype=np.int64)
        D = self.pairwise_decisions(X)
        votes = np.zeros((n, self.n_classes), dtype=np.int64)
        signed = np.zeros((n, self.n_classes))
        for m, (i, j) in enumerate(self.pairs):
            pos = D[:, m] > 0
            votes[pos, i] += 1
            votes[~pos, j] += 1
            signed[:, i] += D[:, m]
            signed[:, j] -= D[:, m]
        out = np.empty(n, dtype=np.int64)
        for r in range(n):
            tied = np.flatnonzero(votes[r] == votes[r].max())
            if tied.size > 1:
                # largest summed decision value, then smallest id (argmax is first-max)
                tied = tied[[int(np.argmax(signed[r, tied]))]]
            out[r] = tied[0]
        return out

    def to_payload(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "support_rows": csr_payload(self.support_rows),
                "machine_index": [m.tolist() for m in self.machine_index],
                "machine_coef": [c.tolist() for c in self.machine_coef],
                "machine_intercept": self.machine_intercept.tolist(), "present": self.present.tolist(),
                "n_classes": self.n_classes, "n_features": self.n_features, "gamma": self.gamma, "C": self.C}

    @classmethod
    def from_payload(cls, d) -> "OvOSVM":
        return cls(tuple(tuple(p) for p in d["pairs"]), csr_from_payload(d["support_rows"]),
                   tuple(array(m, np.int64) for m in d["machine_index"]),
                   tuple(array(c) for c in d["machine_coef"]), array(d["machine_intercept"]),
                   array(d["present"], bool), int(d["n_classes"]), int(d["n_features"]), float(d["gamma"]),
                   float(d["C"]))


def fit_svm_ovo(dataset: Dataset, C: float = 1.0, gamma="scale", tol: float = 1e-3, max_passes: int = 2,
                cache_mb: float = 256.0, seed: int = 0) -> OvOSVM:
    """One SMO machine per pair of classes present in the training data."""
    if len(dataset) == 0:
        raise DatasetError("empty dataset")
    X, y = dataset.X, dataset.labels
    g = scale_gamma(X) if gamma == "scale" else float(gamma)
    if not g > 0:
        raise HyperparameterError("gamma must be > 0")
    present = present_classes(y, dataset.n_classes)
    pairs = tuple(combinations(np.flatnonzero(present).tolist(), 2))
    used = {}
    machine_rows, machine_coef, intercepts = [], [], []
    for m, (i, j) in enumerate(pairs):
        rows = np.flatnonzero((y == i) | (y == j))
        yy = np.where(y[rows] == i, 1.0, -1.0)
        mach = train_smo(X[rows], yy, C, g, tol, max_passes, cache_mb=cache_mb, seed=seed + m)
        global_rows = rows[mach.support_index]
        machine_rows.append(global_rows)
        machine_coef.append(mach.dual_coef)
        intercepts.append(mach.intercept)
        for r in global_rows:
            used.setdefault(int(r), None)
    union = np.array(sorted(used), dtype=np.int64)
    pos = {r: k for k, r in enumerate(union.tolist())}
    machine_index = tuple(np.array([pos[int(r)] for r in rows], dtype=np.int64) for rows in machine_rows)
    return OvOSVM(pairs, X[union], machine_index, tuple(machine_coef), np.array(intercepts), present,
                  dataset.n_classes, X.shape[1], float(g), float(C))
