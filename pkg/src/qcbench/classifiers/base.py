"""Helpers shared by the classifier implementations."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import DatasetError


def as_csr(X) -> sp.csr_matrix:
    X = sp.csr_matrix(X, dtype=np.float64)
    if not X.has_sorted_indices:
        X = X.copy()
        X.sort_indices()
    return X


def present_classes(labels, n_classes: int) -> np.ndarray:
    """Boolean mask of classes that occur in ``labels``."""
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise DatasetError("label out of range")
    return np.bincount(labels, minlength=n_classes) > 0


def masked_argmax(scores: np.ndarray, present: np.ndarray) -> np.ndarray:
    """Row-wise argmax restricted to classes seen in training.

    ``np.argmax`` returns the first maximum, so ties go to the smallest id.
    """
    scores = np.where(present[None, :], scores, -np.inf)
    return np.argmax(scores, axis=1).astype(np.int64)


def csr_payload(X: sp.csr_matrix) -> dict:
    return {"shape": list(X.shape), "indptr": X.indptr.tolist(),
            "indices": X.indices.tolist(), "data": X.data.tolist()}


def csr_from_payload(d) -> sp.csr_matrix:
    return sp.csr_matrix(
        (np.asarray(d["data"], dtype=np.float64), np.asarray(d["indices"], dtype=np.int32),
         np.asarray(d["indptr"], dtype=np.int64)),
        shape=tuple(d["shape"]),
    )


def array(d, dtype=np.float64) -> np.ndarray:
    return np.asarray(d, dtype=dtype)
