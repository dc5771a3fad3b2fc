"""Label encoding and the in-memory dataset handed to classifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DatasetError
from .features import SparseVector, csr_to_rows, rows_to_csr


@dataclass(frozen=True)
class LabelEncoding:
    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(set(self.class_names)) != len(self.class_names):
            raise DatasetError("class names must be unique")

    @property
    def name_to_id(self) -> dict:
        return {n: i for i, n in enumerate(self.class_names)}

    def __len__(self) -> int:
        return len(self.class_names)

    def encode(self, names: Sequence[str]) -> np.ndarray:
        m = self.name_to_id
        try:
            return np.array([m[n] for n in names], dtype=np.int64)
        except KeyError as exc:
            raise DatasetError(f"unknown class name {exc.args[0]!r}") from None

    def decode(self, ids) -> list[str]:
        return [self.class_names[int(i)] for i in ids]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Parallel rows and class ids.

    ``n_classes`` is the size of the label encoding, which can exceed the
    number of classes actually present in ``labels``.
    """

    X: sp.csr_matrix
    labels: np.ndarray
    n_classes: int
    _rows: list = field(default=None, repr=False)

    def __post_init__(self):
        X = sp.csr_matrix(self.X, dtype=np.float64)
        X.sum_duplicates()
        X.sort_indices()
        X.eliminate_zeros()
        y = np.asarray(self.labels, dtype=np.int64).ravel()
        if X.shape[0] != y.size:
            raise DatasetError(f"{X.shape[0]} rows but {y.size} labels")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DatasetError("label id outside 0..n_classes-1")
        if not np.all(np.isfinite(X.data)):
            raise DatasetError("non-finite feature value")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", y)

    @classmethod
    def from_rows(cls, rows: Sequence[SparseVector], labels, n_features: int, n_classes: int) -> "Dataset":
        return cls(rows_to_csr(rows, n_features), labels, n_classes, list(rows))

    @classmethod
    def from_dense(cls, X, labels, n_classes: int | None = None) -> "Dataset":
        y = np.asarray(labels, dtype=np.int64)
        if n_classes is None:
            n_classes = int(y.max()) + 1 if y.size else 1
        return cls(sp.csr_matrix(np.asarray(X, dtype=np.float64).reshape(len(y), -1)), y, n_classes)

    @property
    def rows(self) -> list[SparseVector]:
        if self._rows is None:
            object.__setattr__(self, "_rows", csr_to_rows(self.X))
        return self._rows

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.labels.size

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.labels[idx], self.n_classes)
