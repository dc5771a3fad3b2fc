"""Uniform fit/predict contract over the seven classifiers, plus model artifacts.

Artifacts are JSON documents::

    {"format_version": 1, "classifier_kind": "nbc", "granularity": "coarse",
     "feature_config": {...}, "stopwords": [...], "vocabulary": {...},
     "label_encoding": [...], "hyperparameters": {...}, "parameters": {...}}

Floats are written with ``repr`` precision, so a loaded model predicts
bit-identically to the one that was saved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp

from .classifiers.kernel import OvOSVM, fit_svm_ovo
from .classifiers.neural import MLPConfig, MLPModel, fit_mlp
from .classifiers.simple import KNNModel, MultinomialNBModel, SGDLinearModel, fit_knn, fit_nbc, fit_sgd
from .classifiers.tree import GradientBoostingModel, RandomForestModel, fit_gbc, fit_rf
from .corpus import StopWordList
from .dataset import Dataset, LabelEncoding
from .errors import DatasetError, HyperparameterError, ModelFormatError
from .features import FeatureConfig, SparseVector, Vocabulary, rows_to_csr

FORMAT_VERSION = 1
KINDS = ("mlp", "svm", "nbc", "sgd", "gbc", "knn", "rf")

# Every tunable hyperparameter with its default value.
DEFAULTS: dict[str, dict[str, Any]] = {
    "nbc": {"alpha": 0.1},
    "sgd": {"eta0": 0.1, "l2_lambda": 1e-4, "epochs": 20},
    "knn": {"k": 13},
    "svm": {"C": 1.0, "gamma": "scale", "tol": 1e-3, "max_passes": 2, "cache_mb": 256.0},
    "gbc": {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3},
    "rf": {"n_trees": 500, "max_features": "sqrt", "max_depth": None, "min_samples_split": 2,
           "bootstrap": True},
    "mlp": {"hidden_units": (100,), "l2_lambda": 1e-4, "max_iter": 200, "tol": 1e-5, "memory": 10},
}

MODEL_CLASSES = {
    "nbc": MultinomialNBModel, "sgd": SGDLinearModel, "knn": KNNModel, "svm": OvOSVM,
    "gbc": GradientBoostingModel, "rf": RandomForestModel, "mlp": MLPModel,
}


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise HyperparameterError(f"unknown classifier kind {kind!r}; expected one of {', '.join(KINDS)}")


def _parse_value(kind: str, key: str, raw: str):
    default = DEFAULTS[kind][key]
    text = raw.strip()
    low = text.lower()
    try:
        if key == "gamma":
            return "scale" if low == "scale" else float(text)
        if key == "max_features":
            return low if low in ("sqrt", "log2", "all") else int(text)
        if key == "max_depth" and kind == "rf":
            return None if low in ("none", "") else int(text)
        if isinstance(default, bool):
            if low in ("1", "true", "yes"):
                return True
            if low in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise HyperparameterError(f"bad value {raw!r} for {kind}.{key}") from None
    return text


def resolve_hyperparameters(kind: str, overrides: dict | None = None) -> dict:
    """Defaults merged with overrides; string values are parsed by key."""
    _check_kind(kind)
    params = dict(DEFAULTS[kind])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise HyperparameterError(
                f"unknown hyperparameter {key!r} for {kind}; accepted: {', '.join(sorted(params))}"
            )
        params[key] = _parse_value(kind, key, value) if isinstance(value, str) else value
    return params


def parse_overrides(items: Sequence[str], kind: str) -> dict:
    """``["k=5", "alpha=0.2"]`` -> typed dict, validated against ``kind``."""
    raw = {}
    for item in items or ():
        if "=" not in item:
            raise HyperparameterError(f"override {item!r} must look like key=value")
        key, value = item.split("=", 1)
        raw[key.strip()] = value
    return resolve_hyperparameters(kind, raw)


def fit(kind: str, dataset: Dataset, hyperparameters: dict | None = None, seed: int = 0):
    """Fit one classifier; deterministic given (dataset, hyperparameters, seed)."""
    hp = resolve_hyperparameters(kind, hyperparameters)
    if len(dataset) == 0:
        raise DatasetError("cannot fit on an empty dataset")
    if kind == "nbc":
        return fit_nbc(dataset, alpha=float(hp["alpha"]))
    if kind == "sgd":
        return fit_sgd(dataset, seed=seed, eta0=float(hp["eta0"]), l2_lambda=float(hp["l2_lambda"]),
                       epochs=int(hp["epochs"]))
    if kind == "knn":
        return fit_knn(dataset, k=int(hp["k"]))
    if kind == "svm":
        return fit_svm_ovo(dataset, C=float(hp["C"]), gamma=hp["gamma"], tol=float(hp["tol"]),
                           max_passes=int(hp["max_passes"]), cache_mb=float(hp["cache_mb"]), seed=seed)
    if kind == "gbc":
        return fit_gbc(dataset, n_stages=int(hp["n_stages"]), learning_rate=float(hp["learning_rate"]),
                       max_depth=int(hp["max_depth"]), seed=seed)
    if kind == "rf":
        return fit_rf(dataset, n_trees=int(hp["n_trees"]), seed=seed, max_features=hp["max_features"],
                      max_depth=hp["max_depth"], min_samples_split=int(hp["min_samples_split"]),
                      bootstrap=bool(hp["bootstrap"]))
    config = MLPConfig(hidden_units=tuple(hp["hidden_units"]), l2_lambda=float(hp["l2_lambda"]),
                       max_iter=int(hp["max_iter"]), tol=float(hp["tol"]), memory=int(hp["memory"]), seed=seed)
    return fit_mlp(dataset, config)


def _as_matrix(rows, n_features: int) -> sp.csr_matrix:
    if sp.issparse(rows):
        X = sp.csr_matrix(rows)
        if X.shape[1] != n_features:
            raise DatasetError(f"expected {n_features} features, got {X.shape[1]}")
        return X
    rows = list(rows)
    for r in rows:
        if len(r) and r.indices[-1] >= n_features:
            raise DatasetError(f"feature index {r.indices[-1]} >= model's n_features {n_features}")
    return rows_to_csr(rows, n_features)


def predict_many(model, rows) -> np.ndarray:
    """Class ids for a sequence of SparseVectors or a CSR matrix."""
    return model.predict_matrix(_as_matrix(rows, model.n_features))


def predict(model, row: SparseVector) -> int:
    return int(predict_many(model, [row])[0])


@dataclass(eq=False)
class ModelArtifact:
    classifier_kind: str
    model: Any
    label_encoding: LabelEncoding
    feature_config: FeatureConfig | None = None
    vocabulary: Vocabulary | None = None
    stopwords: StopWordList | None = None
    hyperparameters: dict = field(default_factory=dict)
    granularity: str = "coarse"
    format_version: int = FORMAT_VERSION

    def featurize(self, text: str) -> SparseVector:
        from .features import text_to_terms, vectorize_tfidf

        if self.vocabulary is None or self.feature_config is None:
            raise ModelFormatError("artifact carries no text pipeline")
        return vectorize_tfidf(text_to_terms(text, self.feature_config, self.stopwords), self.vocabulary)

    def predict_text(self, texts: Sequence[str]) -> list[str]:
        ids = predict_many(self.model, [self.featurize(t) for t in texts])
        return self.label_encoding.decode(ids)


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def save_model(artifact: ModelArtifact, path) -> None:
    doc = {
        "format_version": artifact.format_version,
        "classifier_kind": artifact.classifier_kind,
        "granularity": artifact.granularity,
        "feature_config": artifact.feature_config.to_dict() if artifact.feature_config else None,
        "stopwords": sorted(artifact.stopwords.words) if artifact.stopwords else None,
        "vocabulary": artifact.vocabulary.to_dict() if artifact.vocabulary else None,
        "label_encoding": list(artifact.label_encoding.class_names),
        "hyperparameters": {k: _jsonable(v) for k, v in artifact.hyperparameters.items()},
        "parameters": artifact.model.to_payload(),
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")


def load_model(path) -> ModelArtifact:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model payload in {path}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
    kind = doc.get("classifier_kind")
    if kind not in MODEL_CLASSES:
        raise ModelFormatError(f"unknown classifier_kind {kind!r}")
    try:
        model = MODEL_CLASSES[kind].from_payload(doc["parameters"])
        fc = doc.get("feature_config")
        vocab = doc.get("vocabulary")
        stops = doc.get("stopwords")
        hp = doc.get("hyperparameters") or {}
        if "hidden_units" in hp:
            hp["hidden_units"] = tuple(hp["hidden_units"])
        return ModelArtifact(
            kind, model, LabelEncoding(tuple(doc["label_encoding"])),
            FeatureConfig.from_dict(fc) if fc else None,
            Vocabulary.from_dict(vocab) if vocab else None,
            StopWordList(frozenset(stops)) if stops is not None else None,
            hp, doc.get("granularity", "coarse"), version,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"payload inconsistent with kind {kind!r}: {exc}") from exc
