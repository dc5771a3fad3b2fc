"""Stratified k-fold cross-validation, confusion-matrix metrics, and the
with/without stop-word comparison grid.

Report documents are plain dicts ready for ``json.dumps``; nothing in them
depends on wall-clock time, so two runs with the same arguments serialize
to identical bytes.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import model_api
from .corpus import QuestionRecord, StopWordList, Taxonomy, default_taxonomy
from .dataset import Dataset, LabelEncoding
from .errors import DatasetError, QCError
from .features import FeatureConfig, Featurizer

GRANULARITIES = ("coarse", "fine")

# Published accuracy / F1 per stop-word setup, shown next to measured values.
PUBLISHED_SCORES = {
    "remove": {
        "mlp": (0.779, 0.761), "svm": (0.741, 0.705), "nbc": (0.724, 0.693), "sgd": (0.797, 0.775),
        "gbc": (0.701, 0.686), "knn": (0.376, 0.439), "rf": (0.712, 0.680),
    },
    "keep": {
        "mlp": (0.830, 0.810), "svm": (0.801, 0.765), "nbc": (0.789, 0.759), "sgd": (0.832, 0.808),
        "gbc": (0.792, 0.775), "knn": (0.781, 0.755), "rf": (0.816, 0.783),
    },
}
SETUP_TITLES = {"remove": "After Eliminating Stop Words", "keep": "Without Eliminating Stop Words"}
DISPLAY_NAMES = {"mlp": "MLP", "svm": "SVM", "nbc": "NBC", "sgd": "SGD", "gbc": "GBC", "knn": "KNN", "rf": "RF"}


class FoldWarning(UserWarning):
    """A class has fewer members than folds, so some folds lack it."""


class EvaluationError(DatasetError):
    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause


def paper_reference(kind: str, stopword_mode: str) -> dict:
    acc, f1 = PUBLISHED_SCORES[stopword_mode][kind]
    return {"accuracy": acc, "f1": f1}


# --- folds --------------------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray
    seed: int
    warnings: tuple = ()

    def validation_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle each class with a seeded generator and deal it round-robin.

    The dealing position carries over from one class to the next (starting
    from a seeded offset), so each class is spread evenly and the fold
    sizes differ by at most one overall.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise DatasetError("k must be at least 2")
    if labels.size < k:
        raise DatasetError(f"{labels.size} records cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.int64)
    pos = int(rng.integers(k))
    notes = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        rng.shuffle(members)
        fold_of[members] = (pos + np.arange(members.size)) % k
        pos = (pos + members.size) % k
        if members.size < k:
            notes.append(f"class {cls.item()!r} has {members.size} members for {k} folds")
    if notes:
        warnings.warn(f"{len(notes)} classes are smaller than k={k}; some folds lack them", FoldWarning,
                      stacklevel=2)
    return FoldAssignment(k, fold_of, int(seed), tuple(notes))


# --- metrics ------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns are predictions."""

    counts: np.ndarray

    @classmethod
    def from_predictions(cls, truth, predicted, n_classes: int) -> "ConfusionMatrix":
        m = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(m, (np.asarray(truth, dtype=np.int64), np.asarray(predicted, dtype=np.int64)), 1)
        return cls(m)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)


def _ratio(num, den):
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    weighted_f1: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    per_fold: tuple = ()  # MetricsReport per fold, empty for a single matrix
    confusion: ConfusionMatrix | None = None

    @property
    def weighted_recall(self) -> float:
        return float(np.sum(self.support * self.recall) / max(self.support.sum(), 1))

    def fold_summary(self) -> dict:
        """Mean and (population) standard deviation over folds."""
        out = {}
        for key in ("accuracy", "macro_f1", "weighted_f1"):
            vals = np.array([getattr(f, key) for f in self.per_fold])
            out[key] = {"mean": float(vals.mean()) if vals.size else None,
                        "std": float(vals.std()) if vals.size else None}
        return out

    def to_dict(self, class_names: Sequence[str] | None = None) -> dict:
        names = list(class_names) if class_names is not None else [str(i) for i in range(self.f1.size)]
        out = {
            "accuracy": self.accuracy, "macro_f1": self.macro_f1, "weighted_f1": self.weighted_f1,
            "per_class": {name: {"precision": float(p), "recall": float(r), "f1": float(f), "support": int(s)}
                          for name, p, r, f, s in zip(names, self.precision, self.recall, self.f1, self.support)},
        }
        if self.confusion is not None:
            out["confusion"] = self.confusion.counts.tolist()
        return out


def compute_metrics(confusion: ConfusionMatrix) -> MetricsReport:
    m = np.asarray(confusion.counts, dtype=np.float64)
    total = m.sum()
    if m.size == 0 or total <= 0:
        raise DatasetError("confusion matrix is empty")
    tp = np.diag(m)
    predicted = m.sum(axis=0)
    support = m.sum(axis=1)
    precision = _ratio(tp, predicted)
    recall = _ratio(tp, support)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        macro_f1=float(f1.mean()),
        weighted_f1=float(np.sum(f1 * support) / total),
        precision=precision, recall=recall, f1=f1, support=support.astype(np.int64),
        confusion=ConfusionMatrix(np.asarray(confusion.counts, dtype=np.int64)),
    )


# --- cross-validation ---------------------------------------------------------


@dataclass
class CrossValResult:
    classifier: str
    granularity: str
    stopword_mode: str
    k: int
    seed: int
    hyperparameters: dict
    feature_config: FeatureConfig
    class_names: tuple
    pooled: MetricsReport
    fold_sizes: tuple = ()
    fold_warnings: tuple = ()
    vocab_sizes: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "setup": {
                "stopword_mode": self.stopword_mode, "folds": self.k, "seed": self.seed,
                "feature_config": self.feature_config.to_dict(),
                "hyperparameters": {k: (list(v) if isinstance(v, tuple) else v)
                                    for k, v in self.hyperparameters.items()},
                "n_records": int(sum(self.fold_sizes)), "fold_sizes": list(self.fold_sizes),
                "vocab_sizes": list(self.vocab_sizes), "warnings": list(self.fold_warnings),
            },
            "classifier": self.classifier,
            "granularity": self.granularity,
            "per_fold": [{"fold": i, "accuracy": f.accuracy, "macro_f1": f.macro_f1,
                          "weighted_f1": f.weighted_f1} for i, f in enumerate(self.pooled.per_fold)],
            "pooled": {**self.pooled.to_dict(self.class_names), "fold_summary": self.pooled.fold_summary()},
            "paper_reference": paper_reference(self.classifier, self.stopword_mode),
        }


def fold_seed(seed: int, fold: int) -> int:
    """Independent 63-bit seed for fold ``fold`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([int(seed) % 2**63, fold]).generate_state(1, np.uint64)[0] >> np.uint64(1))


def _run_fold(fold, folds, texts, y, featurizer_args, n_classes, kind, hp, seed):
    val = folds.validation_indices(fold)
    train = folds.train_indices(fold)
    try:
        fz = Featurizer(*featurizer_args).fit([texts[i] for i in train])
        V = len(fz.vocab)
        d_train = Dataset.from_rows(fz.transform([texts[i] for i in train]), y[train], V, n_classes)
        d_val = Dataset.from_rows(fz.transform([texts[i] for i in val]), y[val], V, n_classes)
        model = model_api.fit(kind, d_train, hp, seed=fold_seed(seed, fold))
        pred = model_api.predict_many(model, d_val.X)
    except QCError as exc:
        raise EvaluationError(fold, exc) from exc
    return ConfusionMatrix.from_predictions(y[val], pred, n_classes), V


def run_crossval(records: Sequence[QuestionRecord], kind: str, hyperparameters: dict | None = None,
                 feature_config: FeatureConfig = FeatureConfig(), stops: StopWordList | None = None,
                 granularity: str = "coarse", k: int = 10, seed: int = 0, taxonomy: Taxonomy | None = None,
                 threads: int = 1, progress: Callable[[str], None] | None = None) -> CrossValResult:
    """k-fold evaluation with a vocabulary fit on each training partition only."""
    if granularity not in GRANULARITIES:
        raise DatasetError(f"granularity must be one of {GRANULARITIES}")
    if feature_config.stopword_mode == "remove" and stops is None:
        raise DatasetError("stop-word removal requested without a stop-word list")
    taxonomy = taxonomy or default_taxonomy()
    hp = model_api.resolve_hyperparameters(kind, hyperparameters)
    enc = LabelEncoding(taxonomy.classes(granularity))
    texts = [r.text for r in records]
    y = enc.encode([r.label(granularity) for r in records])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FoldWarning)
        folds = stratified_kfold(y, k, seed)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    args = (feature_config, stops)

    def job(fold):
        out = _run_fold(fold, folds, texts, y, args, len(enc), kind, hp, seed)
        if progress is not None:
            progress(f"{kind}/{feature_config.stopword_mode}/{granularity} fold {fold + 1}/{k}")
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(k)))
    else:
        results = [job(f) for f in range(k)]
    per_fold = tuple(compute_metrics(cm) for cm, _ in results)
    pooled_cm = ConfusionMatrix(sum(cm.counts for cm, _ in results))
    pooled = compute_metrics(pooled_cm)
    pooled = replace(pooled, per_fold=per_fold)
    return CrossValResult(kind, granularity, feature_config.stopword_mode, k, int(seed), hp, feature_config,
                          enc.class_names, pooled, tuple(int(s) for s in folds.sizes()), folds.warnings,
                          tuple(v for _, v in results))


# --- stop-word comparison -----------------------------------------------------


@dataclass
class ComparisonReport:
    granularity: str
    k: int
    seed: int
    results: dict  # (stopword_mode, kind) -> CrossValResult
    kinds: tuple = model_api.KINDS
    modes: tuple = ("remove", "keep")

    def grid(self) -> dict:
        """mode -> kind -> {accuracy, f1, weighted_f1}: 2 setups x 7 classifiers x (accuracy, F1), plus weighted F1."""
        return {mode: {kind: {"accuracy": self.results[mode, kind].pooled.accuracy,
                              "f1": self.results[mode, kind].pooled.macro_f1,
                              "weighted_f1": self.results[mode, kind].pooled.weighted_f1}
                       for kind in self.kinds} for mode in self.modes}

    def deltas(self) -> dict:
        """keep - remove per classifier and metric."""
        g = self.grid()
        return {kind: {m: g["keep"][kind][m] - g["remove"][kind][m] for m in ("accuracy", "f1", "weighted_f1")}
                for kind in self.kinds if "keep" in g and "remove" in g}

    def figure_series(self) -> dict:
        """Per-classifier F1 bars for each setup, measured and published."""
        g = self.grid()
        return {"classifiers": [DISPLAY_NAMES[k] for k in self.kinds],
                "measured": {mode: [g[mode][k]["f1"] for k in self.kinds] for mode in self.modes},
                "published": {mode: [PUBLISHED_SCORES[mode][k][1] for k in self.kinds] for mode in self.modes}}

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity, "folds": self.k, "seed": self.seed,
            "classifiers": list(self.kinds), "setups": list(self.modes),
            "grid": self.grid(), "delta_keep_minus_remove": self.deltas(),
            "paper_reference": {mode: {k: paper_reference(k, mode) for k in self.kinds} for mode in self.modes},
            "figure_series": self.figure_series(),
            "cells": [self.results[mode, kind].to_dict() for mode in self.modes for kind in self.kinds],
        }


def compare_setups(records: Sequence[QuestionRecord], stops: StopWordList, kinds: Sequence[str] = model_api.KINDS,
                   k: int = 10, seed: int = 0, granularity: str = "coarse", hyperparameters: dict | None = None,
                   feature_config: FeatureConfig = FeatureConfig(), taxonomy: Taxonomy | None = None,
                   threads: int = 1, progress: Callable[[str], None] | None = None) -> ComparisonReport:
    """Cross-validate every classifier with stop words removed and kept.

    ``hyperparameters`` maps a kind to its overrides.
    """
    if stops is None:
        raise DatasetError("compare needs a stop-word list")
    results = {}
    modes = ("remove", "keep")
    for mode in modes:
        cfg = FeatureConfig(feature_config.ngram_min, feature_config.ngram_max, mode, feature_config.min_df)
        for kind in kinds:
            overrides = (hyperparameters or {}).get(kind)
            results[mode, kind] = run_crossval(records, kind, overrides, cfg, stops, granularity, k, seed,
                                               taxonomy, threads, progress)
    return ComparisonReport(granularity, k, int(seed), results, tuple(kinds), modes)


# --- markdown -----------------------------------------------------------------


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.3f}"


def render_comparison_markdown(doc: dict) -> str:
    """Published-table layout: one block per setup, classifiers as columns.

    Each block shows measured accuracy and macro F1 with the published
    values in parentheses, then the weighted F1 and the keep - remove deltas.
    """
    kinds = doc["classifiers"]
    head = "| | " + " | ".join(DISPLAY_NAMES.get(k, k) for k in kinds) + " |"
    sep = "|---" * (len(kinds) + 1) + "|"
    lines = [f"Granularity: {doc['granularity']}, {doc['folds']}-fold, seed {doc['seed']}.",
             "Measured value first, published value in parentheses.", ""]
    for mode in doc["setups"]:
        g = doc["grid"][mode]
        ref = doc["paper_reference"][mode]
        lines += [f"**{SETUP_TITLES[mode]}**", "", head, sep]
        lines.append("| Accuracy | " + " | ".join(
            f"{_fmt(g[k]['accuracy'])} ({_fmt(ref[k]['accuracy'])})" for k in kinds) + " |")
        lines.append("| F1 Score | " + " | ".join(f"{_fmt(g[k]['f1'])} ({_fmt(ref[k]['f1'])})" for k in kinds) + " |")
        lines.append("| Weighted F1 | " + " | ".join(_fmt(g[k]["weighted_f1"]) for k in kinds) + " |")
        lines.append("")
    d = doc.get("delta_keep_minus_remove") or {}
    if d:
        lines += ["**Keep minus remove**", "", head, sep]
        lines.append("| Accuracy | " + " | ".join(f"{d[k]['accuracy']:+.3f}" for k in kinds) + " |")
        lines.append("| F1 Score | " + " | ".join(f"{d[k]['f1']:+.3f}" for k in kinds) + " |")
        lines.append("")
    return "\n".join(lines)


def render_crossval_markdown(docs: Sequence[dict]) -> str:
    """One row per cross-validation report."""
    lines = ["| classifier | granularity | stop words | folds | accuracy | macro F1 | weighted F1 "
             "| fold acc mean ± std | published acc | published F1 |",
             "|---|---|---|---|---|---|---|---|---|---|"]
    for doc in docs:
        p = doc["pooled"]
        fs = p["fold_summary"]["accuracy"]
        ref = doc["paper_reference"]
        lines.append(f"| {DISPLAY_NAMES.get(doc['classifier'], doc['classifier'])} | {doc['granularity']} "
                     f"| {doc['setup']['stopword_mode']} | {doc['setup']['folds']} | {_fmt(p['accuracy'])} "
                     f"| {_fmt(p['macro_f1'])} | {_fmt(p['weighted_f1'])} | {fs['mean']:.3f} ± {fs['std']:.3f} "
                     f"| {_fmt(ref['accuracy'])} | {_fmt(ref['f1'])} |")
    return "\n".join(lines) + "\n"
