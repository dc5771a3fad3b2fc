"""Tokenization, stop-word filtering, word n-grams and TF-IDF vectors."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import StopWordList
from .errors import FeatureError

STOPWORD_MODES = ("keep", "remove")


@dataclass(frozen=True)
class FeatureConfig:
    ngram_min: int = 1
    ngram_max: int = 2
    stopword_mode: str = "keep"
    min_df: int = 1

    def __post_init__(self):
        if not (1 <= self.ngram_min <= self.ngram_max <= 3):
            raise FeatureError(
                f"need 1 <= ngram_min <= ngram_max <= 3, got {self.ngram_min}..{self.ngram_max}"
            )
        if self.stopword_mode not in STOPWORD_MODES:
            raise FeatureError(f"stopword_mode must be one of {STOPWORD_MODES}")
        if self.min_df < 1:
            raise FeatureError("min_df must be >= 1")

    def to_dict(self) -> dict:
        return {"ngram_min": self.ngram_min, "ngram_max": self.ngram_max,
                "stopword_mode": self.stopword_mode, "min_df": self.min_df}

    @classmethod
    def from_dict(cls, d) -> "FeatureConfig":
        return cls(int(d["ngram_min"]), int(d["ngram_max"]), str(d["stopword_mode"]), int(d["min_df"]))


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Split on whitespace and strip punctuation from both ends of each token.

    >>> tokenize("who wrote it?")
    ['who', 'wrote', 'it']
    """
    tokens = []
    for raw in text.split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if start < end:
            tokens.append(raw[start:end])
    return tokens


def remove_stopwords(tokens: Sequence[str], stops: StopWordList | None) -> list[str]:
    if not stops:
        return list(tokens)
    return [t for t in tokens if t not in stops]


def extract_ngrams(tokens: Sequence[str], cfg: FeatureConfig) -> list[str]:
    """All contiguous windows of length ngram_min..ngram_max, shortest first."""
    terms = []
    for n in range(cfg.ngram_min, cfg.ngram_max + 1):
        if n == 1:
            terms.extend(tokens)
        else:
            terms.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return terms


def text_to_terms(text: str, cfg: FeatureConfig, stops: StopWordList | None = None) -> list[str]:
    tokens = tokenize(text)
    if cfg.stopword_mode == "remove":
        tokens = remove_stopwords(tokens, stops)
    return extract_ngrams(tokens, cfg)


@dataclass(frozen=True)
class Vocabulary:
    term_index: dict
    doc_freq: np.ndarray
    n_docs: int
    idf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        df = np.asarray(self.doc_freq, dtype=np.int64)
        object.__setattr__(self, "doc_freq", df)
        # smoothed idf: ln((1 + N) / (1 + df)) + 1
        object.__setattr__(self, "idf", np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0)

    def __len__(self) -> int:
        return len(self.term_index)

    def terms(self) -> list[str]:
        out = [None] * len(self.term_index)
        for t, i in self.term_index.items():
            out[i] = t
        return out

    def to_dict(self) -> dict:
        return {"terms": self.terms(), "doc_freq": self.doc_freq.tolist(), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d) -> "Vocabulary":
        return cls({t: i for i, t in enumerate(d["terms"])}, np.asarray(d["doc_freq"], dtype=np.int64),
                   int(d["n_docs"]))


def build_vocabulary(term_lists: Sequence[Sequence[str]], cfg: FeatureConfig = FeatureConfig()) -> Vocabulary:
    """Index terms in first-occurrence order, keeping those with df >= min_df."""
    if not term_lists or not any(len(t) for t in term_lists):
        raise FeatureError("cannot build a vocabulary from an empty corpus")
    df = Counter()
    order = {}
    for terms in term_lists:
        for t in dict.fromkeys(terms):
            if t not in order:
                order[t] = len(order)
            df[t] += 1
    kept = [t for t in order if df[t] >= cfg.min_df]
    return Vocabulary({t: i for i, t in enumerate(kept)}, np.array([df[t] for t in kept], dtype=np.int64),
                      len(term_lists))


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise FeatureError("indices and values must be parallel 1-D arrays")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise FeatureError("indices must be strictly increasing")
        if np.any(val == 0):
            raise FeatureError("stored values must be nonzero")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        nz = np.flatnonzero(x)
        return cls(nz, x[nz])

    def to_dense(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        out[self.indices] = self.values
        return out

    def __len__(self) -> int:
        return self.indices.size


def vectorize_tfidf(terms: Iterable[str], vocab: Vocabulary) -> SparseVector:
    """Raw counts times smoothed idf, L2-normalized; unknown terms are dropped."""
    counts = Counter(vocab.term_index[t] for t in terms if t in vocab.term_index)
    if not counts:
        return SparseVector(np.empty(0, np.int64), np.empty(0))
    idx = np.array(sorted(counts), dtype=np.int64)
    w = np.array([counts[i] for i in idx], dtype=np.float64) * vocab.idf[idx]
    return SparseVector(idx, w / np.sqrt(np.dot(w, w)))


def rows_to_csr(rows: Sequence[SparseVector], n_features: int) -> sp.csr_matrix:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        indptr[i + 1] = indptr[i] + len(r)
    indices = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, np.int64)
    data = np.concatenate([r.values for r in rows]) if rows else np.empty(0)
    if indices.size and indices.max() >= n_features:
        raise FeatureError("row index exceeds n_features")
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), n_features))


def csr_to_rows(X: sp.csr_matrix) -> list[SparseVector]:
    X = sp.csr_matrix(X)
    X.sort_indices()
    X.eliminate_zeros()
    return [SparseVector(X.indices[X.indptr[i]:X.indptr[i + 1]], X.data[X.indptr[i]:X.indptr[i + 1]])
            for i in range(X.shape[0])]


class Featurizer:
    """Text -> TF-IDF pipeline whose vocabulary is fit on training texts only."""

    def __init__(self, cfg: FeatureConfig = FeatureConfig(), stops: StopWordList | None = None):
        self.cfg = cfg
        self.stops = stops
        self.vocab: Vocabulary | None = None

    def terms(self, text: str) -> list[str]:
        return text_to_terms(text, self.cfg, self.stops)

    def fit(self, texts: Sequence[str]) -> "Featurizer":
        self.vocab = build_vocabulary([self.terms(t) for t in texts], self.cfg)
        return self

    def transform_one(self, text: str) -> SparseVector:
        return vectorize_tfidf(self.terms(text), self.vocab)

    def transform(self, texts: Sequence[str]) -> list[SparseVector]:
        return [self.transform_one(t) for t in texts]
