import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qcbench.corpus import default_taxonomy, generate_synthetic_corpus, synthetic_stopwords  # noqa: E402
from qcbench.dataset import Dataset  # noqa: E402


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture(scope="session")
def corpus_small(taxonomy):
    """Scale 0.1: 348 records."""
    return generate_synthetic_corpus(taxonomy, seed=11, scale=0.1)


@pytest.fixture(scope="session")
def stops():
    return synthetic_stopwords()


@pytest.fixture
def xor_dataset():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    return Dataset.from_dense(X, [0, 0, 1, 1])


def blobs(n_per, centers, scale, seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, scale, size=(n_per, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per)
    return X, y


def corpus_to_dataset(records, taxonomy, granularity="coarse"):
    from qcbench.dataset import LabelEncoding
    from qcbench.features import Featurizer

    texts = [r.text for r in records]
    fz = Featurizer().fit(texts)
    names = taxonomy.coarse_classes if granularity == "coarse" else taxonomy.fine_classes
    enc = LabelEncoding(names)
    labels = enc.encode([getattr(r, granularity) for r in records])
    return Dataset.from_rows(fz.transform(texts), labels, len(fz.vocab), len(enc))


@pytest.fixture(scope="session")
def small_dataset(corpus_small, taxonomy):
    return corpus_to_dataset(corpus_small, taxonomy)
