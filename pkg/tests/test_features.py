import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qcbench.corpus import StopWordList
from qcbench.errors import FeatureError
from qcbench.features import (FeatureConfig, Featurizer, SparseVector, Vocabulary, build_vocabulary,
                              csr_to_rows, extract_ngrams, remove_stopwords, rows_to_csr, text_to_terms,
                              tokenize, vectorize_tfidf)


class TestTokenize:
    @pytest.mark.parametrize("text, expected", [
        ("who wrote it?", ["who", "wrote", "it"]),
        ("", []),
        ("a\t b  c", ["a", "b", "c"]),
        ("কে লিখেছেন।", ["কে", "লিখেছেন"]),
        ("\"quoted\", ...", ["quoted"]),
        ("don't", ["don't"]),
    ])
    def test_examples(self, text, expected):
        assert tokenize(text) == expected

    @given(st.text())
    def test_tokens_are_nonempty_and_whitespace_free(self, text):
        for tok in tokenize(text):
            assert tok and not any(ch.isspace() for ch in tok)


class TestStopwords:
    def test_examples(self):
        assert remove_stopwords(["a", "b", "a"], StopWordList(frozenset({"a"}))) == ["b"]
        assert remove_stopwords(["a"], StopWordList(frozenset({"a"}))) == []
        assert remove_stopwords(["x", "y"], StopWordList(frozenset())) == ["x", "y"]
        assert remove_stopwords(["x", "y"], None) == ["x", "y"]

    def test_keep_mode_ignores_list(self):
        stops = StopWordList(frozenset({"a"}))
        assert text_to_terms("a b", FeatureConfig(1, 1, "keep"), stops) == ["a", "b"]
        assert text_to_terms("a b", FeatureConfig(1, 1, "remove"), stops) == ["b"]


class TestNgrams:
    def test_examples(self):
        cfg = FeatureConfig(1, 2)
        assert extract_ngrams(["a", "b", "c"], cfg) == ["a", "b", "c", "a b", "b c"]
        assert extract_ngrams(["a"], cfg) == ["a"]
        assert extract_ngrams([], cfg) == []

    def test_trigram_only(self):
        assert extract_ngrams(list("abcd"), FeatureConfig(3, 3)) == ["a b c", "b c d"]

    @pytest.mark.parametrize("lo, hi", [(0, 1), (2, 1), (1, 4)])
    def test_bad_range(self, lo, hi):
        with pytest.raises(FeatureError):
            FeatureConfig(lo, hi)

    def test_bad_mode_and_min_df(self):
        with pytest.raises(FeatureError):
            FeatureConfig(stopword_mode="drop")
        with pytest.raises(FeatureError):
            FeatureConfig(min_df=0)

    @given(st.lists(st.sampled_from("abcde"), max_size=12), st.integers(1, 3), st.integers(0, 2))
    def test_length_formula(self, tokens, lo, extra):
        hi = min(3, lo + extra)
        out = extract_ngrams(tokens, FeatureConfig(lo, hi))
        assert len(out) == sum(max(0, len(tokens) - n + 1) for n in range(lo, hi + 1))


class TestVocabulary:
    def test_counting(self):
        v = build_vocabulary([["a", "b"], ["a", "c"]])
        assert v.term_index == {"a": 0, "b": 1, "c": 2}
        assert v.doc_freq.tolist() == [2, 1, 1] and v.n_docs == 2

    def test_min_df(self):
        v = build_vocabulary([["a", "b"], ["a", "c"]], FeatureConfig(min_df=2))
        assert v.term_index == {"a": 0}

    def test_document_frequency_not_term_count(self):
        assert build_vocabulary([["a", "a"]]).doc_freq.tolist() == [1]

    @pytest.mark.parametrize("docs", [[], [[]], [[], []]])
    def test_empty_corpus(self, docs):
        with pytest.raises(FeatureError):
            build_vocabulary(docs)

    def test_dict_round_trip(self):
        v = build_vocabulary([["x", "y"], ["y", "z"]])
        w = Vocabulary.from_dict(v.to_dict())
        assert w.term_index == v.term_index and np.array_equal(w.idf, v.idf)


class TestTfidf:
    def test_hand_computed(self):
        v = build_vocabulary([["a", "b"], ["a", "c"]])
        assert v.idf[0] == pytest.approx(1.0)
        assert v.idf[1] == pytest.approx(1.4054651, abs=1e-7)
        vec = vectorize_tfidf(["a", "b"], v)
        assert vec.indices.tolist() == [0, 1]
        np.testing.assert_allclose(vec.values, [0.5797386, 0.8148025], atol=1e-7)

    def test_single_term_unit(self):
        v = build_vocabulary([["a", "b"], ["a", "c"]])
        vec = vectorize_tfidf(["c", "zzz"], v)
        assert vec.indices.tolist() == [2] and vec.values.tolist() == [1.0]

    def test_all_unknown(self):
        v = build_vocabulary([["a"]])
        assert len(vectorize_tfidf(["q", "r"], v)) == 0

    def test_raw_counts(self):
        v = build_vocabulary([["a", "b"], ["a", "c"]])
        vec = vectorize_tfidf(["a", "a", "b"], v)
        w = np.array([2 * 1.0, v.idf[1]])
        np.testing.assert_allclose(vec.values, w / np.linalg.norm(w))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.lists(st.sampled_from("abcdefg"), max_size=6), min_size=1, max_size=8).filter(
        lambda d: any(d)))
    def test_unit_norm_and_order_independence(self, docs):
        v = build_vocabulary(docs)
        forward = [vectorize_tfidf(d, v) for d in docs]
        backward = [vectorize_tfidf(d, v) for d in reversed(docs)][::-1]
        for a, b in zip(forward, backward):
            assert np.array_equal(a.indices, b.indices) and np.array_equal(a.values, b.values)
            if len(a):
                assert abs(np.linalg.norm(a.values) - 1.0) <= 1e-12
            assert np.all(np.isfinite(a.values))

    def test_doc_freq_bounds(self, corpus_small):
        f = Featurizer().fit([r.text for r in corpus_small])
        assert f.vocab.doc_freq.min() >= 1 and f.vocab.doc_freq.max() <= f.vocab.n_docs
        assert sorted(f.vocab.term_index.values()) == list(range(len(f.vocab)))


class TestSparseVector:
    def test_invariants(self):
        with pytest.raises(FeatureError):
            SparseVector([1, 1], [1.0, 2.0])
        with pytest.raises(FeatureError):
            SparseVector([0], [0.0])
        with pytest.raises(FeatureError):
            SparseVector([0, 1], [1.0])

    def test_csr_round_trip(self):
        rows = [SparseVector([0, 3], [0.5, -1.0]), SparseVector([], []), SparseVector([2], [4.0])]
        X = rows_to_csr(rows, 4)
        assert X.shape == (3, 4)
        back = csr_to_rows(X)
        for a, b in zip(rows, back):
            assert a.indices.tolist() == b.indices.tolist() and a.values.tolist() == b.values.tolist()

    def test_index_out_of_range(self):
        with pytest.raises(FeatureError):
            rows_to_csr([SparseVector([5], [1.0])], 3)

    def test_dense(self):
        v = SparseVector.from_dense([0, 2.0, 0, -1.0])
        assert v.indices.tolist() == [1, 3]
        assert v.to_dense(4).tolist() == [0, 2.0, 0, -1.0]


def test_featurizer_determinism(corpus_small, stops):
    texts = [r.text for r in corpus_small[:80]]
    cfg = FeatureConfig(stopword_mode="remove")
    a = Featurizer(cfg, stops).fit(texts)
    b = Featurizer(cfg, stops).fit(texts)
    assert a.vocab.term_index == b.vocab.term_index
    Xa = rows_to_csr(a.transform(texts), len(a.vocab))
    Xb = rows_to_csr(b.transform(texts), len(b.vocab))
    assert (Xa != Xb).nnz == 0
    assert sp.isspmatrix_csr(Xa)
