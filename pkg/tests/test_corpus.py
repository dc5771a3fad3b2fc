import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcbench.corpus import (QuestionRecord, Taxonomy, corpus_stats, generate_synthetic_corpus, load_corpus,
                            load_stopwords, save_corpus, scaled_count)
from qcbench.errors import CorpusError


def write_lines(path, objs):
    path.write_text("".join(json.dumps(o, ensure_ascii=False) + "\n" for o in objs), encoding="utf-8")
    return path


class TestTaxonomy:
    def test_shape(self, taxonomy):
        assert taxonomy.coarse_classes == ("ENTITY", "NUMERIC", "HUMAN", "LOCATION", "DESCRIPTION", "ABBREVIATION")
        # the reference table lists 49 fine classes
        assert len(taxonomy.fine_classes) == 49
        assert len(set(taxonomy.fine_classes)) == 49

    def test_qualified_names(self, taxonomy):
        for name, parent in [("ENTITY/OTHER", "ENTITY"), ("NUMERIC/OTHER", "NUMERIC"),
                             ("LOCATION/OTHER", "LOCATION"), ("HUMAN/DESCRIPTION", "HUMAN"),
                             ("DESCRIPTION/DESCRIPTION", "DESCRIPTION")]:
            assert taxonomy.fine_to_coarse[name] == parent

    def test_reference_sums(self, taxonomy):
        sums = [sum(taxonomy.reference_counts[f] for f in taxonomy.children(c)) for c in taxonomy.coarse_classes]
        assert sums == [512, 889, 669, 650, 248, 532]
        assert sum(sums) == 3500

    def test_rejects_orphan_fine_class(self):
        with pytest.raises(CorpusError):
            Taxonomy(("A",), ("x",), {"x": "B"})


class TestLoadCorpus:
    def test_single_valid_line(self, tmp_path, taxonomy):
        p = write_lines(tmp_path / "c.jsonl", [{"id": "q1", "text": "কবে?", "coarse": "NUMERIC", "fine": "DATE"}])
        assert load_corpus(p, taxonomy) == [QuestionRecord("q1", "কবে?", "NUMERIC", "DATE")]

    def test_empty_file(self, tmp_path, taxonomy):
        p = tmp_path / "e.jsonl"
        p.write_text("")
        assert load_corpus(p, taxonomy) == []

    def test_fine_coarse_mismatch(self, tmp_path, taxonomy):
        p = write_lines(tmp_path / "c.jsonl", [{"id": "q1", "text": "t", "coarse": "NUMERIC", "fine": "CITY"}])
        with pytest.raises(CorpusError, match="mismatch"):
            load_corpus(p, taxonomy)

    @pytest.mark.parametrize("obj, pattern", [
        ({"id": "a", "text": "t", "coarse": "NOPE", "fine": "DATE"}, "unknown coarse"),
        ({"id": "a", "text": "t", "coarse": "NUMERIC", "fine": "NOPE"}, "unknown fine"),
        ({"id": "a", "text": "  ", "coarse": "NUMERIC", "fine": "DATE"}, "empty text"),
        ({"id": "a", "text": "t", "coarse": "NUMERIC"}, "missing key"),
    ])
    def test_bad_records(self, tmp_path, taxonomy, obj, pattern):
        p = write_lines(tmp_path / "c.jsonl", [obj])
        with pytest.raises(CorpusError, match=pattern):
            load_corpus(p, taxonomy)

    def test_malformed_line_reports_line_number(self, tmp_path, taxonomy):
        p = tmp_path / "c.jsonl"
        good = json.dumps({"id": "q1", "text": "t", "coarse": "NUMERIC", "fine": "DATE"})
        p.write_text(good + "\n{not json\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(p, taxonomy)

    def test_duplicate_id(self, tmp_path, taxonomy):
        rec = {"id": "q1", "text": "t", "coarse": "NUMERIC", "fine": "DATE"}
        p = write_lines(tmp_path / "c.jsonl", [rec, rec])
        with pytest.raises(CorpusError, match="duplicate id"):
            load_corpus(p, taxonomy)

    def test_invalid_utf8(self, tmp_path, taxonomy):
        p = tmp_path / "c.jsonl"
        p.write_bytes(b"\xff\xfe\n")
        with pytest.raises(CorpusError, match="UTF-8"):
            load_corpus(p, taxonomy)


class TestStats:
    def test_empty(self, taxonomy):
        s = corpus_stats([], taxonomy)
        assert s.total == 0 and set(s.per_coarse.values()) == {0} and set(s.per_fine.values()) == {0}

    def test_two_expressions(self, taxonomy):
        recs = [QuestionRecord(f"q{i}", "x", "ABBREVIATION", "EXPRESSION") for i in range(2)]
        assert corpus_stats(recs, taxonomy).per_fine["EXPRESSION"] == 2

    def test_full_scale_counts(self, taxonomy):
        recs = generate_synthetic_corpus(taxonomy, seed=3, scale=1.0)
        s = corpus_stats(recs, taxonomy)
        assert s.total == 3500
        assert s.per_coarse["HUMAN"] == 669 and s.per_coarse["LOCATION"] == 650
        assert s.per_fine["ABBREVIATION"] == 519 and s.per_fine["DATE"] == 452 and s.per_fine["CITY"] == 274
        assert s.per_fine == dict(taxonomy.reference_counts)
        for c in taxonomy.coarse_classes:
            assert s.per_coarse[c] == sum(s.per_fine[f] for f in taxonomy.children(c))


class TestGenerator:
    def test_deterministic_bytes(self, taxonomy, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_corpus(generate_synthetic_corpus(taxonomy, seed=5, scale=0.2), a)
        save_corpus(generate_synthetic_corpus(taxonomy, seed=5, scale=0.2), b)
        assert a.read_bytes() == b.read_bytes()

    def test_other_seed_changes_texts_not_counts(self, taxonomy):
        a = generate_synthetic_corpus(taxonomy, seed=1, scale=0.2)
        b = generate_synthetic_corpus(taxonomy, seed=2, scale=0.2)
        assert [r.text for r in a] != [r.text for r in b]
        assert corpus_stats(a, taxonomy) == corpus_stats(b, taxonomy)

    @pytest.mark.parametrize("count, scale, expected", [(10, 0.05, 1), (10, 0.25, 3), (519, 0.1, 52),
                                                        (13, 0.5, 7), (452, 1.0, 452)])
    def test_scaled_count(self, count, scale, expected):
        assert scaled_count(count, scale) == expected

    def test_small_scale_keeps_every_class(self, taxonomy):
        s = corpus_stats(generate_synthetic_corpus(taxonomy, seed=0, scale=0.01), taxonomy)
        assert min(s.per_fine.values()) == 1

    def test_rejects_nonpositive_scale(self, taxonomy):
        with pytest.raises(ValueError):
            generate_synthetic_corpus(taxonomy, seed=0, scale=0)

    def test_records_validate(self, corpus_small, taxonomy, tmp_path):
        p = tmp_path / "c.jsonl"
        save_corpus(corpus_small, p)
        assert load_corpus(p, taxonomy) == corpus_small


class TestStopwords:
    @pytest.mark.parametrize("content, expected", [("a\nb\n", {"a", "b"}), ("# note\nx\n", {"x"}),
                                                   ("x\nx\n", {"x"}), ("  y  \n\n", {"y"})])
    def test_parse(self, tmp_path, content, expected):
        p = tmp_path / "s.txt"
        p.write_text(content, encoding="utf-8")
        assert set(load_stopwords(p).words) == expected

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError):
            load_stopwords(tmp_path / "absent.txt")

    def test_bad_utf8(self, tmp_path):
        p = tmp_path / "s.txt"
        p.write_bytes(b"\xc3\x28\n")
        with pytest.raises(CorpusError):
            load_stopwords(p)


texts = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1).filter(lambda t: t.strip())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(texts, st.sampled_from(["DATE", "CITY", "EXPRESSION", "ENTITY/OTHER"])), max_size=8))
def test_save_load_round_trip(tmp_path_factory, items):
    from qcbench.corpus import default_taxonomy

    tax = default_taxonomy()
    recs = [QuestionRecord(f"id{i}", t, tax.fine_to_coarse[f], f) for i, (t, f) in enumerate(items)]
    p = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_corpus(recs, p)
    assert load_corpus(p, tax) == recs
