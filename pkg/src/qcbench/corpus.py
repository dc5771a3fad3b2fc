"""Question records, the two-layer answer-type taxonomy, and corpus I/O.

Corpora are UTF-8 JSON Lines files, one object per line with the keys
``id``, ``text``, ``coarse`` and ``fine``.  Stop-word lists are plain UTF-8
text, one token per line, with ``#`` starting a comment line.

The synthetic generator stands in for an unpublished Bengali corpus: it
reproduces the per-class counts of the reference taxonomy and builds
question texts from interrogatives, class keywords, shared entity names
and function-word filler.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CorpusError

# (coarse, fine, count) in reference order.  Fine names that occur under two
# coarse parents are stored qualified as "PARENT/NAME".
_TABLE = (
    ("ENTITY", (
        ("SUBSTANCE", 20), ("SYMBOL", 11), ("CURRENCY", 24), ("TERM", 15),
        ("WORD", 20), ("LANGUAGE", 30), ("COLOR", 15), ("RELIGION", 15),
        ("SPORT", 10), ("BODY", 10), ("FOOD", 11), ("TECHNIQUE", 10),
        ("PRODUCT", 10), ("DISEASE", 10), ("ENTITY/OTHER", 22), ("LETTER", 10),
        ("VEHICLE", 11), ("PLANT", 12), ("CREATIVE", 216), ("INSTRUMENT", 10),
        ("ANIMAL", 10), ("EVENT", 10),
    )),
    ("NUMERIC", (
        ("COUNT", 213), ("DISTANCE", 13), ("CODE", 10), ("TEMPERATURE", 13),
        ("WEIGHT", 20), ("MONEY", 10), ("PERCENT", 27), ("PERIOD", 33),
        ("NUMERIC/OTHER", 34), ("DATE", 452), ("SPEED", 10), ("SIZE", 54),
    )),
    ("HUMAN", (
        ("INDIVIDUAL", 618), ("GROUP", 18), ("HUMAN/DESCRIPTION", 23), ("TITLE", 10),
    )),
    ("LOCATION", (
        ("MOUNTAIN", 32), ("COUNTRY", 125), ("STATE", 98), ("LOCATION/OTHER", 121),
        ("CITY", 274),
    )),
    # DEFINITION is listed as 153, which overshoots the coarse total of 248 by
    # exactly 10; 143 restores the coarse sum and the 3500 grand total.
    ("DESCRIPTION", (
        ("DEFINITION", 143), ("REASON", 44), ("MANNER", 22),
        ("DESCRIPTION/DESCRIPTION", 39),
    )),
    ("ABBREVIATION", (
        ("ABBREVIATION", 519), ("EXPRESSION", 13),
    )),
)


@dataclass(frozen=True)
class Taxonomy:
    coarse_classes: tuple[str, ...]
    fine_classes: tuple[str, ...]
    fine_to_coarse: Mapping[str, str]
    reference_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.coarse_classes)) != len(self.coarse_classes):
            raise CorpusError("duplicate coarse class name")
        if len(set(self.fine_classes)) != len(self.fine_classes):
            raise CorpusError("duplicate fine class name")
        for fine in self.fine_classes:
            parent = self.fine_to_coarse.get(fine)
            if parent not in self.coarse_classes:
                raise CorpusError(f"fine class {fine!r} has no valid coarse parent")

    def children(self, coarse: str) -> tuple[str, ...]:
        return tuple(f for f in self.fine_classes if self.fine_to_coarse[f] == coarse)

    def classes(self, granularity: str) -> tuple[str, ...]:
        if granularity == "coarse":
            return self.coarse_classes
        if granularity == "fine":
            return self.fine_classes
        raise ValueError(f"unknown granularity {granularity!r}")


def default_taxonomy() -> Taxonomy:
    """The 6-coarse taxonomy with its reference class counts."""
    coarse = tuple(c for c, _ in _TABLE)
    fine = []
    parent = {}
    counts = {}
    for c, children in _TABLE:
        for name, n in children:
            fine.append(name)
            parent[name] = c
            counts[name] = n
    return Taxonomy(coarse, tuple(fine), parent, counts)


@dataclass(frozen=True)
class QuestionRecord:
    id: str
    text: str
    coarse: str
    fine: str

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "text": self.text, "coarse": self.coarse, "fine": self.fine},
            ensure_ascii=False,
        )

    def label(self, granularity: str) -> str:
        return self.coarse if granularity == "coarse" else self.fine


def validate_record(record: QuestionRecord, taxonomy: Taxonomy) -> None:
    if not record.text.strip():
        raise CorpusError(f"record {record.id!r}: empty text")
    if record.coarse not in taxonomy.coarse_classes:
        raise CorpusError(f"record {record.id!r}: unknown coarse label {record.coarse!r}")
    if record.fine not in taxonomy.fine_to_coarse:
        raise CorpusError(f"record {record.id!r}: unknown fine label {record.fine!r}")
    if taxonomy.fine_to_coarse[record.fine] != record.coarse:
        raise CorpusError(
            f"record {record.id!r}: fine/coarse mismatch, {record.fine!r} belongs to "
            f"{taxonomy.fine_to_coarse[record.fine]!r}, not {record.coarse!r}"
        )


def load_corpus(path, taxonomy: Taxonomy | None = None) -> list[QuestionRecord]:
    """Read and validate a JSON Lines corpus, keeping file order.

    Blank lines are skipped.  Errors carry the 1-based line number.
    """
    taxonomy = taxonomy or default_taxonomy()
    records = []
    seen = set()
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"corpus {path} is not valid UTF-8: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise CorpusError(f"line {lineno}: expected a JSON object")
        try:
            rec = QuestionRecord(*(obj[k] for k in ("id", "text", "coarse", "fine")))
        except KeyError as exc:
            raise CorpusError(f"line {lineno}: missing key {exc.args[0]!r}") from exc
        if not all(isinstance(v, str) for v in (rec.id, rec.text, rec.coarse, rec.fine)):
            raise CorpusError(f"line {lineno}: all fields must be strings")
        try:
            validate_record(rec, taxonomy)
        except CorpusError as exc:
            raise CorpusError(f"line {lineno}: {exc}") from None
        if rec.id in seen:
            raise CorpusError(f"line {lineno}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    return records


def save_corpus(records: Iterable[QuestionRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


@dataclass(frozen=True)
class CorpusStats:
    total: int
    per_coarse: dict[str, int]
    per_fine: dict[str, int]


def corpus_stats(records: Sequence[QuestionRecord], taxonomy: Taxonomy | None = None) -> CorpusStats:
    taxonomy = taxonomy or default_taxonomy()
    per_coarse = dict.fromkeys(taxonomy.coarse_classes, 0)
    per_fine = dict.fromkeys(taxonomy.fine_classes, 0)
    for rec in records:
        per_coarse[rec.coarse] += 1
        per_fine[rec.fine] += 1
    return CorpusStats(len(records), per_coarse, per_fine)


@dataclass(frozen=True)
class StopWordList:
    words: frozenset

    def __contains__(self, token) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)


def parse_stopwords(text: str) -> StopWordList:
    words = set()
    for line in text.splitlines():
        tok = line.strip()
        if not tok or tok.startswith("#"):
            continue
        words.add(tok)
    return StopWordList(frozenset(words))


def load_stopwords(path) -> StopWordList:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CorpusError(f"cannot read stop-word file {path}: {exc}") from exc
    try:
        return parse_stopwords(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise CorpusError(f"stop-word file {path} is not valid UTF-8: {exc}") from exc


def save_stopwords(stops: StopWordList, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for w in sorted(stops.words):
            fh.write(w + "\n")


# --- synthetic corpus -------------------------------------------------------

_INTERROGATIVES = {
    "ENTITY": ("কোন", "কী", "কোনটি"),
    "NUMERIC": ("কত", "কতটি", "কবে", "কতজন"),
    "HUMAN": ("কে", "কার", "কারা"),
    "LOCATION": ("কোথায়", "কোন", "কোথা"),
    "DESCRIPTION": ("কেন", "কিভাবে", "কী"),
    "ABBREVIATION": ("পূর্ণরূপ", "সংক্ষেপ", "কী"),
}

# Function words shared by every class; these make up the generated stop list
# together with the most generic interrogatives.
_FILLER = (
    "এর", "ও", "এবং", "হয়", "ছিল", "সেই", "এই", "তার", "করে", "থেকে",
    "জন্য", "একটি", "সাথে", "বলা", "যায়", "আছে", "হলো", "টি", "কি", "তা",
    "যে", "না", "কোনো", "প্রথম", "সবচেয়ে",
)
_STOP_INTERROGATIVES = ("কী", "কি", "কোন", "কে")

_ENTITIES = (
    "বাংলাদেশ", "ঢাকা", "ভারত", "পদ্মা", "রবীন্দ্রনাথ", "নজরুল", "সুন্দরবন",
    "চট্টগ্রাম", "মেঘনা", "সিলেট", "কলকাতা", "হিমালয়", "বঙ্গোপসাগর", "জাতিসংঘ",
    "পৃথিবী", "এশিয়া", "ইউরোপ", "যমুনা", "রাজশাহী", "খুলনা",
)

_CONSONANTS = "কখগঘচছজঝটঠডঢতথদধনপফবভমরলশষসহ"
_VOWEL_SIGNS = ("", "া", "ি", "ী", "ু", "ে", "ো")
_LEXICON_SEED = 3500
_KEYWORDS_PER_FINE = 6
_KEYWORDS_PER_COARSE = 4


def _pseudo_word(rng, taken):
    while True:
        n_syl = int(rng.integers(2, 4))
        word = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWEL_SIGNS[rng.integers(len(_VOWEL_SIGNS))]
            for _ in range(n_syl)
        )
        if word not in taken:
            taken.add(word)
            return word


def _build_lexicon(taxonomy: Taxonomy):
    # Fixed seed: the class vocabulary does not depend on the corpus seed.
    rng = np.random.default_rng(_LEXICON_SEED)
    taken = set(_FILLER) | set(_ENTITIES)
    for ws in _INTERROGATIVES.values():
        taken.update(ws)
    coarse_kw = {c: tuple(_pseudo_word(rng, taken) for _ in range(_KEYWORDS_PER_COARSE))
                 for c in taxonomy.coarse_classes}
    fine_kw = {f: tuple(_pseudo_word(rng, taken) for _ in range(_KEYWORDS_PER_FINE))
               for f in taxonomy.fine_classes}
    return coarse_kw, fine_kw


def synthetic_stopwords() -> StopWordList:
    """Stop list matching the filler vocabulary of :func:`generate_synthetic_corpus`."""
    return StopWordList(frozenset(_FILLER) | frozenset(_STOP_INTERROGATIVES))


def scaled_count(count: int, scale: float) -> int:
    # round half up, never below one record per class
    return max(1, int(math.floor(count * scale + 0.5)))


def _interrogatives_for(coarse):
    return _INTERROGATIVES.get(coarse, ("কী",))


def _question_text(rng, coarse, fine, coarse_kw, fine_kw, taxonomy):
    fine_pool = fine_kw[fine]
    if rng.random() < 0.12:
        # confusable keyword from another class
        other = taxonomy.fine_classes[rng.integers(len(taxonomy.fine_classes))]
        fine_pool = fine_kw[other]
    qword_class = coarse
    if rng.random() < 0.10:
        qword_class = taxonomy.coarse_classes[rng.integers(len(taxonomy.coarse_classes))]
    qwords = _interrogatives_for(qword_class)

    content = [fine_pool[rng.integers(len(fine_pool))]]
    if rng.random() < 0.4:
        content.append(fine_pool[rng.integers(len(fine_pool))])
    if rng.random() < 0.6:
        pool = coarse_kw[coarse]
        content.append(pool[rng.integers(len(pool))])
    subject = [_ENTITIES[rng.integers(len(_ENTITIES))]]
    if rng.random() < 0.3:
        subject.append(_ENTITIES[rng.integers(len(_ENTITIES))])

    tokens = subject + [_FILLER[rng.integers(len(_FILLER))] for _ in range(rng.integers(0, 3))]
    tokens += content
    tokens += [_FILLER[rng.integers(len(_FILLER))] for _ in range(rng.integers(1, 4))]
    qword = qwords[rng.integers(len(qwords))]
    if rng.random() < 0.3:
        tokens.insert(int(rng.integers(len(tokens) + 1)), qword)
    else:
        tokens.append(qword)
    if rng.random() < 0.5:
        tokens.append(_FILLER[rng.integers(len(_FILLER))])
    end = "?" if rng.random() < 0.8 else "।"
    return " ".join(tokens) + end


def generate_synthetic_corpus(taxonomy: Taxonomy | None = None, seed: int = 0,
                              scale: float = 1.0) -> list[QuestionRecord]:
    """Deterministic stand-in corpus with reference class proportions.

    Per fine class the record count is ``round(scale * reference_count)``
    (half up, minimum 1).  Records are shuffled and given ids ``q00001``...
    """
    taxonomy = taxonomy or default_taxonomy()
    if not scale > 0:
        raise ValueError("scale must be positive")
    coarse_kw, fine_kw = _build_lexicon(taxonomy)
    rng = np.random.default_rng(seed)
    labelled = []
    for fine in taxonomy.fine_classes:
        coarse = taxonomy.fine_to_coarse[fine]
        n = scaled_count(taxonomy.reference_counts.get(fine, 1), scale)
        for _ in range(n):
            labelled.append((coarse, fine, _question_text(rng, coarse, fine, coarse_kw, fine_kw, taxonomy)))
    order = rng.permutation(len(labelled))
    width = max(5, len(str(len(labelled))))
    return [
        QuestionRecord(f"q{i + 1:0{width}d}", labelled[j][2], labelled[j][0], labelled[j][1])
        for i, j in enumerate(order)
    ]
