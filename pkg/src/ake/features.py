"""Per-candidate feature computation.

Feature groups, selectable by mask:

* ``baseline``: tf-idf, relative first-occurrence position, word count
* ``ss``: five shallow-semantic dims (chars, named entities, capitals,
  part-of-speech pattern id, log n-gram frequency)
* ``tc``: one-hot over the ten document categories
* ``rs``: counts of the eleven rhetorical signal types in the containing
  sentence
* ``sc``: 85 binary sub-category memberships from the gazetteer

Disabled groups are omitted from the flat vector, not zeroed, so the
classifier's input dimensionality depends on the mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import CATEGORIES, CandidatePhrase, Document, Token, generate_candidates
from .errors import DataError
from .ngram_lm import NGramStore

FEATURE_GROUPS = ("baseline", "ss", "tc", "rs", "sc")

SIGNAL_CATEGORIES = (
    "continuation",
    "change_of_direction",
    "sequence",
    "illustration",
    "emphasis",
    "cause_condition_result",
    "spatial",
    "comparison_contrast",
    "conclusion",
    "fuzz",
    "nonword_emphasis",
)

_POS_TAGS = ("noun", "adj", "verb", "adv", "other")

# Lowercase tokens allowed inside a capitalized run ("United States of America").
_NE_CONNECTORS = frozenset({"of", "de"})


def parse_mask(mask: str | Iterable[str]) -> tuple[str, ...]:
    """Normalize a mask string like ``"baseline,ss,tc"`` to canonical group order."""
    if isinstance(mask, str):
        parts = [p.strip().lower() for p in mask.split(",") if p.strip()]
    else:
        parts = [p.strip().lower() for p in mask]
    unknown = [p for p in parts if p not in FEATURE_GROUPS]
    if unknown:
        raise DataError(
            f"unknown feature group(s) {unknown}; valid groups: {', '.join(FEATURE_GROUPS)}"
        )
    if not parts:
        raise DataError("feature mask must enable at least one group")
    chosen = set(parts)
    return tuple(g for g in FEATURE_GROUPS if g in chosen)


# ---------------------------------------------------------------------------
# tf-idf


@dataclass
class DocumentFrequencies:
    """Per-corpus document frequencies of candidate phrases."""

    doc_count: int
    df: dict[str, int]

    @classmethod
    def from_documents(
        cls, docs: Sequence[Document], max_len: int = 4
    ) -> "DocumentFrequencies":
        df: dict[str, int] = {}
        for doc in docs:
            for cand in generate_candidates(doc, max_len):
                df[cand.normalized] = df.get(cand.normalized, 0) + 1
        return cls(doc_count=len(docs), df=df)


def tfidf_score(
    tf: int, doc_freq: int, doc_count: int, log_base: float = math.e
) -> float:
    if tf == 0:
        return 0.0
    idf = math.log(doc_count / (1 + doc_freq), log_base)
    return tf * idf


def tfidf(
    candidate: CandidatePhrase,
    dfs: DocumentFrequencies,
    log_base: float = math.e,
) -> float:
    """tf(t, d) * log(|D| / (1 + df(t))); negative when t is near-ubiquitous."""
    return tfidf_score(
        len(candidate.occurrences),
        dfs.df.get(candidate.normalized, 0),
        dfs.doc_count,
        log_base,
    )


# ---------------------------------------------------------------------------
# Shallow semantics


class PosTagger:
    """Coarse 5-tag tagger: bundled word list first, then suffix rules.

    Unknown alphabetic words default to noun, the dominant tag among
    key-phrase words; non-alphabetic tokens tag as other.
    """

    _SUFFIX_RULES = (
        ("ly", "adv"),
        ("tion", "noun"),
        ("sion", "noun"),
        ("ment", "noun"),
        ("ness", "noun"),
        ("ance", "noun"),
        ("ence", "noun"),
        ("ship", "noun"),
        ("ism", "noun"),
        ("ity", "noun"),
        ("ous", "adj"),
        ("ful", "adj"),
        ("ive", "adj"),
        ("able", "adj"),
        ("ible", "adj"),
        ("ish", "adj"),
        ("less", "adj"),
        ("ical", "adj"),
        ("ize", "verb"),
        ("ise", "verb"),
        ("ify", "verb"),
        ("ing", "verb"),
        ("ed", "verb"),
    )

    def __init__(self, lexicon: dict[str, str]):
        self.lexicon = lexicon

    @classmethod
    def load(cls, path: str | Path | None = None) -> "PosTagger":
        if path is None:
            text = resources.files("ake.data").joinpath("pos_lexicon.txt").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        lexicon = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, tag = line.split()
            if tag not in _POS_TAGS:
                raise DataError(f"bad POS tag {tag!r} for word {word!r}")
            lexicon[word] = tag
        return cls(lexicon)

    def tag(self, token: Token | str) -> str:
        lower = token if isinstance(token, str) else token.lower
        hit = self.lexicon.get(lower)
        if hit:
            return hit
        if not any(c.isalpha() for c in lower):
            return "other"
        for suffix, tag in self._SUFFIX_RULES:
            if len(lower) > len(suffix) + 2 and lower.endswith(suffix):
                return tag
        return "noun"

    def tag_phrase(self, candidate: CandidatePhrase) -> tuple[str, ...]:
        return tuple(self.tag(t) for t in candidate.tokens)


class PatternTable:
    """POS-pattern ids, assigned in first-seen order while training.

    Id 0 is reserved for patterns never seen during training.
    """

    def __init__(self, patterns: Iterable[tuple[str, ...]] = ()):
        self._ids: dict[tuple[str, ...], int] = {}
        for p in patterns:
            self._ids.setdefault(tuple(p), len(self._ids) + 1)

    def observe(self, pattern: tuple[str, ...]) -> int:
        return self._ids.setdefault(pattern, len(self._ids) + 1)

    def lookup(self, pattern: tuple[str, ...]) -> int:
        return self._ids.get(pattern, 0)

    def __len__(self) -> int:
        return len(self._ids)

    def to_list(self) -> list[list[str]]:
        return [list(p) for p, _ in sorted(self._ids.items(), key=lambda kv: kv[1])]

    @classmethod
    def from_list(cls, patterns: Iterable[Sequence[str]]) -> "PatternTable":
        return cls(tuple(p) for p in patterns)


def _is_capitalized(tok: Token) -> bool:
    return tok.is_alphabetic and tok.surface[:1].isupper()


def count_named_entities(
    tokens: Sequence[Token], stopwords: frozenset[str] | None = None
) -> int:
    """Count maximal capitalized runs that look like names.

    Runs may bridge the connectors in ``_NE_CONNECTORS`` when capitalized
    text continues after them. A lone capitalized stopword is not a name.
    """
    if stopwords is None:
        from .corpus import default_stopwords

        stopwords = default_stopwords()
    count = 0
    i = 0
    n = len(tokens)
    while i < n:
        if not _is_capitalized(tokens[i]):
            i += 1
            continue
        j = i + 1
        while j < n:
            if _is_capitalized(tokens[j]):
                j += 1
                continue
            if tokens[j].lower in _NE_CONNECTORS:
                k = j + 1
                while k < n and tokens[k].lower in _NE_CONNECTORS:
                    k += 1
                if k < n and _is_capitalized(tokens[k]):
                    j = k + 1
                    continue
            break
        run_len = j - i
        if run_len > 1 or tokens[i].lower not in stopwords:
            count += 1
        i = j
    return count


def shallow_semantic(
    candidate: CandidatePhrase,
    store: NGramStore | None,
    tagger: PosTagger,
    pattern_table: PatternTable,
    train: bool = False,
) -> tuple[int, int, int, int, float]:
    """(n_chars, n_named_entities, n_capitals, pos_pattern_id, ngram_logfreq)."""
    surface = candidate.surface
    n_chars = len(surface)
    n_entities = count_named_entities(candidate.tokens)
    n_capitals = sum(1 for c in surface if c.isupper())
    pattern = tagger.tag_phrase(candidate)
    pattern_id = pattern_table.observe(pattern) if train else pattern_table.lookup(pattern)
    if store is not None and len(candidate.tokens) <= store.order:
        freq = store.lookup([t.lower for t in candidate.tokens])
    else:
        freq = 0.0
    return n_chars, n_entities, n_capitals, pattern_id, math.log1p(freq)


# ---------------------------------------------------------------------------
# Rhetorical signals


@dataclass
class SignalLexicon:
    """Eleven lists of lowercase cue phrases, one per signal category."""

    cues: dict[str, list[str]]
    _by_first: dict[str, list[tuple[tuple[str, ...], str]]] = field(
        init=False, repr=False, default_factory=dict
    )
    _symbols: tuple[str, ...] = field(init=False, repr=False, default=())

    def __post_init__(self) -> None:
        missing = [c for c in SIGNAL_CATEGORIES if c not in self.cues]
        extra = [c for c in self.cues if c not in SIGNAL_CATEGORIES]
        if missing or extra:
            raise DataError(
                f"signal lexicon must define exactly these categories: "
                f"{', '.join(SIGNAL_CATEGORIES)} (missing={missing}, extra={extra})"
            )
        for category, phrases in self.cues.items():
            if category == "nonword_emphasis":
                self._symbols = tuple(phrases)
                continue
            for phrase in phrases:
                words = tuple(phrase.lower().split())
                self._by_first.setdefault(words[0], []).append((words, category))
        for bucket in self._by_first.values():
            bucket.sort(key=lambda it: -len(it[0]))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "SignalLexicon":
        if path is None:
            text = resources.files("ake.data").joinpath("signal_lexicon.txt").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        cues: dict[str, list[str]] = {}
        section = None
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                cues[section] = []
                continue
            if section is None:
                raise DataError("cue phrase before any [section] header")
            cues[section].append(line.lower())
        return cls(cues=cues)

    def count_signals(self, tokens: Sequence[Token]) -> tuple[int, ...]:
        """Counts per category; word cues use longest-match over token runs,
        symbol cues match anywhere in the raw text."""
        lowers = [t.lower for t in tokens]
        counts = dict.fromkeys(SIGNAL_CATEGORIES, 0)
        i = 0
        while i < len(lowers):
            matched = 0
            for words, category in self._by_first.get(lowers[i], ()):
                if tuple(lowers[i : i + len(words)]) == words:
                    counts[category] += 1
                    matched = len(words)
                    break
            i += matched if matched else 1
        text = " ".join(t.surface for t in tokens)
        counts["nonword_emphasis"] = sum(text.count(sym) for sym in self._symbols)
        return tuple(counts[c] for c in SIGNAL_CATEGORIES)


def rhetorical_signals(sentence, lexicon: SignalLexicon) -> tuple[int, ...]:
    return lexicon.count_signals(sentence.tokens)


# ---------------------------------------------------------------------------
# Category features


def load_subcategory_labels(path: str | Path | None = None) -> tuple[str, ...]:
    if path is None:
        text = resources.files("ake.data").joinpath("subcategories.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


@dataclass
class Gazetteer:
    """Normalized phrase -> sub-category labels, over a fixed label universe."""

    labels: tuple[str, ...]
    phrase_labels: dict[str, frozenset[str]]

    @classmethod
    def load(
        cls,
        path: str | Path | None = None,
        labels: tuple[str, ...] | None = None,
    ) -> "Gazetteer":
        if labels is None:
            labels = load_subcategory_labels()
        if path is None:
            text = resources.files("ake.data").joinpath("gazetteer.tsv").read_text("utf-8")
        else:
            p = Path(path)
            if not p.exists():
                raise DataError(f"gazetteer file not found: {p}")
            text = p.read_text("utf-8")
        universe = set(labels)
        phrase_labels: dict[str, frozenset[str]] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                phrase, label_field = line.split("\t")
            except ValueError as exc:
                raise DataError(f"gazetteer line {lineno}: expected phrase<TAB>labels") from exc
            entry_labels = frozenset(l.strip() for l in label_field.split(","))
            bad = entry_labels - universe
            if bad:
                raise DataError(
                    f"gazetteer line {lineno}: unknown sub-category label(s) {sorted(bad)}"
                )
            phrase_labels[phrase.strip().lower()] = entry_labels
        return cls(labels=labels, phrase_labels=phrase_labels)

    def subcategory_bits(self, normalized: str) -> tuple[int, ...]:
        hit = self.phrase_labels.get(normalized, frozenset())
        return tuple(1 if label in hit else 0 for label in self.labels)


def category_features(doc: Document) -> tuple[int, ...]:
    return tuple(1 if c == doc.category else 0 for c in CATEGORIES)


def subcategory_features(
    candidate: CandidatePhrase, gazetteer: Gazetteer
) -> tuple[int, ...]:
    return gazetteer.subcategory_bits(candidate.normalized)


# ---------------------------------------------------------------------------
# Assembly


@dataclass
class FeatureVector:
    tfidf: float
    first_occurrence: float
    phrase_len_words: int
    n_chars: int = 0
    n_named_entities: int = 0
    n_capitals: int = 0
    pos_pattern_id: int = 0
    ngram_logfreq: float = 0.0
    top_category: tuple[int, ...] = (0,) * len(CATEGORIES)
    sub_categories: tuple[int, ...] = ()
    signals: tuple[int, ...] = (0,) * len(SIGNAL_CATEGORIES)

    def to_array(self, mask: tuple[str, ...]) -> np.ndarray:
        parts: list[float] = []
        if "baseline" in mask:
            parts += [self.tfidf, self.first_occurrence, float(self.phrase_len_words)]
        if "ss" in mask:
            parts += [
                float(self.n_chars),
                float(self.n_named_entities),
                float(self.n_capitals),
                float(self.pos_pattern_id),
                self.ngram_logfreq,
            ]
        if "tc" in mask:
            parts += [float(b) for b in self.top_category]
        if "rs" in mask:
            parts += [float(s) for s in self.signals]
        if "sc" in mask:
            parts += [float(b) for b in self.sub_categories]
        return np.asarray(parts, dtype=np.float64)


def feature_names(mask: tuple[str, ...], sub_labels: tuple[str, ...]) -> list[str]:
    names: list[str] = []
    if "baseline" in mask:
        names += ["tfidf", "first_occurrence", "phrase_len_words"]
    if "ss" in mask:
        names += ["n_chars", "n_named_entities", "n_capitals", "pos_pattern_id", "ngram_logfreq"]
    if "tc" in mask:
        names += [f"cat:{c}" for c in CATEGORIES]
    if "rs" in mask:
        names += [f"signal:{c}" for c in SIGNAL_CATEGORIES]
    if "sc" in mask:
        names += [f"sub:{l}" for l in sub_labels]
    return names


@dataclass
class FeatureResources:
    """Everything assemble() may need, bundled for convenience."""

    dfs: DocumentFrequencies
    tagger: PosTagger
    pattern_table: PatternTable
    lexicon: SignalLexicon | None = None
    gazetteer: Gazetteer | None = None
    store: NGramStore | None = None
    idf_log_base: float = math.e


def _doc_token_prefix(doc: Document) -> list[int]:
    prefix = [0]
    for s in doc.sentences:
        prefix.append(prefix[-1] + len(s.tokens))
    return prefix


def first_occurrence_position(candidate: CandidatePhrase, doc: Document) -> float:
    sent_idx, tok_off = candidate.occurrences[0]
    prefix = _doc_token_prefix(doc)
    total = prefix[-1]
    return (prefix[sent_idx] + tok_off) / total if total else 0.0


def assemble(
    candidate: CandidatePhrase,
    doc: Document,
    res: FeatureResources,
    mask: tuple[str, ...],
    train: bool = False,
) -> FeatureVector:
    """Compute the feature vector for one candidate.

    Baseline dims are always computed (extraction tie-breaks need them);
    groups outside the mask keep zero defaults. Rhetorical signals are
    counted in the sentence of the candidate's first occurrence.
    """
    for group in mask:
        if group not in FEATURE_GROUPS:
            raise DataError(f"unknown feature group {group!r}")
    fv = FeatureVector(
        tfidf=tfidf(candidate, res.dfs, res.idf_log_base),
        first_occurrence=first_occurrence_position(candidate, doc),
        phrase_len_words=len(candidate.tokens),
        sub_categories=(0,) * (len(res.gazetteer.labels) if res.gazetteer else 85),
    )
    if "ss" in mask:
        (
            fv.n_chars,
            fv.n_named_entities,
            fv.n_capitals,
            fv.pos_pattern_id,
            fv.ngram_logfreq,
        ) = shallow_semantic(candidate, res.store, res.tagger, res.pattern_table, train)
    if "tc" in mask:
        fv.top_category = category_features(doc)
    if "rs" in mask:
        if res.lexicon is None:
            raise DataError("rhetorical signal group enabled but no lexicon loaded")
        sent_idx = candidate.occurrences[0][0]
        fv.signals = rhetorical_signals(doc.sentences[sent_idx], res.lexicon)
    if "sc" in mask:
        if res.gazetteer is None:
            raise DataError("sub-category group enabled but no gazetteer loaded")
        fv.sub_categories = subcategory_features(candidate, res.gazetteer)
    return fv
