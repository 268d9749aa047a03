"""Light filtering of peripheral sentences and alias normalization of names.

Light filtering scores every sentence by its distance to a small support set
of the most central sentences in the document and drops the most distant
fraction of the body. Alias normalization finds capitalized-run mentions,
clusters shorter mentions under the longer mention that contains them, and
rewrites every member to the cluster's canonical form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Document, Sentence, Token

__all__ = [
    "FilterConfig",
    "SentenceVector",
    "AliasCluster",
    "sentence_vector",
    "euclidean_distance",
    "support_set",
    "light_filter",
    "normalize_coreferences",
    "preprocess_document",
]


@dataclass(frozen=True)
class FilterConfig:
    support_size: int = 5
    removal_fraction: float = 0.10

    def __post_init__(self) -> None:
        if self.support_size < 1:
            raise ValueError("support_size must be >= 1")
        if not 0.0 <= self.removal_fraction < 1.0:
            raise ValueError("removal_fraction must be in [0, 1)")


@dataclass
class SentenceVector:
    """Sparse term-frequency vector over a sentence's content words.

    Stopwords and punctuation tokens carry no weight; an all-stopword
    sentence yields an empty (zero) vector with ``flagged`` set.
    """

    weights: dict[str, float]
    dim: int
    flagged: bool = False


@dataclass
class AliasCluster:
    canonical: str
    members: set[str] = field(default_factory=set)


def _content_terms(sentence: Sentence) -> list[str]:
    return [
        t.lower
        for t in sentence.tokens
        if t.is_alphabetic and not t.is_stopword
    ]


def document_vocabulary(doc: Document) -> frozenset[str]:
    vocab: set[str] = set()
    for s in doc.sentences:
        vocab.update(_content_terms(s))
    return frozenset(vocab)


def sentence_vector(sentence: Sentence, doc_vocab: frozenset[str]) -> SentenceVector:
    weights: dict[str, float] = {}
    for term in _content_terms(sentence):
        weights[term] = weights.get(term, 0.0) + 1.0
    return SentenceVector(weights=weights, dim=len(doc_vocab), flagged=not weights)


def euclidean_distance(x: SentenceVector, y: SentenceVector) -> float:
    total = 0.0
    # sorted so summation order (and thus the float result) never depends on
    # hash randomization; ties in downstream rankings stay reproducible
    for term in sorted(x.weights.keys() | y.weights.keys()):
        diff = x.weights.get(term, 0.0) - y.weights.get(term, 0.0)
        total += diff * diff
    return math.sqrt(total)


def _centroid(vectors: list[SentenceVector], dim: int) -> SentenceVector:
    sums: dict[str, float] = {}
    for v in vectors:
        for term, w in v.weights.items():
            sums[term] = sums.get(term, 0.0) + w
    n = max(len(vectors), 1)
    return SentenceVector(weights={t: w / n for t, w in sums.items()}, dim=dim)


def support_set(doc: Document, cfg: FilterConfig) -> set[int]:
    """Indices of the K sentences nearest the document centroid.

    Ties go to the lower sentence index. A document with fewer than K
    sentences is its own support set.
    """
    vocab = document_vocabulary(doc)
    vectors = [sentence_vector(s, vocab) for s in doc.sentences]
    if len(vectors) <= cfg.support_size:
        return {s.index for s in doc.sentences}
    centroid = _centroid(vectors, len(vocab))
    ranked = sorted(
        (euclidean_distance(v, centroid), s.index)
        for s, v in zip(doc.sentences, vectors)
    )
    return {idx for _, idx in ranked[: cfg.support_size]}


def light_filter(doc: Document, cfg: FilterConfig | None = None) -> Document:
    """Drop the floor(fraction * N_body) body sentences farthest from the support set.

    Sentence relevance is the minimum distance to any support-set sentence.
    The title sentence is never removed. Survivors keep their original order
    and get contiguous indices. Among equally distant sentences the later one
    is removed first.
    """
    if cfg is None:
        cfg = FilterConfig()
    vocab = document_vocabulary(doc)
    vectors = {s.index: sentence_vector(s, vocab) for s in doc.sentences}
    support = support_set(doc, cfg)

    body = [s for s in doc.sentences if not s.from_title]
    n_remove = math.floor(cfg.removal_fraction * len(body))
    if n_remove == 0:
        return doc.with_sentences(list(doc.sentences))

    def relevance(s: Sentence) -> float:
        return min(
            euclidean_distance(vectors[s.index], vectors[sup]) for sup in support
        )

    doomed_order = sorted(body, key=lambda s: (-relevance(s), -s.index))
    doomed = {s.index for s in doomed_order[:n_remove]}

    survivors = []
    for s in doc.sentences:
        if s.index in doomed:
            continue
        survivors.append(
            Sentence(index=len(survivors), tokens=s.tokens, from_title=s.from_title)
        )
    return doc.with_sentences(survivors)


def _is_capitalized(tok: Token) -> bool:
    return tok.is_alphabetic and tok.surface[:1].isupper()


def _capitalized_runs(sentence: Sentence) -> list[tuple[int, int]]:
    """Maximal (start, end) runs of capitalized alphabetic tokens."""
    runs = []
    i = 0
    tokens = sentence.tokens
    while i < len(tokens):
        if _is_capitalized(tokens[i]):
            j = i
            while j < len(tokens) and _is_capitalized(tokens[j]):
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def _contiguous_subseq(a: tuple[str, ...], b: tuple[str, ...]) -> bool:
    if len(a) > len(b):
        return False
    return any(b[i : i + len(a)] == a for i in range(len(b) - len(a) + 1))


@dataclass
class _Mention:
    sent_index: int
    start: int
    end: int
    lower: tuple[str, ...]
    surface: str


def _detect_mentions(doc: Document) -> list[_Mention]:
    mid_runs: list[_Mention] = []
    initial_runs: list[_Mention] = []
    for s in doc.sentences:
        for start, end in _capitalized_runs(s):
            m = _Mention(
                sent_index=s.index,
                start=start,
                end=end,
                lower=tuple(t.lower for t in s.tokens[start:end]),
                surface=" ".join(t.surface for t in s.tokens[start:end]),
            )
            (initial_runs if start == 0 else mid_runs).append(m)
    # A sentence-initial run counts as a mention only when its words are seen
    # capitalized mid-sentence somewhere in the document: either the run sits
    # inside a mid-sentence mention or a mid-sentence mention sits inside it.
    mid_forms = {m.lower for m in mid_runs}
    confirmed_initial = [
        m
        for m in initial_runs
        if any(
            _contiguous_subseq(m.lower, f) or _contiguous_subseq(f, m.lower)
            for f in mid_forms
        )
    ]
    return mid_runs + confirmed_initial


def build_alias_clusters(doc: Document) -> tuple[list[AliasCluster], dict[tuple[str, ...], str]]:
    """Cluster mention forms by unambiguous contiguous-subsequence containment.

    Returns the clusters and a rewrite map from member lower forms to the
    canonical surface of their cluster. Forms contained in more than one
    cluster are ambiguous and absent from the map.
    """
    mentions = _detect_mentions(doc)
    # Representative surface per distinct form: first occurrence in doc order.
    rep_surface: dict[tuple[str, ...], str] = {}
    for m in sorted(mentions, key=lambda m: (m.sent_index, m.start)):
        rep_surface.setdefault(m.lower, m.surface)

    forms = list(rep_surface)
    maximal = [
        f
        for f in forms
        if not any(f != g and _contiguous_subseq(f, g) for g in forms)
    ]
    clusters = {f: AliasCluster(canonical=rep_surface[f], members={rep_surface[f]}) for f in maximal}

    rewrite: dict[tuple[str, ...], str] = {}
    for f in forms:
        if f in clusters:
            continue
        supers = [g for g in maximal if _contiguous_subseq(f, g)]
        if len(supers) == 1:
            cluster = clusters[supers[0]]
            cluster.members.add(rep_surface[f])
            rewrite[f] = cluster.canonical
    return list(clusters.values()), rewrite


def normalize_coreferences(doc: Document) -> Document:
    """Rewrite every aliased name mention to its cluster's longest form."""
    _, rewrite = build_alias_clusters(doc)
    if not rewrite:
        return doc.with_sentences(list(doc.sentences))

    mentions_by_sentence: dict[int, list[_Mention]] = {}
    for m in _detect_mentions(doc):
        if m.lower in rewrite:
            mentions_by_sentence.setdefault(m.sent_index, []).append(m)

    from .corpus import default_stopwords

    stopwords = default_stopwords()
    new_sentences: list[Sentence] = []
    for s in doc.sentences:
        hits = sorted(mentions_by_sentence.get(s.index, ()), key=lambda m: m.start)
        if not hits:
            new_sentences.append(s)
            continue
        tokens: list[Token] = []
        pos = 0
        for m in hits:
            tokens.extend(s.tokens[pos : m.start])
            span = (s.tokens[m.start].char_span[0], s.tokens[m.end - 1].char_span[1])
            for word in rewrite[m.lower].split(" "):
                tokens.append(
                    Token(
                        surface=word,
                        lower=word.lower(),
                        is_stopword=word.lower() in stopwords,
                        char_span=span,
                    )
                )
            pos = m.end
        tokens.extend(s.tokens[pos:])
        new_sentences.append(
            Sentence(index=s.index, tokens=tuple(tokens), from_title=s.from_title)
        )
    return doc.with_sentences(new_sentences)


def preprocess_document(
    doc: Document,
    cfg: FilterConfig | None = None,
    coref: bool = True,
    filter_sentences: bool = True,
    filter_first: bool = False,
) -> Document:
    """Run the preprocessing pipeline; alias normalization first by default."""
    steps = [
        lambda d: normalize_coreferences(d) if coref else d,
        lambda d: light_filter(d, cfg) if filter_sentences else d,
    ]
    if filter_first:
        steps.reverse()
    for step in steps:
        doc = step(doc)
    return doc
