"""Document ingestion, sentence segmentation, tokenization and candidate phrases.

A corpus file is line-delimited JSON, one story per line, with fields
``id``, ``title``, ``body`` and ``category`` (one of the ten news categories
in :data:`CATEGORIES`).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import DataError

log = logging.getLogger(__name__)

CATEGORIES = (
    "Technology",
    "Crime",
    "Sports",
    "Health",
    "Art and Culture",
    "Fashion",
    "Science",
    "Business",
    "World Politics",
    "U.S. Politics",
)

# Words as alnum runs with internal apostrophes/hyphens, dotted acronyms
# ("U.S.") as single tokens, anything else one character at a time.
_TOKEN_RE = re.compile(r"(?:[A-Za-z]\.){2,}|[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*|\S")

_SENT_END_RE = re.compile(r"[.!?]+(?=\s+[\"'“]?[A-Z])")

# Final-word forms that keep a following period from ending the sentence.
_ABBREVIATIONS = frozenset(
    w.lower()
    for w in (
        "Mr Mrs Ms Dr Prof St Jr Sr vs etc e.g i.e cf al Inc Co Corp Ltd "
        "Gen Sen Rep Gov Capt Lt Col Sgt Mt No Fig Jan Feb Mar Apr Jun Jul "
        "Aug Sep Sept Oct Nov Dec"
    ).split()
)


@dataclass(frozen=True)
class Token:
    surface: str
    lower: str
    is_stopword: bool
    char_span: tuple[int, int]

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("empty token surface")
        if self.char_span[1] <= self.char_span[0]:
            raise ValueError(f"bad char_span {self.char_span}")

    @property
    def is_alphabetic(self) -> bool:
        return any(c.isalpha() for c in self.surface)

    @property
    def is_punctuation(self) -> bool:
        return not any(c.isalnum() for c in self.surface)


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]
    from_title: bool = False

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("sentence with no tokens")


@dataclass
class Document:
    id: str
    title: str
    body: str
    category: str
    sentences: list[Sentence] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise DataError(
                f"unknown category {self.category!r}; valid categories are: "
                + ", ".join(CATEGORIES)
            )

    @property
    def token_count(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)

    def with_sentences(self, sentences: list[Sentence]) -> "Document":
        return replace(self, sentences=sentences)


@dataclass
class CandidatePhrase:
    """An n-gram candidate, merged over all its occurrences in one document.

    ``tokens`` are taken from the first occurrence; ``occurrences`` holds
    (sentence index, token offset) pairs in document order.
    """

    tokens: tuple[Token, ...]
    normalized: str
    occurrences: list[tuple[int, int]]

    @property
    def surface(self) -> str:
        return " ".join(t.surface for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a one-token-per-line stopword file; the bundled list by default."""
    if path is None:
        text = resources.files("ake.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


def _tokenize_span(
    text: str, base: int, stopwords: frozenset[str]
) -> list[Token]:
    out = []
    for m in _TOKEN_RE.finditer(text):
        surface = m.group(0)
        lower = surface.lower()
        out.append(
            Token(
                surface=surface,
                lower=lower,
                is_stopword=lower in stopwords,
                char_span=(base + m.start(), base + m.end()),
            )
        )
    return out


def _split_sentences(text: str) -> list[tuple[int, int]]:
    """Return (start, end) character spans of sentences within ``text``."""
    spans = []
    start = 0
    for m in _SENT_END_RE.finditer(text):
        end = m.end()
        if m.group(0) == ".":
            prev = text[start : m.start()].rstrip()
            last_word = prev.rsplit(None, 1)[-1] if prev else ""
            last_word = last_word.lstrip("(\"'“")
            # Abbreviations and single-letter initials ("John F. Kennedy")
            # do not end a sentence.
            if last_word.lower() in _ABBREVIATIONS or (
                len(last_word) == 1 and last_word.isupper()
            ):
                continue
        spans.append((start, end))
        start = end
    tail = text[start:]
    if tail.strip():
        spans.append((start, len(text)))
    return spans


def segment_and_tokenize(
    title: str,
    body: str,
    stopwords: frozenset[str] | None = None,
) -> list[Sentence]:
    """Split title+body into tokenized sentences.

    The title, when non-empty, is always sentence 0 (``from_title=True``) and
    is never split further. Body sentences break at terminal punctuation
    followed by whitespace and a capital letter, with an abbreviation guard.
    Character spans index into ``title + "\\n" + body``.
    """
    if not title.strip() and not body.strip():
        raise DataError("document has neither title nor body text")
    if stopwords is None:
        stopwords = default_stopwords()

    sentences: list[Sentence] = []
    body_base = len(title) + 1 if title else 0

    if title.strip():
        tokens = _tokenize_span(title, 0, stopwords)
        if tokens:
            sentences.append(Sentence(index=0, tokens=tuple(tokens), from_title=True))

    for start, end in _split_sentences(body):
        tokens = _tokenize_span(body[start:end], body_base + start, stopwords)
        if tokens:
            sentences.append(
                Sentence(index=len(sentences), tokens=tuple(tokens), from_title=False)
            )
    return sentences


def ingest_corpus(
    path: str | Path, stopwords: frozenset[str] | None = None
) -> list[Document]:
    """Read a line-delimited corpus file into segmented, tokenized Documents."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    docs: list[Document] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            try:
                doc_id = str(record["id"])
                title = record["title"]
                body = record["body"]
                category = record["category"]
            except (KeyError, TypeError) as exc:
                raise DataError(
                    f"{path}:{lineno}: record missing field {exc}"
                ) from exc
            if doc_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            try:
                doc = Document(id=doc_id, title=title, body=body, category=category)
                doc.sentences = segment_and_tokenize(title, body, stopwords)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            docs.append(doc)
    if not docs:
        log.warning("corpus file %s contained no documents", path)
    return docs


def generate_candidates(doc: Document, max_len: int = 4) -> list[CandidatePhrase]:
    """Enumerate all within-sentence 1..max_len grams that qualify as candidates.

    A window qualifies when it has no stopword at either edge, contains at
    least one alphabetic token, and contains no punctuation token. Windows
    sharing a normalized (lowercased) form merge into one candidate carrying
    every occurrence.
    """
    by_form: dict[str, CandidatePhrase] = {}
    for sent in doc.sentences:
        tokens = sent.tokens
        for i in range(len(tokens)):
            if tokens[i].is_stopword or tokens[i].is_punctuation:
                continue
            for n in range(1, max_len + 1):
                j = i + n
                if j > len(tokens):
                    break
                window = tokens[i:j]
                if window[-1].is_punctuation:
                    break  # longer windows from i contain the same token
                if window[-1].is_stopword:
                    continue
                if not any(t.is_alphabetic for t in window):
                    continue
                normalized = " ".join(t.lower for t in window)
                cand = by_form.get(normalized)
                if cand is None:
                    by_form[normalized] = CandidatePhrase(
                        tokens=window,
                        normalized=normalized,
                        occurrences=[(sent.index, i)],
                    )
                else:
                    cand.occurrences.append((sent.index, i))
    return list(by_form.values())
