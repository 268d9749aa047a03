"""Crowd annotation aggregation: bad-HIT screening, votes, labels, splits.

A HIT is one worker's pass over one story: a list of token spans they
clicked. Spans resolve to normalized phrases against the story text; per
story, a phrase's relevance is the number of distinct workers who picked it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document
from .errors import DataError

REJECT_STOPWORD = "stopword-selection"
REJECT_LONG_SEQUENCE = "long-sequence"
REJECT_FAST_COMPLETION = "fast-completion"

MAX_SELECTION_WORDS = 10
MIN_DURATION_SECONDS = 30.0


@dataclass(frozen=True)
class Selection:
    sentence: int
    start_token: int
    end_token: int  # exclusive

    def __post_init__(self) -> None:
        if self.end_token <= self.start_token or self.start_token < 0:
            raise DataError(f"bad selection span {self}")


@dataclass
class Hit:
    hit_id: str
    worker_id: str
    story_id: str
    selections: list[Selection]
    duration_seconds: float
    phrases: list[tuple[str, ...]] = field(default_factory=list)

    def resolve(self, doc: Document) -> "Hit":
        """Fill ``phrases`` (lowercase token tuples) from the spans."""
        by_sentence: dict[int, list[Selection]] = {}
        for sel in self.selections:
            by_sentence.setdefault(sel.sentence, []).append(sel)
        for sels in by_sentence.values():
            sels.sort(key=lambda s: s.start_token)
            for prev, nxt in zip(sels, sels[1:]):
                if prev.end_token > nxt.start_token:
                    raise DataError(
                        f"hit {self.hit_id}: overlapping selections {prev} and {nxt}"
                    )
        phrases = []
        for sel in self.selections:
            if sel.sentence >= len(doc.sentences):
                raise DataError(
                    f"hit {self.hit_id}: selection sentence {sel.sentence} "
                    f"outside story {self.story_id}"
                )
            tokens = doc.sentences[sel.sentence].tokens
            if sel.end_token > len(tokens):
                raise DataError(
                    f"hit {self.hit_id}: selection span {sel} exceeds sentence length"
                )
            phrases.append(
                tuple(t.lower for t in tokens[sel.start_token : sel.end_token])
            )
        self.phrases = phrases
        return self

    def normalized_phrases(self) -> set[str]:
        return {" ".join(p) for p in self.phrases}


@dataclass
class RejectedHit:
    hit: Hit
    reasons: list[str]

    @property
    def primary(self) -> str:
        return self.reasons[0]


@dataclass
class StoryGold:
    story_id: str
    votes: dict[str, int]
    annotators: int


@dataclass
class GoldStandard:
    stories: dict[str, StoryGold]

    def __iter__(self):
        return iter(self.stories.values())

    def __len__(self) -> int:
        return len(self.stories)


@dataclass(frozen=True)
class SplitSpec:
    train_count: int
    test_count: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.train_count < 0 or self.test_count < 0:
            raise DataError("split counts must be non-negative")

    @classmethod
    def from_fractions(
        cls, total: int, train_fraction: float, seed: int = 0
    ) -> "SplitSpec":
        """Counts from a train fraction; the remainder becomes the test set."""
        if not 0.0 < train_fraction < 1.0:
            raise DataError("train_fraction must be in (0, 1)")
        train = round(train_fraction * total)
        return cls(train_count=train, test_count=total - train, seed=seed)


def filter_bad_hits(
    hits: Sequence[Hit], stopwords: frozenset[str] | None = None
) -> tuple[list[Hit], list[RejectedHit]]:
    """Screen HITs with the three quality heuristics.

    A HIT is rejected when any selection is nothing but stopwords, any
    selection runs longer than 10 words, or the whole HIT took under 30
    seconds. All matching reasons are recorded; the first is primary.
    """
    if stopwords is None:
        from .corpus import default_stopwords

        stopwords = default_stopwords()
    good: list[Hit] = []
    rejected: list[RejectedHit] = []
    for hit in hits:
        if hit.selections and not hit.phrases:
            raise DataError(f"hit {hit.hit_id} has unresolved selections")
        reasons = []
        if any(all(w in stopwords for w in p) for p in hit.phrases):
            reasons.append(REJECT_STOPWORD)
        if any(len(p) > MAX_SELECTION_WORDS for p in hit.phrases):
            reasons.append(REJECT_LONG_SEQUENCE)
        if hit.duration_seconds < MIN_DURATION_SECONDS:
            reasons.append(REJECT_FAST_COMPLETION)
        if reasons:
            rejected.append(RejectedHit(hit=hit, reasons=reasons))
        else:
            good.append(hit)
    return good, rejected


def aggregate(good_hits: Sequence[Hit]) -> GoldStandard:
    """Per story, count the distinct workers who selected each phrase."""
    workers_by_story: dict[str, set[str]] = {}
    votes_by_story: dict[str, dict[str, int]] = {}
    for hit in good_hits:
        workers = workers_by_story.setdefault(hit.story_id, set())
        if hit.worker_id in workers:
            raise DataError(
                f"worker {hit.worker_id} has two HITs on story {hit.story_id}"
            )
        workers.add(hit.worker_id)
        votes = votes_by_story.setdefault(hit.story_id, {})
        for phrase in hit.normalized_phrases():
            votes[phrase] = votes.get(phrase, 0) + 1
    stories = {
        sid: StoryGold(story_id=sid, votes=votes_by_story[sid], annotators=len(ws))
        for sid, ws in workers_by_story.items()
    }
    return GoldStandard(stories=stories)


def positive_labels(
    gs: GoldStandard, threshold: float = 0.90
) -> dict[str, set[str]]:
    """Phrases selected by at least ceil(threshold * annotators) workers."""
    out = {}
    for story in gs:
        need = math.ceil(threshold * story.annotators)
        out[story.story_id] = {p for p, v in story.votes.items() if v >= need}
    return out


def split(
    gs: GoldStandard,
    spec: SplitSpec,
    categories: Mapping[str, str] | None = None,
) -> tuple[list[str], list[str]]:
    """Seeded train/test story split, stratified by category when it divides evenly."""
    story_ids = sorted(gs.stories)
    total = len(story_ids)
    if spec.train_count + spec.test_count > total:
        raise DataError(
            f"split asks for {spec.train_count}+{spec.test_count} stories, "
            f"only {total} available"
        )
    rng = np.random.default_rng(spec.seed)

    if categories:
        by_cat: dict[str, list[str]] = {}
        for sid in story_ids:
            by_cat.setdefault(categories[sid], []).append(sid)
        n_cats = len(by_cat)
        per_train, train_rem = divmod(spec.train_count, n_cats)
        per_test, test_rem = divmod(spec.test_count, n_cats)
        even = (
            train_rem == 0
            and test_rem == 0
            and all(len(v) >= per_train + per_test for v in by_cat.values())
        )
        if even:
            train, test = [], []
            for cat in sorted(by_cat):
                ids = list(by_cat[cat])
                rng.shuffle(ids)
                train.extend(ids[:per_train])
                test.extend(ids[per_train : per_train + per_test])
            return sorted(train), sorted(test)

    ids = list(story_ids)
    rng.shuffle(ids)
    train = ids[: spec.train_count]
    test = ids[spec.train_count : spec.train_count + spec.test_count]
    return sorted(train), sorted(test)


# ---------------------------------------------------------------------------
# File formats


def load_hits(
    path: str | Path, documents: Mapping[str, Document] | Iterable[Document]
) -> list[Hit]:
    """Read a line-delimited HIT file and resolve spans against the stories."""
    if not isinstance(documents, Mapping):
        documents = {d.id: d for d in documents}
    path = Path(path)
    if not path.exists():
        raise DataError(f"HIT file not found: {path}")
    hits = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                hit = Hit(
                    hit_id=str(rec["hit_id"]),
                    worker_id=str(rec["worker_id"]),
                    story_id=str(rec["story_id"]),
                    selections=[
                        Selection(s["sentence"], s["start_token"], s["end_token"])
                        for s in rec["selections"]
                    ],
                    duration_seconds=float(rec["duration_seconds"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed HIT record: {exc}") from exc
            doc = documents.get(hit.story_id)
            if doc is None:
                raise DataError(
                    f"{path}:{lineno}: HIT references unknown story {hit.story_id!r}"
                )
            hits.append(hit.resolve(doc))
    return hits


def hit_to_record(hit: Hit, flags: Sequence[str] = ()) -> dict:
    rec = {
        "hit_id": hit.hit_id,
        "worker_id": hit.worker_id,
        "story_id": hit.story_id,
        "selections": [
            {"sentence": s.sentence, "start_token": s.start_token, "end_token": s.end_token}
            for s in hit.selections
        ],
        "duration_seconds": hit.duration_seconds,
    }
    if flags:
        rec["flags"] = list(flags)
    return rec


def save_gold(gs: GoldStandard, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for sid in sorted(gs.stories):
            story = gs.stories[sid]
            rec = {
                "story_id": story.story_id,
                "phrases": [
                    {"text": p, "votes": v}
                    for p, v in sorted(story.votes.items(), key=lambda kv: (-kv[1], kv[0]))
                ],
                "annotators": story.annotators,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_gold(path: str | Path) -> GoldStandard:
    path = Path(path)
    if not path.exists():
        raise DataError(f"gold standard file not found: {path}")
    stories = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                story = StoryGold(
                    story_id=str(rec["story_id"]),
                    votes={p["text"]: int(p["votes"]) for p in rec["phrases"]},
                    annotators=int(rec["annotators"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed gold record: {exc}") from exc
            stories[story.story_id] = story
    return GoldStandard(stories=stories)
