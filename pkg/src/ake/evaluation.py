"""Ranking metrics against vote-weighted gold standards, and ablation runs.

Two DCG discount schedules are supported. The default, ``log2i``, leaves
rank 1 undiscounted and divides rank i >= 2 by log2(i), so ranks 1 and 2
weigh the same. The ``log2i1`` alternative is the common log2(i+1) form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .goldstandard import GoldStandard

log = logging.getLogger(__name__)

DCG_DISCOUNTS = ("log2i", "log2i1")

TABLE1_CONDITIONS = (
    "baseline",
    "baseline+ss",
    "baseline+ss+tc",
    "baseline+ss+tc+rs",
    "baseline+ss+tc+rs+sc",
    "baseline+ss+tc+rs+sc+cn",
    "baseline+ss+tc+rs+cn+lf",
    "baseline+ss+tc+rs+sc+cn+lf",
)


def _norm(phrase: str) -> str:
    return " ".join(phrase.lower().split())


def precision_at_k(
    extracted: Sequence[str], gold_votes: Mapping[str, int], k: int = 10
) -> float:
    """TP / (TP + FP) over the top-k list; an empty extraction scores 0."""
    top = [_norm(p) for p in extracted[:k]]
    if not top:
        log.warning("precision of an empty extraction defaults to 0")
        return 0.0
    gold = {_norm(p) for p in gold_votes}
    tp = sum(1 for p in top if p in gold)
    return tp / len(top)


def dcg(rels: Sequence[float], discount: str = "log2i") -> float:
    if discount not in DCG_DISCOUNTS:
        raise DataError(f"unknown DCG discount {discount!r}; use one of {DCG_DISCOUNTS}")
    if any(r < 0 for r in rels):
        raise DataError("relevance scores must be non-negative")
    if discount == "log2i":
        total = rels[0] if rels else 0.0
        for i, rel in enumerate(rels[1:], start=2):
            total += rel / math.log2(i)
        return float(total)
    return float(sum(rel / math.log2(i + 1) for i, rel in enumerate(rels, start=1)))


def ideal_dcg(
    gold_votes: Mapping[str, int], k: int = 10, discount: str = "log2i"
) -> float:
    ideal = sorted(gold_votes.values(), reverse=True)[:k]
    return dcg(ideal, discount)


def ndcg(
    extracted: Sequence[str],
    gold_votes: Mapping[str, int],
    k: int = 10,
    discount: str = "log2i",
) -> float:
    """DCG of the extraction's gold votes over the ideal ordering's DCG."""
    if not gold_votes:
        raise DataError("cannot compute nDCG against an empty gold standard")
    gold = {_norm(p): v for p, v in gold_votes.items()}
    rels = [float(gold.get(_norm(p), 0)) for p in extracted[:k]]
    denom = ideal_dcg(gold, k, discount)
    if denom <= 0:
        raise DataError("ideal DCG is zero; gold standard has no positive votes")
    return dcg(rels, discount) / denom


def human_baseline_ndcg(
    annotator_sets: Sequence[Iterable[str]],
    gold_votes: Mapping[str, int],
    trials: int = 100,
    k: int = 10,
    seed: int = 0,
    discount: str = "log2i",
) -> float:
    """Mean nDCG of seeded random orderings of each annotator's selections.

    Annotators pick sets, not rankings, so each trial shuffles one
    annotator's selections, truncates to k and scores the result; the
    returned value macro-averages annotators' per-trial means.
    """
    if not annotator_sets:
        raise DataError("need at least one annotator selection set")
    rng = np.random.default_rng(seed)
    per_annotator = []
    for selections in annotator_sets:
        phrases = sorted({_norm(p) for p in selections})
        scores = []
        for _ in range(trials):
            order = [phrases[i] for i in rng.permutation(len(phrases))]
            scores.append(ndcg(order, gold_votes, k=k, discount=discount))
        per_annotator.append(float(np.mean(scores)))
    return float(np.mean(per_annotator))


# ---------------------------------------------------------------------------
# Ablation


def parse_condition(label: str) -> tuple[tuple[str, ...], bool, bool]:
    """Split a condition label like ``baseline+ss+cn+lf`` into (mask, coref, filter)."""
    from .features import FEATURE_GROUPS

    parts = [p.strip().lower() for p in label.split("+") if p.strip()]
    coref = "cn" in parts
    light = "lf" in parts
    mask_parts = [p for p in parts if p not in ("cn", "lf")]
    bad = [p for p in mask_parts if p not in FEATURE_GROUPS]
    if bad or not mask_parts:
        raise DataError(
            f"invalid condition {label!r}: unknown component(s) {bad or ['<empty>']}"
        )
    mask = tuple(g for g in FEATURE_GROUPS if g in mask_parts)
    return mask, coref, light


@dataclass
class ConditionResult:
    label: str
    k: int
    per_story_precision: dict[str, float]
    per_story_ndcg: dict[str, float]

    @property
    def macro_precision(self) -> float:
        return float(np.mean(list(self.per_story_precision.values())))

    @property
    def macro_ndcg(self) -> float:
        return float(np.mean(list(self.per_story_ndcg.values())))


def bootstrap_gap(
    a: ConditionResult,
    b: ConditionResult,
    trials: int = 1000,
    seed: int = 0,
) -> dict[str, float]:
    """Seeded bootstrap over test stories for b's macro-nDCG edge over a.

    Resamples the shared story set with replacement and reports the observed
    gap plus the fraction of resamples where b fails to beat a.
    """
    stories = sorted(set(a.per_story_ndcg) & set(b.per_story_ndcg))
    if not stories:
        raise DataError("conditions share no evaluated stories")
    diffs = np.asarray(
        [b.per_story_ndcg[s] - a.per_story_ndcg[s] for s in stories]
    )
    rng = np.random.default_rng(seed)
    resampled = diffs[rng.integers(0, len(diffs), size=(trials, len(diffs)))]
    gaps = resampled.mean(axis=1)
    return {
        "observed_gap": float(diffs.mean()),
        "p_not_better": float(np.mean(gaps <= 0)),
        "trials": float(trials),
    }


def evaluate_extractions(
    extractions: Mapping[str, Sequence[str]],
    gold: GoldStandard,
    k: int = 10,
    discount: str = "log2i",
    label: str = "",
) -> ConditionResult:
    precisions = {}
    ndcgs = {}
    for story_id, phrases in extractions.items():
        votes = gold.stories[story_id].votes
        precisions[story_id] = precision_at_k(phrases, votes, k)
        ndcgs[story_id] = ndcg(phrases, votes, k, discount)
    return ConditionResult(
        label=label, k=k, per_story_precision=precisions, per_story_ndcg=ndcgs
    )


def run_ablation(
    docs: Sequence,
    gold: GoldStandard,
    conditions: Sequence[str],
    train_ids: Sequence[str],
    test_ids: Sequence[str],
    *,
    store=None,
    lexicon=None,
    gazetteer=None,
    bags: int = 10,
    seed: int = 0,
    min_leaf: int = 2,
    balance: bool = False,
    k: int = 10,
    discount: str = "log2i",
    support_size: int = 5,
    removal_fraction: float = 0.10,
) -> list[ConditionResult]:
    """Train and evaluate every condition on one shared train/test split."""
    from .pipeline import PreprocessConfig, extract, train_model

    parsed = [(label, *parse_condition(label)) for label in conditions]
    docs_by_id = {d.id: d for d in docs}
    missing = [sid for sid in (*train_ids, *test_ids) if sid not in docs_by_id]
    if missing:
        raise DataError(f"split references unknown stories: {missing[:5]}")
    train_docs = [docs_by_id[sid] for sid in train_ids]
    test_docs = [docs_by_id[sid] for sid in test_ids]

    results = []
    for label, mask, coref, light in parsed:
        pre = PreprocessConfig(
            coref=coref,
            light_filter=light,
            support_size=support_size,
            removal_fraction=removal_fraction,
        )
        model = train_model(
            train_docs,
            gold,
            mask,
            store=store if "ss" in mask else None,
            lexicon=lexicon,
            gazetteer=gazetteer,
            preprocess=pre,
            bags=bags,
            seed=seed,
            min_leaf=min_leaf,
            balance=balance,
        )
        res = model.resources(
            store=store if "ss" in mask else None,
            lexicon=lexicon,
            gazetteer=gazetteer,
        )
        extractions = {
            doc.id: [p for p, _ in extract(doc, model, res, k=k)]
            for doc in test_docs
            if doc.id in gold.stories
        }
        results.append(evaluate_extractions(extractions, gold, k, discount, label))
    return results
