"""End-to-end training and extraction: preprocessing, features, model file.

The model file is versioned structured text (JSON, magic ``AKEMODEL1``)
holding the feature mask, the POS pattern table, per-tree pre-order node
lists, the training corpus document frequencies, seeds, and the
preprocessing configuration the model was trained under.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .classifier import Ensemble, Instance, Leaf, Split, TreeNode, bag_train, extract_top_k
from .corpus import Document, generate_candidates
from .errors import DataError
from .features import (
    DocumentFrequencies,
    FeatureResources,
    Gazetteer,
    PatternTable,
    PosTagger,
    SignalLexicon,
    assemble,
    parse_mask,
)
from .goldstandard import GoldStandard, positive_labels
from .ngram_lm import NGramStore
from .preprocess import FilterConfig, preprocess_document

log = logging.getLogger(__name__)

MODEL_MAGIC = "AKEMODEL1"


@dataclass(frozen=True)
class PreprocessConfig:
    coref: bool = True
    light_filter: bool = True
    filter_first: bool = False
    support_size: int = 5
    removal_fraction: float = 0.10

    def apply(self, doc: Document) -> Document:
        return preprocess_document(
            doc,
            FilterConfig(self.support_size, self.removal_fraction),
            coref=self.coref,
            filter_sentences=self.light_filter,
            filter_first=self.filter_first,
        )


@dataclass
class TrainedModel:
    ensemble: Ensemble
    mask: tuple[str, ...]
    pattern_table: PatternTable
    dfs: DocumentFrequencies
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    idf_log_base: float = math.e
    min_leaf: int = 2
    balance: bool = False

    def resources(
        self,
        store: NGramStore | None = None,
        lexicon: SignalLexicon | None = None,
        gazetteer: Gazetteer | None = None,
        tagger: PosTagger | None = None,
    ) -> FeatureResources:
        """Bind inference-time resources; bundled defaults where sensible."""
        if "ss" in self.mask and store is None:
            raise DataError(
                "model uses shallow-semantic features; an n-gram model is "
                "required (build one with `ake build-lm`)"
            )
        if "rs" in self.mask and lexicon is None:
            lexicon = SignalLexicon.load()
        if "sc" in self.mask and gazetteer is None:
            gazetteer = Gazetteer.load()
        return FeatureResources(
            dfs=self.dfs,
            tagger=tagger or PosTagger.load(),
            pattern_table=self.pattern_table,
            lexicon=lexicon,
            gazetteer=gazetteer,
            store=store,
            idf_log_base=self.idf_log_base,
        )


def build_instances(
    docs: Sequence[Document],
    positives: Mapping[str, set[str]],
    res: FeatureResources,
    mask: tuple[str, ...],
    balance: bool = False,
    train: bool = True,
) -> list[Instance]:
    """One instance per candidate; label 1 when the phrase is gold-positive."""
    rows: list[tuple[np.ndarray, int]] = []
    for doc in docs:
        gold = positives.get(doc.id, set())
        for cand in generate_candidates(doc):
            fv = assemble(cand, doc, res, mask, train=train)
            rows.append((fv.to_array(mask), int(cand.normalized in gold)))
    n_pos = sum(label for _, label in rows)
    n_neg = len(rows) - n_pos
    pos_weight = (n_neg / n_pos) if (balance and n_pos) else 1.0
    return [
        Instance(features=x, label=label, weight=pos_weight if label else 1.0)
        for x, label in rows
    ]


def train_model(
    docs: Sequence[Document],
    gold: GoldStandard,
    mask: str | tuple[str, ...],
    *,
    store: NGramStore | None = None,
    lexicon: SignalLexicon | None = None,
    gazetteer: Gazetteer | None = None,
    preprocess: PreprocessConfig | None = None,
    bags: int = 10,
    seed: int = 0,
    min_leaf: int = 2,
    balance: bool = False,
    idf_log_base: float = math.e,
    label_threshold: float = 0.90,
) -> TrainedModel:
    """Preprocess, featurize and bag-train on gold-labeled candidates."""
    mask = parse_mask(mask)
    preprocess = preprocess or PreprocessConfig()
    if "ss" in mask and store is None:
        raise DataError("mask enables ss features but no n-gram model was given")

    labeled = [d for d in docs if d.id in gold.stories]
    skipped = len(docs) - len(labeled)
    if skipped:
        log.warning("skipping %d documents with no gold annotations", skipped)
    if not labeled:
        raise DataError("no training documents have gold annotations")

    prepped = [preprocess.apply(d) for d in labeled]
    pattern_table = PatternTable()
    res = FeatureResources(
        dfs=DocumentFrequencies.from_documents(prepped),
        tagger=PosTagger.load(),
        pattern_table=pattern_table,
        lexicon=lexicon or (SignalLexicon.load() if "rs" in mask else None),
        gazetteer=gazetteer or (Gazetteer.load() if "sc" in mask else None),
        store=store,
        idf_log_base=idf_log_base,
    )
    positives = positive_labels(gold, label_threshold)
    instances = build_instances(prepped, positives, res, mask, balance=balance)
    ensemble = bag_train(
        instances,
        bags=bags,
        seed=seed,
        min_leaf=min_leaf,
        feature_mask=mask,
    )
    return TrainedModel(
        ensemble=ensemble,
        mask=mask,
        pattern_table=pattern_table,
        dfs=res.dfs,
        preprocess=preprocess,
        idf_log_base=idf_log_base,
        min_leaf=min_leaf,
        balance=balance,
    )


def extract(
    doc: Document,
    model: TrainedModel,
    res: FeatureResources,
    k: int = 10,
    preprocess: PreprocessConfig | None = None,
) -> list[tuple[str, float]]:
    """Rank a (raw) document's candidates with the trained model."""
    cfg = preprocess if preprocess is not None else model.preprocess
    prepped = cfg.apply(doc)
    return extract_top_k(prepped, model.ensemble, res, model.mask, k=k)


# ---------------------------------------------------------------------------
# Model file


def _tree_to_nodes(node: TreeNode) -> list[dict]:
    out: list[dict] = []

    def walk(n: TreeNode) -> None:
        if isinstance(n, Leaf):
            out.append({"leaf": [n.n0, n.n1]})
        else:
            out.append({"split": [n.feature, n.threshold]})
            walk(n.left)
            walk(n.right)

    walk(node)
    return out


def _tree_from_nodes(nodes: list[dict]) -> TreeNode:
    it = iter(nodes)

    def build() -> TreeNode:
        rec = next(it)
        if "leaf" in rec:
            n0, n1 = rec["leaf"]
            return Leaf(float(n0), float(n1))
        feature, threshold = rec["split"]
        return Split(int(feature), float(threshold), build(), build())

    tree = build()
    try:
        next(it)
    except StopIteration:
        return tree
    raise DataError("trailing nodes in tree serialization")


def save_model(model: TrainedModel, path: str | Path) -> None:
    payload = {
        "magic": MODEL_MAGIC,
        "mask": list(model.mask),
        "bags": model.ensemble.bags,
        "seed": model.ensemble.seed,
        "n_features": model.ensemble.n_features,
        "min_leaf": model.min_leaf,
        "balance": model.balance,
        "idf_log_base": model.idf_log_base,
        "preprocess": {
            "coref": model.preprocess.coref,
            "light_filter": model.preprocess.light_filter,
            "filter_first": model.preprocess.filter_first,
            "support_size": model.preprocess.support_size,
            "removal_fraction": model.preprocess.removal_fraction,
        },
        "pattern_table": model.pattern_table.to_list(),
        "dfs": {"doc_count": model.dfs.doc_count, "df": model.dfs.df},
        "trees": [_tree_to_nodes(t) for t in model.ensemble.trees],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model file: {exc}") from exc
    if payload.get("magic") != MODEL_MAGIC:
        raise DataError(f"{path}: bad model magic {payload.get('magic')!r}")
    try:
        return _model_from_payload(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: truncated or invalid model file: {exc}") from exc


def _model_from_payload(payload: dict) -> TrainedModel:
    trees = [_tree_from_nodes(nodes) for nodes in payload["trees"]]
    mask = tuple(payload["mask"])
    ensemble = Ensemble(
        trees=trees,
        bags=int(payload["bags"]),
        seed=int(payload["seed"]),
        n_features=int(payload["n_features"]),
        feature_mask=mask,
    )
    pre = payload["preprocess"]
    return TrainedModel(
        ensemble=ensemble,
        mask=mask,
        pattern_table=PatternTable.from_list(payload["pattern_table"]),
        dfs=DocumentFrequencies(
            doc_count=int(payload["dfs"]["doc_count"]),
            df={k: int(v) for k, v in payload["dfs"]["df"].items()},
        ),
        preprocess=PreprocessConfig(
            coref=bool(pre["coref"]),
            light_filter=bool(pre["light_filter"]),
            filter_first=bool(pre["filter_first"]),
            support_size=int(pre["support_size"]),
            removal_fraction=float(pre["removal_fraction"]),
        ),
        idf_log_base=float(payload["idf_log_base"]),
        min_leaf=int(payload["min_leaf"]),
        balance=bool(payload["balance"]),
    )
