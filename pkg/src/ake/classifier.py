"""Bagged decision trees with gain-ratio splits, plus top-k phrase extraction.

Trees split on the numeric threshold maximizing information gain divided by
split information; binary and integer-coded dims are thresholded the same
way. There is no post-pruning: bagging handles the variance and a minimum
leaf size keeps nodes from fragmenting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import CandidatePhrase, Document, generate_candidates
from .errors import DataError
from .features import FeatureResources, FeatureVector, assemble

_MIN_GAIN = 1e-12


@dataclass
class Instance:
    features: np.ndarray
    label: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass
class Leaf:
    n0: float
    n1: float

    def probability(self) -> float:
        """Laplace-smoothed positive fraction."""
        return (self.n1 + 1.0) / (self.n0 + self.n1 + 2.0)


@dataclass
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Leaf | Split


def _neg_plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=np.float64)
    mask = p > 0
    out[mask] = -p[mask] * np.log2(p[mask])
    return out


def entropy(w0: float, w1: float) -> float:
    total = w0 + w1
    if total <= 0:
        return 0.0
    p = np.asarray([w0 / total, w1 / total])
    return float(_neg_plogp(p).sum())


def best_split(
    X: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[float, int, float] | None:
    """(gain_ratio, feature, threshold) maximizing the gain ratio, or None.

    Thresholds are midpoints between consecutive distinct sorted values.
    Ties resolve to the lowest feature index, then the lowest threshold.
    Returns None only when no feature has two distinct values. Zero-gain
    splits stay eligible: parity problems like XOR give every root split
    exactly zero gain, and refusing them would leave such nodes unsplit.
    """
    n, d = X.shape
    total_w = float(w.sum())
    total_w1 = float((w * y).sum())
    total_w0 = total_w - total_w1
    parent_h = entropy(total_w0, total_w1)

    best: tuple[float, int, float] | None = None
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        cum_w = np.cumsum(w[order])
        cum_w1 = np.cumsum((w * y)[order])
        cuts = np.nonzero(xs[:-1] < xs[1:])[0]
        if cuts.size == 0:
            continue
        lw = cum_w[cuts]
        lw1 = cum_w1[cuts]
        lw0 = lw - lw1
        rw = total_w - lw
        rw1 = total_w1 - lw1
        rw0 = rw - rw1

        frac_l = lw / total_w
        frac_r = rw / total_w
        child_h = frac_l * (_neg_plogp(lw0 / lw) + _neg_plogp(lw1 / lw)) + frac_r * (
            _neg_plogp(rw0 / rw) + _neg_plogp(rw1 / rw)
        )
        gain = np.maximum(parent_h - child_h, 0.0)
        split_info = _neg_plogp(frac_l) + _neg_plogp(frac_r)
        valid = split_info > 0
        if not valid.any():
            continue
        ratio = np.where(valid, gain / np.where(valid, split_info, 1.0), -1.0)
        k = int(np.argmax(ratio))
        if best is None or ratio[k] > best[0]:
            threshold = float((xs[cuts[k]] + xs[cuts[k] + 1]) / 2.0)
            best = (float(ratio[k]), j, threshold)
    return best


def _grow(X: np.ndarray, y: np.ndarray, w: np.ndarray, min_leaf: int) -> TreeNode:
    """Iterative growth; an explicit stack avoids recursion limits."""
    root = Split(feature=-1, threshold=0.0, left=Leaf(0, 0), right=Leaf(0, 0))
    stack: list[tuple[np.ndarray, Split, str]] = [(np.arange(len(y)), root, "left")]
    while stack:
        idx, parent, side = stack.pop()
        yc, wc = y[idx], w[idx]
        w1 = float((wc * yc).sum())
        w0 = float(wc.sum()) - w1
        found = None
        if w0 > 0 and w1 > 0 and len(idx) >= 2 * min_leaf:
            found = best_split(X[idx], yc, wc)
        if found is None:
            setattr(parent, side, Leaf(w0, w1))
            continue
        _, feature, threshold = found
        node = Split(feature=feature, threshold=threshold, left=Leaf(0, 0), right=Leaf(0, 0))
        setattr(parent, side, node)
        mask = X[idx, feature] <= threshold
        stack.append((idx[mask], node, "left"))
        stack.append((idx[~mask], node, "right"))
    return root.left


def _to_arrays(
    instances: Sequence[Instance],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.vstack([inst.features for inst in instances]).astype(np.float64)
    y = np.asarray([inst.label for inst in instances], dtype=np.float64)
    w = np.asarray([inst.weight for inst in instances], dtype=np.float64)
    return X, y, w


def train_tree(instances: Sequence[Instance], min_leaf: int = 2) -> TreeNode:
    """Grow one gain-ratio tree; stops on purity, node size, or no usable cut."""
    if not instances:
        raise DataError("cannot train a tree on zero instances")
    dims = {len(inst.features) for inst in instances}
    if len(dims) != 1:
        raise DataError(f"instances disagree on dimensionality: {sorted(dims)}")
    X, y, w = _to_arrays(instances)
    return _grow(X, y, w, min_leaf)


def tree_probability(node: TreeNode, x: np.ndarray) -> float:
    while isinstance(node, Split):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.probability()


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


@dataclass
class Ensemble:
    trees: list[TreeNode]
    bags: int
    seed: int
    n_features: int
    feature_mask: tuple[str, ...] | None = None
    bootstrap_indices: list[np.ndarray] | None = field(default=None, repr=False)


def bag_train(
    instances: Sequence[Instance],
    bags: int = 10,
    seed: int = 0,
    min_leaf: int = 2,
    bootstrap: bool = True,
    feature_mask: tuple[str, ...] | None = None,
) -> Ensemble:
    """Train ``bags`` trees on seeded bootstrap resamples of the instances."""
    if bags < 1:
        raise DataError(f"bag count must be >= 1, got {bags}")
    if not instances:
        raise DataError("cannot train on zero instances")
    X, y, w = _to_arrays(instances)
    n = len(instances)
    rng = np.random.default_rng(seed)
    trees = []
    picks = []
    for _ in range(bags):
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        picks.append(idx)
        trees.append(_grow(X[idx], y[idx], w[idx], min_leaf))
    return Ensemble(
        trees=trees,
        bags=bags,
        seed=seed,
        n_features=X.shape[1],
        feature_mask=feature_mask,
        bootstrap_indices=picks,
    )


def score(ensemble: Ensemble, fv: np.ndarray) -> float:
    """Mean Laplace-smoothed leaf probability over the ensemble, in [0, 1]."""
    x = np.asarray(fv, dtype=np.float64)
    if x.shape != (ensemble.n_features,):
        raise DataError(
            f"feature vector has {x.shape} dims, model expects {ensemble.n_features}"
        )
    return float(np.mean([tree_probability(t, x) for t in ensemble.trees]))


def out_of_bag_error(ensemble: Ensemble, instances: Sequence[Instance]) -> float:
    """Misclassification rate using only trees whose bootstrap missed each row."""
    if ensemble.bootstrap_indices is None:
        raise DataError("ensemble was not trained with bootstrap bookkeeping")
    X, y, _ = _to_arrays(instances)
    in_bag = [set(idx.tolist()) for idx in ensemble.bootstrap_indices]
    errors = 0
    counted = 0
    for i in range(len(instances)):
        probs = [
            tree_probability(t, X[i])
            for t, bag in zip(ensemble.trees, in_bag)
            if i not in bag
        ]
        if not probs:
            continue
        counted += 1
        if (np.mean(probs) >= 0.5) != bool(y[i]):
            errors += 1
    if counted == 0:
        raise DataError("no out-of-bag instances; increase bag count")
    return errors / counted


@dataclass
class RankedPhrase:
    phrase: str
    score: float
    features: FeatureVector
    candidate: CandidatePhrase


def rank_candidates(
    doc: Document,
    ensemble: Ensemble,
    res: FeatureResources,
    mask: tuple[str, ...],
    max_len: int = 4,
) -> list[RankedPhrase]:
    ranked = []
    for cand in generate_candidates(doc, max_len):
        fv = assemble(cand, doc, res, mask)
        s = score(ensemble, fv.to_array(mask))
        ranked.append(RankedPhrase(cand.normalized, s, fv, cand))
    ranked.sort(
        key=lambda r: (
            -r.score,
            -r.features.tfidf,
            r.features.first_occurrence,
            r.phrase,
        )
    )
    return ranked


def extract_top_k(
    doc: Document,
    ensemble: Ensemble,
    res: FeatureResources,
    mask: tuple[str, ...],
    k: int = 10,
) -> list[tuple[str, float]]:
    """Top-k candidate phrases by ensemble score.

    Ties break by higher tf-idf, then earlier first occurrence, then
    lexicographic order. Fewer than k candidates yields all of them.
    """
    return [(r.phrase, r.score) for r in rank_candidates(doc, ensemble, res, mask)[:k]]
