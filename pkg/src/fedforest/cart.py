"""CART decision trees for binary classification, split on named features.

Trees are the unit of exchange in federation, so internal nodes refer to
features by NAME rather than column position: a tree trained at one site can
be evaluated at any site whose local schema contains those names.
"""

import math
from dataclasses import dataclass

import numpy as np

from .seeding import rng_from


class CartError(ValueError):
    pass


class MissingFeatureError(KeyError):
    """A row lacks a feature the tree splits on (federation should filter this)."""


@dataclass(frozen=True)
class Internal:
    feature_name: str
    threshold: float
    left: int
    right: int


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple  # (count of class 0, count of class 1)


@dataclass(frozen=True)
class DecisionTree:
    nodes: tuple  # node 0 is the root
    used_features: frozenset
    origin_site: str
    tree_id: str

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "used_features", frozenset(self.used_features))


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 12
    min_samples_leaf: int = 2
    # None: ceil(sqrt(n_features)) candidates per node; 0: every feature
    features_per_split: int | None = None


def gini(class_counts) -> float:
    """Gini impurity of a binary count pair; 0 for pure, 0.5 at balance."""
    c0, c1 = class_counts
    total = c0 + c1
    if total < 1:
        raise CartError("empty counts")
    p0 = c0 / total
    p1 = c1 / total
    return 1.0 - p0 * p0 - p1 * p1


def _best_split_for_feature(v, y, min_leaf):
    """Best (weighted child gini, threshold) for one feature, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; ties on impurity resolve to the smallest threshold. Equivalent to
    one column of `_best_splits`, kept as its readable reference form.
    """
    found = _best_splits(v[:, None], y, min_leaf)[0]
    return found


def _best_splits(sub, y, min_leaf):
    """Per-column best (weighted child gini, threshold) over a value matrix.

    One argsort/cumsum pass evaluates every candidate feature of a node at
    once. Candidate thresholds are midpoints between consecutive distinct
    sorted values; ties on impurity resolve to the smallest threshold.
    Columns with no valid cut yield None.
    """
    n, k = sub.shape
    if n < 2:
        return [None] * k
    order = np.argsort(sub, axis=0, kind="stable")
    vs = np.take_along_axis(sub, order, axis=0)
    pos_cum = np.cumsum(y[order], axis=0)
    left_n = np.arange(1, n, dtype=np.int64)[:, None]
    right_n = n - left_n
    valid = vs[1:] > vs[:-1]  # split between positions i and i+1
    if min_leaf > 1:
        valid &= (left_n >= min_leaf) & (right_n >= min_leaf)
    left_pos = pos_cum[:-1]
    right_pos = pos_cum[-1] - left_pos

    def child_gini(cnt, pos):
        p = pos / cnt
        return 1.0 - p * p - (1.0 - p) * (1.0 - p)

    weighted = (
        left_n * child_gini(left_n, left_pos)
        + right_n * child_gini(right_n, right_pos)
    ) / n
    weighted[~valid] = np.inf
    best = np.argmin(weighted, axis=0)  # first minimum -> smallest threshold
    cols = np.arange(k)
    thresholds = (vs[best, cols] + vs[best + 1, cols]) / 2.0
    impurities = weighted[best, cols]
    return [
        (float(impurities[j]), float(thresholds[j]))
        if valid[best[j], j] else None
        for j in range(k)
    ]


def _grow(X, y, feature_names, params, rng):
    """Greedy CART growth; returns the node list.

    Nodes are allocated in preorder (left subtree before right) and feature
    candidates are drawn per node in that order, so a fixed seed yields a
    fixed structure.
    """
    n_features = X.shape[1]
    if params.features_per_split is None:
        k = math.ceil(math.sqrt(n_features))
    elif params.features_per_split == 0:
        k = n_features
    else:
        k = params.features_per_split
    k = min(k, n_features)
    nodes = []

    def build(idx, depth):
        slot = len(nodes)
        nodes.append(None)
        sub_y = y[idx]
        c1 = int(sub_y.sum())
        counts = (len(idx) - c1, c1)
        if (
            depth >= params.max_depth
            or counts[0] == 0
            or counts[1] == 0
            or len(idx) < 2 * params.min_samples_leaf
        ):
            nodes[slot] = Leaf(counts)
            return slot
        candidates = rng.choice(n_features, size=k, replace=False)
        splits = _best_splits(
            X[np.ix_(idx, candidates)], sub_y, params.min_samples_leaf
        )
        best = None  # (impurity, feature_name, threshold, column)
        for col, found in zip(candidates, splits):
            if found is None:
                continue
            impurity, threshold = found
            key = (impurity, feature_names[col], threshold)
            if best is None or key < best[:3]:
                best = (impurity, feature_names[col], threshold, int(col))
        if best is None or best[0] >= gini(counts):
            nodes[slot] = Leaf(counts)
            return slot
        _, fname, threshold, col = best
        mask = X[idx, col] <= threshold
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        nodes[slot] = Internal(fname, threshold, left, right)
        return slot

    build(np.arange(len(y)), 0)
    return nodes


def fit_tree(
    train, params: TreeParams = TreeParams(), seed: int = 0,
    origin_site: str = "", tree_id: str = "",
) -> DecisionTree:
    """Fit one CART tree on a Dataset (see `fit_tree_arrays` for raw arrays)."""
    return fit_tree_arrays(
        train.X, train.y, train.feature_names, params, seed, origin_site, tree_id
    )


def fit_tree_arrays(
    X, y, feature_names, params: TreeParams, seed: int,
    origin_site: str = "", tree_id: str = "",
) -> DecisionTree:
    """Fit a tree directly on arrays.

    Bootstrap resamples may be single-class (that yields a single leaf), so
    this entry point skips the Dataset both-classes requirement.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise CartError("empty training set")
    rng = rng_from(seed, "tree")
    nodes = _grow(X, y, tuple(feature_names), params, rng)
    used = frozenset(n.feature_name for n in nodes if isinstance(n, Internal))
    return DecisionTree(tuple(nodes), used, origin_site, tree_id)


def predict_proba_tree(t: DecisionTree, row_by_name: dict) -> float:
    """Positive-class probability for one row; value <= threshold routes left."""
    node = t.nodes[0]
    while isinstance(node, Internal):
        try:
            value = row_by_name[node.feature_name]
        except KeyError:
            raise MissingFeatureError(node.feature_name) from None
        node = t.nodes[node.left if value <= node.threshold else node.right]
    c0, c1 = node.class_counts
    return c1 / (c0 + c1)


def compile_tree(t: DecisionTree, name_to_col: dict):
    """Flatten a tree into arrays for vectorized batch prediction."""
    n = len(t.nodes)
    feat = np.zeros(n, dtype=np.int64)
    thr = np.zeros(n)
    left = np.arange(n)
    right = np.arange(n)
    prob = np.zeros(n)
    is_leaf = np.zeros(n, dtype=bool)
    for i, node in enumerate(t.nodes):
        if isinstance(node, Leaf):
            is_leaf[i] = True
            c0, c1 = node.class_counts
            prob[i] = c1 / (c0 + c1)
        else:
            if node.feature_name not in name_to_col:
                raise MissingFeatureError(node.feature_name)
            feat[i] = name_to_col[node.feature_name]
            thr[i] = node.threshold
            left[i] = node.left
            right[i] = node.right
    return feat, thr, left, right, prob, is_leaf


def predict_proba_tree_batch(t: DecisionTree, X, name_to_col: dict) -> np.ndarray:
    """Vectorized `predict_proba_tree` over the rows of X."""
    feat, thr, left, right, prob, is_leaf = compile_tree(t, name_to_col)
    cur = np.zeros(X.shape[0], dtype=np.int64)
    while not is_leaf[cur].all():
        go_left = X[np.arange(len(cur)), feat[cur]] <= thr[cur]
        nxt = np.where(go_left, left[cur], right[cur])
        cur = np.where(is_leaf[cur], cur, nxt)
    return prob[cur]
