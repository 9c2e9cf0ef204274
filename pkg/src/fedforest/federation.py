"""Tree federation: the global store, transfer filter, and aggregation.

Each site commits its locally trained trees to a `GlobalStore`. A site may
then request a globally optimized local model, built only from trees whose
split features are all locally available:

  * additive aggregation keeps the local trees and adds every transferable
    foreign tree;
  * constant aggregation draws a uniform sample of transferable trees,
    sized to match the local forest.

Also defines the schema-versioned tree exchange documents used on the wire.
"""

import logging
import threading
from dataclasses import dataclass
from enum import Enum

from .cart import DecisionTree, Internal, Leaf
from .data import FeatureDictionary
from .forest import Forest
from .seeding import rng_from

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class FederationError(ValueError):
    pass


class AggregationMethod(str, Enum):
    ADDITIVE = "additive"
    CONSTANT = "constant"


class GlobalStore:
    """Central collection of committed trees with provenance.

    Commits are atomic and reads see a consistent snapshot, so concurrent
    sites can share one store.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._trees: dict[str, DecisionTree] = {}  # insertion-ordered
        self._sites: dict[str, FeatureDictionary] = {}

    def register_site(self, dictionary: FeatureDictionary) -> None:
        with self._lock:
            if dictionary.site_id in self._sites:
                raise FederationError(
                    f"site {dictionary.site_id!r} already registered"
                )
            self._sites[dictionary.site_id] = dictionary

    @property
    def registered_sites(self) -> dict:
        with self._lock:
            return dict(self._sites)

    @property
    def trees(self) -> list:
        with self._lock:
            return list(self._trees.values())

    def site_trees(self, site_id: str) -> list:
        return [t for t in self.trees if t.origin_site == site_id]

    def commit(self, forest: Forest) -> None:
        """Append all trees of a forest; all-or-nothing."""
        with self._lock:
            if forest.site_id not in self._sites:
                raise FederationError(f"site {forest.site_id!r} not registered")
            for t in forest.trees:
                if t.tree_id in self._trees:
                    raise FederationError(f"duplicate tree_id {t.tree_id!r}")
                if t.origin_site != forest.site_id:
                    raise FederationError(
                        f"tree {t.tree_id!r} carries origin "
                        f"{t.origin_site!r}, expected {forest.site_id!r}"
                    )
            for t in forest.trees:
                self._trees[t.tree_id] = t


def transferable(store: GlobalStore, dictionary: FeatureDictionary) -> list:
    """Trees usable at a site: used_features a subset of its available names."""
    return [
        t for t in store.trees if t.used_features <= dictionary.available
    ]


def build_go_local(
    store: GlobalStore,
    local: Forest,
    dictionary: FeatureDictionary,
    method: AggregationMethod,
    seed: int = 0,
) -> Forest:
    """Assemble the globally optimized local forest for one site."""
    pool = transferable(store, dictionary)
    method = AggregationMethod(method)
    if method is AggregationMethod.ADDITIVE:
        local_ids = {t.tree_id for t in local.trees}
        foreign = [
            t for t in pool
            if t.origin_site != local.site_id and t.tree_id not in local_ids
        ]
        trees = list(local.trees) + foreign
    else:
        n = len(local.trees)
        if len(pool) < n:
            logger.warning(
                "constant aggregation pool exhausted at %s: %d transferable "
                "trees for a %d-tree local model; returning the whole pool",
                local.site_id, len(pool), n,
            )
            trees = list(pool)
        else:
            rng = rng_from(seed, "constant_sample", local.site_id)
            pick = rng.choice(len(pool), size=n, replace=False)
            trees = [pool[i] for i in pick]
    return Forest(tuple(trees), local.params, local.site_id)


# ---------------------------------------------------------------------------
# Exchange documents


def serialize_tree(t: DecisionTree) -> dict:
    """Tree -> schema-versioned JSON-able document.

    Thresholds are written as shortest round-trip decimal strings so a
    reload is bit-exact on any platform.
    """
    nodes = []
    for node in t.nodes:
        if isinstance(node, Leaf):
            nodes.append({"kind": "leaf", "counts": list(node.class_counts)})
        else:
            nodes.append({
                "kind": "internal",
                "feature": node.feature_name,
                "threshold": repr(node.threshold),
                "left": node.left,
                "right": node.right,
            })
    return {
        "version": SCHEMA_VERSION,
        "tree_id": t.tree_id,
        "origin_site": t.origin_site,
        "nodes": nodes,
    }


def deserialize_tree(doc: dict) -> DecisionTree:
    """Exchange document -> DecisionTree, validating structure."""
    if not isinstance(doc, dict):
        raise FederationError("tree document must be an object")
    if doc.get("version") != SCHEMA_VERSION:
        raise FederationError(f"unknown schema version {doc.get('version')!r}")
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise FederationError("tree document has no nodes")
    n = len(raw_nodes)
    nodes = []
    children = []
    for raw in raw_nodes:
        kind = raw.get("kind")
        if kind == "leaf":
            counts = raw.get("counts")
            if (
                not isinstance(counts, list) or len(counts) != 2
                or any(not isinstance(c, int) or c < 0 for c in counts)
                or sum(counts) < 1
            ):
                raise FederationError(f"malformed leaf counts: {counts!r}")
            nodes.append(Leaf((counts[0], counts[1])))
        elif kind == "internal":
            left, right = raw.get("left"), raw.get("right")
            for child in (left, right):
                if not isinstance(child, int) or not 0 < child < n:
                    raise FederationError(f"dangling node index {child!r}")
            try:
                threshold = float(raw["threshold"])
            except (KeyError, TypeError, ValueError):
                raise FederationError("malformed threshold") from None
            feature = raw.get("feature")
            if not isinstance(feature, str) or not feature:
                raise FederationError("internal node lacks a feature name")
            nodes.append(Internal(feature, threshold, left, right))
            children.extend((left, right))
        else:
            raise FederationError(f"unknown node kind {kind!r}")
    if len(children) != len(set(children)) or 0 in children:
        raise FederationError("node indices do not form a tree")
    reachable = {0}
    frontier = [0]
    while frontier:
        node = nodes[frontier.pop()]
        if isinstance(node, Internal):
            for child in (node.left, node.right):
                if child not in reachable:
                    reachable.add(child)
                    frontier.append(child)
    if len(reachable) != n:
        raise FederationError("unreachable nodes in tree document")
    used = frozenset(
        node.feature_name for node in nodes if isinstance(node, Internal)
    )
    return DecisionTree(
        tuple(nodes), used, doc.get("origin_site", ""), doc.get("tree_id", "")
    )


def serialize_forest(f: Forest) -> dict:
    return {
        "site_id": f.site_id,
        "params": {
            "n_trees": f.params.n_trees,
            "bootstrap": f.params.bootstrap,
            "max_depth": f.params.tree.max_depth,
            "min_samples_leaf": f.params.tree.min_samples_leaf,
            "features_per_split": f.params.tree.features_per_split,
        },
        "trees": [serialize_tree(t) for t in f.trees],
    }


def deserialize_forest(doc: dict) -> Forest:
    from .cart import TreeParams
    from .forest import ForestParams

    if not isinstance(doc, dict) or "trees" not in doc:
        raise FederationError("forest document must carry a tree array")
    params = doc.get("params") or {}
    trees = tuple(deserialize_tree(t) for t in doc["trees"])
    return Forest(
        trees,
        ForestParams(
            n_trees=params.get("n_trees", len(trees)),
            bootstrap=params.get("bootstrap", True),
            tree=TreeParams(
                max_depth=params.get("max_depth", 12),
                min_samples_leaf=params.get("min_samples_leaf", 2),
                features_per_split=params.get("features_per_split"),
            ),
        ),
        doc.get("site_id", ""),
    )
