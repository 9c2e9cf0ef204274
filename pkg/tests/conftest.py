import numpy as np
import pytest

from fedforest.cart import DecisionTree, Internal, Leaf
from fedforest.data import Dataset


def random_dataset(rng, n=60, n_features=5, prefix="f"):
    names = tuple(f"{prefix}{i}" for i in range(n_features))
    X = rng.normal(0, 1, (n, n_features))
    y = rng.integers(0, 2, n)
    if y.sum() == 0:
        y[0] = 1
    if y.sum() == n:
        y[0] = 0
    return Dataset(names, X, y.astype(np.int64))


def random_tree(rng, feature_pool, max_depth=4, origin_site="s", tree_id=""):
    """A structurally valid random DecisionTree (not trained)."""
    nodes = []

    def build(depth):
        slot = len(nodes)
        nodes.append(None)
        if depth >= max_depth or rng.random() < 0.35:
            c0, c1 = int(rng.integers(0, 10)), int(rng.integers(0, 10))
            if c0 + c1 == 0:
                c1 = 1
            nodes[slot] = Leaf((c0, c1))
            return slot
        name = feature_pool[int(rng.integers(0, len(feature_pool)))]
        threshold = float(rng.normal())
        left = build(depth + 1)
        right = build(depth + 1)
        nodes[slot] = Internal(name, threshold, left, right)
        return slot

    build(0)
    used = frozenset(
        n.feature_name for n in nodes if isinstance(n, Internal)
    )
    return DecisionTree(tuple(nodes), used, origin_site, tree_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
