"""Bagged ensembles of CART trees: the local and go-local models."""

from dataclasses import dataclass

import numpy as np

from .cart import TreeParams, fit_tree_arrays, predict_proba_tree
from .cart import predict_proba_tree_batch
from .seeding import derive_seed


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    bootstrap: bool = True
    tree: TreeParams = TreeParams()


@dataclass(frozen=True)
class Forest:
    trees: tuple
    params: ForestParams
    site_id: str

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if not self.trees:
            raise ValueError("a forest needs at least one tree")


def fit_forest(train, params: ForestParams, seed: int, site_id: str = "") -> Forest:
    """Train `n_trees` trees, each on its own bootstrap resample.

    Per-tree randomness derives from (seed, tree index) so the result is
    independent of scheduling order.
    """
    n = train.n_samples
    trees = []
    for i in range(params.n_trees):
        tree_seed = derive_seed(seed, "tree", i)
        if params.bootstrap:
            rng = np.random.default_rng(derive_seed(seed, "bootstrap", i))
            idx = rng.integers(0, n, n)
            X, y = train.X[idx], train.y[idx]
        else:
            X, y = train.X, train.y
        trees.append(
            fit_tree_arrays(
                X, y, train.feature_names, params.tree, tree_seed,
                origin_site=site_id,
                tree_id=f"{site_id}:{seed & 0xFFFFFFFFFFFFFFFF:016x}:{i:04d}",
            )
        )
    return Forest(tuple(trees), params, site_id)


def predict_proba_forest(f: Forest, row_by_name: dict) -> float:
    """Soft vote: unweighted mean of per-tree leaf probabilities."""
    return sum(predict_proba_tree(t, row_by_name) for t in f.trees) / len(f.trees)


def predict_label(f: Forest, row_by_name: dict, threshold: float = 0.5) -> int:
    return 1 if predict_proba_forest(f, row_by_name) >= threshold else 0


def predict_proba_batch(f: Forest, dataset) -> np.ndarray:
    """Soft-vote scores for every row of a Dataset (vectorized)."""
    name_to_col = {n: i for i, n in enumerate(dataset.feature_names)}
    total = np.zeros(dataset.n_samples)
    for t in f.trees:
        total += predict_proba_tree_batch(t, dataset.X, name_to_col)
    return total / len(f.trees)
