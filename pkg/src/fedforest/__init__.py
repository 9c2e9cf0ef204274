"""Federated random forests over horizontally partitioned data with
partially overlapping feature spaces."""

from .data import (
    Dataset,
    FeatureDictionary,
    SiteSplit,
    drop_features,
    imbalance_ratio,
    load_csv,
    stratified_site_split,
    synth_hcc,
    synth_ilpd,
    train_test_split,
)
from .cart import DecisionTree, TreeParams, fit_tree, gini, predict_proba_tree
from .forest import (
    Forest,
    ForestParams,
    fit_forest,
    predict_label,
    predict_proba_forest,
)
from .federation import (
    AggregationMethod,
    GlobalStore,
    build_go_local,
    deserialize_tree,
    serialize_tree,
    transferable,
)

__version__ = "0.1.0"
