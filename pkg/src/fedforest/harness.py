"""End-to-end experiment runner.

Reproduces the evaluation grid {site count} x {feature-drop fraction} x
{aggregation method} x repeats on a dataset. One grid cell runs the full
pipeline: stratified site split, per-site random feature drop, per-site
train/test split, local forest training, commit to a shared store, go-local
assembly per site and method, and evaluation of both models on each site's
own test split. Local forests are shared between the aggregation methods of
a cell since they do not depend on the method.
"""

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .cart import TreeParams
from .data import (
    DataError,
    Dataset,
    drop_features,
    load_builtin,
    load_csv,
    stratified_site_split,
    train_test_indices,
)
from .federation import AggregationMethod, GlobalStore, build_go_local
from .forest import Forest, ForestParams, fit_forest, predict_proba_batch
from .metrics import ScoredLabels, confusion, mcc, pr_auc, roc_auc
from .seeding import derive_seed
from .stats import (
    PairedSample,
    StatsError,
    mann_whitney_u,
    mean_difference_ci,
    paired_t,
    wilcoxon_signed_rank,
)

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "dataset",
    "site_count",
    "drop_fraction",
    "method",
    "repeat",
    "site_id",
    "model_kind",
    "auc",
    "prauc",
    "mcc",
    "tree_count",
    "fallback",
    "seed",
]

RESULT_SCHEMA = {
    "dataset": "dataset identifier",
    "site_count": "number of simulated sites in the cell",
    "drop_fraction": "fraction of features randomly dropped per site",
    "method": "aggregation method: additive or constant",
    "repeat": "repeat index within the cell",
    "site_id": "evaluating site",
    "model_kind": "local or go_local",
    "auc": "area under the ROC curve on the site's own test split",
    "prauc": "area under the precision-recall curve (step-wise)",
    "mcc": "Matthews correlation coefficient at threshold 0.5",
    "tree_count": "number of trees in the evaluated forest",
    "fallback": "1 if constant aggregation exhausted its pool, else 0",
    "seed": "cell seed derived from the master seed",
}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "ilpd"
    site_counts: tuple = (2, 4, 6, 8, 10, 16)
    drop_fractions: tuple = (0.0, 0.2, 0.3, 0.4, 0.5, 0.75)
    methods: tuple = ("additive", "constant")
    repeats: int = 20
    n_trees: int = 100
    test_fraction: float = 0.3
    master_seed: int = 0
    out_dir: str = "results"
    min_per_class: int = 5
    max_depth: int = 12
    min_samples_leaf: int = 1
    features_per_split: int | None = 0  # 0: every feature is a candidate
    pooled_test: bool = False
    schema_path: str | None = None  # for csv: datasets
    label_column: str | None = None
    jobs: int | None = None

    def forest_params(self) -> ForestParams:
        return ForestParams(
            n_trees=self.n_trees,
            tree=TreeParams(
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                features_per_split=self.features_per_split,
            ),
        )


def resolve_dataset(config: ExperimentConfig) -> Dataset:
    name = config.dataset
    if name.startswith("csv:"):
        path = name[len("csv:"):]
        if not config.schema_path or not config.label_column:
            raise DataError("csv datasets need a schema file and label column")
        with open(config.schema_path) as fh:
            schema = json.load(fh)
        return load_csv(path, config.label_column, schema)
    return load_builtin(name, seed=config.master_seed)


def _evaluate(forest: Forest, test: Dataset) -> dict:
    scores = predict_proba_batch(forest, test)
    s = ScoredLabels(scores, test.y)
    return {
        "auc": roc_auc(s),
        "prauc": pr_auc(s),
        "mcc": mcc(confusion(s, 0.5)),
        "tree_count": len(forest.trees),
    }


def run_cell(
    dataset: Dataset,
    config: ExperimentConfig,
    site_count: int,
    drop_fraction: float,
    repeat: int,
) -> list:
    """One (cell, repeat) of the grid; returns RunRecord rows as dicts."""
    cell_seed = derive_seed(
        config.master_seed, config.dataset, site_count, drop_fraction, repeat
    )
    split = stratified_site_split(
        dataset, site_count, derive_seed(cell_seed, "split"),
        min_per_class=config.min_per_class,
    )
    params = config.forest_params()
    store = GlobalStore()
    sites = []
    pooled_parts = []
    for i, part in enumerate(split.parts):
        site_id = f"site{i:02d}"
        reduced, fdict = drop_features(
            part, drop_fraction, derive_seed(cell_seed, "drop", site_id), site_id
        )
        train_idx, test_idx = train_test_indices(
            part.y, config.test_fraction, derive_seed(cell_seed, "tt", site_id)
        )
        train = reduced.take(train_idx)
        test = part.take(test_idx) if config.pooled_test else reduced.take(test_idx)
        local = fit_forest(
            train, params, derive_seed(cell_seed, "fit", site_id), site_id
        )
        store.register_site(fdict)
        store.commit(local)
        sites.append((site_id, fdict, local, test))
        if config.pooled_test:
            pooled_parts.append(part.take(test_idx))

    if config.pooled_test:
        pooled = Dataset(
            dataset.feature_names,
            np.concatenate([p.X for p in pooled_parts]),
            np.concatenate([p.y for p in pooled_parts]),
        )

    records = []

    def record(method, site_id, kind, scores, fallback):
        records.append({
            "dataset": config.dataset,
            "site_count": site_count,
            "drop_fraction": drop_fraction,
            "method": method,
            "repeat": repeat,
            "site_id": site_id,
            "model_kind": kind,
            "fallback": int(fallback),
            "seed": cell_seed,
            **scores,
        })

    local_scores = {
        site_id: _evaluate(local, pooled if config.pooled_test else test)
        for site_id, _, local, test in sites
    }
    for method in config.methods:
        for site_id, fdict, local, test in sites:
            go = build_go_local(
                store, local, fdict, AggregationMethod(method),
                derive_seed(cell_seed, "golocal", method, site_id),
            )
            fallback = (
                method == "constant" and len(go.trees) != len(local.trees)
            )
            record(method, site_id, "local", local_scores[site_id], False)
            record(
                method, site_id, "go_local",
                _evaluate(go, pooled if config.pooled_test else test),
                fallback,
            )
    return records


def _run_task(args):
    dataset, config, site_count, drop_fraction, repeat = args
    return (
        (site_count, drop_fraction, repeat),
        run_cell(dataset, config, site_count, drop_fraction, repeat),
    )


def _record_sort_key(row):
    return (
        row["dataset"],
        int(row["site_count"]),
        float(row["drop_fraction"]),
        row["method"],
        int(row["repeat"]),
        row["site_id"],
        row["model_kind"],
    )


def _write_results(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in sorted(records, key=_record_sort_key):
            writer.writerow(row)


def run_grid(config: ExperimentConfig) -> Path:
    """Run every (cell, repeat); write results.csv, its schema, skipped.csv.

    Idempotent resume: completed (cell, repeat) groups found in an existing
    results.csv are kept, not recomputed. The final file is fully sorted, so
    reruns with identical flags are byte-identical regardless of scheduling.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    dataset = resolve_dataset(config)

    existing = []
    done = set()
    if results_path.exists():
        # round_trip parsing keeps resumed rows bit-identical to fresh ones
        frame = pd.read_csv(results_path, float_precision="round_trip")
        existing = frame.to_dict("records")
        expected = len(config.methods) * 2  # kinds per site
        counts = frame.groupby(["site_count", "drop_fraction", "repeat"]).size()
        for (sc, df_, rep), n in counts.items():
            if n == int(sc) * expected:
                done.add((int(sc), float(df_), int(rep)))
        existing = [
            r for r in existing
            if (int(r["site_count"]), float(r["drop_fraction"]), int(r["repeat"]))
            in done
        ]

    skipped = []
    tasks = []
    for site_count in config.site_counts:
        for drop_fraction in config.drop_fractions:
            try:
                stratified_site_split(
                    dataset, site_count,
                    derive_seed(0, "feasibility"),
                    min_per_class=config.min_per_class,
                )
            except DataError as exc:
                skipped.append({
                    "site_count": site_count,
                    "drop_fraction": drop_fraction,
                    "reason": str(exc),
                })
                logger.warning(
                    "skipping cell sites=%d drop=%.2f: %s",
                    site_count, drop_fraction, exc,
                )
                continue
            for repeat in range(config.repeats):
                key = (int(site_count), float(drop_fraction), int(repeat))
                if key not in done:
                    tasks.append(
                        (dataset, config, site_count, drop_fraction, repeat)
                    )

    records = list(existing)
    jobs = config.jobs or os.cpu_count() or 1
    if not results_path.exists():
        _write_results(results_path, [])
    with open(results_path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for _, rows in pool.map(_run_task, tasks, chunksize=1):
                    records.extend(rows)
                    writer.writerows(rows)
                    fh.flush()
        else:
            for task in tasks:
                rows = _run_task(task)[1]
                records.extend(rows)
                writer.writerows(rows)

    _write_results(results_path, records)
    with open(out_dir / "results_schema.json", "w") as fh:
        json.dump(RESULT_SCHEMA, fh, indent=2)
        fh.write("\n")
    with open(out_dir / "skipped.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["site_count", "drop_fraction", "reason"]
        )
        writer.writeheader()
        writer.writerows(skipped)
    return results_path


# ---------------------------------------------------------------------------
# Summaries


def _iqr(values) -> float:
    q25, q75 = np.quantile(values, [0.25, 0.75])
    return float(q75 - q25)


def _paired_stats(diffs, seed):
    """Paired go-local minus local statistics for one metric in one cell."""
    out = {
        "mean_diff": float(np.mean(diffs)),
        "ci_low": float("nan"),
        "ci_high": float("nan"),
        "t_p_two_sided": 1.0,
        "t_p_one_tailed": 1.0,
        "wilcoxon_p_two_sided": 1.0,
        "wilcoxon_p_one_tailed": 1.0,
    }
    if len(diffs) < 2:
        return out
    pair = PairedSample(np.asarray(diffs), np.zeros(len(diffs)))
    t = paired_t(pair)
    out["t_p_two_sided"] = t.p_two_sided
    out["t_p_one_tailed"] = t.p_one_tailed_greater
    try:
        w = wilcoxon_signed_rank(pair)
        out["wilcoxon_p_two_sided"] = w.p_two_sided
        out["wilcoxon_p_one_tailed"] = w.p_one_tailed_greater
    except StatsError:
        pass  # all differences zero: no evidence against H0
    ci = mean_difference_ci(pair, seed=seed)
    out["ci_low"] = ci["ci_low"]
    out["ci_high"] = ci["ci_high"]
    return out


def summarize(results_path, out_dir, seed: int = 0):
    """Per-cell summary tables and the cross-cell method comparison.

    Writes cell_summary.csv (means, inner quartile ranges, and paired
    go-local vs local statistics per cell) and method_summary.csv (mean AUC
    improvement per aggregation method with the Mann-Whitney U comparison of
    the two per-cell improvement distributions).
    """
    frame = pd.read_csv(results_path, float_precision="round_trip")
    if frame.empty:
        raise DataError(f"no records in {results_path}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    metrics = ["auc", "prauc", "mcc"]
    cell_rows = []
    group_cols = ["dataset", "site_count", "drop_fraction", "method"]
    for key, cell in frame.groupby(group_cols):
        row = dict(zip(group_cols, key))
        pivot = cell.pivot_table(
            index=["repeat", "site_id"], columns="model_kind", values=metrics
        )
        for m in metrics:
            for kind in ("local", "go_local"):
                vals = cell.loc[cell.model_kind == kind, m]
                row[f"mean_{m}_{kind}"] = float(vals.mean())
                row[f"iqr_{m}_{kind}"] = _iqr(vals)
            diffs = (pivot[(m, "go_local")] - pivot[(m, "local")]).to_numpy()
            stats = _paired_stats(diffs, derive_seed(seed, "ci", *key, m))
            row.update({f"{m}_{k}": v for k, v in stats.items()})
        cell_rows.append(row)
    cell_summary = pd.DataFrame(cell_rows).sort_values(group_cols)
    cell_summary.to_csv(out_dir / "cell_summary.csv", index=False)

    method_rows = []
    for dataset, sub in cell_summary.groupby("dataset"):
        per_method = {
            method: block["auc_mean_diff"].to_numpy()
            for method, block in sub.groupby("method")
        }
        row = {"dataset": dataset}
        for method, diffs in per_method.items():
            row[f"mean_diff_{method}"] = float(np.mean(diffs))
        if "additive" in per_method and "constant" in per_method:
            res = mann_whitney_u(per_method["additive"], per_method["constant"])
            row["u_statistic"] = res.statistic
            row["u_p_two_sided"] = res.p_two_sided
            row["u_p_one_tailed_additive_greater"] = res.p_one_tailed_greater
        method_rows.append(row)
    method_summary = pd.DataFrame(method_rows).sort_values("dataset")
    method_summary.to_csv(out_dir / "method_summary.csv", index=False)
    return cell_summary, method_summary
