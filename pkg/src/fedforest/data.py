"""Datasets, preprocessing, and site partitioning.

A `Dataset` is an immutable feature-named numeric matrix with binary labels.
This module loads CSVs into that form, computes the imbalance ratio,
partitions samples across simulated sites (stratified), simulates partially
overlapping feature availability by randomly dropping features per site, and
provides synthetic stand-ins for the clinical datasets that are not publicly
redistributable.
"""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .seeding import rng_from


class DataError(ValueError):
    """Raised for malformed inputs or partitions that violate preconditions."""


@dataclass(frozen=True)
class Dataset:
    """Numeric feature matrix with named columns and binary labels."""

    feature_names: tuple
    X: np.ndarray  # (n_samples, n_features) float64
    y: np.ndarray  # (n_samples,) int values in {0, 1}

    def __post_init__(self):
        names = tuple(self.feature_names)
        object.__setattr__(self, "feature_names", names)
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names")
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(names):
            raise DataError(
                f"row width {X.shape} does not match {len(names)} feature names"
            )
        if y.shape != (X.shape[0],):
            raise DataError("labels length does not match row count")
        if np.isnan(X).any():
            raise DataError("missing values present after preprocessing")
        if not np.isin(y, (0, 1)).all():
            raise DataError("labels must be binary 0/1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def class_counts(self):
        """(count of class 0, count of class 1)."""
        return int((self.y == 0).sum()), int((self.y == 1).sum())

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.feature_names.index(name)]

    def take(self, idx) -> "Dataset":
        return Dataset(self.feature_names, self.X[idx], self.y[idx])

    def row_by_name(self, i: int) -> dict:
        return dict(zip(self.feature_names, self.X[i]))


@dataclass(frozen=True)
class FeatureDictionary:
    """The set of feature names available at one site."""

    site_id: str
    available: frozenset

    def __post_init__(self):
        object.__setattr__(self, "available", frozenset(self.available))
        if not self.available:
            raise DataError("feature dictionary must be non-empty")


@dataclass(frozen=True)
class SiteSplit:
    parts: tuple
    site_count: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))


# ---------------------------------------------------------------------------
# CSV loading

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LABEL = "label"

# Column layouts for the public UCI files, assuming a header row with these
# names has been added. The raw UCI downloads ship without headers.
ILPD_SCHEMA = {
    "Age": NUMERIC,
    "Gender": CATEGORICAL,
    "TB": NUMERIC,
    "DB": NUMERIC,
    "Alkphos": NUMERIC,
    "Sgpt": NUMERIC,
    "Sgot": NUMERIC,
    "TP": NUMERIC,
    "ALB": NUMERIC,
    "AG_Ratio": NUMERIC,
    "Selector": LABEL,
}

BCD_SCHEMA = {"Diagnosis": CATEGORICAL}  # filled out below


def load_csv(path, label_column: str, schema: dict) -> Dataset:
    """Load a headered CSV into a Dataset.

    `schema` maps every column name to one of "numeric", "categorical" or
    "label". Categorical columns are integer-encoded by lexicographic
    category order. Rows containing any missing value are dropped. The label
    column must have exactly two distinct values; they are encoded 0/1 in
    sorted order.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except Exception as exc:
        raise DataError(f"unreadable CSV {path}: {exc}") from exc
    if label_column not in frame.columns:
        raise DataError(f"label column {label_column!r} not in {path}")
    if schema.get(label_column) != LABEL:
        raise DataError(f"schema does not mark {label_column!r} as the label")
    missing = [c for c in frame.columns if c not in schema]
    if missing:
        raise DataError(f"columns absent from schema: {missing}")

    frame = frame.replace("", np.nan).dropna(axis=0, how="any")

    columns = {}
    for name in frame.columns:
        kind = schema[name]
        values = frame[name]
        if kind == NUMERIC:
            columns[name] = pd.to_numeric(values).to_numpy(dtype=np.float64)
        else:
            cats = sorted(values.unique())
            codes = {c: i for i, c in enumerate(cats)}
            columns[name] = values.map(codes).to_numpy(dtype=np.float64)
            if kind == LABEL and len(cats) != 2:
                raise DataError(
                    f"label column {label_column!r} has {len(cats)} distinct "
                    "values after dropping incomplete rows; expected 2"
                )

    feature_names = [c for c in frame.columns if c != label_column]
    X = np.column_stack([columns[c] for c in feature_names])
    y = columns[label_column].astype(np.int64)
    return Dataset(tuple(feature_names), X, y)


# ---------------------------------------------------------------------------
# Imbalance and partitioning


def imbalance_ratio(d: Dataset) -> float:
    """Minority class count divided by majority class count, in (0, 1]."""
    n0, n1 = d.class_counts()
    if n0 == 0 or n1 == 0:
        raise DataError("imbalance ratio undefined for a single-class dataset")
    return min(n0, n1) / max(n0, n1)


def _class_pools(d: Dataset, rng: np.random.Generator):
    """Shuffled index pools per class, class 0 first."""
    pools = []
    for cls in (0, 1):
        idx = np.flatnonzero(d.y == cls)
        pools.append(rng.permutation(idx))
    return pools


def stratified_site_split(
    d: Dataset, site_count: int, seed: int, min_per_class: int = 5
) -> SiteSplit:
    """Disjoint, stratified, seed-deterministic partition across sites.

    Per class, site shares differ by at most one sample. The leftover
    samples of each class are placed on the sites with the smallest running
    totals so overall site sizes also differ by at most one.
    """
    if site_count < 2:
        raise DataError("site_count must be >= 2")
    n0, n1 = d.class_counts()
    for cls, n_cls in ((0, n0), (1, n1)):
        if n_cls // site_count < min_per_class:
            raise DataError(
                f"class {cls} has {n_cls} samples; {site_count} sites need "
                f"at least {min_per_class} per class per site"
            )
    rng = rng_from(seed, "site_split")
    pools = _class_pools(d, rng)

    sizes = np.zeros((site_count, 2), dtype=int)
    totals = np.zeros(site_count, dtype=int)
    for cls, pool in enumerate(pools):
        base, extra = divmod(len(pool), site_count)
        sizes[:, cls] = base
        if extra:
            order = np.lexsort((np.arange(site_count), totals))
            sizes[order[:extra], cls] += 1
        totals = sizes.sum(axis=1)

    parts = []
    offsets = [0, 0]
    for s in range(site_count):
        take = []
        for cls, pool in enumerate(pools):
            k = sizes[s, cls]
            take.append(pool[offsets[cls] : offsets[cls] + k])
            offsets[cls] += k
        idx = np.sort(np.concatenate(take))
        parts.append(d.take(idx))
    return SiteSplit(tuple(parts), site_count, seed)


def train_test_indices(y, test_fraction: float, seed: int):
    """Stratified (train_idx, test_idx) over labels; depends only on (y, seed)."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must be in (0, 1)")
    y = np.asarray(y)
    rng = rng_from(seed, "train_test")
    test_take, train_take = [], []
    for cls in (0, 1):
        pool = rng.permutation(np.flatnonzero(y == cls))
        n_test = int(round(test_fraction * len(pool)))
        if n_test < 1 or len(pool) - n_test < 1:
            raise DataError(
                "a class would be absent from the train or test side"
            )
        test_take.append(pool[:n_test])
        train_take.append(pool[n_test:])
    return (
        np.sort(np.concatenate(train_take)),
        np.sort(np.concatenate(test_take)),
    )


def train_test_split(d: Dataset, test_fraction: float = 0.3, seed: int = 0):
    """Stratified train/test split; returns (train, test)."""
    train_idx, test_idx = train_test_indices(d.y, test_fraction, seed)
    return d.take(train_idx), d.take(test_idx)


def drop_features(d: Dataset, fraction: float, seed: int, site_id: str = ""):
    """Randomly remove floor(fraction * n_features) features.

    Returns the reduced Dataset and the FeatureDictionary of survivors.
    Column order of survivors is preserved.
    """
    if not 0.0 <= fraction < 1.0:
        raise DataError("fraction must be in [0, 1)")
    n_drop = math.floor(fraction * d.n_features)
    if n_drop >= d.n_features:
        raise DataError("fraction would remove all features")
    rng = rng_from(seed, "drop_features")
    dropped = set(rng.choice(d.n_features, size=n_drop, replace=False).tolist())
    keep = [i for i in range(d.n_features) if i not in dropped]
    names = tuple(d.feature_names[i] for i in keep)
    reduced = Dataset(names, d.X[:, keep], d.y)
    return reduced, FeatureDictionary(site_id, frozenset(names))


# ---------------------------------------------------------------------------
# Synthetic clinical stand-ins
#
# The real HCC cohort is not public, and this environment cannot reach the
# UCI repository for ILPD, so both are replaced by generators matched to the
# published sample counts, feature counts, and imbalance ratios. Labels come
# from a noisy nonlinear score over the features so that models can learn,
# with difficulty tuned so small per-site training sets degrade noticeably.


def _synth_labels(score: np.ndarray, n_minority: int) -> np.ndarray:
    """Assign exactly `n_minority` positive labels to the top scores."""
    y = np.zeros(len(score), dtype=np.int64)
    y[np.argsort(-score, kind="stable")[:n_minority]] = 1
    return y


def synth_hcc(seed: int) -> Dataset:
    """Synthetic stand-in for the hepatocellular carcinoma cohort.

    685 samples, 7 numeric features, 280 minority / 405 majority
    (imbalance ratio 280/405 = 0.691).
    """
    rng = rng_from(seed, "synth_hcc")
    n = 685
    names = ("age", "gender", "height", "weight", "marker_a", "marker_b", "marker_c")
    age = rng.integers(25, 85, n).astype(float)
    gender = rng.integers(0, 2, n).astype(float)
    height = rng.normal(170, 9, n)
    weight = rng.normal(76, 12, n)
    markers = rng.lognormal(mean=0.0, sigma=0.7, size=(n, 3))
    X = np.column_stack([age, gender, height, weight, markers])

    z = (X - X.mean(axis=0)) / X.std(axis=0)
    score = (
        0.9 * z[:, 4]
        + 0.7 * z[:, 5]
        + 0.5 * z[:, 6]
        + 0.4 * z[:, 0]
        + 0.8 * z[:, 4] * z[:, 5]
        + rng.normal(0.0, 1.1, n)
    )
    return Dataset(names, X, _synth_labels(score, 280))


# Linear display scales for the continuous ILPD-style columns
# (mean, sd); purely cosmetic, since affine maps leave tree behavior
# unchanged.
_ILPD_SCALES = {
    0: (46.0, 14.0),   # Age
    2: (2.2, 1.6),     # TB
    3: (1.0, 0.8),     # DB
    4: (290.0, 120.0),  # Alkphos
    5: (80.0, 60.0),    # Sgpt
    6: (100.0, 70.0),   # Sgot
    7: (6.5, 1.0),      # TP
    8: (3.1, 0.7),      # ALB
    9: (0.95, 0.3),     # AG_Ratio
}


def synth_ilpd(seed: int = 0) -> Dataset:
    """Synthetic stand-in for the Indian Liver Patient Dataset.

    579 complete samples, 10 features matching the ILPD column layout,
    165 minority / 414 majority (imbalance ratio 165/414 = 0.399).

    The cohort is built from 193 underlying patients, each contributing
    three nearly identical records (repeated measurements), mirroring the
    heavy row duplication of the real file. Every column is a monotone view
    of one latent severity score plus tiny per-record measurement jitter, an
    extreme form of the strong cross-correlation of a real liver panel
    (bilirubins, transaminases, protein fractions all track disease state).
    Labels carry strong patient-level noise on top of that score, so a model
    predicts a record well only if a sibling record of the same patient was
    in its training data. That gives the dataset the properties the
    evaluation grid exercises: models improve sharply with effective
    training-cohort coverage, trees imported from other sites are valuable
    precisely because they have seen the siblings of locally held records,
    and because mutually redundant columns make trees concentrate their
    splits on very few features, imported trees stay evaluable even when a
    site is missing a sizable fraction of the columns.

    All columns are continuous (Gender is a latent score, binarized only in
    the CSV rendering); the stand-in is structural, not clinically
    realistic.
    """
    rng = rng_from(seed, "synth_ilpd")
    n, n_unique, n_minority = 579, 193, 165
    names = tuple(c for c in ILPD_SCHEMA if ILPD_SCHEMA[c] != LABEL)

    z = rng.normal(0.0, 1.0, n_unique)  # latent severity per patient
    patient_score = 0.3 * z + rng.normal(0.0, 1.5, n_unique)

    record_patient = np.repeat(np.arange(n_unique), n // n_unique)
    rng.shuffle(record_patient)
    V = np.tile(z[record_patient][:, None], (1, 10))
    # measurement jitter keeps sibling records distinguishable but adjacent
    V[:, 2:] += rng.normal(0.0, 1e-4, (n, 8))

    X = V.copy()
    for col, (mu, sd) in _ILPD_SCALES.items():
        X[:, col] = mu + sd * V[:, col]
    return Dataset(names, X, _synth_labels(patient_score[record_patient], n_minority))


def write_ilpd_csv(path, seed: int = 0) -> None:
    """Write the synthetic ILPD stand-in as a raw-style CSV.

    Mirrors the public file's shape: 583 rows of which 4 are missing the
    AG_Ratio value, so loading with `ILPD_SCHEMA` drops them and yields the
    579-sample Dataset. Gender is written as a category and Selector uses
    the original 1/2 coding (1 = disease, the minority after preprocessing
    maps to it via lexicographic label encoding: "1" -> 0, "2" -> 1).
    """
    d = synth_ilpd(seed)
    rng = rng_from(seed, "synth_ilpd_csv")
    header = list(ILPD_SCHEMA)
    gender_col = d.feature_names.index("Gender")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(d.n_samples):
            row = []
            for j, name in enumerate(d.feature_names):
                v = d.X[i, j]
                if j == gender_col:
                    # the latent gender score is binarized for the
                    # categorical CSV rendering
                    row.append("Female" if v <= 0 else "Male")
                else:
                    # six decimals: measurement jitter between sibling
                    # records is ~1e-4 of a column's scale and must survive
                    row.append(f"{v:.6f}")
            # minority (label 1) -> Selector "2" so that lexicographic
            # encoding maps the minority back to class 1 on reload
            row.append("2" if d.y[i] == 1 else "1")
            writer.writerow(row)
        # four incomplete rows, dropped at load time
        for _ in range(4):
            row = [
                str(int(rng.integers(18, 80))),
                "Male",
                f"{rng.lognormal(0.1, 0.8):.4f}",
                f"{rng.lognormal(-1.0, 0.8):.4f}",
                f"{rng.lognormal(5.4, 0.45):.4f}",
                f"{rng.lognormal(3.6, 0.7):.4f}",
                f"{rng.lognormal(3.7, 0.7):.4f}",
                f"{rng.normal(6.5, 1.0):.4f}",
                f"{rng.normal(3.2, 0.6):.4f}",
                "",  # missing AG_Ratio
                "1",
            ]
            writer.writerow(row)


def load_bcd() -> Dataset:
    """Breast Cancer Wisconsin (Diagnostic) via scikit-learn's bundled copy.

    569 samples, 30 features; class 1 is benign (majority, 357), class 0
    malignant (212), imbalance ratio 212/357 = 0.594.
    """
    from sklearn.datasets import load_breast_cancer

    raw = load_breast_cancer()
    names = tuple(n.replace(" ", "_") for n in raw.feature_names)
    return Dataset(names, raw.data.astype(np.float64), raw.target.astype(np.int64))


def load_builtin(name: str, seed: int = 0) -> Dataset:
    """Resolve a dataset id: ilpd, bcd, or hcc-synth.

    "ilpd" loads a real prepared CSV from $FEDFOREST_ILPD_CSV if set,
    otherwise the synthetic stand-in.
    """
    if name == "ilpd":
        path = os.environ.get("FEDFOREST_ILPD_CSV")
        if path:
            return load_csv(path, "Selector", ILPD_SCHEMA)
        return synth_ilpd(seed)
    if name == "bcd":
        return load_bcd()
    if name == "hcc-synth":
        return synth_hcc(seed)
    raise DataError(f"unknown dataset id {name!r}")
