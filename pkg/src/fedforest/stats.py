"""Paired and unpaired significance tests plus estimation statistics.

Every test reports the statistic, a two-sided p-value, and the one-tailed
p-value for the alternative "a tends to exceed b" (or "x exceeds y" for the
unpaired test). The rank tests use exact enumeration for small samples
(dynamic programming over the achievable rank sums, which equals full
sign/subset enumeration) and a tie- and continuity-corrected normal
approximation otherwise. Distribution CDFs come from scipy.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

WILCOXON_EXACT_MAX_N = 20
MANNWHITNEY_EXACT_MAX_MIN = 8
MANNWHITNEY_EXACT_MAX_TOTAL = 20


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class PairedSample:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
            raise StatsError("paired sample needs equal-length vectors, n >= 2")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise StatsError("paired sample must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def differences(self) -> np.ndarray:
        return self.a - self.b


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_two_sided: float
    p_one_tailed_greater: float


def paired_t(p: PairedSample) -> TestResult:
    """Student's t on the paired differences, df = n - 1."""
    d = p.differences
    n = len(d)
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return TestResult(0.0, 1.0, 1.0)
        t = math.inf if mean > 0 else -math.inf
        return TestResult(t, 0.0, 0.0 if mean > 0 else 1.0)
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p_two = 2.0 * sps.t.sf(abs(t), df)
    p_greater = sps.t.sf(t, df)
    return TestResult(float(t), min(1.0, float(p_two)), float(p_greater))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with average ranks on ties."""
    return sps.rankdata(values, method="average")


def _rank_sum_distribution(scaled_ranks):
    """PMF of the sum over each subset of `scaled_ranks` (integer weights).

    dist[s] = number of subsets with sum s. Equivalent to enumerating all
    2^n sign assignments of the signed-rank statistic.
    """
    total = int(sum(scaled_ranks))
    dist = np.zeros(total + 1, dtype=np.float64)
    dist[0] = 1.0
    for r in scaled_ranks:
        r = int(r)
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: len(dist) - r]
        dist = dist + shifted
    return dist / dist.sum()


def wilcoxon_signed_rank(p: PairedSample) -> TestResult:
    """Wilcoxon signed-rank test on a - b; zero differences are dropped."""
    d = p.differences
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        raise StatsError("all paired differences are zero")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)

    if n <= WILCOXON_EXACT_MAX_N:
        scaled = np.rint(2 * ranks).astype(int)  # half-ranks -> integers
        dist = _rank_sum_distribution(scaled)
        w2 = int(round(2 * w_plus))
        p_le = float(dist[: w2 + 1].sum())
        p_ge = float(dist[w2:].sum())
        p_two = min(1.0, 2.0 * min(p_le, p_ge))
        p_greater = p_ge
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        sd = math.sqrt(var)
        p_two = 2.0 * sps.norm.sf((abs(w_plus - mu) - 0.5) / sd)
        p_two = min(1.0, float(p_two))
        p_greater = float(sps.norm.sf((w_plus - mu - 0.5) / sd))
    return TestResult(statistic, p_two, min(1.0, max(0.0, p_greater)))


def _subset_rank_sum_distribution(scaled_ranks, k):
    """PMF of rank sums over all k-subsets of `scaled_ranks` (integers)."""
    total = int(sum(scaled_ranks))
    counts = np.zeros((k + 1, total + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for r in scaled_ranks:
        r = int(r)
        for size in range(k, 0, -1):
            counts[size, r:] += counts[size - 1, : total + 1 - r]
    dist = counts[k]
    return dist / dist.sum()


def mann_whitney_u(x, y) -> TestResult:
    """Mann-Whitney U test; the statistic is U of the first sample."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise StatsError("mann_whitney_u needs two non-empty samples")
    combined = np.concatenate([x, y])
    ranks = _average_ranks(combined)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0

    exact = (
        min(n1, n2) <= MANNWHITNEY_EXACT_MAX_MIN
        and n1 + n2 <= MANNWHITNEY_EXACT_MAX_TOTAL
    )
    if exact:
        scaled = np.rint(2 * ranks).astype(int)
        dist = _subset_rank_sum_distribution(scaled, n1)
        r2x = int(round(2 * r1))
        p_le = float(dist[: r2x + 1].sum())
        p_ge = float(dist[r2x:].sum())
        p_two = min(1.0, 2.0 * min(p_le, p_ge))
        p_greater = p_ge
    else:
        n = n1 + n2
        mu = n1 * n2 / 2.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1))
        var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
        sd = math.sqrt(var)
        p_two = min(1.0, 2.0 * float(sps.norm.sf((abs(u1 - mu) - 0.5) / sd)))
        p_greater = float(sps.norm.sf((u1 - mu - 0.5) / sd))
    return TestResult(float(u1), p_two, min(1.0, max(0.0, p_greater)))


def mean_difference_ci(
    p: PairedSample, resamples: int = 5000, seed: int = 0
) -> dict:
    """Paired mean difference with a percentile bootstrap 95% interval.

    The Gardner-Altman numbers behind estimation plots: mean of a - b and
    the [2.5%, 97.5%] percentiles of resampled means. Seed-deterministic.
    """
    d = p.differences
    n = len(d)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n))
    means = d[idx].mean(axis=1)
    ci_low, ci_high = np.quantile(means, [0.025, 0.975])
    return {
        "mean_diff": float(d.mean()),
        "ci_low": float(ci_low),
        "ci_high": float(ci_high),
    }
