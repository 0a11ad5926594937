"""Statistical primitives for the profile pipeline.

Exactly the five tools the pipeline needs: per-variable z-scoring, Spearman
rank correlation, Kruskal-Wallis, Dunn pairwise post-hoc, and Welch's
unequal-variance t-test. Rank handling uses average ranks for ties
throughout. Statistics are computed here; distribution tails come from
scipy.special.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import (
    BothConstant,
    DegenerateInput,
    EmptyGroup,
    TooFewRows,
    TooFewSamples,
)


class Method(str, enum.Enum):
    SPEARMAN = "spearman"
    KRUSKAL_WALLIS = "kruskal_wallis"
    DUNN = "dunn"
    WELCH_T = "welch_t"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    df_or_groups: float
    method: Method

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "df_or_groups": self.df_or_groups,
            "method": self.method.value,
        }


def _ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their group average."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _tie_term(values: np.ndarray) -> float:
    """Sum of t^3 - t over tie groups of the pooled sample."""
    _, counts = np.unique(values, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _t_sf_two_sided(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return 2.0 * float(special.stdtr(df, -abs(t)))


def _chi2_sf(x: float, df: float) -> float:
    return float(special.chdtrc(df, x))


def _normal_sf_two_sided(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def zscore_by_variable(matrix: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Standardize each column to sample mean 0 and sample (n-1) sd 1.

    Constant columns come back as all zeros rather than erroring, so a
    value every respondent rates identically cannot poison clustering.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise TooFewRows("expected a 2-d matrix")
    n = x.shape[0]
    if n < 2:
        raise TooFewRows(f"need at least 2 rows, got {n}")
    means = x.mean(axis=0)
    sds = x.std(axis=0, ddof=1)
    out = np.zeros_like(x)
    nonconstant = sds > 0
    out[:, nonconstant] = (x[:, nonconstant] - means[nonconstant]) / sds[nonconstant]
    return out


def spearman(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Spearman rank correlation with a t-approximation p-value on n-2 df.

    The approximation (rather than exact permutation) is what keeps this
    usable at survey scale; it is the standard large-n treatment.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise TooFewSamples("x and y must be 1-d and the same length")
    n = len(xa)
    if n < 3:
        raise TooFewSamples(f"need at least 3 observations, got {n}")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateInput("correlation undefined for a constant vector")
    rx = _ranks(xa)
    ry = _ranks(ya)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(np.dot(rx, ry) / math.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = _t_sf_two_sided(t, n - 2)
    return TestResult(statistic=rho, p_value=p, df_or_groups=float(n - 2), method=Method.SPEARMAN)


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Tie-corrected Kruskal-Wallis H with a chi-square (k-1 df) p-value."""
    k = len(groups)
    if k < 2:
        raise TooFewSamples(f"need at least 2 groups, got {k}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(arrays):
        if len(g) == 0:
            raise EmptyGroup(f"group {i} is empty")
    pooled = np.concatenate(arrays)
    n_total = len(pooled)
    if n_total < k + 1:
        raise TooFewSamples(f"need more than {k} total observations, got {n_total}")
    ranks = _ranks(pooled)
    grand_mean = (n_total + 1) / 2.0
    h = 0.0
    offset = 0
    for g in arrays:
        group_ranks = ranks[offset : offset + len(g)]
        offset += len(g)
        h += len(g) * (group_ranks.mean() - grand_mean) ** 2
    h *= 12.0 / (n_total * (n_total + 1))
    correction = 1.0 - _tie_term(pooled) / (n_total**3 - n_total)
    if correction == 0.0:
        raise DegenerateInput("all pooled values are identical")
    h /= correction
    return TestResult(
        statistic=h,
        p_value=_chi2_sf(h, k - 1),
        df_or_groups=float(k - 1),
        method=Method.KRUSKAL_WALLIS,
    )


@dataclass(frozen=True)
class DunnResult:
    """Pairwise Dunn comparisons over k groups.

    z is antisymmetric with z[i][j] > 0 when group i's mean rank exceeds
    group j's. p holds raw two-sided p-values; p_adjusted the Bonferroni
    correction over the k(k-1)/2 pairs. Diagonals are z=0, p=1.
    """

    group_sizes: tuple[int, ...]
    mean_ranks: tuple[float, ...]
    z: np.ndarray
    p: np.ndarray
    p_adjusted: np.ndarray

    @property
    def k(self) -> int:
        return len(self.group_sizes)

    def pair(self, i: int, j: int) -> TestResult:
        return TestResult(
            statistic=float(self.z[i, j]),
            p_value=float(self.p[i, j]),
            df_or_groups=float(self.k),
            method=Method.DUNN,
        )


def dunn_posthoc(groups: Sequence[Sequence[float]]) -> DunnResult:
    """Dunn's z-test on every pair of groups with tie-corrected rank variance."""
    k = len(groups)
    if k < 2:
        raise TooFewSamples(f"need at least 2 groups, got {k}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(arrays):
        if len(g) == 0:
            raise EmptyGroup(f"group {i} is empty")
    pooled = np.concatenate(arrays)
    n_total = len(pooled)
    ranks = _ranks(pooled)
    sizes = [len(g) for g in arrays]
    mean_ranks = []
    offset = 0
    for size in sizes:
        mean_ranks.append(float(ranks[offset : offset + size].mean()))
        offset += size
    variance = n_total * (n_total + 1) / 12.0 - _tie_term(pooled) / (12.0 * (n_total - 1))
    if variance <= 0.0:
        raise DegenerateInput("pooled rank variance is zero")
    z = np.zeros((k, k))
    p = np.ones((k, k))
    n_pairs = k * (k - 1) // 2
    for i in range(k):
        for j in range(i + 1, k):
            se = math.sqrt(variance * (1.0 / sizes[i] + 1.0 / sizes[j]))
            zij = (mean_ranks[i] - mean_ranks[j]) / se
            z[i, j] = zij
            z[j, i] = -zij
            p[i, j] = p[j, i] = _normal_sf_two_sided(zij)
    p_adjusted = np.minimum(p * n_pairs, 1.0)
    np.fill_diagonal(p_adjusted, 1.0)
    return DunnResult(
        group_sizes=tuple(sizes),
        mean_ranks=tuple(mean_ranks),
        z=z,
        p=p,
        p_adjusted=p_adjusted,
    )


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Welch's two-sample t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise TooFewSamples("each sample needs at least 2 observations")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    na, nb = len(a), len(b)
    if va == 0.0 and vb == 0.0:
        raise BothConstant("both samples have zero variance")
    sa, sb = va / na, vb / nb
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    return TestResult(
        statistic=t,
        p_value=_t_sf_two_sided(t, df),
        df_or_groups=df,
        method=Method.WELCH_T,
    )
