"""Datta-Satten rank-sum tests via within-cluster resampling.

The two-group statistic is the expected value, given the data, of the
standard rank-sum statistic of a pseudo-sample formed by drawing one
observation per cluster; it is computed in closed form from per-cluster
empirical distribution functions.  Group labels may vary within clusters
and cluster sizes may be informative.

The m-group extension (m >= 3) forms, for each of the first m-1 groups, the
one-vs-rest centered statistic and its per-cluster residual decomposition;
the chi-square statistic is the quadratic form of the centered vector in
the empirical residual covariance, on m-1 degrees of freedom.  With m = 2
it reduces to the square of the two-group standardized statistic.

All ECDF evaluations run on sorted pooled values in O(M log M) rather than
pairwise O(M^2).
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import check_alternative, chi_square_sf, p_value
from .result import TestResult
from .sample import ClusteredSample, adjusted_values

__all__ = ["ds_ranksum", "ds_ranksum_multigroup"]

_METHOD = "Clustered Wilcoxon rank sum test using Datta-Satten method"

_ZERO_VAR = 1e-18


def _own_cluster_counts(
    values: np.ndarray, starts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per observation: count of values <= / < it within its own cluster."""
    count_le = np.empty(values.shape[0])
    count_lt = np.empty(values.shape[0])
    for c in range(starts.size - 1):
        lo, hi = starts[c], starts[c + 1]
        chunk = values[lo:hi]
        sorted_chunk = np.sort(chunk)
        count_le[lo:hi] = np.searchsorted(sorted_chunk, chunk, side="right")
        count_lt[lo:hi] = np.searchsorted(sorted_chunk, chunk, side="left")
    return count_le, count_lt


def _weighted_ecdf_sums(
    values: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """``sum_j w_j I(v_j <= x)`` and the strict variant at each ``x`` in
    ``values``; with weights 1/n_cluster this is ``sum_j F_j(x)``."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    prefix = np.concatenate([[0.0], np.cumsum(weights[order])])
    idx_le = np.searchsorted(sorted_vals, values, side="right")
    idx_lt = np.searchsorted(sorted_vals, values, side="left")
    return prefix[idx_le], prefix[idx_lt]


def _two_group_components(
    adj: np.ndarray,
    cluster_codes: np.ndarray,
    starts: np.ndarray,
    delta: np.ndarray,
) -> tuple[float, float, np.ndarray]:
    """Statistic S, its null mean, and the per-cluster residuals whose
    squared sum estimates Var(S), for indicator ``delta`` of group 1."""
    m_total = adj.shape[0]
    n = starts.size - 1
    sizes = np.diff(starts).astype(np.float64)
    inv_size_per_obs = 1.0 / sizes[cluster_codes]

    ecdf_all_le, ecdf_all_lt = _weighted_ecdf_sums(adj, inv_size_per_obs)
    own_le, own_lt = _own_cluster_counts(adj, starts)
    other_pair = (
        ecdf_all_le + ecdf_all_lt - (own_le + own_lt) * inv_size_per_obs
    )  # sum over other clusters of F_j(x) + F_j(x-)

    n_group1 = np.bincount(cluster_codes, weights=delta, minlength=n)
    frac_group1 = n_group1 / sizes
    frac_total = float(frac_group1.sum())

    s = float(
        ((delta * inv_size_per_obs) * (1.0 + 0.5 * other_pair)).sum()
    ) / (n + 1)
    e_s = 0.5 * frac_total

    # pooled ECDF pair from plain counts: F-hat(x) + F-hat(x-)
    order = np.argsort(adj, kind="stable")
    sorted_all = adj[order]
    pooled_pair = (
        np.searchsorted(sorted_all, adj, side="right")
        + np.searchsorted(sorted_all, adj, side="left")
    ) / m_total

    coeff = (n - 1) * delta - (frac_total - frac_group1[cluster_codes])
    w_hat = np.bincount(
        cluster_codes, weights=coeff * pooled_pair, minlength=n
    ) / (2.0 * sizes * (n + 1))
    # Null mean of each w_hat term; the residuals decompose the centered
    # statistic exactly: sum_i (w_hat_i - e_w_i) == s - e_s.
    e_w = n / (2.0 * (n + 1)) * (frac_group1 - frac_total / n)
    return s, e_s, w_hat - e_w


def _strictly_contralateral(sample: ClusteredSample) -> bool:
    sizes = sample.cluster_sizes
    n_group1 = np.bincount(
        sample.cluster_codes,
        weights=sample.group1_mask().astype(np.float64),
        minlength=sample.n_clusters,
    )
    return bool(np.all(sizes == 2) and np.all(n_group1 == 1))


def ds_ranksum(
    sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0
) -> TestResult:
    """Two-group within-cluster-resampling rank-sum test.

    ``mu`` is subtracted from group-1 values before the ECDFs are built.
    Fails on data whose variance estimate degenerates to zero, notably
    strictly contralateral designs (every cluster one subunit per group).
    """
    alt = check_alternative(alternative)
    if sample.paired or sample.group_codes is None:
        raise ValueError("rank-sum test needs an unpaired two-group sample")
    if sample.n_groups != 2:
        raise ValueError(f"two-group test needs exactly 2 groups, got {sample.n_groups}")
    if _strictly_contralateral(sample):
        raise ValueError(
            "the within-cluster-resampling rank-sum test cannot be applied to "
            "strictly contralateral data (one subunit per group in every cluster)"
        )

    adj = adjusted_values(sample, mu)
    delta = sample.group1_mask().astype(np.float64)
    s, e_s, resid = _two_group_components(
        adj, sample.cluster_codes, sample.cluster_starts, delta
    )
    variance = float((resid**2).sum())
    if variance <= _ZERO_VAR:
        raise ValueError("zero variance estimate for the resampling rank-sum statistic")

    z = (s - e_s) / math.sqrt(variance)
    return TestResult(
        method=_METHOD,
        statistic_name="S",
        statistic=s,
        null_mean=e_s,
        variance=variance,
        z=z,
        p_value=p_value(z, alt),
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        n_groups=2,
    )


def _multigroup_statistic(sample: ClusteredSample, mu: float = 0.0) -> tuple[float, int]:
    """Quadratic-form statistic over the first m-1 one-vs-rest contrasts."""
    adj = adjusted_values(sample, mu)
    m_groups = sample.n_groups
    centered = np.empty(m_groups - 1)
    residuals = np.empty((sample.n_clusters, m_groups - 1))
    for k in range(m_groups - 1):
        delta = (sample.group_codes == k).astype(np.float64)
        s, e_s, resid = _two_group_components(
            adj, sample.cluster_codes, sample.cluster_starts, delta
        )
        centered[k] = s - e_s
        residuals[:, k] = resid
    cov = residuals.T @ residuals
    cond = float(np.linalg.cond(cov))
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(
            f"singular residual covariance (condition number {cond:.3g}); "
            "the chi-square statistic is not defined"
        )
    stat = float(centered @ np.linalg.solve(cov, centered))
    return stat, m_groups - 1


def ds_ranksum_multigroup(sample: ClusteredSample) -> TestResult:
    """Chi-square comparison of m >= 3 groups on m-1 degrees of freedom."""
    if sample.paired or sample.group_codes is None:
        raise ValueError("rank-sum test needs an unpaired grouped sample")
    if sample.n_groups < 3:
        raise ValueError(f"m < 3 effective groups (got {sample.n_groups})")
    stat, df = _multigroup_statistic(sample)
    return TestResult(
        method=_METHOD + " using Chi-square test",
        statistic_name="chi-square",
        statistic=stat,
        null_mean=float(df),
        variance=2.0 * df,
        z=None,
        p_value=chi_square_sf(stat, df),
        alternative="two_sided",
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        n_groups=sample.n_groups,
        df=df,
    )
