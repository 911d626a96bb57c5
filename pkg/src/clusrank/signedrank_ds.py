"""Datta-Satten signed-rank test for clustered paired differences.

The statistic is the expected value, given the data, of the standard
signed-rank statistic of a pseudo-sample holding one difference per
cluster; cluster sizes may be informative.  Each cluster's contribution
runs through the half-averaged ECDF of the absolute differences within the
cluster, so every cluster carries equal weight regardless of its size.

Zero differences keep their place in the cluster (they stay in the ECDF
support and in the denominators) but carry sign zero, so they add nothing
to the signed terms.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import check_alternative, p_value
from .ranksum_ds import _own_cluster_counts, _weighted_ecdf_sums
from .result import TestResult
from .sample import ClusteredSample, adjusted_values

__all__ = ["ds_signedrank"]

_METHOD = "Clustered Wilcoxon signed rank test using Datta-Satten method"

_ZERO_VAR = 1e-18


def ds_signedrank(
    sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0
) -> TestResult:
    """Within-cluster-resampling signed-rank test of location ``mu``."""
    alt = check_alternative(alternative)
    if not sample.paired:
        raise ValueError("signed-rank test needs a paired-differences sample")

    diffs = adjusted_values(sample, mu)
    abs_diffs = np.abs(diffs)
    signs = np.sign(diffs)
    codes = sample.cluster_codes
    starts = sample.cluster_starts
    n = sample.n_clusters
    m_total = sample.n_observations
    sizes = sample.cluster_sizes.astype(np.float64)
    inv_size_per_obs = 1.0 / sizes[codes]

    n_pos = np.bincount(codes, weights=(diffs > 0).astype(np.float64), minlength=n)
    n_neg = np.bincount(codes, weights=(diffs < 0).astype(np.float64), minlength=n)
    sign_frac = (n_pos - n_neg) / sizes

    # sum over clusters j of H_j(x) = (F_j(x) + F_j(x-)) / 2 on |differences|
    ecdf_all_le, ecdf_all_lt = _weighted_ecdf_sums(abs_diffs, inv_size_per_obs)
    own_le, own_lt = _own_cluster_counts(abs_diffs, starts)
    h_all = 0.5 * (ecdf_all_le + ecdf_all_lt)
    h_own = 0.5 * (own_le + own_lt) * inv_size_per_obs
    h_other = h_all - h_own

    t = float(sign_frac.sum()) + float(
        np.bincount(codes, weights=signs * h_other * inv_size_per_obs, minlength=n).sum()
    )

    # pooled H-hat from plain counts over all absolute differences
    sorted_abs = np.sort(abs_diffs)
    h_pooled = (
        np.searchsorted(sorted_abs, abs_diffs, side="right")
        + np.searchsorted(sorted_abs, abs_diffs, side="left")
    ) / (2.0 * m_total)
    s_hat = sign_frac + (n - 1) / sizes * np.bincount(
        codes, weights=signs * h_pooled, minlength=n
    )
    variance = float((s_hat**2).sum())
    if variance <= _ZERO_VAR:
        raise ValueError("zero variance estimate for the resampling signed-rank statistic")

    z = t / math.sqrt(variance)
    return TestResult(
        method=_METHOD,
        statistic_name="T",
        statistic=t,
        null_mean=0.0,
        variance=variance,
        z=z,
        p_value=p_value(z, alt),
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
    )
