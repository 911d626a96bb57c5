"""Rosner-Glynn-Lee signed-rank tests for clustered paired differences.

Zero differences are removed before ranking; clusters left with no nonzero
difference are dropped with a warning.  When the retained clusters share
one size, the statistic is the plain sum of cluster signed-rank sums with
its exact sign-flip variance.  Otherwise each cluster contributes its mean
signed rank, weighted by the inverse of a variance estimate built from a
shared intracluster correlation of the signed ranks (method-of-moments
estimate from within-cluster cross-products, clamped to the feasible
range).

The exact test conditions on the cluster terms and flips their signs, all
2^N ways or by Monte-Carlo sampling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import check_alternative, p_value
from .permutation import DEFAULT_B, DEFAULT_CAP, PermutationPlan, permutation_pvalue, signflip_sums
from .result import DegenerateClustersWarning, TestResult
from .sample import ClusteredSample, adjusted_values, midranks

__all__ = ["rgl_signedrank", "rgl_signedrank_exact"]

_METHOD = "Clustered Wilcoxon signed rank test using Rosner-Glynn-Lee method"


@dataclass(frozen=True)
class _SignedRankWork:
    """Signed ranks of the nonzero differences, aggregated per kept cluster."""

    signed_ranks: np.ndarray  # per nonzero difference
    cluster_of: np.ndarray  # re-coded cluster index per nonzero difference
    sums: np.ndarray  # S_{i+} per kept cluster
    sizes: np.ndarray  # nonzero count per kept cluster
    balanced: bool


def _signed_rank_work(sample: ClusteredSample, mu: float) -> _SignedRankWork:
    if not sample.paired:
        raise ValueError("signed-rank test needs a paired-differences sample")
    diffs = adjusted_values(sample, mu)
    nonzero = diffs != 0.0
    if not np.any(nonzero):
        raise ValueError("all differences are zero")

    kept_counts = np.bincount(
        sample.cluster_codes[nonzero], minlength=sample.n_clusters
    )
    dropped = np.flatnonzero(kept_counts == 0)
    if dropped.size:
        warnings.warn(
            "dropped clusters whose differences are all zero: "
            + ", ".join(sample.cluster_labels[int(c)] for c in dropped),
            DegenerateClustersWarning,
            stacklevel=3,
        )
    if sample.n_clusters - dropped.size < 2:
        raise ValueError("fewer than 2 clusters have nonzero differences")

    d = diffs[nonzero]
    ranks = midranks(np.abs(d))
    signed = np.sign(d) * ranks

    old_codes = sample.cluster_codes[nonzero]
    recode = np.cumsum(kept_counts > 0) - 1
    cluster_of = recode[old_codes]
    n_kept = int(recode[-1]) + 1
    sums = np.bincount(cluster_of, weights=signed, minlength=n_kept)
    sizes = kept_counts[kept_counts > 0]
    return _SignedRankWork(
        signed_ranks=signed,
        cluster_of=cluster_of,
        sums=sums,
        sizes=sizes,
        balanced=bool(np.all(sizes == sizes[0])),
    )


def _weighted_terms(work: _SignedRankWork) -> tuple[np.ndarray, float]:
    """Per-cluster terms ``w_i * S-bar_i`` of the unbalanced statistic and
    the variance estimate ``sum w_i^2 S-bar_i^2`` of their total."""
    m0 = work.signed_ranks.size
    sigma2 = float((work.signed_ranks**2).sum()) / m0
    per_cluster_sq = np.bincount(
        work.cluster_of, weights=work.signed_ranks**2, minlength=work.sums.size
    )
    cross = float((work.sums**2 - per_cluster_sq).sum())
    pair_count = float((work.sizes * (work.sizes - 1)).sum())
    g_max = int(work.sizes.max())
    if pair_count > 0:
        rho = cross / pair_count / sigma2
    else:
        rho = 0.0
    lo = -1.0 / (g_max - 1) + 1e-6 if g_max > 1 else 0.0
    rho = min(max(rho, lo), 1.0 - 1e-6)

    s_bar = work.sums / work.sizes
    var_s_bar = sigma2 * (1.0 + (work.sizes - 1) * rho) / work.sizes
    weights = 1.0 / var_s_bar
    terms = weights * s_bar
    return terms, float((weights**2 * s_bar**2).sum())


def rgl_signedrank(
    sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0
) -> TestResult:
    """Asymptotic clustered signed-rank test of location ``mu``."""
    alt = check_alternative(alternative)
    work = _signed_rank_work(sample, mu)
    if work.balanced:
        t = float(work.sums.sum())
        variance = float((work.sums**2).sum())
    else:
        terms, variance = _weighted_terms(work)
        t = float(terms.sum())
    if variance <= 0.0:
        raise ValueError("zero variance: every cluster signed-rank sum is zero")
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


def rgl_signedrank_exact(
    sample: ClusteredSample,
    alternative: str = "two_sided",
    mu: float = 0.0,
    b: int = DEFAULT_B,
    seed: int = 0,
    cap: int = DEFAULT_CAP,
) -> TestResult:
    """Sign-flip randomization version of the clustered signed-rank test.

    ``b = 0`` enumerates all 2^N flips of the cluster terms (refused above
    ``cap``); ``b >= 1`` draws Monte-Carlo flips.
    """
    alt = check_alternative(alternative)
    work = _signed_rank_work(sample, mu)
    if work.balanced:
        terms = work.sums
        variance = float((work.sums**2).sum())
    else:
        terms, variance = _weighted_terms(work)
    t = float(terms.sum())

    plan = PermutationPlan(kind="sign_flip", b=b, seed=seed, cap=cap)
    chunks, total = signflip_sums(np.asarray(terms, dtype=np.float64), plan)
    p = permutation_pvalue(t, 0.0, chunks, alt, plan.mode)
    return TestResult(
        method=_METHOD
        + (" (exact permutation)" if b == 0 else " (random permutation)"),
        statistic_name="T",
        statistic=t,
        null_mean=0.0,
        variance=variance,
        z=None,
        p_value=p,
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        exact=True,
        n_resamples=total,
    )
