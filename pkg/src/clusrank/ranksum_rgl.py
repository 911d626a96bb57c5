"""Rosner-Glynn-Lee rank-sum tests.

Cluster-level grouping: the pooled-rank sum of group-1 clusters is compared
to its randomization moments, computed within cluster-size strata (and
within user strata when present, with ranks assigned within each stratum).
Size strata containing a single group carry no comparison; their clusters
are skipped with a warning.

Subunit-level grouping: for balanced data the subunit rank-sum statistic is
standardized by a two-stage randomization variance estimate combining
between- and within-cluster rank dispersion; for unbalanced data a combined
estimate of P(group-1 observation > group-2 observation) is formed by
inverse-variance weighting the per-cluster-size estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distributions import check_alternative, p_value
from .permutation import DEFAULT_B, DEFAULT_CAP, PermutationPlan, permutation_pvalue, ranksum_perm_sums
from .result import DegenerateClustersWarning, TestResult
from .sample import ClusteredSample, adjusted_values, midranks

__all__ = [
    "rgl_ranksum",
    "rgl_ranksum_stratified",
    "rgl_ranksum_exact",
    "rgl_ranksum_subunit_balanced",
    "rgl_ranksum_subunit",
]

_METHOD = "Clustered Wilcoxon rank sum test using Rosner-Glynn-Lee method"


@dataclass(frozen=True)
class SizeStratum:
    """One (stratum, cluster-size) cell of the cluster-level test."""

    size: int
    members: np.ndarray  # cluster codes
    rank_sums: np.ndarray  # R_{i+} for the members
    n_group1: int

    @property
    def n_clusters(self) -> int:
        return len(self.members)

    @property
    def usable(self) -> bool:
        return 0 < self.n_group1 < self.n_clusters


@dataclass(frozen=True)
class GroupCountProfile:
    """Distribution of per-cluster group-1 counts in a balanced block.

    ``counts[q]`` is the number of clusters carrying ``q`` group-1 subunits,
    ``q = 0..size``; moments are taken over this empirical distribution.
    """

    size: int
    counts: np.ndarray

    @classmethod
    def from_group1_counts(cls, q: np.ndarray, size: int) -> "GroupCountProfile":
        q = np.asarray(q)
        if np.any((q < 0) | (q > size)):
            raise ValueError("group-1 counts must lie in [0, cluster size]")
        counts = np.bincount(q.astype(np.intp), minlength=size + 1)
        return cls(size=size, counts=counts)

    @property
    def n_clusters(self) -> int:
        return int(self.counts.sum())

    @property
    def total_group1(self) -> int:
        return int((np.arange(self.size + 1) * self.counts).sum())

    @property
    def degenerate(self) -> bool:
        """All subunits in one group: no contrast to test."""
        return self.total_group1 in (0, self.size * self.n_clusters)

    def var_q(self) -> float:
        q = np.arange(self.size + 1)
        mean = self.total_group1 / self.n_clusters
        return float((self.counts * (q - mean) ** 2).sum()) / self.n_clusters

    def mean_q_times_gap(self) -> float:
        q = np.arange(self.size + 1)
        return float((self.counts * q * (self.size - q)).sum()) / self.n_clusters


def _require_two_groups(sample: ClusteredSample) -> None:
    if sample.paired or sample.group_codes is None:
        raise ValueError("rank-sum test needs an unpaired two-group sample")
    if sample.n_groups != 2:
        raise ValueError(f"rank-sum test needs exactly 2 groups, got {sample.n_groups}")


def _cluster_attribute(sample: ClusteredSample, codes: np.ndarray, what: str) -> np.ndarray:
    """Per-cluster value of a record attribute that must be constant within
    each cluster."""
    first = np.zeros(sample.n_clusters, dtype=codes.dtype)
    first[sample.cluster_codes] = codes  # last write wins; constancy checked below
    if np.any(first[sample.cluster_codes] != codes):
        bad = sample.cluster_labels[
            int(sample.cluster_codes[first[sample.cluster_codes] != codes][0])
        ]
        raise ValueError(f"cluster {bad!r} has mixed {what} labels")
    return first


def _size_strata(sample: ClusteredSample, mu: float, use_strata: bool) -> list[SizeStratum]:
    """Rank (within stratum when requested) and split clusters into
    (stratum, size) cells."""
    _require_two_groups(sample)
    cluster_group = _cluster_attribute(sample, sample.group_codes, "group")
    if use_strata:
        if sample.stratum_codes is None:
            raise ValueError("stratified test requires stratum labels")
        cluster_stratum = _cluster_attribute(sample, sample.stratum_codes, "stratum")
    else:
        cluster_stratum = np.zeros(sample.n_clusters, dtype=np.intp)

    adj = adjusted_values(sample, mu)
    ranks = np.empty_like(adj)
    for s in np.unique(cluster_stratum):
        mask = cluster_stratum[sample.cluster_codes] == s
        ranks[mask] = midranks(adj[mask])
    rank_sums = np.bincount(sample.cluster_codes, weights=ranks, minlength=sample.n_clusters)

    sizes = sample.cluster_sizes
    cells: list[SizeStratum] = []
    cell_key = cluster_stratum * (int(sizes.max()) + 1) + sizes
    for key in np.unique(cell_key):
        members = np.flatnonzero(cell_key == key)
        cells.append(
            SizeStratum(
                size=int(sizes[members[0]]),
                members=members,
                rank_sums=rank_sums[members],
                n_group1=int(np.count_nonzero(cluster_group[members] == 0)),
            )
        )
    return cells


def _warn_skipped(sample: ClusteredSample, cells: list[SizeStratum]) -> None:
    skipped = [
        sample.cluster_labels[int(code)]
        for cell in cells
        if not cell.usable
        for code in cell.members
    ]
    if skipped:
        warnings.warn(
            "skipped clusters with no group contrast at their cluster size: "
            + ", ".join(skipped),
            DegenerateClustersWarning,
            stacklevel=3,
        )


def _cluster_level_result(
    sample: ClusteredSample, alternative: str, mu: float, use_strata: bool
) -> TestResult:
    alt = check_alternative(alternative)
    cells = _size_strata(sample, mu, use_strata)
    _warn_skipped(sample, cells)

    cluster_group = _cluster_attribute(sample, sample.group_codes, "group")
    w = e = v = numer = 0.0
    any_usable = False
    for cell in cells:
        if not cell.usable:
            continue
        any_usable = True
        r = cell.rank_sums
        n_c, m_c = cell.n_clusters, cell.n_group1
        mean_r = float(r.mean())
        total_r = float(r.sum())
        w_c = float(r[cluster_group[cell.members] == 0].sum())
        w += w_c
        e += m_c * mean_r
        # centered numerator in exact half-integer arithmetic, so swapping
        # the group labels negates z bitwise
        numer += (n_c * w_c - m_c * total_r) / n_c
        v += (
            m_c
            * (n_c - m_c)
            / (n_c * (n_c - 1))
            * float(((r - mean_r) ** 2).sum())
        )
    if not any_usable:
        raise ValueError("all cluster-size strata are degenerate; no comparison possible")
    if v <= 0.0:
        raise ValueError("zero variance: cluster rank sums are constant within strata")

    z = numer / math.sqrt(v)
    return TestResult(
        method=_METHOD,
        statistic_name="W",
        statistic=w,
        null_mean=e,
        variance=v,
        z=z,
        p_value=p_value(z, alt),
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        n_groups=2,
    )


def rgl_ranksum(sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0) -> TestResult:
    """Asymptotic cluster-level rank-sum test.

    Requires every cluster to carry a single group label.  ``mu`` is
    subtracted from group-1 values before ranking.
    """
    return _cluster_level_result(sample, alternative, mu, use_strata=False)


def rgl_ranksum_stratified(
    sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0
) -> TestResult:
    """Cluster-level rank-sum test stratified on the sample's stratum labels.

    Ranks are assigned within each stratum; moments accumulate over
    (stratum x cluster-size) cells.
    """
    return _cluster_level_result(sample, alternative, mu, use_strata=True)


def rgl_ranksum_exact(
    sample: ClusteredSample,
    alternative: str = "two_sided",
    mu: float = 0.0,
    b: int = DEFAULT_B,
    seed: int = 0,
    cap: int = DEFAULT_CAP,
) -> TestResult:
    """Permutation version of the cluster-level test.

    ``b = 0`` enumerates every stratified label exchange (refused above
    ``cap`` arrangements); ``b >= 1`` draws that many Monte-Carlo exchanges.
    Stratum labels, when present, confine exchanges within strata.
    """
    alt = check_alternative(alternative)
    use_strata = sample.stratum_codes is not None
    cells = _size_strata(sample, mu, use_strata)
    _warn_skipped(sample, cells)
    cluster_group = _cluster_attribute(sample, sample.group_codes, "group")

    perm_cells = []
    w = e = v = 0.0
    for cell in cells:
        if not cell.usable:
            continue
        r = cell.rank_sums
        n_c, m_c = cell.n_clusters, cell.n_group1
        mean_r = float(r.mean())
        w += float(r[cluster_group[cell.members] == 0].sum())
        e += m_c * mean_r
        v += m_c * (n_c - m_c) / (n_c * (n_c - 1)) * float(((r - mean_r) ** 2).sum())
        perm_cells.append((r, m_c))
    if not perm_cells:
        raise ValueError("all cluster-size strata are degenerate; no comparison possible")

    plan = PermutationPlan(kind="cluster_label_exchange", b=b, seed=seed, cap=cap)
    chunks, total = ranksum_perm_sums(perm_cells, plan)
    p = permutation_pvalue(w, e, chunks, alt, plan.mode)
    return TestResult(
        method=_METHOD
        + (" (exact permutation)" if b == 0 else " (random permutation)"),
        statistic_name="W",
        statistic=w,
        null_mean=e,
        variance=v,
        z=None,
        p_value=p,
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        n_groups=2,
        exact=True,
        n_resamples=total,
    )


def _balanced_subunit_moments(
    ranks: np.ndarray,
    cluster_codes: np.ndarray,
    profile: GroupCountProfile,
) -> tuple[float, float]:
    """Mean and variance estimate of the subunit rank-sum statistic under
    the two-stage randomization, for one balanced block of N clusters."""
    g, n = profile.size, profile.n_clusters
    gn = ranks.size  # == g * n
    rank_sums = np.bincount(cluster_codes, weights=ranks, minlength=n)
    e = (gn + 1) / 2.0 * profile.total_group1
    s_b2 = float(((rank_sums - g * (gn + 1) / 2.0) ** 2).sum()) / n
    if g > 1:
        within = ranks - rank_sums[cluster_codes] / g
        s_w2 = float((within**2).sum()) / (n * (g - 1))
    else:
        s_w2 = 0.0
    between = n * n / ((n - 1) * g * g) * profile.var_q() * s_b2 if n > 1 else 0.0
    return e, between + n * profile.mean_q_times_gap() * s_w2 / g


def rgl_ranksum_subunit_balanced(
    sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0
) -> TestResult:
    """Subunit-level rank-sum test for equal cluster sizes.

    Group labels may vary within clusters.  With cluster-level labels this
    reduces exactly to :func:`rgl_ranksum` on balanced data.
    """
    alt = check_alternative(alternative)
    _require_two_groups(sample)
    sizes = sample.cluster_sizes
    g = int(sizes[0])
    if np.any(sizes != g):
        raise ValueError("balanced subunit test requires equal cluster sizes")

    grp1 = sample.group1_mask()
    q = np.bincount(sample.cluster_codes, weights=grp1, minlength=sample.n_clusters)
    profile = GroupCountProfile.from_group1_counts(q, g)
    if profile.degenerate:
        raise ValueError("no group contrast: every subunit is in one group")

    ranks = midranks(adjusted_values(sample, mu))
    w = float(ranks[grp1].sum())
    e, v = _balanced_subunit_moments(ranks, sample.cluster_codes, profile)
    if v <= 0.0:
        raise ValueError("zero variance estimate for the subunit rank-sum statistic")
    z = (w - e) / math.sqrt(v)
    return TestResult(
        method=_METHOD,
        statistic_name="W",
        statistic=w,
        null_mean=e,
        variance=v,
        z=z,
        p_value=p_value(z, alt),
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        n_groups=2,
    )


def rgl_ranksum_subunit(
    sample: ClusteredSample, alternative: str = "two_sided", mu: float = 0.0
) -> TestResult:
    """Subunit-level rank-sum test for arbitrary cluster sizes.

    Within each cluster-size stratum containing both groups, the
    Mann-Whitney estimate of P(group-1 value > group-2 value) is formed from
    within-stratum mid-ranks and standardized by the balanced two-stage
    variance transferred through the rank-sum / Mann-Whitney identity.
    Strata are combined by inverse-variance weights.
    """
    alt = check_alternative(alternative)
    _require_two_groups(sample)
    adj = adjusted_values(sample, mu)
    grp1 = sample.group1_mask()
    sizes = sample.cluster_sizes
    obs_size = sizes[sample.cluster_codes]

    theta_num = 0.0
    weight_sum = 0.0
    skipped: list[str] = []
    for g in np.unique(sizes):
        cluster_mask = sizes == g
        obs_mask = obs_size == g
        a = int(np.count_nonzero(grp1 & obs_mask))
        n_obs_g = int(np.count_nonzero(obs_mask))
        b_count = n_obs_g - a
        if a == 0 or b_count == 0:
            skipped.extend(
                sample.cluster_labels[int(c)] for c in np.flatnonzero(cluster_mask)
            )
            continue

        local_clusters = np.cumsum(cluster_mask) - 1  # code -> position in stratum
        local_codes = local_clusters[sample.cluster_codes[obs_mask]]
        ranks = midranks(adj[obs_mask])
        local_grp1 = grp1[obs_mask]
        n_g = int(np.count_nonzero(cluster_mask))
        q = np.bincount(local_codes, weights=local_grp1, minlength=n_g)
        profile = GroupCountProfile.from_group1_counts(q, int(g))

        w_g = float(ranks[local_grp1].sum())
        u_g = w_g - a * (a + 1) / 2.0
        theta_g = u_g / (a * b_count)
        _, var_w = _balanced_subunit_moments(ranks, local_codes, profile)
        if var_w <= 0.0:
            skipped.extend(
                sample.cluster_labels[int(c)] for c in np.flatnonzero(cluster_mask)
            )
            continue
        weight = (a * b_count) ** 2 / var_w  # 1 / Var(theta_g)
        theta_num += weight * theta_g
        weight_sum += weight

    if skipped:
        warnings.warn(
            "skipped clusters with no group contrast at their cluster size: "
            + ", ".join(skipped),
            DegenerateClustersWarning,
            stacklevel=2,
        )
    if weight_sum == 0.0:
        raise ValueError("no cluster-size stratum contains both groups")

    theta = theta_num / weight_sum
    variance = 1.0 / weight_sum
    z = (theta - 0.5) / math.sqrt(variance)
    return TestResult(
        method=_METHOD,
        statistic_name="theta",
        statistic=theta,
        null_mean=0.5,
        variance=variance,
        z=z,
        p_value=p_value(z, alt),
        alternative=alt,
        n_observations=sample.n_observations,
        n_clusters=sample.n_clusters,
        n_groups=2,
    )
