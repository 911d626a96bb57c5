"""Data model for clustered observations.

A :class:`ClusteredSample` holds one observation per record together with
its cluster id and, for two-or-more-group comparisons, a group label and an
optional stratum label.  Records are stored stably sorted by cluster so all
downstream computations are independent of input order.  Labels are opaque:
they are compared by equality only, and whenever a computation needs "group
1" it takes the first label in sorted order (for string labels that is the
lexicographically smallest), which makes statistic signs deterministic.

Mid-ranks are used throughout: tied values receive the average of the ranks
they span, and coincide with ordinary ranks on tie-free data.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ClusteredSample",
    "RankedView",
    "ingest_records",
    "midranks",
    "ecdf_pair",
    "pooled_ecdf",
    "ranked_view",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _factorize(raw: np.ndarray) -> tuple[np.ndarray, tuple[str, ...]]:
    """Label array -> (codes in sorted-unique order, unique labels as str)."""
    uniques, codes = np.unique(raw, return_inverse=True)
    return codes.astype(np.intp), tuple(str(u) for u in uniques)


@dataclass(frozen=True)
class ClusteredSample:
    """Validated clustered observations, sorted by cluster.

    Attributes
    ----------
    values : ndarray of float64, shape (M,)
        Observed values (paired differences when ``paired`` is true).
    cluster_codes : ndarray of intp, shape (M,)
        Cluster index per record, 0..N-1, nondecreasing.
    cluster_labels : tuple of str
        Original cluster labels in code order.
    group_codes, group_labels
        Group membership per record; ``None``/empty for paired samples.
    stratum_codes, stratum_labels
        Optional stratum membership per record.
    paired : bool
        True when values are paired differences (no groups).
    """

    values: np.ndarray
    cluster_codes: np.ndarray
    cluster_labels: tuple[str, ...]
    paired: bool
    group_codes: np.ndarray | None = None
    group_labels: tuple[str, ...] = ()
    stratum_codes: np.ndarray | None = None
    stratum_labels: tuple[str, ...] = ()

    @property
    def n_observations(self) -> int:
        return self.values.shape[0]

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_labels)

    @property
    def n_groups(self) -> int:
        return len(self.group_labels)

    @cached_property
    def cluster_sizes(self) -> np.ndarray:
        return _freeze(np.bincount(self.cluster_codes, minlength=self.n_clusters))

    @cached_property
    def cluster_starts(self) -> np.ndarray:
        """Offsets of each cluster's slice; records are grouped by cluster."""
        starts = np.zeros(self.n_clusters + 1, dtype=np.intp)
        np.cumsum(self.cluster_sizes, out=starts[1:])
        return _freeze(starts)

    def cluster_values(self, code: int) -> np.ndarray:
        lo, hi = self.cluster_starts[code], self.cluster_starts[code + 1]
        return self.values[lo:hi]

    def group1_mask(self) -> np.ndarray:
        """Indicator of membership in group 1 (first group label in order)."""
        if self.group_codes is None:
            raise ValueError("sample has no group labels")
        return self.group_codes == 0

    @classmethod
    def from_arrays(
        cls,
        values,
        clusters,
        groups=None,
        strata=None,
        paired: bool = False,
    ) -> "ClusteredSample":
        """Build a sample from parallel arrays (fast path, no str coercion).

        Label order follows the natural sort of each array's dtype.
        """
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite value in sample")
        clusters = np.asarray(clusters)
        if clusters.shape != values.shape:
            raise ValueError("clusters must align with values")

        cluster_codes, cluster_labels = _factorize(clusters)
        if len(cluster_labels) < 2:
            raise ValueError("need at least 2 distinct clusters")

        group_codes: np.ndarray | None = None
        group_labels: tuple[str, ...] = ()
        if paired:
            pass  # group labels are ignored for paired differences
        else:
            if groups is None:
                raise ValueError("group labels required when paired=False")
            groups = np.asarray(groups)
            if groups.shape != values.shape:
                raise ValueError("groups must align with values")
            group_codes, group_labels = _factorize(groups)
            if len(group_labels) < 2:
                raise ValueError("need at least 2 distinct group labels")

        stratum_codes: np.ndarray | None = None
        stratum_labels: tuple[str, ...] = ()
        if strata is not None:
            strata = np.asarray(strata)
            if strata.shape != values.shape:
                raise ValueError("strata must align with values")
            stratum_codes, stratum_labels = _factorize(strata)

        order = np.argsort(cluster_codes, kind="stable")
        return cls(
            values=_freeze(values[order]),
            cluster_codes=_freeze(cluster_codes[order]),
            cluster_labels=cluster_labels,
            paired=paired,
            group_codes=None if group_codes is None else _freeze(group_codes[order]),
            group_labels=group_labels,
            stratum_codes=(
                None if stratum_codes is None else _freeze(stratum_codes[order])
            ),
            stratum_labels=stratum_labels,
        )


def ingest_records(
    rows: Iterable[Sequence], paired: bool = False
) -> ClusteredSample:
    """Validate and assemble records into a :class:`ClusteredSample`.

    Parameters
    ----------
    rows : iterable of tuples
        Each row is ``(value, cluster_id)`` optionally followed by a group
        label and a stratum label; trailing entries may be ``None``.
    paired : bool
        Treat values as paired differences; group labels are ignored.

    Raises
    ------
    ValueError
        On empty input, non-finite values, a missing group label when
        ``paired`` is false, fewer than 2 clusters, or a stratum label
        present on some records but not all.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no records to ingest")

    values = np.empty(len(rows), dtype=np.float64)
    clusters: list[str] = []
    groups: list[str | None] = []
    strata: list[str | None] = []
    for i, row in enumerate(rows):
        if len(row) < 2 or len(row) > 4:
            raise ValueError(f"record {i}: expected 2 to 4 fields, got {len(row)}")
        value = float(row[0])
        if not np.isfinite(value):
            raise ValueError(f"record {i}: non-finite value")
        values[i] = value
        clusters.append(str(row[1]))
        group = row[2] if len(row) > 2 else None
        stratum = row[3] if len(row) > 3 else None
        groups.append(None if group is None else str(group))
        strata.append(None if stratum is None else str(stratum))

    if not paired:
        missing = [i for i, g in enumerate(groups) if g is None]
        if missing:
            raise ValueError(f"record {missing[0]}: missing group label")

    n_with_stratum = sum(s is not None for s in strata)
    if n_with_stratum not in (0, len(rows)):
        raise ValueError("stratum label present on some records but not all")

    return ClusteredSample.from_arrays(
        values,
        np.array(clusters, dtype=object),
        groups=None if paired else np.array(groups, dtype=object),
        strata=np.array(strata, dtype=object) if n_with_stratum else None,
        paired=paired,
    )


def midranks(values) -> np.ndarray:
    """Mid-ranks of ``values``: ties get the average of the ranks they span.

    Examples
    --------
    >>> midranks([1, 1, 2]).tolist()
    [1.5, 1.5, 3.0]
    """
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite value in midranks input")
    sv = np.sort(v)
    below = np.searchsorted(sv, v, side="left")
    at_or_below = np.searchsorted(sv, v, side="right")
    return (below + at_or_below + 1) / 2.0


def ecdf_pair(cluster_values, x: float) -> tuple[float, float]:
    """``(F(x), F(x-))`` for one cluster's empirical distribution.

    ``F(x)`` is the fraction of values ``<= x`` and ``F(x-)`` the fraction
    strictly below ``x``.
    """
    v = np.asarray(cluster_values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty cluster")
    n = v.size
    return (
        float(np.count_nonzero(v <= x)) / n,
        float(np.count_nonzero(v < x)) / n,
    )


def pooled_ecdf(sample: ClusteredSample, x: float) -> float:
    """Pooled ECDF of all observations, the size-weighted mean of the
    per-cluster ECDFs."""
    return float(np.count_nonzero(sample.values <= x)) / sample.n_observations


def adjusted_values(sample: ClusteredSample, mu: float) -> np.ndarray:
    """Values with the null shift ``mu`` removed.

    For two-sample data ``mu`` is subtracted from group-1 observations (the
    location-shift null); for paired differences it is subtracted from every
    record.
    """
    if mu == 0.0:
        return sample.values
    adj = sample.values.copy()
    if sample.paired:
        adj -= mu
    else:
        adj[sample.group1_mask()] -= mu
    return adj


@dataclass(frozen=True)
class RankedView:
    """Pooled mid-ranks of a sample plus per-cluster aggregates."""

    sample: ClusteredSample
    ranks: np.ndarray
    rank_sums: np.ndarray  # per cluster code

    @property
    def cluster_rank_sums(self) -> dict[str, float]:
        return {
            label: float(self.rank_sums[code])
            for code, label in enumerate(self.sample.cluster_labels)
        }

    def cluster_ecdf_pair(self, cluster_label: str, x: float) -> tuple[float, float]:
        code = self.sample.cluster_labels.index(cluster_label)
        return ecdf_pair(self.sample.cluster_values(code), x)


def ranked_view(sample: ClusteredSample, mu: float = 0.0) -> RankedView:
    """Mid-rank the pooled (shift-adjusted) sample and sum ranks per cluster."""
    ranks = midranks(adjusted_values(sample, mu))
    sums = np.bincount(
        sample.cluster_codes, weights=ranks, minlength=sample.n_clusters
    )
    return RankedView(sample=sample, ranks=_freeze(ranks), rank_sums=_freeze(sums))
