"""Shared oracles and random-instance builders for the test suite."""

from __future__ import annotations

import numpy as np

from clusrank import ClusteredSample


def rowwise_midranks(mat: np.ndarray) -> np.ndarray:
    """Mid-ranks along axis 1 by direct pairwise comparison (O(n^2) oracle)."""
    lt = (mat[:, None, :] < mat[:, :, None]).sum(axis=2)
    eq = (mat[:, None, :] == mat[:, :, None]).sum(axis=2)
    return lt + (eq + 1) / 2.0


def random_two_group_sample(
    rng: np.random.Generator,
    n_clusters: int = 6,
    max_size: int = 3,
    cluster_level: bool = True,
    ties: bool = False,
) -> ClusteredSample:
    """Random small two-group sample; group labels at the requested level."""
    sizes = rng.integers(1, max_size + 1, n_clusters)
    values, cids, groups = [], [], []
    cluster_group = rng.integers(0, 2, n_clusters)
    if cluster_group.min() == cluster_group.max():
        cluster_group[0] = 1 - cluster_group[0]
    for i, n in enumerate(sizes):
        v = rng.normal(0, 2, n)
        if ties:
            v = np.round(v, 0)
        values.extend(v)
        cids.extend([i] * n)
        if cluster_level:
            groups.extend([cluster_group[i]] * n)
        else:
            groups.extend(rng.integers(0, 2, n))
    groups = np.asarray(groups)
    if groups.min() == groups.max():
        groups[0] = 1 - groups[0]
    return ClusteredSample.from_arrays(
        np.asarray(values, dtype=float), np.asarray(cids), groups=groups
    )


def random_paired_sample(
    rng: np.random.Generator,
    n_clusters: int = 5,
    max_size: int = 3,
    ties: bool = False,
    zeros: bool = False,
) -> ClusteredSample:
    """Random small paired-differences sample."""
    sizes = rng.integers(1, max_size + 1, n_clusters)
    values, cids = [], []
    for i, n in enumerate(sizes):
        v = rng.normal(0, 2, n)
        if ties:
            v = np.round(v, 0)
        if zeros and n > 1 and rng.random() < 0.5:
            v[0] = 0.0
        values.extend(v)
        cids.extend([i] * n)
    return ClusteredSample.from_arrays(
        np.asarray(values, dtype=float), np.asarray(cids), paired=True
    )
