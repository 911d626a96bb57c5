"""Exact enumeration and Monte-Carlo resampling of randomization
distributions, plus permutation p-value composition.

Three arrangement families are supported, matching the tests built on top:

* ``cluster_label_exchange`` -- within each stratum, choose which ``m_g`` of
  ``N_g`` clusters carry the group-1 label;
* ``sign_flip``              -- N independent +/-1 signs;
* ``two_stage``              -- permute the observed per-cluster group-1
  counts across clusters, then choose which subunits within each cluster
  (Monte-Carlo sampling only).

Exhaustive enumeration is refused above a configurable arrangement cap
(default 10**7).  Monte-Carlo draws are generated in fixed-size chunks, each
chunk from its own RNG substream, so results do not depend on how the work
is partitioned.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from ._kernels import (
    signflip_sums_exhaustive,
    signflip_sums_mc,
    subset_sums_exhaustive,
    subset_sums_mc,
)
from .distributions import check_alternative, substream

__all__ = [
    "DEFAULT_CAP",
    "DEFAULT_B",
    "PermutationPlan",
    "enumerate_assignments",
    "enumerate_sign_flips",
    "permutation_pvalue",
    "assignment_count",
    "signflip_count",
]

DEFAULT_CAP = 10_000_000
DEFAULT_B = 2000
_CHUNK = 65536

_KINDS = ("cluster_label_exchange", "sign_flip", "two_stage")


@dataclass(frozen=True)
class PermutationPlan:
    """How to generate a randomization distribution.

    ``b = 0`` requests exhaustive enumeration (subject to ``cap``); ``b >= 1``
    requests that many Monte-Carlo draws seeded by ``seed``.
    """

    kind: str
    b: int = DEFAULT_B
    seed: int = 0
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.b < 0:
            raise ValueError("B must be >= 0 (0 selects exhaustive enumeration)")

    @property
    def mode(self) -> str:
        return "exhaustive" if self.b == 0 else "monte_carlo"

    def check_exhaustive(self, count: int) -> None:
        if count > self.cap:
            raise ValueError(
                f"exhaustive enumeration of {count} arrangements exceeds the "
                f"cap of {self.cap}; use Monte-Carlo mode (B >= 1) or raise cap"
            )


def assignment_count(strata: Sequence[tuple[int, int]]) -> int:
    """Total number of stratified label assignments, ``prod C(N_g, m_g)``."""
    count = 1
    for n_g, m_g in strata:
        if not 0 <= m_g <= n_g:
            raise ValueError(f"stratum needs 0 <= m <= N, got N={n_g}, m={m_g}")
        count *= math.comb(n_g, m_g)
    return count


def enumerate_assignments(
    plan: PermutationPlan, strata: Sequence[tuple[int, int]]
) -> Iterator[tuple[int, ...]]:
    """Stream group-1 index sets over strata of sizes ``(N_g, m_g)``.

    Clusters are indexed consecutively stratum by stratum: the first stratum
    owns indices ``0..N_0-1``, the next ``N_0..N_0+N_1-1``, and so on.
    Exhaustive mode yields each assignment exactly once; Monte-Carlo mode
    yields ``plan.b`` independent uniform assignments.
    """
    total = assignment_count(strata)
    offsets = np.cumsum([0] + [n for n, _ in strata])
    if plan.mode == "exhaustive":
        plan.check_exhaustive(total)
        per_stratum = [
            itertools.combinations(range(off, off + n), m)
            for (n, m), off in zip(strata, offsets[:-1])
        ]
        for parts in itertools.product(*per_stratum):
            yield tuple(itertools.chain.from_iterable(parts))
    else:
        rng = substream(plan.seed)
        for _ in range(plan.b):
            picks: list[int] = []
            for (n, m), off in zip(strata, offsets[:-1]):
                chosen = rng.permutation(n)[:m] + off
                picks.extend(sorted(int(c) for c in chosen))
            yield tuple(picks)


def signflip_count(n: int) -> int:
    if n < 1:
        raise ValueError("need at least one sign")
    return 1 << n


def enumerate_sign_flips(n: int, plan: PermutationPlan) -> Iterator[np.ndarray]:
    """Stream +/-1 vectors of length ``n``.

    Exhaustive mode yields all ``2**n`` vectors in binary order (bit ``i`` of
    the arrangement index set means ``+1`` at position ``i``).
    """
    total = signflip_count(n)
    if plan.mode == "exhaustive":
        plan.check_exhaustive(total)
        for idx in range(total):
            yield np.where(
                (idx >> np.arange(n)) & 1, np.int8(1), np.int8(-1)
            )
    else:
        rng = substream(plan.seed)
        for _ in range(plan.b):
            yield np.where(rng.random(n) >= 0.5, np.int8(1), np.int8(-1))


def permutation_pvalue(
    observed: float,
    null_center: float,
    permuted: np.ndarray | Iterable[np.ndarray],
    alternative: str = "two_sided",
    mode: str = "exhaustive",
) -> float:
    """P-value of ``observed`` against a stream of permuted statistics.

    Two-sided extremeness is center-symmetric distance ``|t - null_center|``.
    Comparisons carry a float-tie tolerance of ``1e-9 * max(1, |observed -
    null_center|)`` so permuted copies of the observed statistic count as
    ties exactly.  In Monte-Carlo mode the observed statistic joins both the
    numerator and denominator (add-one rule), guaranteeing ``p >= 1/(B+1)``.
    """
    alt = check_alternative(alternative)
    if mode not in ("exhaustive", "monte_carlo"):
        raise ValueError(f"mode must be exhaustive or monte_carlo, got {mode!r}")
    chunks: Iterable[np.ndarray]
    if isinstance(permuted, np.ndarray):
        chunks = (permuted,)
    else:
        chunks = permuted

    eps = 1e-9 * max(1.0, abs(observed - null_center))
    n_extreme = 0
    total = 0
    for chunk in chunks:
        arr = np.asarray(chunk, dtype=np.float64)
        total += arr.size
        if alt == "two_sided":
            n_extreme += int(
                np.count_nonzero(
                    np.abs(arr - null_center) >= abs(observed - null_center) - eps
                )
            )
        elif alt == "greater":
            n_extreme += int(np.count_nonzero(arr >= observed - eps))
        else:
            n_extreme += int(np.count_nonzero(arr <= observed + eps))
    if total == 0:
        raise ValueError("empty permutation stream")
    if mode == "monte_carlo":
        return (n_extreme + 1) / (total + 1)
    return n_extreme / total


# ---------------------------------------------------------------------------
# statistic-level distribution builders (hot paths used by the test modules)
# ---------------------------------------------------------------------------


def ranksum_perm_sums(
    cells: Sequence[tuple[np.ndarray, int]], plan: PermutationPlan
) -> tuple[Iterator[np.ndarray], int]:
    """Randomized rank-sum draws for stratified label exchange.

    ``cells`` holds, per stratum, the cluster rank sums and the group-1
    count to redraw.  Returns a chunk iterator over permuted statistics and
    the number of draws (the full arrangement count in exhaustive mode).
    """
    cells = [(np.asarray(v, dtype=np.float64), m) for v, m in cells]
    if plan.mode == "exhaustive":
        total = assignment_count([(v.size, m) for v, m in cells])
        plan.check_exhaustive(total)

        def exhaustive() -> Iterator[np.ndarray]:
            sums = np.zeros(1)
            for values, m in cells:
                part = subset_sums_exhaustive(values, m)
                sums = (sums[:, None] + part[None, :]).ravel()
            yield sums

        return exhaustive(), total

    def monte_carlo() -> Iterator[np.ndarray]:
        done = 0
        chunk_idx = 0
        while done < plan.b:
            size = min(_CHUNK, plan.b - done)
            rng = substream(plan.seed, chunk_idx)
            sums = np.zeros(size)
            for values, m in cells:
                u = rng.random((size, values.size))
                sums += subset_sums_mc(values, m, u)
            yield sums
            done += size
            chunk_idx += 1

    return monte_carlo(), plan.b


def signflip_sums(
    terms: np.ndarray, plan: PermutationPlan
) -> tuple[Iterator[np.ndarray], int]:
    """Randomized sign-flip draws of ``sum_i s_i * terms[i]``."""
    terms = np.asarray(terms, dtype=np.float64)
    if plan.mode == "exhaustive":
        total = signflip_count(terms.size)
        plan.check_exhaustive(total)

        def exhaustive() -> Iterator[np.ndarray]:
            yield signflip_sums_exhaustive(terms)

        return exhaustive(), total

    def monte_carlo() -> Iterator[np.ndarray]:
        done = 0
        chunk_idx = 0
        while done < plan.b:
            size = min(_CHUNK, plan.b - done)
            rng = substream(plan.seed, chunk_idx)
            yield signflip_sums_mc(terms, rng.random((size, terms.size)))
            done += size
            chunk_idx += 1

    return monte_carlo(), plan.b


def sample_two_stage(
    group1_counts: np.ndarray, g: int, plan: PermutationPlan
) -> Iterator[np.ndarray]:
    """Monte-Carlo draws from the two-stage randomization.

    Stage 1 permutes the observed per-cluster group-1 counts across the N
    clusters; stage 2 picks which of the ``g`` subunits in each cluster are
    in group 1.  Yields boolean (N, g) indicator matrices.  Exhaustive
    enumeration is not offered for this family.
    """
    q = np.asarray(group1_counts, dtype=np.intp)
    if np.any((q < 0) | (q > g)):
        raise ValueError("group-1 counts must lie in [0, g]")
    if plan.mode == "exhaustive":
        raise ValueError("two-stage enumeration supports Monte-Carlo mode only")
    rng = substream(plan.seed)
    n = q.size
    for _ in range(plan.b):
        permuted_q = rng.permutation(q)
        out = np.zeros((n, g), dtype=bool)
        for i in range(n):
            out[i, rng.permutation(g)[: permuted_q[i]]] = True
        yield out
