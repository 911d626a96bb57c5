"""Test result container shared by all tests."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class TestResult:
    """Outcome of one clustered rank test.

    ``statistic`` is the raw test statistic (W, S, T, theta-hat, or the
    chi-square quadratic form) with its null ``mean`` and ``variance``
    estimate; ``z`` is the standardized statistic, ``None`` for chi-square
    and permutation tests.
    """

    method: str
    statistic_name: str
    statistic: float
    null_mean: float
    variance: float
    z: float | None
    p_value: float
    alternative: str
    n_observations: int
    n_clusters: int
    n_groups: int | None = None
    df: int | None = None
    exact: bool = False
    n_resamples: int | None = None

    def asdict(self) -> dict:
        return asdict(self)


class DegenerateClustersWarning(UserWarning):
    """Clusters skipped because their stratum carries no group contrast."""
