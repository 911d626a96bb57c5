"""Reference distributions, p-value composition, correlation builders, and
the deterministic RNG contract.

The normal and chi-square tails are delegated to scipy's special functions
(``ndtr``, ``gammaincc``), which meet the accuracy contract by a wide
margin; independent series oracles in the test suite verify them.  P-values
use the plain standardized statistic with no continuity correction, so small
discrepancies against classic corrected Wilcoxon implementations are
expected.

Random streams are numpy ``Generator`` instances over PCG64, derived from a
``(master seed, stream index)`` pair through ``SeedSequence`` spawn keys:
identical pairs yield identical draws, distinct indices yield independent
streams.  Run-to-run reproducibility is guaranteed; bit-level agreement with
any other software's streams is not a goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, ndtr

__all__ = [
    "ALTERNATIVES",
    "CorrelationSpec",
    "std_normal_cdf",
    "chi_square_sf",
    "p_value",
    "build_correlation",
    "mvn_sample",
    "substream",
    "derive_seed",
]

ALTERNATIVES = ("two_sided", "less", "greater")

_MIN_EIGENVALUE = 1e-10


def check_alternative(alternative: str) -> str:
    alt = alternative.replace("-", "_").replace(".", "_")
    if alt not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    return alt


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF; accepts +/-inf, rejects NaN."""
    if math.isnan(z):
        raise ValueError("NaN passed to std_normal_cdf")
    return float(ndtr(z))


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail probability ``P(chi2_df > x)``."""
    if df < 1:
        raise ValueError("df must be a positive integer")
    if x < 0:
        raise ValueError("chi-square statistic must be nonnegative")
    return float(gammaincc(df / 2.0, x / 2.0))


def p_value(z: float, alternative: str = "two_sided") -> float:
    """P-value of a standard normal statistic.

    ``greater`` means group 1 (or the paired-difference location) exceeds
    the null value.
    """
    alt = check_alternative(alternative)
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    if alt == "two_sided":
        return min(1.0, 2.0 * float(ndtr(-abs(z))))
    if alt == "greater":
        return float(ndtr(-z))
    return float(ndtr(z))


@dataclass(frozen=True)
class CorrelationSpec:
    """Within-cluster correlation structure.

    ``exchangeable`` gives every off-diagonal entry ``rho``; ``ar1`` gives
    entry ``(i, j)`` the value ``rho**|i-j|``.
    """

    structure: str
    rho: float
    dim: int

    def __post_init__(self):
        structure = {"ex": "exchangeable"}.get(self.structure, self.structure)
        object.__setattr__(self, "structure", structure)
        if structure not in ("exchangeable", "ar1"):
            raise ValueError(f"unknown correlation structure {self.structure!r}")
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


def build_correlation(spec: CorrelationSpec) -> np.ndarray:
    """Realize a :class:`CorrelationSpec` as a positive-definite matrix."""
    d, rho = spec.dim, spec.rho
    if d == 1:
        return np.ones((1, 1))
    if spec.structure == "exchangeable":
        if not (-1.0 / (d - 1) < rho < 1.0):
            raise ValueError(
                f"exchangeable correlation needs -1/(dim-1) < rho < 1; "
                f"got rho={rho} at dim={d}"
            )
        mat = np.full((d, d), rho)
        np.fill_diagonal(mat, 1.0)
    else:
        if not abs(rho) < 1.0:
            raise ValueError(f"ar1 correlation needs |rho| < 1; got rho={rho}")
        idx = np.arange(d)
        mat = rho ** np.abs(idx[:, None] - idx[None, :])
    if np.linalg.eigvalsh(mat)[0] < _MIN_EIGENVALUE:
        raise ValueError(
            f"correlation matrix is numerically singular "
            f"(min eigenvalue below {_MIN_EIGENVALUE})"
        )
    return mat


def _cholesky_factor(corr: np.ndarray) -> np.ndarray:
    corr = np.asarray(corr, dtype=np.float64)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError("correlation matrix must be square")
    if np.linalg.eigvalsh(corr)[0] < _MIN_EIGENVALUE:
        raise ValueError("correlation matrix is numerically singular")
    return np.linalg.cholesky(corr)


def mvn_sample(
    n: int, mean: float, corr: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n`` vectors with common ``mean`` and correlation ``corr``.

    Uses the lower-triangular Cholesky factor of ``corr``; near-singular
    matrices are rejected rather than regularized.
    """
    lower = _cholesky_factor(corr)
    z = rng.standard_normal((n, lower.shape[0]))
    return z @ lower.T + mean


def substream(seed: int, *indices: int) -> np.random.Generator:
    """Deterministic independent stream for (master seed, stream index...)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(indices)))
    )


def derive_seed(seed: int, *indices: int) -> int:
    """Stable 63-bit child seed for nested reproducible runs."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(indices)).generate_state(1)
    return int(state[0]) & (2**63 - 1)
