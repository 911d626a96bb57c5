"""Reference distributions, correlation builders, and RNG streams."""

import math

import numpy as np
import pytest

from clusrank import (
    CorrelationSpec,
    build_correlation,
    chi_square_sf,
    mvn_sample,
    p_value,
    std_normal_cdf,
    substream,
)


def erf_series(x: float) -> float:
    """Taylor-series erf, independent of scipy; |x| <= 3 converges fast."""
    total = 0.0
    term = x
    k = 0
    while abs(term) > 1e-18:
        total += term / (2 * k + 1)
        k += 1
        term *= -x * x / k
    return 2.0 / math.sqrt(math.pi) * total


def normal_cdf_oracle(z: float) -> float:
    return 0.5 * (1.0 + erf_series(z / math.sqrt(2.0)))


def chi2_sf_quadrature(x: float, df: int) -> float:
    """Upper chi-square tail by trapezoid quadrature of the density."""
    grid = np.linspace(0.0, x, 200_001)
    pdf = grid ** (df / 2 - 1) * np.exp(-grid / 2)
    pdf[0] = 0.0 if df > 2 else pdf[0]
    if df == 2:
        pdf[0] = 1.0
    norm = 2 ** (df / 2) * math.gamma(df / 2)
    return 1.0 - float(np.trapezoid(pdf, grid)) / norm


class TestNormalCdf:
    def test_center(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_limits(self):
        assert std_normal_cdf(float("inf")) == 1.0
        assert std_normal_cdf(float("-inf")) == 0.0

    def test_quantile_975(self):
        assert std_normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            std_normal_cdf(float("nan"))

    @pytest.mark.parametrize("z", [-3.0, -1.3, -0.2, 0.4, 1.959964, 2.8])
    def test_against_series_oracle(self, z):
        assert std_normal_cdf(z) == pytest.approx(normal_cdf_oracle(z), abs=1e-12)

    def test_symmetry(self):
        for z in np.linspace(-8, 8, 81):
            assert abs(std_normal_cdf(z) + std_normal_cdf(-z) - 1.0) <= 1e-15

    def test_monotone(self):
        grid = np.linspace(-10, 10, 401)
        vals = [std_normal_cdf(z) for z in grid]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


class TestChiSquareSf:
    def test_zero_is_full_mass(self):
        for df in (1, 2, 5, 17):
            assert chi_square_sf(0.0, df) == 1.0

    def test_df2_closed_form(self):
        assert chi_square_sf(2.0, 2) == pytest.approx(math.exp(-1.0), rel=1e-12)
        for x in np.linspace(0, 50, 26):
            assert chi_square_sf(x, 2) == pytest.approx(math.exp(-x / 2), abs=1e-12)

    def test_published_value_df3(self):
        # chi-square statistic 2.0471 on 3 df has upper tail 0.5627
        assert chi_square_sf(2.0471, 3) == pytest.approx(0.5627, abs=5e-4)

    def test_against_quadrature(self):
        assert chi_square_sf(2.0471, 3) == pytest.approx(chi2_sf_quadrature(2.0471, 3), abs=1e-8)
        assert chi_square_sf(7.3, 5) == pytest.approx(chi2_sf_quadrature(7.3, 5), abs=1e-8)

    def test_errors(self):
        with pytest.raises(ValueError):
            chi_square_sf(-0.1, 3)
        with pytest.raises(ValueError):
            chi_square_sf(1.0, 0)


class TestPValue:
    def test_null_center(self):
        assert p_value(0.0, "two_sided") == 1.0

    def test_published_two_sided_values(self):
        assert p_value(-4.4823, "two_sided") == pytest.approx(7.384e-06, rel=0.02)
        assert p_value(1.3967, "two_sided") == pytest.approx(0.1625, abs=5e-4)

    def test_two_sided_symmetric(self):
        for z in (0.3, 1.7, 4.2):
            assert p_value(z, "two_sided") == p_value(-z, "two_sided")

    def test_one_sided(self):
        assert p_value(1.0, "greater") == pytest.approx(1 - std_normal_cdf(1.0), rel=1e-12)
        assert p_value(1.0, "less") == pytest.approx(std_normal_cdf(1.0), rel=1e-12)

    def test_alias_spelling(self):
        assert p_value(0.7, "two-sided") == p_value(0.7, "two_sided")

    def test_bad_alternative(self):
        with pytest.raises(ValueError, match="alternative"):
            p_value(1.0, "both")


class TestCorrelation:
    def test_exchangeable(self):
        mat = build_correlation(CorrelationSpec("exchangeable", 0.5, 2))
        assert np.array_equal(mat, [[1.0, 0.5], [0.5, 1.0]])

    def test_ar1_powers(self):
        mat = build_correlation(CorrelationSpec("ar1", 0.5, 3))
        assert mat[0, 2] == pytest.approx(0.25)
        assert mat[0, 1] == pytest.approx(0.5)

    def test_dim_one(self):
        for structure in ("exchangeable", "ar1"):
            assert np.array_equal(build_correlation(CorrelationSpec(structure, 0.7, 1)), [[1.0]])

    def test_symmetric_unit_diagonal(self):
        for spec in (CorrelationSpec("ex", -0.1, 5), CorrelationSpec("ar1", -0.8, 6)):
            mat = build_correlation(spec)
            assert np.array_equal(mat, mat.T)
            assert np.array_equal(np.diag(mat), np.ones(spec.dim))

    def test_invalid_parameterizations(self):
        with pytest.raises(ValueError, match="exchangeable"):
            build_correlation(CorrelationSpec("exchangeable", -0.6, 3))
        with pytest.raises(ValueError, match="ar1"):
            build_correlation(CorrelationSpec("ar1", 1.0, 3))
        with pytest.raises(ValueError, match="structure"):
            CorrelationSpec("toeplitz", 0.1, 3)


class TestMvnSample:
    def test_identity_covariance(self):
        draws = mvn_sample(100_000, 0.0, np.eye(3), substream(0))
        cov = np.cov(draws.T)
        assert np.all(np.abs(cov - np.eye(3)) < 0.02)
        assert np.all(np.abs(draws.mean(axis=0)) < 0.02)

    def test_exchangeable_high_correlation(self):
        corr = build_correlation(CorrelationSpec("exchangeable", 0.9, 3))
        draws = mvn_sample(100_000, 0.0, corr, substream(1))
        emp = np.corrcoef(draws.T)
        off = emp[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off - 0.9) < 0.01)

    def test_dim_one_is_normal(self):
        draws = mvn_sample(50_000, 2.0, np.ones((1, 1)), substream(2))
        assert draws.shape == (50_000, 1)
        assert draws.mean() == pytest.approx(2.0, abs=0.02)
        assert draws.std() == pytest.approx(1.0, abs=0.02)

    def test_near_singular_rejected(self):
        corr = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(ValueError, match="singular"):
            mvn_sample(10, 0.0, corr, substream(3))

    def test_deterministic(self):
        corr = build_correlation(CorrelationSpec("ar1", 0.3, 4))
        a = mvn_sample(100, 1.0, corr, substream(7, 1))
        b = mvn_sample(100, 1.0, corr, substream(7, 1))
        assert np.array_equal(a, b)


class TestSubstream:
    def test_identical_pairs_identical_draws(self):
        assert np.array_equal(substream(5, 3).random(10), substream(5, 3).random(10))

    def test_distinct_indices_differ(self):
        assert not np.array_equal(substream(5, 3).random(10), substream(5, 4).random(10))
        assert not np.array_equal(substream(5, 3).random(10), substream(6, 3).random(10))
