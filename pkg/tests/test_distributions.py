import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabletree.distributions import (
    DirichletParams,
    MlParams,
    chain_beta_params,
    martingale_product,
    ml_moment,
    sample_beta,
    sample_dirichlet,
    sample_gamma,
    sample_m1,
    sample_ml_family,
    sample_ml_half,
)
from stabletree.errors import ParameterError, RangeError, TruncationWarning
from stabletree.params import AlphaParam
from stabletree.rng import RngStream


def z_score(x, mean, var):
    x = np.asarray(x, dtype=float)
    return (x.mean() - mean) / math.sqrt(var / x.size)


def ml_moment_mp(beta, theta, k):
    """Independent high-precision evaluation of the gamma-ratio moment."""
    mpmath.mp.dps = 40
    b, t = mpmath.mpf(beta), mpmath.mpf(theta)
    return (mpmath.gamma(t + 1) * mpmath.gamma(t / b + k + 1)
            / (mpmath.gamma(t / b + 1) * mpmath.gamma(t + k * b + 1)))


# ------------------------------------------------------------------ gamma
def test_gamma_exponential_mean():
    x = sample_gamma(1.0, RngStream(1), size=1_000_000)
    assert abs(x.mean() - 1.0) < 3e-3


@pytest.mark.parametrize("k", [2, 5])
def test_gamma_integer_shape_moments(k):
    x = sample_gamma(float(k), RngStream(k), size=200_000)
    assert abs(z_score(x, k, k)) < 5
    # variance of the sample variance for Gamma(k): (2k^2 * 3 + 6k) / n roughly; loose check
    assert abs(x.var() - k) < 0.05 * k


def test_gamma_half_second_moment():
    # E[X^2] = Gamma(2.5) / Gamma(0.5) = 0.75, variance of X^2 from the fourth moment
    m2 = float(mpmath.gamma(2.5) / mpmath.gamma(0.5))
    m4 = float(mpmath.gamma(4.5) / mpmath.gamma(0.5))
    assert m2 == pytest.approx(0.75)
    x = sample_gamma(0.5, RngStream(3), size=400_000)
    assert abs(z_score(x ** 2, m2, m4 - m2 ** 2)) < 5


def test_gamma_rejects_bad_shape():
    with pytest.raises(ParameterError):
        sample_gamma(0.0, RngStream(0))


# ------------------------------------------------------------------- beta
def test_beta_b_zero_is_one():
    assert sample_beta(1.0, 0.0, RngStream(0)) == 1.0
    assert np.all(sample_beta(3.0, 0.0, RngStream(0), size=5) == 1.0)


def test_beta_symmetric_mean():
    x = sample_beta(2.0, 2.0, RngStream(4), size=200_000)
    assert abs(z_score(x, 0.5, 0.05)) < 5


def test_beta_chain_factor_mean():
    a, b = 6.0, 1.0
    var = a * b / ((a + b) ** 2 * (a + b + 1))
    x = sample_beta(a, b, RngStream(5), size=200_000)
    assert abs(z_score(x, 6 / 7, var)) < 5


@given(st.floats(0.05, 20), st.floats(0.01, 20), st.integers(0, 2**32))
def test_beta_range(a, b, seed):
    x = sample_beta(a, b, RngStream(seed), size=200)
    assert np.all(x > 0) and np.all(x <= 1)
    y = sample_beta(a, b, RngStream(seed), size=200, strict=True)
    assert np.all(y < 1)


def test_beta_rejects_bad_params():
    with pytest.raises(ParameterError):
        sample_beta(0.0, 1.0, RngStream(0))
    with pytest.raises(ParameterError):
        sample_beta(1.0, -1.0, RngStream(0))


# -------------------------------------------------------------- dirichlet
@pytest.mark.parametrize("a, first_mean", [((1, 1), 0.5), ((1, 1, 1), 1 / 3), ((2, 1, 1), 0.5)])
def test_dirichlet_means(a, first_mean):
    x = sample_dirichlet(a, RngStream(6), size=100_000)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, rtol=1e-12)
    s = sum(a)
    var = a[0] * (s - a[0]) / (s * s * (s + 1))
    assert abs(z_score(x[:, 0], first_mean, var)) < 5


def test_dirichlet_two_coordinates_uniform():
    x = sample_dirichlet((1, 1), RngStream(7), size=50_000)
    from scipy import stats
    assert stats.kstest(x[:, 0], "uniform").pvalue > 1e-3


@given(st.lists(st.floats(0.1, 10), min_size=2, max_size=6), st.integers(0, 2**32))
def test_dirichlet_on_simplex(a, seed):
    x = sample_dirichlet(a, RngStream(seed), size=50)
    assert np.all(x >= 0)
    np.testing.assert_allclose(x.sum(axis=1), 1.0, rtol=1e-12)


def test_dirichlet_params_validation():
    with pytest.raises(ParameterError):
        DirichletParams((1.0,))
    with pytest.raises(ParameterError):
        DirichletParams((1.0, 0.0))


# ------------------------------------------------------------- ML moments
def test_ml_moment_zero():
    assert ml_moment(MlParams(0.3, 2.0), 0) == 1.0


def test_ml_moment_half_half_is_sqrt_pi():
    assert ml_moment(MlParams(0.5, 0.5), 1) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert ml_moment(MlParams(0.5, 0.5), 1) == pytest.approx(1.7724539, abs=1e-7)


def test_ml_moment_stable_first_value():
    target = 2 * math.gamma(4 / 3) / math.gamma(5 / 3)
    got = ml_moment(MlParams(1 / 3, 1 / 3), 1)
    assert got == pytest.approx(target, rel=1e-12)
    assert abs(got - 1.97835) < 2e-5


@given(st.floats(0.05, 0.95), st.floats(0.0, 30.0), st.integers(1, 8))
def test_ml_moment_matches_mpmath(beta, theta, k):
    got = ml_moment(MlParams(beta, theta), k)
    want = float(ml_moment_mp(beta, theta, k))
    assert got == pytest.approx(want, rel=1e-10)


def test_ml_moment_overflow_is_range_error():
    with pytest.raises(RangeError):
        ml_moment(MlParams(0.1, 1.0), 400)


def test_ml_params_validation():
    with pytest.raises(ParameterError):
        MlParams(1.0, 1.0)
    with pytest.raises(ParameterError):
        MlParams(0.5, -0.6)


# ------------------------------------------------------------ ML samplers
def test_ml_half_p1_mean_and_square():
    x = sample_ml_half(1, RngStream(8), size=200_000)
    var = 4.0 - math.pi
    assert abs(z_score(x, math.sqrt(math.pi), var)) < 5
    from scipy import stats
    assert stats.kstest((x / 2) ** 2, "expon").pvalue > 1e-3


def test_ml_half_p2_second_moment():
    x = sample_ml_half(2, RngStream(9), size=200_000)
    # X^2 = 4 Gamma(2): mean 8, variance 16 * 2
    assert abs(z_score(x ** 2, 8.0, 32.0)) < 5


def test_m1_brownian_is_exact_path():
    a = sample_m1(2.0, 5, RngStream(10), size=4)
    b = sample_ml_half(1, RngStream(10), size=4)
    np.testing.assert_array_equal(a, b)


def test_m1_moments_at_default_truncation():
    params = MlParams(1 / 3, 1 / 3)
    x = sample_m1(1.5, None, RngStream(11), size=100_000)
    assert abs(x.mean() / ml_moment(params, 1) - 1) < 0.01
    assert abs((x ** 2).mean() / ml_moment(params, 2) - 1) < 0.01
    assert abs(z_score(x, ml_moment(params, 1), ml_moment(params, 2) - ml_moment(params, 1) ** 2)) < 5


def test_m1_mean_exact_for_any_truncation():
    # the prefactor makes the truncated product unbiased in mean; only the spread changes
    mean = ml_moment(MlParams(1 / 3, 1 / 3), 1)
    x = martingale_product(1.5, 50, RngStream(12), 200_000)
    assert abs(z_score(x, 1.0, x.var())) < 5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        y = sample_m1(1.5, 50, RngStream(13), size=200_000)
    assert abs(z_score(y, mean, y.var())) < 5


def test_m1_warns_below_floor():
    with pytest.warns(TruncationWarning):
        sample_m1(1.5, 10, RngStream(0))
    with pytest.warns(TruncationWarning):
        sample_m1(1.5, 2000, RngStream(0), tail=False)


def test_ml_family_matches_moments():
    ap = AlphaParam(1.5)
    for p in (2, 5):
        params = MlParams(ap.beta_index, ap.theta(p))
        x = sample_ml_family(ap, p, None, RngStream(p), size=100_000)
        m1, m2 = ml_moment(params, 1), ml_moment(params, 2)
        assert abs(z_score(x, m1, m2 - m1 * m1)) < 5


def test_chain_beta_params_array_and_scalar():
    a, b = chain_beta_params(AlphaParam(1.5), np.array([1.0, 3.0]))
    np.testing.assert_allclose(a, [2.0, 8.0])
    assert b == 2.0
