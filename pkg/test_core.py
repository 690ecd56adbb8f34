"""
Tests for the log-space statistics: mixture martingale, equality e-process,
the beta-binomial and Gaussian alternatives, KL divergences and growth rates.
"""

import math
import sys
import os

import numpy as np
import pytest
from scipy.special import gammaln

# Add the repository root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from arrivals.exceptions import DomainError
from arrivals.models import MixtureParams, RatePair
from arrivals.services.core import (
    growth_rate_equality,
    growth_rate_gaussian,
    log_asymptotic_e,
    log_asymptotic_e_array,
    log_bernoulli_e,
    log_bernoulli_e_array,
    log_e_process,
    log_e_process_array,
    log_gamma_fn,
    log_mixture_m,
    log_mixture_m_array,
    log_simple_lr,
    poisson_kl,
)


def test_log_gamma_known_values():
    """lnGamma at integers and half-integers"""
    assert log_gamma_fn(1.0) == pytest.approx(0.0, abs=1e-12)
    assert log_gamma_fn(2.0) == pytest.approx(0.0, abs=1e-12)
    assert log_gamma_fn(5.0) == pytest.approx(math.log(24.0), abs=1e-12)
    assert log_gamma_fn(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-12)
    # Gamma(10.5) = (19!! / 2^10) sqrt(pi) by the recurrence from Gamma(1/2)
    double_factorial = math.prod(range(1, 20, 2))
    oracle = math.log(double_factorial) - 10 * math.log(2.0) + 0.5 * math.log(math.pi)
    assert log_gamma_fn(10.5) == pytest.approx(oracle, abs=1e-12)
    assert log_gamma_fn(10.5) == pytest.approx(math.lgamma(10.5), abs=1e-12)
    # Stirling regime, relative accuracy
    assert log_gamma_fn(1e7) == pytest.approx(math.lgamma(1e7), rel=1e-14)
    print("✓ log_gamma_fn known values test passed")


def test_log_gamma_domain():
    """Nonpositive and non-finite arguments are domain errors"""
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(DomainError):
            log_gamma_fn(bad)
    print("✓ log_gamma_fn domain test passed")


def test_log_simple_lr():
    """theta = 0 gives a zero log ratio; otherwise theta n - (e^theta - 1) Lambda_0"""
    assert log_simple_lr(7, 3.0, 0.0) == 0.0
    assert log_simple_lr(2, 1.0, math.log(2.0)) == pytest.approx(2 * math.log(2.0) - 1.0, abs=1e-12)
    assert log_simple_lr(0, 0.0, 5.0) == 0.0
    with pytest.raises(DomainError):
        log_simple_lr(-1, 1.0, 0.1)
    print("✓ log_simple_lr test passed")


def test_log_mixture_m_known_values():
    """ln M matches direct substitution"""
    # phi = 1: ln 3! + 1 - 4 ln 2
    assert log_mixture_m(3, 1.0, 1.0) == pytest.approx(0.019170, abs=1e-6)
    assert log_mixture_m(3, 1.0, MixtureParams(phi=1.0)) == pytest.approx(0.019170, abs=1e-6)
    # n = 0, L = 0 is the empty product
    assert log_mixture_m(0, 0.0, 2.5) == pytest.approx(0.0, abs=1e-12)
    print("✓ log_mixture_m known values test passed")


def test_log_mixture_m_minimum_at_n():
    """ln M(n, .) is convex with its minimum at L = n, where M <= 1"""
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(0, 500))
        phi = float(rng.uniform(0.05, 20.0))
        at_n = log_mixture_m(n, float(n), phi)
        assert at_n <= 1e-12
        for delta in (1e-3, 0.5, 3.0):
            assert log_mixture_m(n, n + delta, phi) >= at_n
            if n - delta >= 0:
                assert log_mixture_m(n, n - delta, phi) >= at_n
    print("✓ log_mixture_m minimum test passed")


def test_log_mixture_m_large_inputs():
    """No overflow or NaN for counts and measures up to 1e7"""
    for n, big_l in ((10**7, 1e7), (0, 1e7), (10**7, 0.0), (10**6, 2e6)):
        value = log_mixture_m(n, big_l, 1.0)
        assert math.isfinite(value)
    print("✓ log_mixture_m large input test passed")


def test_log_mixture_m_domain():
    """Negative counts, negative measures and bad phi are domain errors"""
    with pytest.raises(DomainError):
        log_mixture_m(-1, 1.0)
    with pytest.raises(DomainError):
        log_mixture_m(1, -0.1)
    with pytest.raises(DomainError):
        log_mixture_m(1, 1.0, 0.0)
    with pytest.raises(DomainError):
        log_mixture_m(1.5, 1.0)
    print("✓ log_mixture_m domain test passed")


def test_log_e_process_values():
    """ln E at the pooled estimate"""
    assert log_e_process(0, 0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert log_e_process(1, 0, 1.0) == pytest.approx(-0.216395, abs=1e-6)
    assert log_e_process(1, 0, 1.0) == pytest.approx(log_e_process(0, 1, 1.0), abs=1e-12)
    assert log_e_process(40, 100, 1.0) > -math.log(0.05)
    # phi = 1: ln M(n, L) = ln n! + L - (n + 1) ln(1 + L), pooled estimate 70
    oracle = math.log(math.factorial(40)) + math.log(math.factorial(100)) + 140.0 - 142.0 * math.log(71.0)
    assert log_e_process(40, 100, 1.0) == pytest.approx(oracle, abs=1e-10)
    assert log_e_process(40, 100, 1.0) == pytest.approx(
        log_mixture_m(40, 70.0, 1.0) + log_mixture_m(100, 70.0, 1.0), abs=1e-12
    )
    print("✓ log_e_process values test passed")


def test_log_e_process_is_infimum_over_diagonal():
    """ln E equals the minimum of the product statistic along Lambda^A = Lambda^B"""
    rng = np.random.default_rng(5)
    for _ in range(100):
        n_a, n_b = (int(x) for x in rng.integers(0, 200, size=2))
        phi = float(rng.uniform(0.1, 10.0))
        grid = np.linspace(0.0, max(n_a, n_b) + 5.0, 20001)
        product = log_mixture_m_array(np.full_like(grid, n_a), grid, phi) + log_mixture_m_array(
            np.full_like(grid, n_b), grid, phi
        )
        assert log_e_process(n_a, n_b, phi) <= product.min() + 1e-9
    print("✓ log_e_process infimum test passed")


def test_log_bernoulli_e_values():
    """Beta-binomial e-process at small counts"""
    assert log_bernoulli_e(0, 0) == pytest.approx(0.0, abs=1e-12)
    assert log_bernoulli_e(1, 1, 1.0, 1.0) == pytest.approx(math.log(2.0 / 3.0), abs=1e-12)
    # one event: B(2, 1) / B(1, 1) * 2 = 1
    assert log_bernoulli_e(1, 0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        log_bernoulli_e(1, 1, 0.0, 1.0)
    print("✓ log_bernoulli_e values test passed")


def test_log_asymptotic_e_values():
    """Gaussian mixture SPRT at hand-computed points"""
    assert log_asymptotic_e(3, 3, 3.0, 1.0) == pytest.approx(0.5 * math.log(0.25), abs=1e-12)
    assert log_asymptotic_e(0, 0, 2.0, 1.5) == pytest.approx(0.5 * math.log(1.5 / 3.5), abs=1e-12)
    assert log_asymptotic_e(0, 4, 1.0, 1.0) == pytest.approx(0.653426, abs=1e-6)
    with pytest.raises(DomainError):
        log_asymptotic_e(1, 1, 0.0)
    print("✓ log_asymptotic_e values test passed")


def test_vectorised_forms_match_scalars():
    """Array forms agree with their scalar counterparts"""
    rng = np.random.default_rng(2)
    n_a = rng.integers(0, 300, size=50)
    n_b = rng.integers(0, 300, size=50)
    t = rng.uniform(0.5, 100.0, size=50)
    big_l = rng.uniform(0.0, 400.0, size=50)
    np.testing.assert_allclose(
        log_mixture_m_array(n_a, big_l, 2.0),
        [log_mixture_m(int(n), float(x), 2.0) for n, x in zip(n_a, big_l)],
        rtol=1e-12, atol=1e-9,
    )
    np.testing.assert_allclose(
        log_e_process_array(n_a, n_b, 0.7),
        [log_e_process(int(a), int(b), 0.7) for a, b in zip(n_a, n_b)],
        rtol=1e-12, atol=1e-9,
    )
    np.testing.assert_allclose(
        log_bernoulli_e_array(n_a, n_b),
        [log_bernoulli_e(int(a), int(b)) for a, b in zip(n_a, n_b)],
        rtol=1e-12, atol=1e-9,
    )
    np.testing.assert_allclose(
        log_asymptotic_e_array(n_a, n_b, t),
        [log_asymptotic_e(int(a), int(b), float(s)) for a, b, s in zip(n_a, n_b, t)],
        rtol=1e-12, atol=1e-9,
    )
    print("✓ Vectorised forms test passed")


def test_poisson_kl():
    """Poisson KL divergence values and domain"""
    assert poisson_kl(3.0, 3.0) == 0.0
    assert poisson_kl(1.0, 2.0) == pytest.approx(1 - math.log(2.0), abs=1e-12)
    assert poisson_kl(0.0, 2.0) == pytest.approx(2.0, abs=1e-12)
    assert poisson_kl(2.0, 1.0) == pytest.approx(2 * math.log(2.0) - 1.0, abs=1e-12)
    with pytest.raises(DomainError):
        poisson_kl(1.0, 0.0)
    print("✓ poisson_kl test passed")


def test_growth_rates():
    """Theoretical growth rates of the equality tests"""
    assert growth_rate_equality(RatePair(lambda_a=3, lambda_b=3)) == 0.0
    assert growth_rate_equality(RatePair(lambda_a=0.5, lambda_b=5)) == pytest.approx(2.136815, abs=1e-5)
    assert growth_rate_equality(RatePair(lambda_a=1, lambda_b=2)) == pytest.approx(
        poisson_kl(1, 1.5) + poisson_kl(2, 1.5), abs=1e-12
    )
    assert growth_rate_gaussian(RatePair(lambda_a=3, lambda_b=3)) == 0.0
    assert growth_rate_gaussian(RatePair(lambda_a=0.5, lambda_b=5)) == pytest.approx(1.840909, abs=1e-6)
    assert growth_rate_gaussian(RatePair(lambda_a=0, lambda_b=1)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        growth_rate_equality(RatePair(lambda_a=0, lambda_b=0))
    with pytest.raises(DomainError):
        growth_rate_gaussian(RatePair(lambda_a=0, lambda_b=0))
    print("✓ Growth rate test passed")


def test_gaussian_rate_never_exceeds_equality_rate():
    """The Gaussian approximation grows no faster than the exact test"""
    rng = np.random.default_rng(8)
    for _ in range(2000):
        a, b = rng.uniform(0.0, 50.0, size=2)
        if a + b == 0:
            continue
        rates = RatePair(lambda_a=float(a), lambda_b=float(b))
        assert growth_rate_gaussian(rates) <= growth_rate_equality(rates) + 1e-12
    print("✓ Growth rate ordering test passed")


def test_log_gamma_matches_scipy_on_random_inputs():
    """Agreement with scipy gammaln over eight decades"""
    rng = np.random.default_rng(3)
    x = 10 ** rng.uniform(-3, 7, size=1000)
    for value in x:
        assert log_gamma_fn(float(value)) == pytest.approx(float(gammaln(value)), rel=1e-14, abs=1e-12)
    print("✓ log_gamma_fn random input test passed")


if __name__ == "__main__":
    print("Running core statistic tests...")
    print()

    tests = [
        test_log_gamma_known_values,
        test_log_gamma_domain,
        test_log_simple_lr,
        test_log_mixture_m_known_values,
        test_log_mixture_m_minimum_at_n,
        test_log_mixture_m_large_inputs,
        test_log_mixture_m_domain,
        test_log_e_process_values,
        test_log_e_process_is_infimum_over_diagonal,
        test_log_bernoulli_e_values,
        test_log_asymptotic_e_values,
        test_vectorised_forms_match_scalars,
        test_poisson_kl,
        test_growth_rates,
        test_gaussian_rate_never_exceeds_equality_rate,
        test_log_gamma_matches_scipy_on_random_inputs,
    ]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            print(f"✗ {test.__name__} failed: {e}")
            failed += 1

    print()
    print("All tests passed!" if failed == 0 else f"{failed} test(s) failed")
    sys.exit(0 if failed == 0 else 1)
