"""
Log-space statistics for Poisson arrival processes.

Every quantity is returned as a natural logarithm. Exponentiate only at
presentation boundaries: e^L and Gamma(phi + n) overflow long before the
statistics themselves become uninteresting.
"""
import logging
import math
from typing import Union

import numpy as np
from scipy.special import betaln, gammaln

from arrivals.exceptions import DomainError
from arrivals.models import MixtureParams, RatePair

logger = logging.getLogger(__name__)

PhiLike = Union[MixtureParams, float]


def _phi(params: PhiLike) -> float:
    phi = params.phi if isinstance(params, MixtureParams) else float(params)
    if not math.isfinite(phi) or phi <= 0:
        raise DomainError(f"mixture precision phi must be positive and finite, got {phi}")
    return phi


def _count(n: int, name: str) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {n}")
    return int(n)


def _finite(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


def log_gamma_fn(x: float) -> float:
    """
    ln Gamma(x) for x > 0.

    Delegates to scipy's Cephes implementation, which is accurate to a few
    ulp across the whole positive axis.
    """
    x = _finite(x, "x")
    if x <= 0:
        raise DomainError(f"log_gamma_fn requires x > 0, got {x}")
    return float(gammaln(x))


def log_simple_lr(n: int, big_lambda0: float, theta: float) -> float:
    """
    Log likelihood ratio of the proportional-hazards alternative
    lambda_1 = e^theta * lambda_0 against lambda_0, given N(t) = n and
    Lambda_0(t) = big_lambda0.
    """
    n = _count(n, "n")
    big_lambda0 = _finite(big_lambda0, "big_lambda0")
    theta = _finite(theta, "theta")
    if big_lambda0 < 0:
        raise DomainError(f"big_lambda0 must be nonnegative, got {big_lambda0}")
    return theta * n - math.expm1(theta) * big_lambda0


def log_mixture_m(n: int, big_l: float, params: PhiLike = 1.0) -> float:
    """
    ln M(n, L; phi), the logGamma(phi, phi) mixture of proportional-hazards
    likelihood ratios:

        M = phi^phi Gamma(phi + n) e^L / ((phi + L)^(phi + n) Gamma(phi))

    Convex in L with its minimum at L = n.
    """
    n = _count(n, "n")
    big_l = _finite(big_l, "big_l")
    if big_l < 0:
        raise DomainError(f"big_l must be nonnegative, got {big_l}")
    phi = _phi(params)
    return (
        phi * math.log(phi)
        + log_gamma_fn(phi + n)
        - log_gamma_fn(phi)
        + big_l
        - (phi + n) * math.log(phi + big_l)
    )


def log_e_process(n_a: int, n_b: int, params: PhiLike = 1.0) -> float:
    """
    ln E(t) for the equality hypothesis: the product statistic evaluated at
    the pooled estimate Lambda_hat = (n_a + n_b) / 2, which is where it is
    smallest along the diagonal Lambda^A = Lambda^B.
    """
    n_a = _count(n_a, "n_a")
    n_b = _count(n_b, "n_b")
    pooled = 0.5 * (n_a + n_b)
    return log_mixture_m(n_a, pooled, params) + log_mixture_m(n_b, pooled, params)


def log_bernoulli_e(n_a: int, n_b: int, a: float = 1.0, b: float = 1.0) -> float:
    """
    ln of the beta-binomial e-process built on the fair-coin representation
    of which arm the next event arrives from:

        B(n_a + b, n_b + a) / B(a, b) * 2^(n_a + n_b)

    ``a`` and ``b`` are the beta mixture parameters, unrelated to the error level.
    """
    n_a = _count(n_a, "n_a")
    n_b = _count(n_b, "n_b")
    a = _finite(a, "a")
    b = _finite(b, "b")
    if a <= 0 or b <= 0:
        raise DomainError(f"beta mixture parameters must be positive, got a={a}, b={b}")
    return float(betaln(n_a + b, n_b + a) - betaln(a, b)) + (n_a + n_b) * math.log(2.0)


def log_asymptotic_e(n_a: int, n_b: int, t: float, params: PhiLike = 1.0) -> float:
    """
    ln E^A(t), the Gaussian-mixture SPRT on the standardised count difference
    Z(t) = (n_b - n_a) / sqrt(n_b + n_a). Z is taken as 0 before any event.
    """
    n_a = _count(n_a, "n_a")
    n_b = _count(n_b, "n_b")
    t = _finite(t, "t")
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    phi = _phi(params)
    total = n_a + n_b
    z_squared = (n_b - n_a) ** 2 / total if total > 0 else 0.0
    return 0.5 * math.log(phi / (phi + t)) + 0.5 * t / (t + phi) * z_squared


def poisson_kl(lambda1: float, lambda0: float) -> float:
    """KL divergence of Poisson(lambda1) from Poisson(lambda0)"""
    lambda1 = _finite(lambda1, "lambda1")
    lambda0 = _finite(lambda0, "lambda0")
    if lambda0 <= 0:
        raise DomainError(f"lambda0 must be positive, got {lambda0}")
    if lambda1 < 0:
        raise DomainError(f"lambda1 must be nonnegative, got {lambda1}")
    # lambda log lambda -> 0 as lambda -> 0
    head = lambda1 * math.log(lambda1 / lambda0) if lambda1 > 0 else 0.0
    return max(0.0, head - (lambda1 - lambda0))


def growth_rate_equality(rates: RatePair) -> float:
    """
    Almost-sure limit of ln E(t) / t: the divergence of both arms from the
    pooled mean rate. Also the limit of the beta-binomial e-process.
    """
    if rates.lambda_a == 0 and rates.lambda_b == 0:
        raise DomainError("growth rate undefined when both rates are zero")
    mean = rates.lambda_m
    return poisson_kl(rates.lambda_b, mean) + poisson_kl(rates.lambda_a, mean)


def growth_rate_gaussian(rates: RatePair) -> float:
    """Almost-sure limit of ln E^A(t) / t for the Gaussian-mixture SPRT"""
    total = rates.lambda_a + rates.lambda_b
    if total <= 0:
        raise DomainError("growth rate undefined when both rates are zero")
    return 0.5 * (rates.lambda_b - rates.lambda_a) ** 2 / total


# --- Vectorised forms used along simulated trajectories -----------------------

def log_mixture_m_array(n: np.ndarray, big_l: np.ndarray, phi: float = 1.0) -> np.ndarray:
    """Elementwise ln M(n, L; phi) for arrays of counts and measures"""
    phi = _phi(phi)
    n = np.asarray(n, dtype=float)
    big_l = np.asarray(big_l, dtype=float)
    if np.any(n < 0) or np.any(big_l < 0):
        raise DomainError("counts and measures must be nonnegative")
    return (
        phi * math.log(phi)
        + gammaln(phi + n)
        - gammaln(phi)
        + big_l
        - (phi + n) * np.log(phi + big_l)
    )


def log_e_process_array(n_a: np.ndarray, n_b: np.ndarray, phi: float = 1.0) -> np.ndarray:
    """Elementwise ln E for paired count arrays"""
    n_a = np.asarray(n_a, dtype=float)
    n_b = np.asarray(n_b, dtype=float)
    pooled = 0.5 * (n_a + n_b)
    return log_mixture_m_array(n_a, pooled, phi) + log_mixture_m_array(n_b, pooled, phi)


def log_bernoulli_e_array(n_a: np.ndarray, n_b: np.ndarray, a: float = 1.0, b: float = 1.0) -> np.ndarray:
    """Elementwise ln of the beta-binomial e-process"""
    if a <= 0 or b <= 0:
        raise DomainError(f"beta mixture parameters must be positive, got a={a}, b={b}")
    n_a = np.asarray(n_a, dtype=float)
    n_b = np.asarray(n_b, dtype=float)
    return betaln(n_a + b, n_b + a) - betaln(a, b) + (n_a + n_b) * math.log(2.0)


def log_asymptotic_e_array(n_a: np.ndarray, n_b: np.ndarray, t: np.ndarray, phi: float = 1.0) -> np.ndarray:
    """Elementwise ln E^A(t); Z is 0 wherever no event has arrived yet"""
    phi = _phi(phi)
    n_a = np.asarray(n_a, dtype=float)
    n_b = np.asarray(n_b, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    total = n_a + n_b
    z_squared = np.divide((n_b - n_a) ** 2, total, out=np.zeros_like(total), where=total > 0)
    return 0.5 * np.log(phi / (phi + t)) + 0.5 * t / (t + phi) * z_squared
