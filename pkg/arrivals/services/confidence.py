"""
Confidence sets for cumulative arrival rates.

The univariate set {L : ln M(n, L) <= ln(1/alpha)} and every projection of
the joint set {(x, y) : ln M(n_a, x) + ln M(n_b, y) <= ln(1/alpha)} are
sublevel sets of convex functions with a known minimiser, so each endpoint
is a single bracketed root. Brackets are grown by doubling away from the
minimiser and then refined with Brent's method.
"""
import logging
import math
import sys
from typing import Callable, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.optimize import brentq

from arrivals.config import settings
from arrivals.exceptions import DomainError, EmptyIntervalError, RootFindingError
from arrivals.models import Arm, Interval, JointQuery, LogValue, SignedInterval
from arrivals.services.core import log_e_process, log_mixture_m

logger = logging.getLogger(__name__)

MAX_BRACKET_DOUBLINGS = 200
RADICAND_CLAMP = 1e-12
# smallest relative tolerance brentq accepts
RELATIVE_XTOL = 4 * np.finfo(float).eps


def _threshold(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return -math.log(alpha)


def _check_residual(f: Callable[[float], float], root: float, tol: float) -> None:
    residual = f(root)
    if abs(residual) <= tol * max(1.0, abs(root)):
        return
    # steep near zero: a sign change across neighbouring doubles is as close as it gets
    below = f(math.nextafter(root, -math.inf))
    above = f(math.nextafter(root, math.inf))
    if min(below, residual, above) <= 0 <= max(below, residual, above):
        logger.debug(f"root {root:.17g} resolved to one ulp with residual {residual:.3e}")
        return
    raise RootFindingError(f"root {root} has residual {residual:.3e} above tolerance {tol:.1e}")


def _brent(f: Callable[[float], float], a: float, b: float, tol: float, max_iter: int) -> float:
    # absolute step relative to the bracket, so roots near zero keep full precision
    xtol = max(sys.float_info.min, 1e-15 * min(abs(a), abs(b)))
    try:
        root, info = brentq(f, a, b, xtol=xtol, rtol=RELATIVE_XTOL, maxiter=max_iter,
                            full_output=True, disp=False)
    except ValueError as e:
        raise RootFindingError(f"invalid bracket [{a}, {b}]: {e}") from e
    if not info.converged:
        raise RootFindingError(f"Brent iteration did not converge on [{a}, {b}]: {info.flag}")
    _check_residual(f, root, tol)
    logger.debug(f"root {root:.12g} in [{a:.6g}, {b:.6g}] after {info.iterations} iterations")
    return float(root)


def _grow_bracket(f: Callable[[float], float], center: float, direction: float,
                  floor: Optional[float] = None) -> float:
    """Step away from the minimiser until f turns positive; returns the far end"""
    step = max(1.0, math.sqrt(abs(center)) + 1.0)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        candidate = center + direction * step
        if floor is not None and candidate <= floor:
            return floor
        if f(candidate) > 0:
            return candidate
        step *= 2.0
    raise RootFindingError(f"no sign change found from {center} after {MAX_BRACKET_DOUBLINGS} doublings")


def convex_sublevel_interval(
    f: Callable[[float], float],
    center: float,
    floor: Optional[float] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Endpoints of {x : f(x) <= 0} for a convex f minimised at ``center``.

    When ``floor`` is given the domain is [floor, inf) and the lower endpoint
    is exactly ``floor`` whenever f(floor) <= 0.
    """
    tol = settings.ROOT_TOLERANCE if tol is None else tol
    max_iter = settings.ROOT_MAX_ITERATIONS if max_iter is None else max_iter
    at_center = f(center)
    if at_center > 0:
        raise EmptyIntervalError(f"statistic exceeds the threshold by {at_center:.3e} at its minimiser {center}")
    if at_center == 0:
        # threshold equals the minimum: the set is the minimiser alone
        return center, center

    far = _grow_bracket(f, center, 1.0)
    upper = _brent(f, center, far, tol, max_iter)

    if floor is not None and f(floor) <= 0:
        lower = floor
    else:
        near = _grow_bracket(f, center, -1.0, floor)
        lower = _brent(f, near, center, tol, max_iter)
    return lower, upper


def univariate_interval(n: int, phi: float = 1.0, alpha: float = 0.05) -> Interval:
    """
    Confidence interval for Lambda(t) from a single stream with N(t) = n:
    {L >= 0 : ln M(n, L; phi) <= ln(1/alpha)}.
    """
    threshold = _threshold(alpha)
    lower, upper = convex_sublevel_interval(
        lambda big_l: log_mixture_m(n, big_l, phi) - threshold,
        center=float(n),
        floor=0.0,
    )
    return Interval(lower=lower, upper=upper)


def joint_membership(q: JointQuery, l_a: float, l_b: float) -> bool:
    """True when (l_a, l_b) lies in the joint confidence set"""
    statistic = log_mixture_m(q.n_a, l_a, q.phi) + log_mixture_m(q.n_b, l_b, q.phi)
    return statistic <= _threshold(q.alpha)


def arm_interval(q: JointQuery, arm: Arm) -> Interval:
    """
    Projection of the joint set onto one coordinate. The other arm's factor
    is smallest at its own count, so fixing it there leaves a univariate
    problem with a tightened threshold.
    """
    arm = Arm(arm)
    own, other = (q.n_a, q.n_b) if arm == Arm.A else (q.n_b, q.n_a)
    threshold = _threshold(q.alpha) - log_mixture_m(other, float(other), q.phi)
    lower, upper = convex_sublevel_interval(
        lambda y: log_mixture_m(own, y, q.phi) - threshold,
        center=float(own),
        floor=0.0,
    )
    return Interval(lower=lower, upper=upper)


def _optimal_total(q: JointQuery, w: float) -> float:
    """
    Minimiser over v = Lambda^A + Lambda^B of the joint statistic at fixed
    difference w = Lambda^B - Lambda^A, restricted to v >= |w|.
    """
    n_a, n_b, phi = q.n_a, q.n_b, q.phi
    a = 0.25 * n_a ** 2 + 0.5 * n_a * n_b + n_a * phi + n_a * w
    b = 0.25 * n_b ** 2 + n_b * phi - n_b * w + phi ** 2 + w ** 2
    radicand = a + b
    if radicand < 0:
        if radicand < -RADICAND_CLAMP:
            raise RootFindingError(f"negative radicand {radicand:.3e} at w={w}")
        logger.warning(f"clamping radicand {radicand:.3e} to zero at w={w}")
        radicand = 0.0
    h = 0.5 * (n_a + n_b) - phi + math.sqrt(radicand)
    return max(h, abs(w))


def profile_difference(q: JointQuery, w: float) -> float:
    """min over v of the joint log statistic along the line Lambda^B - Lambda^A = w"""
    v = _optimal_total(q, w)
    l_a = max(0.0, 0.5 * (v - w))
    l_b = max(0.0, 0.5 * (v + w))
    return log_mixture_m(q.n_a, l_a, q.phi) + log_mixture_m(q.n_b, l_b, q.phi)


def difference_interval(q: JointQuery) -> SignedInterval:
    """
    Projection of the joint set onto Lambda^B - Lambda^A. The endpoints are
    the two roots of the profiled statistic minus ln(1/alpha).
    """
    threshold = _threshold(q.alpha)
    lower, upper = convex_sublevel_interval(
        lambda w: profile_difference(q, w) - threshold,
        center=float(q.n_b - q.n_a),
    )
    return SignedInterval(lower=lower, upper=upper)


def profile_sum(q: JointQuery, v: float) -> float:
    """min over the split of v = Lambda^A + Lambda^B of the joint log statistic"""
    n_a, n_b, phi = q.n_a, q.n_b, q.phi
    # stationarity: (phi + n_a) / (phi + x) = (phi + n_b) / (phi + v - x)
    x = ((phi + n_a) * (phi + v) - phi * (phi + n_b)) / (2 * phi + n_a + n_b)
    x = min(max(x, 0.0), v)
    return log_mixture_m(n_a, x, phi) + log_mixture_m(n_b, v - x, phi)


def sum_interval(q: JointQuery) -> Interval:
    """Projection of the joint set onto Lambda^A + Lambda^B"""
    threshold = _threshold(q.alpha)
    lower, upper = convex_sublevel_interval(
        lambda v: profile_sum(q, v) - threshold,
        center=float(q.n_a + q.n_b),
        floor=0.0,
    )
    return Interval(lower=lower, upper=upper)


def p_value_from_log(log_e: Union[float, LogValue]) -> float:
    """min(1, 1/E) from ln E, kept strictly positive when E overflows"""
    if not isinstance(log_e, LogValue):
        try:
            log_e = LogValue(log_v=log_e)
        except ValidationError as e:
            raise DomainError(f"invalid log statistic {log_e}") from e
    return log_e.p_value


def sequential_p(n_a: int, n_b: int, phi: float = 1.0) -> float:
    """
    Sequential p-value for equality of the two arms: the smallest alpha whose
    joint set misses the diagonal, min(1, 1/E).
    """
    return p_value_from_log(log_e_process(n_a, n_b, phi))
