"""
Monte Carlo harness for growth-rate, coverage and rejection experiments.

Every replication r is a pure function of (seed, r): streams come from
make_rng(seed, r) and the arm-B offset in sample_pair_times, so the result
is the same whether replications run serially or across a process pool.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, List, Optional, Tuple, TypeVar

import numpy as np
import pandas as pd

from arrivals.config import settings
from arrivals.exceptions import DomainError
from arrivals.models import (
    CoverageSummary,
    GrowthLimits,
    IntensitySpec,
    PowerSummary,
    RatePair,
    RejectionSummary,
)
from arrivals.services.core import (
    growth_rate_equality,
    growth_rate_gaussian,
    log_asymptotic_e_array,
    log_bernoulli_e_array,
    log_e_process_array,
    log_mixture_m_array,
)
from arrivals.services.simulate import (
    average_rate,
    cumulative_many,
    make_rng,
    sample_pair_times,
    sample_times,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

GROWTH_FIELDS: List[str] = ["rep", "t", "log_e_rate", "log_bernoulli_rate", "log_asymptotic_rate"]


def _map_reps(fn: Callable[[int], T], reps: int, workers: Optional[int] = None) -> List[T]:
    """Run fn over replication indices, in a process pool when workers > 1"""
    if reps <= 0:
        raise DomainError(f"reps must be positive, got {reps}")
    workers = settings.MAX_WORKERS if workers is None else workers
    logger.info(f"starting {reps} replications on {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, range(reps), chunksize=max(1, reps // (4 * workers))))
    else:
        results = [fn(rep) for rep in range(reps)]
    logger.info(f"finished {reps} replications")
    return results


def _grid(horizon: float, grid_step: float) -> np.ndarray:
    if grid_step <= 0 or not math.isfinite(grid_step):
        raise DomainError(f"grid_step must be positive and finite, got {grid_step}")
    k = int(math.floor(horizon / grid_step + 1e-9))
    return grid_step * np.arange(1, k + 1, dtype=float)


def _threshold(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return -math.log(alpha)


# --- Growth rates -------------------------------------------------------------

def growth_limits(spec_a: IntensitySpec, spec_b: IntensitySpec) -> GrowthLimits:
    """Theoretical limits of ln E/t, ln E~/t and ln E^A/t from the average rates"""
    rates = RatePair(lambda_a=average_rate(spec_a), lambda_b=average_rate(spec_b))
    equality = growth_rate_equality(rates)
    return GrowthLimits(equality=equality, bernoulli=equality, gaussian=growth_rate_gaussian(rates))


def _growth_path(
    rep: int, spec_a: IntensitySpec, spec_b: IntensitySpec,
    horizon: float, seed: int, grid_step: float, phi: float,
) -> pd.DataFrame:
    times_a, times_b = sample_pair_times(spec_a, spec_b, horizon, seed, rep)
    t = _grid(horizon, grid_step)
    n_a = np.searchsorted(times_a, t, side="right")
    n_b = np.searchsorted(times_b, t, side="right")
    return pd.DataFrame({
        "rep": rep,
        "t": t,
        "log_e_rate": log_e_process_array(n_a, n_b, phi) / t,
        "log_bernoulli_rate": log_bernoulli_e_array(n_a, n_b) / t,
        "log_asymptotic_rate": log_asymptotic_e_array(n_a, n_b, t, phi) / t,
    }, columns=GROWTH_FIELDS)


def growth_trajectories(
    spec_a: IntensitySpec,
    spec_b: IntensitySpec,
    horizon: float,
    reps: int,
    seed: int,
    grid_step: float = 1.0,
    phi: float = 1.0,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    Per-path trajectories of the three equality statistics divided by t,
    sampled on the grid k * grid_step up to the horizon. One row per
    (rep, t); columns GROWTH_FIELDS.
    """
    fn = partial(_growth_path, spec_a=spec_a, spec_b=spec_b, horizon=horizon,
                 seed=seed, grid_step=grid_step, phi=phi)
    frames = _map_reps(fn, reps, workers)
    return pd.concat(frames, ignore_index=True)


# --- Coverage -----------------------------------------------------------------

def _path_statistic(times: np.ndarray, big_l, horizon: float, grid_step: Optional[float], phi: float) -> float:
    """
    sup over [0, horizon] of ln M(N(t), Lambda(t)). Between events N is flat
    and ln M is convex in Lambda, so the supremum over each gap sits at one of
    its ends: the left limit at the next event or the horizon.
    """
    n_events = times.size
    counts_after = np.arange(1, n_events + 1, dtype=float)
    points_n = [counts_after - 1.0, counts_after]
    points_t = [times, times]
    if grid_step:
        ticks = _grid(horizon, grid_step)
        points_n.append(np.searchsorted(times, ticks, side="right").astype(float))
        points_t.append(ticks)
    points_n.append(np.array([float(n_events)]))
    points_t.append(np.array([horizon]))
    n = np.concatenate(points_n)
    measures = big_l(np.concatenate(points_t))
    return float(np.max(log_mixture_m_array(n, measures, phi)))


def _coverage_miss(
    rep: int, spec: IntensitySpec, horizon: float, seed: int,
    grid_step: Optional[float], phi: float, threshold: float,
) -> bool:
    times = sample_times(spec, horizon, make_rng(seed, rep))
    stat = _path_statistic(times, partial(cumulative_many, spec), horizon, grid_step, phi)
    # Lambda(t) outside the interval exactly when the statistic exceeds the threshold
    return stat > threshold


def coverage_run(
    spec: IntensitySpec,
    horizon: float,
    reps: int,
    seed: int,
    phi: float = 1.0,
    alpha: float = 0.05,
    grid_step: Optional[float] = 1.0,
    workers: Optional[int] = None,
) -> CoverageSummary:
    """Fraction of null paths on which the true Lambda ever leaves the confidence process"""
    threshold = _threshold(alpha)
    fn = partial(_coverage_miss, spec=spec, horizon=horizon, seed=seed,
                 grid_step=grid_step, phi=phi, threshold=threshold)
    misses = int(sum(_map_reps(fn, reps, workers)))
    rate = misses / reps
    summary = CoverageSummary(
        reps=reps,
        misses=misses,
        miscoverage=rate,
        std_error=math.sqrt(rate * (1 - rate) / reps),
        bound=alpha + 3 * math.sqrt(alpha * (1 - alpha) / reps),
    )
    logger.info(f"coverage: {misses}/{reps} misses (bound {summary.bound:.4f})")
    return summary


# --- Equality test ------------------------------------------------------------

def _merged_counts(times_a: np.ndarray, times_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    times = np.concatenate((times_a, times_b))
    is_b = np.concatenate((np.zeros(times_a.size, dtype=bool), np.ones(times_b.size, dtype=bool)))
    order = np.argsort(times, kind="stable")
    is_b = is_b[order]
    return np.cumsum(~is_b), np.cumsum(is_b)


def _equality_rejects(
    rep: int, spec_a: IntensitySpec, spec_b: IntensitySpec,
    horizon: float, seed: int, phi: float, threshold: float,
) -> bool:
    times_a, times_b = sample_pair_times(spec_a, spec_b, horizon, seed, rep)
    if times_a.size + times_b.size == 0:
        return False
    n_a, n_b = _merged_counts(times_a, times_b)
    # E only moves at events
    return bool(np.max(log_e_process_array(n_a, n_b, phi)) >= threshold)


def rejection_run(
    spec_a: IntensitySpec,
    spec_b: IntensitySpec,
    horizon: float,
    reps: int,
    seed: int,
    phi: float = 1.0,
    alpha: float = 0.05,
    workers: Optional[int] = None,
) -> RejectionSummary:
    """
    Fraction of runs in which the equality e-process reaches 1/alpha before
    the horizon: type-I error under equal arms, power otherwise.
    """
    threshold = _threshold(alpha)
    fn = partial(_equality_rejects, spec_a=spec_a, spec_b=spec_b, horizon=horizon,
                 seed=seed, phi=phi, threshold=threshold)
    rejections = int(sum(_map_reps(fn, reps, workers)))
    rate = rejections / reps
    return RejectionSummary(
        reps=reps,
        rejections=rejections,
        rate=rate,
        std_error=math.sqrt(rate * (1 - rate) / reps),
    )


# --- Single-arm test of a null intensity ---------------------------------------

def _single_arm_path(
    rep: int, spec: IntensitySpec, null_spec: IntensitySpec,
    horizon: float, cross_by: float, seed: int, phi: float, threshold: float,
) -> Tuple[bool, float]:
    times = sample_times(spec, horizon, make_rng(seed, rep))
    early = times[times <= cross_by]
    stat = _path_statistic(early, partial(cumulative_many, null_spec), cross_by, None, phi)
    final = log_mixture_m_array(
        np.array([float(times.size)]), cumulative_many(null_spec, np.array([horizon])), phi
    )[0]
    return stat >= threshold, float(final) / horizon


def single_arm_power_run(
    spec: IntensitySpec,
    null_spec: IntensitySpec,
    horizon: float,
    reps: int,
    seed: int,
    phi: float = 1.0,
    alpha: float = 0.05,
    cross_by: Optional[float] = None,
    workers: Optional[int] = None,
) -> PowerSummary:
    """
    Mixture test of the null intensity on data drawn from ``spec``: how often
    the statistic crosses 1/alpha by ``cross_by`` (default the horizon), and
    the mean of ln M(t)/t at the horizon.
    """
    threshold = _threshold(alpha)
    cross_by = horizon if cross_by is None else cross_by
    if not 0 < cross_by <= horizon:
        raise DomainError(f"cross_by must lie in (0, horizon], got {cross_by}")
    fn = partial(_single_arm_path, spec=spec, null_spec=null_spec, horizon=horizon,
                 cross_by=cross_by, seed=seed, phi=phi, threshold=threshold)
    results = _map_reps(fn, reps, workers)
    crossings = sum(1 for crossed, _ in results if crossed)
    rate = crossings / reps
    return PowerSummary(
        reps=reps,
        crossings=crossings,
        rate=rate,
        mean_log_m_rate=float(np.mean([r for _, r in results])),
        std_error=math.sqrt(rate * (1 - rate) / reps),
    )


def _terminal_mixture(rep: int, spec: IntensitySpec, horizon: float, seed: int, phi: float) -> float:
    times = sample_times(spec, horizon, make_rng(seed, rep))
    measure = cumulative_many(spec, np.array([horizon]))
    return float(np.exp(log_mixture_m_array(np.array([float(times.size)]), measure, phi)[0]))


def martingale_mean(
    spec: IntensitySpec,
    horizon: float,
    reps: int,
    seed: int,
    phi: float = 1.0,
    workers: Optional[int] = None,
) -> Tuple[float, float]:
    """Monte Carlo mean of M(N(T), Lambda(T)) under the true intensity, with its standard error"""
    fn = partial(_terminal_mixture, spec=spec, horizon=horizon, seed=seed, phi=phi)
    values = np.asarray(_map_reps(fn, reps, workers))
    std_error = float(values.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf
    return float(values.mean()), std_error
