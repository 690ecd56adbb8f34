"""
Inhomogeneous Poisson processes: intensity evaluation, intensity measures
and sampling by thinning.
"""
import json
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.integrate import quad
from scipy.special import i0

from arrivals.config import settings
from arrivals.exceptions import DomainError, IntegrationError, SpecError
from arrivals.models import (
    INTENSITY_ADAPTER,
    Arm,
    ConstantIntensity,
    EventRecord,
    IntensitySpec,
    LogSinusoidIntensity,
    PiecewiseConstantIntensity,
    Realization,
    ScaledIntensity,
    SinusoidIntensity,
)

logger = logging.getLogger(__name__)

# XORed into the seed of arm B so the two arms draw independent streams
ARM_B_SEED_OFFSET = 0x9E3779B97F4A7C15
SEED_MASK = (1 << 64) - 1


def make_rng(seed: int, replication: int = 0) -> np.random.Generator:
    """
    Counter-based Philox generator keyed by seed XOR replication index, so
    replications can be generated independently and in any order.
    """
    key = (int(seed) ^ int(replication)) & SEED_MASK
    return np.random.Generator(np.random.Philox(key))


def load_spec(source: Union[str, Path, dict]) -> IntensitySpec:
    """
    Parse an intensity spec from a dict, an inline JSON string or a path to
    a JSON file, e.g. {"kind": "log_sinusoid", "amplitude": 3, "period": 20}.
    """
    try:
        if isinstance(source, dict):
            return INTENSITY_ADAPTER.validate_python(source)
        text = str(source).strip()
        if not text.startswith("{"):
            text = Path(text).read_text(encoding="utf-8")
        return INTENSITY_ADAPTER.validate_json(text)
    except (ValidationError, json.JSONDecodeError) as e:
        raise SpecError(f"invalid intensity spec: {e}") from e
    except OSError as e:
        raise SpecError(f"cannot read intensity spec {source}: {e}") from e


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and nonnegative, got {t}")
    return t


def intensity_array(spec: IntensitySpec, t: np.ndarray) -> np.ndarray:
    """lambda(t) evaluated elementwise"""
    t = np.asarray(t, dtype=float)
    if isinstance(spec, ConstantIntensity):
        return np.full_like(t, spec.rate)
    if isinstance(spec, LogSinusoidIntensity):
        return np.exp(spec.amplitude * np.sin(2 * np.pi * t / spec.period))
    if isinstance(spec, SinusoidIntensity):
        return spec.baseline + spec.amplitude * np.sin(2 * np.pi * t / spec.period)
    if isinstance(spec, PiecewiseConstantIntensity):
        index = np.searchsorted(np.asarray(spec.breakpoints), t, side="right")
        return np.asarray(spec.rates, dtype=float)[index]
    if isinstance(spec, ScaledIntensity):
        return spec.factor * intensity_array(spec.base, t)
    raise SpecError(f"unsupported intensity kind: {type(spec).__name__}")


def intensity_at(spec: IntensitySpec, t: float) -> float:
    """lambda(t) for a single time t >= 0"""
    t = _check_time(t)
    return float(intensity_array(spec, np.array([t]))[0])


def lambda_max(spec: IntensitySpec) -> float:
    """Upper bound on lambda over the whole half-line"""
    if isinstance(spec, ConstantIntensity):
        return spec.rate
    if isinstance(spec, LogSinusoidIntensity):
        return math.exp(abs(spec.amplitude))
    if isinstance(spec, SinusoidIntensity):
        return spec.baseline + abs(spec.amplitude)
    if isinstance(spec, PiecewiseConstantIntensity):
        return max(spec.rates)
    if isinstance(spec, ScaledIntensity):
        return spec.factor * lambda_max(spec.base)
    raise SpecError(f"unsupported intensity kind: {type(spec).__name__}")


def average_rate(spec: IntensitySpec) -> float:
    """Long-run average rate lim Lambda(t) / t"""
    if isinstance(spec, ConstantIntensity):
        return spec.rate
    if isinstance(spec, LogSinusoidIntensity):
        return float(i0(spec.amplitude))
    if isinstance(spec, SinusoidIntensity):
        return spec.baseline
    if isinstance(spec, PiecewiseConstantIntensity):
        return spec.rates[-1]
    if isinstance(spec, ScaledIntensity):
        return spec.factor * average_rate(spec.base)
    raise SpecError(f"unsupported intensity kind: {type(spec).__name__}")


def _integrate_log_sinusoid(amplitude: float, period: float, upper: float) -> float:
    tolerance = settings.QUAD_TOLERANCE
    result = quad(
        lambda s: math.exp(amplitude * math.sin(2 * math.pi * s / period)),
        0.0,
        upper,
        epsabs=tolerance,
        epsrel=tolerance,
        limit=200,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    # a fourth element is quad's warning message
    if len(result) > 3 or abserr > tolerance * max(1.0, abs(value)):
        raise IntegrationError(
            f"quadrature on [0, {upper}] reached error {abserr:.2e} on {value:.6g} (tolerance {tolerance:.0e})"
        )
    return value


@lru_cache(maxsize=64)
def _log_sinusoid_period_integral(amplitude: float, period: float) -> float:
    # integral of exp(c sin) over a whole period is period * I0(c)
    return period * float(i0(amplitude))


def _cumulative_log_sinusoid(spec: LogSinusoidIntensity, t: float) -> float:
    # whole periods from the cached integral, the remainder by quadrature
    periods, remainder = divmod(t, spec.period)
    total = periods * _log_sinusoid_period_integral(spec.amplitude, spec.period)
    if remainder > 0:
        total += _integrate_log_sinusoid(spec.amplitude, spec.period, remainder)
    return total


def _cumulative_closed(spec: IntensitySpec, t: np.ndarray) -> np.ndarray:
    if isinstance(spec, ConstantIntensity):
        return spec.rate * t
    if isinstance(spec, SinusoidIntensity):
        omega = 2 * np.pi / spec.period
        return spec.baseline * t + spec.amplitude / omega * (1.0 - np.cos(omega * t))
    if isinstance(spec, PiecewiseConstantIntensity):
        edges = np.concatenate(([0.0], np.asarray(spec.breakpoints, dtype=float)))
        rates = np.asarray(spec.rates, dtype=float)
        widths = np.clip(t[:, None] - edges[None, :], 0.0, None)
        widths[:, :-1] = np.minimum(widths[:, :-1], np.diff(edges)[None, :])
        return widths @ rates
    if isinstance(spec, ScaledIntensity):
        return spec.factor * _cumulative_closed(spec.base, t)
    if isinstance(spec, LogSinusoidIntensity):
        return np.array([_cumulative_log_sinusoid(spec, float(s)) for s in t])
    raise SpecError(f"unsupported intensity kind: {type(spec).__name__}")


def cumulative_many(spec: IntensitySpec, times: np.ndarray) -> np.ndarray:
    """Lambda(t) at every entry of ``times``"""
    times = np.asarray(times, dtype=float)
    if times.size and (not np.all(np.isfinite(times)) or np.any(times < 0)):
        raise DomainError("times must be finite and nonnegative")
    return _cumulative_closed(spec, times.reshape(-1)).reshape(times.shape)


def cumulative(spec: IntensitySpec, t: float) -> float:
    """Intensity measure Lambda(t) = integral of lambda over [0, t]"""
    t = _check_time(t)
    if t == 0:
        return 0.0
    return float(cumulative_many(spec, np.array([t]))[0])


def sample_times(spec: IntensitySpec, horizon: float, rng: np.random.Generator) -> np.ndarray:
    """
    Event times on [0, horizon] by Lewis-Shedler thinning: a homogeneous
    Poisson(lambda_max) stream, each point kept with probability
    lambda(s) / lambda_max.
    """
    if not math.isfinite(horizon) or horizon <= 0:
        raise DomainError(f"horizon must be positive and finite, got {horizon}")
    bound = lambda_max(spec)
    if not math.isfinite(bound):
        raise DomainError("intensity is unbounded; thinning needs a finite lambda_max")
    if bound == 0:
        return np.empty(0)
    # given its count, a homogeneous stream is a sorted uniform sample
    n_candidates = rng.poisson(bound * horizon)
    candidates = np.sort(rng.uniform(0.0, horizon, size=n_candidates))
    keep = rng.uniform(0.0, bound, size=n_candidates) < intensity_array(spec, candidates)
    return candidates[keep]


def sample(spec: IntensitySpec, horizon: float, seed: int) -> Realization:
    """One realization on [0, horizon]; deterministic given the seed"""
    times = sample_times(spec, horizon, make_rng(seed))
    return Realization(timestamps=times.tolist(), horizon=horizon)


def sample_pair_times(
    spec_a: IntensitySpec, spec_b: IntensitySpec, horizon: float, seed: int, replication: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Event times of both arms for one replication; the arms use independent streams"""
    times_a = sample_times(spec_a, horizon, make_rng(seed, replication))
    times_b = sample_times(spec_b, horizon, make_rng(seed ^ ARM_B_SEED_OFFSET, replication))
    return times_a, times_b


def sample_pair(spec_a: IntensitySpec, spec_b: IntensitySpec, horizon: float, seed: int) -> List[EventRecord]:
    """Independent realizations of both arms merged into one time-ordered stream"""
    times_a, times_b = sample_pair_times(spec_a, spec_b, horizon, seed)
    times = np.concatenate((times_a, times_b))
    arms = np.concatenate((np.zeros(times_a.size, dtype=int), np.ones(times_b.size, dtype=int)))
    order = np.argsort(times, kind="stable")
    logger.info(f"sampled {times_a.size} A and {times_b.size} B events on [0, {horizon}]")
    return [
        EventRecord(ts=float(times[i]), arm=Arm.A if arms[i] == 0 else Arm.B)
        for i in order
    ]
