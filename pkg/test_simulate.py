"""
Tests for intensity specs, intensity measures and thinning-based sampling.
"""

import json
import math
import sys
import os

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import i0
from scipy.stats import kstest

# Add the repository root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from arrivals.exceptions import DomainError, SpecError
from arrivals.models import (
    Arm,
    ConstantIntensity,
    LogSinusoidIntensity,
    PiecewiseConstantIntensity,
    ScaledIntensity,
    SinusoidIntensity,
)
from arrivals.services.simulate import (
    average_rate,
    cumulative,
    cumulative_many,
    intensity_at,
    lambda_max,
    load_spec,
    make_rng,
    sample,
    sample_pair,
    sample_pair_times,
    sample_times,
)

LOG_SINUSOID = LogSinusoidIntensity(amplitude=3.0, period=20.0)


def test_intensity_at():
    """Point evaluation of each intensity kind"""
    assert intensity_at(ConstantIntensity(rate=2.5), 17.0) == 2.5
    assert intensity_at(LOG_SINUSOID, 5.0) == pytest.approx(math.exp(3.0), rel=1e-12)
    assert intensity_at(LOG_SINUSOID, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert intensity_at(SinusoidIntensity(baseline=5, amplitude=1, period=1), 0.25) == pytest.approx(6.0)
    assert intensity_at(ScaledIntensity(base=ConstantIntensity(rate=5), factor=0.1), 3.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        intensity_at(LOG_SINUSOID, -1.0)
    print("✓ intensity_at test passed")


def test_piecewise_constant_is_right_continuous():
    """rates[i] applies from breakpoint i on"""
    spec = PiecewiseConstantIntensity(breakpoints=[2.0, 5.0], rates=[1.0, 3.0, 0.5])
    assert intensity_at(spec, 0.0) == 1.0
    assert intensity_at(spec, 2.0) == 3.0
    assert intensity_at(spec, 4.999) == 3.0
    assert intensity_at(spec, 5.0) == 0.5
    assert cumulative(spec, 1.0) == pytest.approx(1.0)
    assert cumulative(spec, 3.0) == pytest.approx(5.0)
    assert cumulative(spec, 6.0) == pytest.approx(11.5)
    assert lambda_max(spec) == 3.0
    assert average_rate(spec) == 0.5
    print("✓ Piecewise constant test passed")


def test_cumulative_constant():
    """Lambda(t) = rate * t"""
    assert cumulative(ConstantIntensity(rate=3.0), 0.0) == 0.0
    assert cumulative(ConstantIntensity(rate=3.0), 7.0) == pytest.approx(21.0)
    print("✓ Constant cumulative test passed")


def test_cumulative_log_sinusoid_full_period():
    """One full period integrates to period * I0(amplitude)"""
    assert cumulative(LOG_SINUSOID, 20.0) == pytest.approx(20.0 * i0(3.0), abs=1e-8)
    assert cumulative(LOG_SINUSOID, 200.0) == pytest.approx(200.0 * i0(3.0), abs=1e-7)
    assert average_rate(LOG_SINUSOID) == pytest.approx(float(i0(3.0)))
    print("✓ Log-sinusoid full period test passed")


def test_cumulative_log_sinusoid_partial_period():
    """Whole periods plus a quadrature remainder"""
    direct, _ = quad(lambda s: math.exp(3.0 * math.sin(2 * math.pi * s / 20.0)), 0.0, 7.3, epsabs=1e-12)
    assert cumulative(LOG_SINUSOID, 7.3) == pytest.approx(direct, abs=1e-8)
    assert cumulative(LOG_SINUSOID, 47.3) == pytest.approx(2 * 20.0 * i0(3.0) + direct, abs=1e-7)
    print("✓ Log-sinusoid partial period test passed")


def test_cumulative_log_sinusoid_large_amplitude():
    """Sharply peaked intensities integrate without quadrature errors"""
    spec = LogSinusoidIntensity(amplitude=8.0, period=20.0)
    for t in (3.3, 13.7, 20.0, 47.1, 200.0):
        direct, _ = quad(
            lambda s: math.exp(8.0 * math.sin(2 * math.pi * s / 20.0)),
            0.0, t, epsabs=0.0, epsrel=1e-12, limit=500,
        )
        assert cumulative(spec, t) == pytest.approx(direct, rel=1e-9)
    values = cumulative_many(spec, np.linspace(0.0, 60.0, 61))
    assert np.all(np.diff(values) > 0)
    print("✓ Large amplitude log-sinusoid test passed")


def test_cumulative_sinusoid_closed_form():
    """Closed-form sinusoid measure agrees with quadrature"""
    spec = SinusoidIntensity(baseline=5.0, amplitude=1.0, period=1.0)
    for t in (0.1, 0.5, 1.0, 3.7):
        direct, _ = quad(lambda s: 5.0 + math.sin(2 * math.pi * s), 0.0, t, epsabs=1e-12)
        assert cumulative(spec, t) == pytest.approx(direct, abs=1e-9)
    print("✓ Sinusoid closed form test passed")


def test_cumulative_many_matches_scalar():
    """Vectorised measure equals pointwise evaluation"""
    times = np.array([0.0, 0.5, 3.0, 19.9, 20.0, 41.0])
    for spec in (
        LOG_SINUSOID,
        SinusoidIntensity(baseline=2.0, amplitude=1.5, period=3.0),
        PiecewiseConstantIntensity(breakpoints=[1.0], rates=[2.0, 4.0]),
        ScaledIntensity(base=LOG_SINUSOID, factor=0.5),
    ):
        expected = [cumulative(spec, float(t)) for t in times]
        np.testing.assert_allclose(cumulative_many(spec, times), expected, rtol=1e-12, atol=1e-9)
    with pytest.raises(DomainError):
        cumulative_many(LOG_SINUSOID, np.array([1.0, -2.0]))
    print("✓ cumulative_many test passed")


def test_sample_deterministic_per_seed():
    """Same seed, same realization; different seeds differ"""
    first = sample(LOG_SINUSOID, 40.0, seed=7)
    second = sample(LOG_SINUSOID, 40.0, seed=7)
    other = sample(LOG_SINUSOID, 40.0, seed=8)
    assert first.timestamps == second.timestamps
    assert first.timestamps != other.timestamps
    assert all(0 <= t <= 40.0 for t in first.timestamps)
    assert first.timestamps == sorted(first.timestamps)
    print("✓ Sample determinism test passed")


def test_sample_zero_intensity():
    """A zero intensity produces no events"""
    assert sample(ConstantIntensity(rate=0.0), 100.0, seed=1).count == 0
    assert sample_pair(ConstantIntensity(rate=0.0), ConstantIntensity(rate=0.0), 100.0, seed=1) == []
    print("✓ Zero intensity test passed")


def test_sample_domain():
    """Nonpositive horizons are rejected"""
    with pytest.raises(DomainError):
        sample(LOG_SINUSOID, 0.0, seed=1)
    with pytest.raises(DomainError):
        sample(LOG_SINUSOID, math.inf, seed=1)
    print("✓ Sample domain test passed")


def test_sample_mean_count():
    """Mean count over seeds is within 4 standard errors of Lambda(T)"""
    for spec, horizon in ((ConstantIntensity(rate=3.0), 100.0), (LOG_SINUSOID, 40.0)):
        expected = cumulative(spec, horizon)
        counts = np.array([sample(spec, horizon, seed=s).count for s in range(200)])
        std_error = math.sqrt(expected / counts.size)
        assert abs(counts.mean() - expected) <= 4 * std_error
    print("✓ Sample mean count test passed")


def test_thinning_time_rescaling():
    """Lambda(t_i) / Lambda(T) of pooled events is uniform on [0, 1]"""
    horizon = 60.0
    total = cumulative(LOG_SINUSOID, horizon)
    rescaled = []
    for rep in range(50):
        times = sample_times(LOG_SINUSOID, horizon, make_rng(314, rep))
        rescaled.extend(cumulative_many(LOG_SINUSOID, times) / total)
    assert kstest(rescaled, "uniform").pvalue > 1e-3
    print("✓ Thinning time rescaling test passed")


def test_disjoint_windows_are_independent_poisson():
    """Counts in disjoint windows are uncorrelated, each Poisson(Lambda(window))"""
    reps = 600
    windows = ((0.0, 10.0), (20.0, 35.0))
    counts = np.zeros((reps, len(windows)))
    for rep in range(reps):
        times = np.asarray(sample(LOG_SINUSOID, 40.0, seed=rep).timestamps)
        for j, (start, end) in enumerate(windows):
            counts[rep, j] = np.count_nonzero((times >= start) & (times < end))

    corr = np.corrcoef(counts[:, 0], counts[:, 1])[0, 1]
    assert abs(corr) < 4 / math.sqrt(reps)

    for j, (start, end) in enumerate(windows):
        expected = cumulative(LOG_SINUSOID, end) - cumulative(LOG_SINUSOID, start)
        mean_se = math.sqrt(expected / reps)
        # Poisson: fourth central moment minus squared variance is lambda + 2 lambda^2
        var_se = math.sqrt((expected + 2 * expected ** 2) / reps)
        assert abs(counts[:, j].mean() - expected) <= 4 * mean_se
        assert abs(counts[:, j].var(ddof=1) - expected) <= 4 * var_se
    print("✓ Disjoint window independence test passed")


def test_sample_pair_merge_and_balance():
    """Merged stream is time ordered and equal arms split evenly"""
    events = sample_pair(LOG_SINUSOID, LogSinusoidIntensity(amplitude=2.0, period=20.0), 40.0, seed=5)
    assert [e.ts for e in events] == sorted(e.ts for e in events)
    assert {e.arm for e in events} <= {Arm.A, Arm.B}

    pooled_a = pooled_b = 0
    for seed in range(200):
        times_a, times_b = sample_pair_times(ConstantIntensity(rate=3.0), ConstantIntensity(rate=3.0), 1000.0, seed)
        pooled_a += times_a.size
        pooled_b += times_b.size
    total = pooled_a + pooled_b
    # binomial(total, 1/2) oracle
    assert abs(pooled_a - pooled_b) <= 4 * math.sqrt(total)
    print("✓ sample_pair test passed")


def test_arms_use_independent_streams():
    """Identical specs on both arms still give different realizations"""
    times_a, times_b = sample_pair_times(LOG_SINUSOID, LOG_SINUSOID, 40.0, seed=11)
    assert not np.array_equal(times_a, times_b)
    print("✓ Independent arm streams test passed")


def test_replications_are_independent_of_order():
    """Replication r depends only on (seed, r)"""
    late = make_rng(42, 9).random(5)
    for rep in range(9):
        make_rng(42, rep).random(5)
    assert np.array_equal(make_rng(42, 9).random(5), late)
    print("✓ Replication order test passed")


def test_load_spec_sources(tmp_path):
    """Specs load from dicts, inline JSON and files"""
    spec = {"kind": "log_sinusoid", "amplitude": 3, "period": 20}
    assert load_spec(spec) == LOG_SINUSOID
    assert load_spec(json.dumps(spec)) == LOG_SINUSOID
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    assert load_spec(str(path)) == LOG_SINUSOID
    print("✓ load_spec sources test passed")


def test_load_spec_errors(tmp_path):
    """Invalid or unreadable specs raise SpecError"""
    for bad in (
        '{"kind": "log_sinusoid", "amplitude": 3}',
        '{"kind": "triangle", "rate": 1}',
        '{"kind": "sinusoid", "baseline": 1, "amplitude": 2, "period": 1}',
        '{"kind": "piecewise_constant", "breakpoints": [2, 1], "rates": [1, 2, 3]}',
        '{"kind": "constant", "rate": -1}',
        '{not json',
    ):
        with pytest.raises(SpecError):
            load_spec(bad)
    with pytest.raises(SpecError):
        load_spec(str(tmp_path / "missing.json"))
    print("✓ load_spec error test passed")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    print("Running simulation tests...")
    print()

    tests = [
        test_intensity_at,
        test_piecewise_constant_is_right_continuous,
        test_cumulative_constant,
        test_cumulative_log_sinusoid_full_period,
        test_cumulative_log_sinusoid_partial_period,
        test_cumulative_log_sinusoid_large_amplitude,
        test_cumulative_sinusoid_closed_form,
        test_cumulative_many_matches_scalar,
        test_sample_deterministic_per_seed,
        test_sample_zero_intensity,
        test_sample_domain,
        test_sample_mean_count,
        test_thinning_time_rescaling,
        test_disjoint_windows_are_independent_poisson,
        test_sample_pair_merge_and_balance,
        test_arms_use_independent_streams,
        test_replications_are_independent_of_order,
    ]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            print(f"✗ {test.__name__} failed: {e}")
            failed += 1
    for test in (test_load_spec_sources, test_load_spec_errors):
        with tempfile.TemporaryDirectory() as tmp:
            try:
                test(Path(tmp))
            except Exception as e:
                print(f"✗ {test.__name__} failed: {e}")
                failed += 1

    print()
    print("All tests passed!" if failed == 0 else f"{failed} test(s) failed")
    sys.exit(0 if failed == 0 else 1)
