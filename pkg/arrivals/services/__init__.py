"""
Services module for sequential inference on arrival processes
"""
from .core import (
    growth_rate_equality,
    growth_rate_gaussian,
    log_asymptotic_e,
    log_bernoulli_e,
    log_e_process,
    log_gamma_fn,
    log_mixture_m,
    log_simple_lr,
    poisson_kl,
)
from .confidence import (
    arm_interval,
    difference_interval,
    joint_membership,
    sequential_p,
    sum_interval,
    univariate_interval,
)
from .simulate import cumulative, intensity_at, load_spec, sample, sample_pair
from .monitor import SequentialMonitor, SingleArmMonitor, ingest, new_state, report

__all__ = [
    'growth_rate_equality',
    'growth_rate_gaussian',
    'log_asymptotic_e',
    'log_bernoulli_e',
    'log_e_process',
    'log_gamma_fn',
    'log_mixture_m',
    'log_simple_lr',
    'poisson_kl',
    'arm_interval',
    'difference_interval',
    'joint_membership',
    'sequential_p',
    'sum_interval',
    'univariate_interval',
    'cumulative',
    'intensity_at',
    'load_spec',
    'sample',
    'sample_pair',
    'SequentialMonitor',
    'SingleArmMonitor',
    'ingest',
    'new_state',
    'report',
]
