"""
Arrivals
Anytime-valid confidence intervals, e-values and sequential p-values for
inhomogeneous Poisson arrival processes.
"""
__version__ = "1.0.0"
