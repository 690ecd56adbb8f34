"""
Error hierarchy shared by every module of the package.
"""
from typing import Any, Optional


class ArrivalsError(Exception):
    """Base class for all errors raised by the package"""


class DomainError(ArrivalsError, ValueError):
    """An input lies outside the domain of the requested operation"""


class SpecError(DomainError):
    """An intensity specification could not be parsed or is invalid"""


class EmptyIntervalError(ArrivalsError):
    """A confidence set that should contain its minimiser came out empty"""


class RootFindingError(ArrivalsError, RuntimeError):
    """Bracketing or Brent iteration failed to produce a root within tolerance"""


class IntegrationError(ArrivalsError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance"""


class OutOfOrderError(ArrivalsError):
    """An event timestamp precedes the last timestamp already ingested"""

    def __init__(self, message: str, record: Any = None, line: Optional[int] = None):
        super().__init__(message)
        self.record = record
        self.line = line
