"""
Utility functions and helpers
"""
from .streams import read_events, write_rows

__all__ = ["read_events", "write_rows"]
