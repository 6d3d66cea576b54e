"""Exception types shared across modules."""

from .rootsys import ConfigError


class ConsistencyError(RuntimeError):
    """An internal identity failed (a construction step had no solution)."""


__all__ = ["ConfigError", "ConsistencyError"]
