"""Soft actor-critic with pluggable ensemble aggregation (SAC, REDQ, DEA)."""

from .config import REGIMES, RunConfig
from .errors import ConfigError, NumericalError
from .trainer import METHOD_RULES, RunArtifacts, sweep, train

__all__ = [
    "REGIMES",
    "RunConfig",
    "ConfigError",
    "NumericalError",
    "METHOD_RULES",
    "RunArtifacts",
    "sweep",
    "train",
]
__version__ = "0.1.0"
