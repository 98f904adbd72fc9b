"""Double-ended matching queues with reneging.

Exact birth-death analysis of the Poisson-arrival case, fluid and asymmetric
Ornstein-Uhlenbeck diffusion approximations, a discrete-event simulator for
renewal arrivals, and a comparison harness that cross-validates them all.
"""

from .errors import (
    ConfigError,
    DequeLabError,
    DomainError,
    NumericalOverflowError,
    ResourceLimitError,
    TruncationError,
    UnsupportedCaseError,
)
from .numerics import InterarrivalModel, RandomStream
from .params import QueueParams

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DequeLabError",
    "DomainError",
    "NumericalOverflowError",
    "ResourceLimitError",
    "TruncationError",
    "UnsupportedCaseError",
    "InterarrivalModel",
    "RandomStream",
    "QueueParams",
    "__version__",
]
