"""Queue parameter bundle shared by the analytic and simulation modules."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .numerics import InterarrivalModel

__all__ = ["QueueParams"]


@dataclass(frozen=True)
class QueueParams:
    """Arrival, variability, and reneging parameters of the double-ended queue.

    alpha / beta are seller / buyer arrival rates, sigma / varsigma the
    interarrival standard deviations entering the diffusion coefficients,
    theta / gamma the per-customer reneging rates.  Positive reneging rates
    are required: the chain is positive recurrent only then.

    sigma and varsigma default to the exponential values 1/alpha, 1/beta so
    Poisson-only analyses can omit them.
    """

    alpha: float
    beta: float
    theta: float
    gamma: float
    sigma: float | None = None
    varsigma: float | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "theta", "gamma"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", 1.0 / self.alpha)
        if self.varsigma is None:
            object.__setattr__(self, "varsigma", 1.0 / self.beta)
        if self.sigma < 0.0 or self.varsigma < 0.0:
            raise DomainError("sigma and varsigma must be non-negative")

    @classmethod
    def for_family(
        cls,
        family: str,
        alpha: float,
        beta: float,
        theta: float,
        gamma: float,
    ) -> "QueueParams":
        """Parameters with sigma/varsigma set to the family's nominal sd.

        The nominal sd is what the diffusion-model coefficient tables use;
        see InterarrivalModel.nominal_sd for the exponential-family caveat.
        """
        seller = InterarrivalModel(family, alpha)
        buyer = InterarrivalModel(family, beta)
        return cls(alpha, beta, theta, gamma, seller.nominal_sd, buyer.nominal_sd)

    @property
    def drift_offset(self) -> float:
        return self.alpha - self.beta

    @property
    def diffusion_coeff_sq(self) -> float:
        """a^2 = alpha^3 sigma^2 + beta^3 varsigma^2."""
        return self.alpha**3 * self.sigma**2 + self.beta**3 * self.varsigma**2

    @property
    def diffusion_coeff(self) -> float:
        return math.sqrt(self.diffusion_coeff_sq)

    @property
    def heavy_traffic_coeff_sq(self) -> float:
        """b^2 = a^2 + |alpha - beta|."""
        return self.diffusion_coeff_sq + abs(self.alpha - self.beta)

    @property
    def heavy_traffic_coeff(self) -> float:
        return math.sqrt(self.heavy_traffic_coeff_sq)
