"""Differential entropy and non-Gaussianness of a density grid.

Non-Gaussianness is the KL divergence to the Gaussian with the same second
order statistics, which on a zero-mean law reduces to

    D(f) = 0.5 * ln(2*pi*e*var(f)) - h(f)

in nats.  The matched Gaussian uses the variance measured on the grid, not
the nominal one, so small rendering bias cannot push D negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import DensityGrid
from .errors import DegenerateDensityError

ENTROPY_FLOOR = 1e-300
_MASS_GUARD = 1e-6


@dataclass(frozen=True)
class NonGaussianness:
    """Divergence from the variance-matched Gaussian, in nats."""

    value: float
    entropy: float
    matched_variance: float


def differential_entropy(f: DensityGrid) -> float:
    """Trapezoid integral of -f*ln(f) with 0*ln(0) = 0, in nats."""
    mass = f.mass()
    if abs(mass - 1.0) > _MASS_GUARD:
        raise DegenerateDensityError(f"entropy needs a unit-mass density, mass={mass}")
    v = f.values
    live = v > ENTROPY_FLOOR
    integrand = np.where(live, -v * np.log(np.where(live, v, 1.0)), 0.0)
    return float(np.trapezoid(integrand, dx=f.spec.dx))


def non_gaussianness(f: DensityGrid) -> NonGaussianness:
    """KL divergence of the grid law from its variance-matched Gaussian."""
    var = f.variance
    if not (var > 0.0 and math.isfinite(var)):
        raise DegenerateDensityError(f"density has nonpositive variance {var}")
    h = differential_entropy(f)
    value = 0.5 * math.log(2.0 * math.pi * math.e * var) - h
    return NonGaussianness(value=value, entropy=h, matched_variance=var)
