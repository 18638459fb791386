"""Standardized source laws and their renderings on uniform density grids.

Every built-in family carries analytic moments, characteristic function,
log-MGF (for tail-radius estimates) and, where it exists, a closed-form
density/CDF.  Laws are standardized to zero mean and unit variance at
construction unless the caller opts out.  The ``DensityGrid`` produced by
``pdf_of`` is the numeric currency consumed by every other module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDensityError,
    DegenerateDistributionError,
    GridTooNarrowError,
    NoDensityError,
    NotStandardizedError,
)

DEFAULT_POINTS = 2**14
MIN_POINTS = 2**8
TAIL_EPS = 1e-13          # essential-support mass used for grid sizing
RENDER_TAIL_LIMIT = 1e-12  # pdf_of refuses grids that truncate more than this
MASS_TOL = 1e-9
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_STD_TOL = 1e-9


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric grid on [-half_width, half_width] with 2**k points."""

    half_width: float
    points: int = DEFAULT_POINTS

    def __post_init__(self) -> None:
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        n = self.points
        if n < MIN_POINTS or (n & (n - 1)) != 0:
            raise ValueError(f"points must be a power of two >= {MIN_POINTS}, got {n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    def x(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    def frequencies(self) -> np.ndarray:
        """Conjugate frequency nodes t_k = (k - N/2) * 2*pi/(N*dx)."""
        n = self.points
        dt = 2.0 * np.pi / (n * self.dx)
        return (np.arange(n) - n // 2) * dt


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """A unit-mass probability density sampled on a GridSpec.

    ``clipped_mass`` records how much negative (spectral-ringing) mass was
    removed before the final renormalization; a value above 1e-6 marks the
    grid as numerically degraded.
    """

    spec: GridSpec
    values: np.ndarray
    mean: float
    variance: float
    clipped_mass: float = 0.0

    DEGRADED_THRESHOLD = 1e-6

    @property
    def degraded(self) -> bool:
        return self.clipped_mass > self.DEGRADED_THRESHOLD

    def mass(self) -> float:
        return float(np.trapezoid(self.values, dx=self.spec.dx))

    def x(self) -> np.ndarray:
        return self.spec.x()


def _moments_of(values: np.ndarray, spec: GridSpec) -> tuple[float, float]:
    x = spec.x()
    mean = float(np.trapezoid(x * values, dx=spec.dx))
    var = float(np.trapezoid(x * x * values, dx=spec.dx)) - mean * mean
    return mean, var


def make_density_grid(spec: GridSpec, values: np.ndarray,
                      clipped_mass: float = 0.0) -> DensityGrid:
    """Validate and freeze a sampled density (assumed renormalized)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (spec.points,):
        raise ValueError("values shape does not match the grid")
    if not np.all(np.isfinite(values)):
        raise DegenerateDensityError("density contains non-finite values")
    if np.any(values < 0.0):
        raise DegenerateDensityError("density contains negative values; renormalize first")
    mass = float(np.trapezoid(values, dx=spec.dx))
    if abs(mass - 1.0) > MASS_TOL:
        raise DegenerateDensityError(f"density mass {mass} deviates from 1 beyond {MASS_TOL}")
    mean, var = _moments_of(values, spec)
    values = values.copy()
    values.setflags(write=False)
    return DensityGrid(spec=spec, values=values, mean=mean, variance=var,
                       clipped_mass=float(clipped_mass))


# ---------------------------------------------------------------------------
# Moment summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSummary:
    """Variance plus the third and fourth cumulants (excess kurtosis)."""

    variance: float
    third_cumulant: float
    fourth_cumulant: float


# ---------------------------------------------------------------------------
# Source distributions
# ---------------------------------------------------------------------------

class SourceDistribution:
    """Base class: a scalar source law with analytic structure.

    Subclasses provide moments, the characteristic function, the log-MGF
    (``inf`` outside its domain) and, for continuous families, pdf/cdf and
    the locations where the density jumps or kinks.
    """

    family = "abstract"

    # -- analytic structure ------------------------------------------------
    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def cf(self, t):
        """Characteristic function E[exp(itX)], vectorized over t."""
        raise NotImplementedError

    def log_mgf(self, s: float) -> float:
        """log E[exp(sX)]; +inf where the MGF diverges."""
        raise NotImplementedError

    def mgf_cap(self) -> float:
        """Largest |s| worth probing in Chernoff searches."""
        return 100.0

    def has_density(self) -> bool:
        return True

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def density_jumps(self) -> tuple[float, ...]:
        """Jump discontinuities of the density."""
        return ()

    def density_kinks(self) -> tuple[float, ...]:
        """Derivative discontinuities of the density."""
        return ()

    def atoms(self) -> tuple[tuple[float, float], ...]:
        """(location, weight) pairs for purely discrete laws."""
        return ()

    def cumulants34(self) -> tuple[float, float]:
        """Third and fourth cumulants at the current parameters."""
        raise NotImplementedError

    # -- affine machinery ---------------------------------------------------
    def affine(self, scale: float, shift: float) -> "SourceDistribution":
        """The law of scale*X + shift, within the same family."""
        raise NotImplementedError

    @property
    def is_standardized(self) -> bool:
        return abs(self.mean()) <= _STD_TOL and abs(self.variance() - 1.0) <= _STD_TOL

    def standardize(self) -> "SourceDistribution":
        var = self.variance()
        if not (math.isfinite(var) and var > 0):
            raise DegenerateDistributionError(
                f"{self.family}: cannot standardize a law with variance {var}")
        sd = math.sqrt(var)
        return self.affine(1.0 / sd, -self.mean() / sd)

    def moments(self) -> MomentSummary:
        if not self.is_standardized:
            raise NotStandardizedError(
                f"{self.family}: moments() requires a standardized law")
        k3, k4 = self.cumulants34()
        return MomentSummary(variance=self.variance(), third_cumulant=k3,
                             fourth_cumulant=k4)


@dataclass(frozen=True)
class Gaussian(SourceDistribution):
    mu: float = 0.0
    sigma2: float = 1.0

    family = "gaussian"

    def mean(self):
        return self.mu

    def variance(self):
        return self.sigma2

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.mu * t - 0.5 * self.sigma2 * t * t)

    def log_mgf(self, s):
        return self.mu * s + 0.5 * self.sigma2 * s * s

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        sd = math.sqrt(self.sigma2)
        z = (x - self.mu) / sd
        return np.exp(-0.5 * z * z) / (_SQRT_2PI * sd)

    def cdf(self, x):
        from scipy.special import ndtr
        sd = math.sqrt(self.sigma2)
        return ndtr((np.asarray(x, dtype=float) - self.mu) / sd)

    def cumulants34(self):
        return 0.0, 0.0

    def affine(self, scale, shift):
        return Gaussian(mu=scale * self.mu + shift, sigma2=scale * scale * self.sigma2)


@dataclass(frozen=True)
class Uniform(SourceDistribution):
    lo: float = -math.sqrt(3.0)
    hi: float = math.sqrt(3.0)

    family = "uniform"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DegenerateDistributionError("uniform: hi must exceed lo")

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def variance(self):
        return (self.hi - self.lo) ** 2 / 12.0

    def _half(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.mean() * t) * np.sinc(self._half() * t / np.pi)

    def log_mgf(self, s):
        u = self._half() * s
        return self.mean() * s + _log_sinhc(u)

    def mgf_cap(self):
        return 5e3 / self._half()

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        h = 1.0 / (self.hi - self.lo)
        return np.where((x >= self.lo) & (x <= self.hi), h, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def support(self):
        return (self.lo, self.hi)

    def density_jumps(self):
        return (self.lo, self.hi)

    def cumulants34(self):
        return 0.0, -1.2 * self.variance() ** 2

    def affine(self, scale, shift):
        a, b = scale * self.lo + shift, scale * self.hi + shift
        return Uniform(lo=min(a, b), hi=max(a, b))


@dataclass(frozen=True)
class Laplace(SourceDistribution):
    loc: float = 0.0
    b: float = 1.0 / math.sqrt(2.0)

    family = "laplace"

    def __post_init__(self):
        if not self.b > 0:
            raise DegenerateDistributionError("laplace: scale must be positive")

    def mean(self):
        return self.loc

    def variance(self):
        return 2.0 * self.b * self.b

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.loc * t) / (1.0 + (self.b * t) ** 2)

    def log_mgf(self, s):
        u = self.b * s
        if abs(u) >= 1.0:
            return math.inf
        return self.loc * s - math.log1p(-u * u)

    def mgf_cap(self):
        return (1.0 - 1e-9) / self.b

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.abs(x - self.loc) / self.b) / (2.0 * self.b)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.loc) / self.b
        return np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))

    def density_kinks(self):
        return (self.loc,)

    def cumulants34(self):
        return 0.0, 3.0 * self.variance() ** 2

    def affine(self, scale, shift):
        return Laplace(loc=scale * self.loc + shift, b=abs(scale) * self.b)


@dataclass(frozen=True)
class ExponentialCentered(SourceDistribution):
    """Law of scale * E + shift with E ~ Exp(1); standardized form is E - 1."""

    scale: float = 1.0
    shift: float = -1.0

    family = "exponential"

    def __post_init__(self):
        if not self.scale > 0:
            raise DegenerateDistributionError("exponential: scale must be positive")

    def mean(self):
        return self.scale + self.shift

    def variance(self):
        return self.scale * self.scale

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.shift * t) / (1.0 - 1j * self.scale * t)

    def log_mgf(self, s):
        u = self.scale * s
        if u >= 1.0:
            return math.inf
        return self.shift * s - math.log1p(-u)

    def mgf_cap(self):
        return (1.0 - 1e-9) / self.scale

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.shift) / self.scale
        return np.where(z >= 0, np.exp(-np.clip(z, 0, 745.0)) / self.scale, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.shift) / self.scale
        return np.where(z >= 0, -np.expm1(-np.clip(z, 0, 745.0)), 0.0)

    def support(self):
        return (self.shift, math.inf)

    def density_jumps(self):
        return (self.shift,)

    def cumulants34(self):
        return 2.0 * self.scale**3, 6.0 * self.scale**4

    def affine(self, scale, shift):
        if scale < 0:
            raise DegenerateDistributionError(
                "exponential: negative rescaling leaves the family")
        return ExponentialCentered(scale=scale * self.scale,
                                   shift=scale * self.shift + shift)


@dataclass(frozen=True)
class Rademacher(SourceDistribution):
    """Two equal atoms at center +/- half."""

    half: float = 1.0
    center: float = 0.0

    family = "rademacher"

    def __post_init__(self):
        if not self.half > 0:
            raise DegenerateDistributionError("rademacher: zero spread")

    def mean(self):
        return self.center

    def variance(self):
        return self.half * self.half

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * self.center * t) * np.cos(self.half * t)

    def log_mgf(self, s):
        u = abs(self.half * s)
        return self.center * s + (u + math.log1p(math.exp(-2.0 * u)) - math.log(2.0))

    def mgf_cap(self):
        return 800.0 / self.half

    def has_density(self):
        return False

    def pdf(self, x):
        raise NoDensityError("rademacher is purely discrete")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.center - self.half, self.center + self.half
        return np.where(x < lo, 0.0, np.where(x < hi, 0.5, 1.0))

    def support(self):
        return (self.center - self.half, self.center + self.half)

    def atoms(self):
        return ((self.center - self.half, 0.5), (self.center + self.half, 0.5))

    def cumulants34(self):
        return 0.0, -2.0 * self.half**4

    def affine(self, scale, shift):
        return Rademacher(half=abs(scale) * self.half,
                          center=scale * self.center + shift)


@dataclass(frozen=True)
class GaussianMixture(SourceDistribution):
    weights: tuple[float, ...] = (0.5, 0.5)
    means: tuple[float, ...] = (-0.8, 0.8)
    sigma2s: tuple[float, ...] = (0.36, 0.36)

    family = "mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.means) or len(self.means) != len(self.sigma2s):
            raise DegenerateDistributionError("mixture: component lists differ in length")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DegenerateDistributionError("mixture: weights must be positive and sum to 1")
        if any(s <= 0 for s in self.sigma2s):
            raise DegenerateDistributionError("mixture: component variances must be positive")

    def _arrays(self):
        return (np.asarray(self.weights), np.asarray(self.means),
                np.asarray(self.sigma2s))

    def mean(self):
        w, m, _ = self._arrays()
        return float(np.sum(w * m))

    def variance(self):
        w, m, s2 = self._arrays()
        mu = np.sum(w * m)
        return float(np.sum(w * (s2 + m * m)) - mu * mu)

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        t1 = np.atleast_1d(t)
        w, m, s2 = self._arrays()
        out = np.sum(w[:, None] * np.exp(1j * m[:, None] * t1[None, :]
                                         - 0.5 * s2[:, None] * t1[None, :] ** 2),
                     axis=0)
        return out.reshape(t.shape)

    def log_mgf(self, s):
        w, m, s2 = self._arrays()
        expo = np.log(w) + m * s + 0.5 * s2 * s * s
        top = float(np.max(expo))
        return top + math.log(float(np.sum(np.exp(expo - top))))

    def mgf_cap(self):
        return 100.0 / math.sqrt(min(self.sigma2s))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        w, m, s2 = self._arrays()
        sd = np.sqrt(s2)
        z = (x[..., None] - m) / sd
        return np.sum(w * np.exp(-0.5 * z * z) / (_SQRT_2PI * sd), axis=-1)

    def cdf(self, x):
        from scipy.special import ndtr
        x = np.asarray(x, dtype=float)
        w, m, s2 = self._arrays()
        return np.sum(w * ndtr((x[..., None] - m) / np.sqrt(s2)), axis=-1)

    def cumulants34(self):
        w, m, s2 = self._arrays()
        mu = np.sum(w * m)
        d = m - mu
        mc3 = float(np.sum(w * (d**3 + 3 * d * s2)))
        mc4 = float(np.sum(w * (d**4 + 6 * d * d * s2 + 3 * s2 * s2)))
        var = self.variance()
        return mc3, mc4 - 3.0 * var * var

    def affine(self, scale, shift):
        return GaussianMixture(
            weights=self.weights,
            means=tuple(scale * mi + shift for mi in self.means),
            sigma2s=tuple(scale * scale * si for si in self.sigma2s))


def _log_sinhc(u: float) -> float:
    """log(sinh(u)/u), stable for large and small u."""
    a = abs(u)
    if a < 1e-6:
        return a * a / 6.0
    return a + math.log1p(-math.exp(-2.0 * a)) - math.log(2.0) - math.log(a)


# ---------------------------------------------------------------------------
# Constructors (standardized by default)
# ---------------------------------------------------------------------------

def gaussian(mu: float = 0.0, sigma2: float = 1.0, *, standardize: bool = True):
    d = Gaussian(mu=mu, sigma2=sigma2)
    return d.standardize() if standardize else d


def uniform(lo: float = -math.sqrt(3.0), hi: float = math.sqrt(3.0), *,
            standardize: bool = True):
    d = Uniform(lo=lo, hi=hi)
    return d.standardize() if standardize else d


def laplace(loc: float = 0.0, b: float = 1.0 / math.sqrt(2.0), *,
            standardize: bool = True):
    d = Laplace(loc=loc, b=b)
    return d.standardize() if standardize else d


def exponential(rate: float = 1.0, *, standardize: bool = True):
    d = ExponentialCentered(scale=1.0 / rate, shift=0.0)
    return d.standardize() if standardize else d


def rademacher():
    return Rademacher()


def gaussian_mixture(weights: Sequence[float], means: Sequence[float],
                     sigma2s: Sequence[float], *, standardize: bool = True):
    d = GaussianMixture(weights=tuple(weights), means=tuple(means),
                        sigma2s=tuple(sigma2s))
    return d.standardize() if standardize else d


BUILTIN_LAWS = {
    "gaussian": gaussian,
    "uniform": uniform,
    "laplace": laplace,
    "exponential": exponential,
    "rademacher": rademacher,
    "mixture": gaussian_mixture,
}


def builtin_law(name: str, **params) -> SourceDistribution:
    if name not in BUILTIN_LAWS:
        raise DegenerateDistributionError(f"unknown law family {name!r}")
    return BUILTIN_LAWS[name](**params)


# ---------------------------------------------------------------------------
# Spec-level operations
# ---------------------------------------------------------------------------

def standardize(dist: SourceDistribution) -> SourceDistribution:
    """Affine image of the law with mean 0 and variance 1."""
    return dist.standardize()


def characteristic_function(dist: SourceDistribution, t):
    """E[exp(itX)] evaluated at scalar or array t."""
    scalar = np.isscalar(t)
    out = dist.cf(np.atleast_1d(np.asarray(t, dtype=float)))
    return complex(out[0]) if scalar else out


def moments(dist: SourceDistribution) -> MomentSummary:
    return dist.moments()


def pdf_of(dist: SourceDistribution, spec: GridSpec) -> DensityGrid:
    """Sample the analytic density of a continuous law onto a grid.

    The grid must contain all but RENDER_TAIL_LIMIT of the mass.  Values are
    renormalized so the trapezoid mass is exactly one.
    """
    if not dist.has_density():
        raise NoDensityError(f"{dist.family} has no density")
    L = spec.half_width
    tail = 1.0 - float(dist.cdf(np.asarray(L))) + float(dist.cdf(np.asarray(-L)))
    if tail > RENDER_TAIL_LIMIT:
        raise GridTooNarrowError(
            f"{dist.family}: {tail:.2e} of the mass lies outside [-{L}, {L}]")
    values = np.asarray(dist.pdf(spec.x()), dtype=float)
    mass = float(np.trapezoid(values, dx=spec.dx))
    if mass <= 0:
        raise DegenerateDensityError("sampled density has zero mass")
    return make_density_grid(spec, values / mass)


# ---------------------------------------------------------------------------
# Tail radii and default grids
# ---------------------------------------------------------------------------

def chernoff_radius(log_mgf, eps: float = TAIL_EPS, s_cap: float = 100.0) -> float:
    """Smallest r with the two-sided Chernoff bound below eps.

    ``log_mgf`` is a scalar callable; +inf marks points outside the MGF
    domain.  A log-spaced s-grid is robust for every built-in family and
    avoids derivative bookkeeping.
    """
    target = math.log(eps / 2.0)
    s = np.geomspace(1e-4, max(s_cap, 1e-3), 400)

    def side_radius(sign: float) -> float:
        lm = np.array([log_mgf(sign * si) for si in s])
        ok = np.isfinite(lm)
        if not np.any(ok):
            return math.inf
        ss, ll = s[ok], lm[ok]

        def exponent(r):
            return float(np.min(ll - ss * r))

        lo, hi = 0.0, 1.0
        while exponent(hi) > target:
            hi *= 2.0
            if hi > 1e7:
                return math.inf
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if exponent(mid) > target:
                lo = mid
            else:
                hi = mid
        return hi

    return max(side_radius(1.0), side_radius(-1.0))


@lru_cache(maxsize=256)
def _dist_radius(dist: SourceDistribution, eps: float) -> float:
    r = chernoff_radius(dist.log_mgf, eps=eps, s_cap=dist.mgf_cap())
    lo, hi = dist.support()
    if math.isfinite(lo) and math.isfinite(hi):
        r = min(r, max(abs(lo), abs(hi)))
    return r


def tail_radius(dist: SourceDistribution, eps: float = TAIL_EPS) -> float:
    """Radius outside which at most eps of the mass can live."""
    return _dist_radius(dist, eps)


def aligned_half_width(anchor: float, min_half_width: float, points: int) -> float:
    """Smallest half-width >= min_half_width placing ``anchor`` on a cell edge.

    Cell edges sit halfway between neighbouring nodes; aligning a density
    jump with one keeps node sampling equal to cell averaging there, which
    is what makes trapezoid mass and entropy of discontinuous laws exact.
    """
    if anchor == 0.0:
        return min_half_width  # 0 is always a cell edge on an even grid
    n = points
    m = math.floor((anchor + min_half_width) * (n - 1) / (2.0 * min_half_width) - 0.5)
    best = None
    for mm in range(m - 3, m + 4):
        denom = 2 * mm + 2 - n
        if denom == 0:
            continue
        L = anchor * (n - 1) / denom
        if min_half_width - 1e-12 <= L <= min_half_width * 1.05:
            if best is None or L < best:
                best = L
    return best if best is not None else min_half_width


def default_grid(dist: SourceDistribution, points: int = DEFAULT_POINTS) -> GridSpec:
    """Grid sized from the law's tail radius, jump-aligned when needed."""
    sd = math.sqrt(dist.variance())
    lo, hi = dist.support()
    bounded = max(abs(lo), abs(hi)) if math.isfinite(lo) and math.isfinite(hi) else 0.0
    L = max(10.0, 8.0 * sd + bounded, tail_radius(dist) + 2.0)
    jumps = dist.density_jumps()
    if jumps:
        L = aligned_half_width(jumps[-1], L, points)
    return GridSpec(half_width=L, points=points)
