"""Densities of normalized i.i.d. sums via characteristic-function powering.

The density of S_n = n^{-1/2} (X_1 + ... + X_n) is recovered as the inverse
Fourier transform of t -> phi(t/sqrt(n))**n sampled on the grid's conjugate
frequency band.  One transform per n, so no error accumulates across n, and
the sqrt(n) rescaling happens in the frequency argument where it is exact.

Transform conventions, with x_j = -L + j*dx and t_k = (k - N/2)*dt where
dt*dx = 2*pi/N:

    f(x_j) = (dt/2pi) * sum_k phi(t_k) exp(-i t_k x_j)
    phi(t_k) = dx * sum_j f(x_j) exp(+i t_k x_j)

Both reduce to a single FFT after splitting the boundary phase
exp(i pi (k - N/2)) into an exact sign and a small residual angle, which
keeps the phase arithmetic accurate for wide grids.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .density import (
    DEFAULT_POINTS,
    DensityGrid,
    GridSpec,
    SourceDistribution,
    chernoff_radius,
    default_grid,
    make_density_grid,
    pdf_of,
)
from .errors import (
    DegenerateDensityError,
    GridMismatchError,
    GridTooNarrowError,
    NoDensityError,
    NumericalDegradationWarning,
)

CLIP_WARN_THRESHOLD = DensityGrid.DEGRADED_THRESHOLD
# Spectrum magnitude near Nyquist: auto-sizing aims below the first value,
# anything above the second is rejected as undersampled.
CF_TAIL_TARGET = 1e-8
CF_TAIL_LIMIT = 1e-4
EDGE_DENSITY_LIMIT = 1e-8
MAX_AUTO_POINTS = 2**18
MAX_SUM_SIZE = 4096


def _alternating(n: int) -> np.ndarray:
    s = np.ones(n)
    s[1::2] = -1.0
    return s


def cf_to_density_values(phi: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Inverse continuous Fourier transform of band samples, real part."""
    n = spec.points
    dt = 2.0 * np.pi / (n * spec.dx)
    k = np.arange(n)
    pre = phi * _alternating(n) * np.exp(-1j * np.pi * (k - n // 2) / n)
    f = np.fft.fft(pre)
    return np.real(f * _alternating(n)) * (dt / (2.0 * np.pi))


def grid_to_cf_values(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Forward transform of grid samples onto the conjugate band."""
    n = spec.points
    k = np.arange(n)
    acc = n * np.fft.ifft(values * _alternating(n))
    return spec.dx * _alternating(n) * np.exp(1j * np.pi * (k - n // 2) / n) * acc


def renormalize(values, spec: GridSpec | None = None) -> DensityGrid:
    """Clip negative ringing to zero and rescale to unit trapezoid mass.

    Accepts a DensityGrid or a raw value array plus its GridSpec.  The
    clipped mass is recorded on the result; past CLIP_WARN_THRESHOLD a
    NumericalDegradationWarning is emitted as well.
    """
    if isinstance(values, DensityGrid):
        grid, spec = values, values.spec
        values = grid.values
    elif spec is None:
        raise ValueError("raw value arrays need an explicit GridSpec")
    values = np.asarray(values, dtype=float)
    clipped = float(np.trapezoid(np.maximum(-values, 0.0), dx=spec.dx))
    positive = np.maximum(values, 0.0)
    mass = float(np.trapezoid(positive, dx=spec.dx))
    if mass <= 0.0:
        raise DegenerateDensityError("cannot renormalize a zero-mass grid")
    if clipped > CLIP_WARN_THRESHOLD:
        warnings.warn(
            f"clipped {clipped:.3e} of negative mass (threshold "
            f"{CLIP_WARN_THRESHOLD:.0e})", NumericalDegradationWarning,
            stacklevel=2)
    return make_density_grid(spec, positive / mass, clipped_mass=clipped)


@dataclass(frozen=True)
class NormalizedSum:
    """CF carrier for S_n = n^{-1/2} sum of n i.i.d. copies of ``base``.

    Exposes just enough analytic structure (cf, log-MGF, moments) for the
    spectral and channel pipelines; there is no closed-form pdf.
    """

    base: SourceDistribution
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def family(self) -> str:
        return f"{self.base.family}_sum{self.n}"

    def mean(self) -> float:
        return math.sqrt(self.n) * self.base.mean()

    def variance(self) -> float:
        return self.base.variance()

    def cf(self, t):
        t = np.asarray(t, dtype=float)
        return self.base.cf(t / math.sqrt(self.n)) ** self.n

    def log_mgf(self, s: float) -> float:
        return self.n * self.base.log_mgf(s / math.sqrt(self.n))

    def mgf_cap(self) -> float:
        return math.sqrt(self.n) * self.base.mgf_cap()

    def has_density(self) -> bool:
        return self.base.has_density()

    def support(self) -> tuple[float, float]:
        lo, hi = self.base.support()
        r = math.sqrt(self.n)
        return (r * lo if math.isfinite(lo) else lo,
                r * hi if math.isfinite(hi) else hi)


@lru_cache(maxsize=512)
def _sum_radius(dist: SourceDistribution, n: int) -> float:
    law = NormalizedSum(dist, n)
    r = chernoff_radius(law.log_mgf, s_cap=law.mgf_cap())
    lo, hi = law.support()
    if math.isfinite(lo) and math.isfinite(hi):
        r = min(r, max(abs(lo), abs(hi)))
    return r


def _spectral_tail(dist: SourceDistribution, n: int, spec: GridSpec) -> float:
    t = spec.frequencies()
    edge = t[-spec.points // 64:]
    return float(np.max(np.abs(dist.cf(edge / math.sqrt(n)) ** n)))


def sum_grid(dist: SourceDistribution, n: int,
             points: int | None = None) -> GridSpec:
    """Grid for S_n: tail-radius half-width, point count bumped until the
    characteristic function has decayed below CF_TAIL_TARGET at Nyquist."""
    L = max(10.0, _sum_radius(dist, n) + 2.0)
    if points is not None:
        return GridSpec(half_width=L, points=points)
    npts = DEFAULT_POINTS
    while npts < MAX_AUTO_POINTS:
        if _spectral_tail(dist, n, GridSpec(L, npts)) <= CF_TAIL_TARGET:
            break
        npts *= 2
    return GridSpec(half_width=L, points=npts)


def normalized_sum_density(dist: SourceDistribution, n: int,
                           spec: GridSpec | None = None) -> DensityGrid:
    """Density of S_n = n^{-1/2} sum of i.i.d. standardized copies of dist."""
    if not dist.has_density():
        raise NoDensityError(f"{dist.family} has no density; sums stay discrete")
    if not dist.is_standardized:
        raise DegenerateDensityError(
            "normalized_sum_density expects a standardized law")
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= MAX_SUM_SIZE):
        raise ValueError(f"n must be an integer in [1, {MAX_SUM_SIZE}], got {n}")
    if n == 1:
        return pdf_of(dist, spec if spec is not None else default_grid(dist))
    if spec is None:
        spec = sum_grid(dist, n)
    t = spec.frequencies()
    phi = dist.cf(t / math.sqrt(n)) ** n
    tail = float(np.max(np.abs(phi[-spec.points // 64:])))
    if tail > CF_TAIL_LIMIT:
        raise GridTooNarrowError(
            f"spectrum still {tail:.2e} at the Nyquist edge; "
            "increase the point count")
    raw = cf_to_density_values(phi, spec)
    edge = max(float(np.max(np.abs(raw[: spec.points // 256]))),
               float(np.max(np.abs(raw[-spec.points // 256:]))))
    if edge > EDGE_DENSITY_LIMIT:
        raise GridTooNarrowError(
            f"density is {edge:.2e} at the grid boundary; mass is leaking "
            "outside the half-width")
    return renormalize(raw, spec)


def _mass_radius(grid: DensityGrid, eps: float = 1e-10) -> float:
    """Distance beyond which each tail of the grid holds less than eps."""
    c = np.cumsum(grid.values) * grid.spec.dx
    total = c[-1]
    x = grid.x()
    left = x[np.searchsorted(c, eps)]
    right = x[min(len(c) - 1, np.searchsorted(c, total - eps))]
    return max(abs(left), abs(right))


def convolve_densities(f: DensityGrid, g: DensityGrid) -> DensityGrid:
    """Density of the independent sum of two grid laws on a shared grid."""
    if f.spec != g.spec:
        raise GridMismatchError("operands live on different grids")
    spec = f.spec
    for name, grid in (("f", f), ("g", g)):
        if float(np.max(grid.values)) * spec.dx > 0.5:
            raise NoDensityError(
                f"{name} concentrates most of its mass in one cell; "
                "it is a point mass, not a density")
    if _mass_radius(f) + _mass_radius(g) > spec.half_width:
        raise GridTooNarrowError(
            "combined support of the operands exceeds the grid half-width; "
            "the circular convolution would wrap")
    phi = grid_to_cf_values(f.values, spec) * grid_to_cf_values(g.values, spec)
    return renormalize(cf_to_density_values(phi, spec), spec)


def bandlimited_density(dist_or_cf, spec: GridSpec,
                        scale: float = 1.0) -> DensityGrid:
    """Render a law through the spectral pipeline (CF sampling + inversion).

    ``scale`` evaluates the CF at scale*t, i.e. renders the law of scale*X.
    Useful for producing grid operands whose spectra are exactly the band
    samples, so convolution identities hold to rounding error.
    """
    cf = dist_or_cf.cf if hasattr(dist_or_cf, "cf") else dist_or_cf
    phi = cf(spec.frequencies() * scale)
    return renormalize(cf_to_density_values(np.asarray(phi), spec), spec)
