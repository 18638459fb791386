"""The scalar Gaussian channel Y = W + sqrt(q) X and its divergence identities.

W is a zero-mean unit-variance Gaussian independent of X, and q >= 0 is the
signal-to-noise ratio.  This module computes the output density, the
divergence curve q -> D(Y), the conditional mean E[X | Y = y], the MMSE of
estimating X from Y, and two cross-path identity checks:

  * the SNR-derivative identity  mmse_gap(q) = 2 * dD/dq, checked with a
    centered finite difference of the divergence pipeline, and
  * its integral form  integral_0^Q mmse_gap = 2 * D(Q), which is the
    constant-signal scalar reduction of the causal-MMSE identity (causal
    estimation of a constant signal at time t is scalar estimation at SNR
    q*t, so the causal error is the SNR-average of the scalar one).

Both sides of each check come from independent code paths: quadrature for
the MMSE side, characteristic-function inversion plus entropy for the
divergence side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, signal

from .convolve import (
    NormalizedSum,
    cf_to_density_values,
    normalized_sum_density,
    renormalize,
)
from .density import (
    DEFAULT_POINTS,
    DensityGrid,
    GridSpec,
    SourceDistribution,
    chernoff_radius,
    make_density_grid,
    tail_radius,
)
from .entropy import NonGaussianness, non_gaussianness
from ._parallel import parallel_map
from .errors import GridTooNarrowError, TailUnderflowError

SnrValue = float

DEFAULT_SNR_GRID = np.concatenate([[0.0], np.geomspace(1e-3, 1e2, 40)])
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_UNDERFLOW = 1e-280


def _check_snr(q: float, *, positive: bool = False) -> float:
    q = float(q)
    if not math.isfinite(q) or q < 0.0 or (positive and q == 0.0):
        kind = "positive" if positive else "nonnegative"
        raise ValueError(f"SNR must be a finite {kind} real, got {q}")
    return q


@dataclass(frozen=True)
class ChannelPoint:
    q: float
    output_density: DensityGrid
    divergence: NonGaussianness


@dataclass(frozen=True, eq=False)
class MmseCurve:
    """MMSE, Gaussian-reference MMSE and divergence over an ascending SNR grid."""

    q: np.ndarray
    mmse_x: np.ndarray
    mmse_gaussian: np.ndarray
    divergence: np.ndarray
    law: str = ""


@dataclass(frozen=True)
class IdentityResidual:
    """One divergence/MMSE identity check: |lhs - rhs| from independent paths."""

    kind: str
    q: float
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    step: float | None = None

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


# ---------------------------------------------------------------------------
# Input adapters: SourceDistribution | NormalizedSum | DensityGrid
# ---------------------------------------------------------------------------

def _law_variance(x_law) -> float:
    if isinstance(x_law, DensityGrid):
        return x_law.variance
    return x_law.variance()


def _law_label(x_law) -> str:
    if isinstance(x_law, DensityGrid):
        return "grid"
    return x_law.family


def _grid_cf(grid: DensityGrid, s0: float, ds: float, m: int) -> np.ndarray:
    """Empirical CF of a grid law at s_k = s0 + k*ds via chirp-z transform."""
    spec = grid.spec
    x0 = -spec.half_width
    if ds == 0.0:
        return np.full(m, np.trapezoid(grid.values, dx=spec.dx), dtype=complex)
    w = np.exp(1j * ds * spec.dx)
    a = np.exp(-1j * s0 * spec.dx)
    out = signal.czt(grid.values, m=m, w=w, a=a)
    s = s0 + ds * np.arange(m)
    return spec.dx * np.exp(1j * s * x0) * out


def _channel_cf(x_law, q: float, t: np.ndarray) -> np.ndarray:
    """CF of Y = W + sqrt(q) X on the band t (uniformly spaced)."""
    root = math.sqrt(q)
    gauss = np.exp(-0.5 * t * t)
    if isinstance(x_law, DensityGrid):
        if len(t) < 2:
            raise ValueError("band must have at least two nodes")
        s = root * t
        return gauss * _grid_cf(x_law, float(s[0]), float(s[1] - s[0]), len(t))
    return gauss * x_law.cf(root * t)


@lru_cache(maxsize=1024)
def _carrier_radius(x_law, q: float) -> float:
    def log_mgf_y(s: float) -> float:
        return 0.5 * s * s + x_law.log_mgf(math.sqrt(q) * s)

    cap = min(100.0, x_law.mgf_cap() / math.sqrt(q)) if q > 0 else 100.0
    return chernoff_radius(log_mgf_y, s_cap=cap)


def _output_radius(x_law, q: float) -> float:
    if isinstance(x_law, DensityGrid):
        from .convolve import _mass_radius
        return 8.5 + math.sqrt(q) * (_mass_radius(x_law) + 1.0)
    return _carrier_radius(x_law, q)


def channel_grid(x_law, q: float, points: int = DEFAULT_POINTS) -> GridSpec:
    """Output grid for Y = W + sqrt(q) X; the Gaussian factor makes the
    spectrum compact, so the default point count always suffices."""
    return GridSpec(half_width=max(10.0, _output_radius(x_law, q) + 2.0),
                    points=points)


# ---------------------------------------------------------------------------
# Output density and divergence
# ---------------------------------------------------------------------------

def channel_output_density(x_law, q: SnrValue,
                           spec: GridSpec | None = None) -> DensityGrid:
    """Density of Y = W + sqrt(q) X.

    Discrete inputs produce an analytic Gaussian mixture; continuous laws
    (and grid laws) go through characteristic-function inversion, where the
    Gaussian factor exp(-t^2/2) guarantees a compact spectrum.
    """
    q = _check_snr(q)
    if spec is None:
        spec = channel_grid(x_law, q)
    atoms = () if isinstance(x_law, DensityGrid) else getattr(x_law, "atoms", lambda: ())()
    y = spec.x()
    if q == 0.0:
        values = np.exp(-0.5 * y * y) / _SQRT_2PI
    elif atoms:
        root = math.sqrt(q)
        values = np.zeros_like(y)
        for point, weight in atoms:
            z = y - root * point
            values += weight * np.exp(-0.5 * z * z) / _SQRT_2PI
    else:
        phi = _channel_cf(x_law, q, spec.frequencies())
        values = cf_to_density_values(phi, spec)
    edge = max(float(np.max(np.abs(values[: spec.points // 256]))),
               float(np.max(np.abs(values[-spec.points // 256:]))))
    if edge > 1e-8:
        raise GridTooNarrowError(
            f"output density is {edge:.2e} at the grid edge; the grid is too "
            f"narrow for variance {1.0 + q * _law_variance(x_law):.3g}")
    return renormalize(values, spec)


def channel_point(x_law, q: SnrValue, spec: GridSpec | None = None) -> ChannelPoint:
    density = channel_output_density(x_law, q, spec)
    return ChannelPoint(q=float(q), output_density=density,
                        divergence=non_gaussianness(density))


def channel_divergence(x_law, q: SnrValue, spec: GridSpec | None = None) -> float:
    """D(W + sqrt(q) X) in nats."""
    return channel_point(x_law, q, spec).divergence.value


def divergence_curve(x_law, q_grid=None) -> MmseCurve:
    """Divergence and MMSE columns over an ascending SNR grid."""
    if q_grid is None:
        q_grid = DEFAULT_SNR_GRID
    q_grid = np.asarray(q_grid, dtype=float)
    if np.any(np.diff(q_grid) <= 0) or np.any(q_grid < 0):
        raise ValueError("q grid must be ascending and nonnegative")
    var = _law_variance(x_law)

    def one(q: float) -> tuple[float, float]:
        return channel_divergence(x_law, q), mmse(x_law, q)

    results = parallel_map(one, [float(q) for q in q_grid])
    div = np.array([r[0] for r in results])
    mx = np.array([r[1] for r in results])
    mg = var / (1.0 + q_grid * var)
    return MmseCurve(q=q_grid, mmse_x=mx, mmse_gaussian=mg, divergence=div,
                     law=_law_label(x_law))


# ---------------------------------------------------------------------------
# Conditional mean and MMSE
# ---------------------------------------------------------------------------

_GL_NODES = 32


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _law_quadrature(x_law, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating g -> E[g(X)] under the input law.

    Atoms are summed exactly; grids use their own trapezoid weights;
    analytic laws get composite Gauss-Legendre panels cut at density jumps
    and kinks, with the panel width shrunk once sqrt(q) compresses the
    Gaussian kernel scale below the default.
    """
    if isinstance(x_law, DensityGrid):
        w = x_law.values * x_law.spec.dx
        return x_law.x(), w / np.sum(w)
    atoms = x_law.atoms()
    if atoms:
        pts = np.array([a[0] for a in atoms])
        wts = np.array([a[1] for a in atoms])
        return pts, wts
    if isinstance(x_law, NormalizedSum):
        grid = normalized_sum_density(x_law.base, x_law.n)
        return _law_quadrature(grid, q)
    r = tail_radius(x_law)
    lo, hi = x_law.support()
    lo, hi = max(lo, -r), min(hi, r)
    cuts = sorted({lo, hi, *(c for c in (*x_law.density_jumps(),
                                         *x_law.density_kinks()) if lo < c < hi)})
    wmax = min(0.5, 4.0 / math.sqrt(max(q, 1.0)))
    gx, gw = _leggauss(_GL_NODES)
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        panels = max(1, int(math.ceil((b - a) / wmax)))
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
        weights = (half[:, None] * gw[None, :]).ravel() * x_law.pdf(nodes)
        xs.append(nodes)
        ws.append(weights)
    nodes = np.concatenate(xs)
    weights = np.concatenate(ws)
    return nodes, weights / np.sum(weights)


def _posterior_moments(y: np.ndarray, nodes: np.ndarray, weights: np.ndarray,
                       q: float) -> tuple[np.ndarray, np.ndarray]:
    """Output density f_Y(y) and unnormalized posterior mean integral."""
    root = math.sqrt(q)
    den = np.empty_like(y)
    num = np.empty_like(y)
    wx = weights * nodes
    with np.errstate(under="ignore"):
        for start in range(0, len(y), 4096):
            block = y[start:start + 4096, None]
            kernel = np.exp(-0.5 * (block - root * nodes[None, :]) ** 2) / _SQRT_2PI
            den[start:start + 4096] = kernel @ weights
            num[start:start + 4096] = kernel @ wx
    return den, num


def conditional_mean(y: float, x_law, q: SnrValue) -> float:
    """E[X | Y = y] for Y = W + sqrt(q) X, q > 0."""
    q = _check_snr(q, positive=True)
    nodes, weights = _law_quadrature(x_law, q)
    den, num = _posterior_moments(np.array([float(y)]), nodes, weights, q)
    if den[0] < _UNDERFLOW:
        raise TailUnderflowError(
            f"posterior weight underflows at y={y}; the point lies far "
            "outside the plausible output range")
    return float(num[0] / den[0])


def _mmse_y_grid(x_law, q: float) -> np.ndarray:
    half = _output_radius(x_law, q) + 2.0
    dy = min(0.2, 1.0 / (8.0 * math.sqrt(max(q, 1.0))))
    n = int(math.ceil(2.0 * half / dy)) + 1
    return np.linspace(-half, half, n)


def mmse(x_law, q: SnrValue) -> float:
    """E[(X - E[X|Y])^2] by quadrature over the output density; var(X) at q=0."""
    q = _check_snr(q)
    if q == 0.0:
        return _law_variance(x_law)
    nodes, weights = _law_quadrature(x_law, q)
    second = float(np.sum(weights * nodes * nodes))
    y = _mmse_y_grid(x_law, q)
    den, num = _posterior_moments(y, nodes, weights, q)
    ok = den > _UNDERFLOW
    integrand = np.where(ok, num * num / np.where(ok, den, 1.0), 0.0)
    return second - float(np.trapezoid(integrand, y))


def mmse_gap(x_law, q: SnrValue) -> float:
    """mmse of the matched Gaussian minus mmse of the law, at SNR q."""
    q = _check_snr(q)
    var = _law_variance(x_law)
    return var / (1.0 + q * var) - mmse(x_law, q)


# ---------------------------------------------------------------------------
# Identity checks (independent code paths on each side)
# ---------------------------------------------------------------------------

def immse_identity_check(x_law, q: SnrValue, step: float | None = None,
                         tolerance: float = 1e-4) -> IdentityResidual:
    """Check mmse_gap(q)/2 against the centered difference of D at q."""
    q = _check_snr(q, positive=True)
    h = max(1e-3, q / 100.0) if step is None else float(step)
    if not 0.0 < h < q:
        raise ValueError(f"need q > step > 0, got q={q}, step={h}")
    lhs = 0.5 * mmse_gap(x_law, q)
    spec = channel_grid(x_law, q + h)
    rhs = (channel_divergence(x_law, q + h, spec)
           - channel_divergence(x_law, q - h, spec)) / (2.0 * h)
    return IdentityResidual(kind="immse", q=q, lhs=lhs, rhs=rhs,
                            residual=abs(lhs - rhs), tolerance=tolerance,
                            step=h)


def cmmse_identity_check(x_law, Q: SnrValue,
                         tolerance: float = 5e-4) -> IdentityResidual:
    """Check integral_0^Q mmse_gap(s) ds against 2*D(Q) (adaptive quadrature)."""
    Q = _check_snr(Q, positive=True)
    lhs, _ = integrate.quad(lambda s: mmse_gap(x_law, s), 0.0, Q,
                            epsabs=1e-7, epsrel=1e-7, limit=200)
    rhs = 2.0 * channel_divergence(x_law, Q)
    return IdentityResidual(kind="cmmse", q=Q, lhs=float(lhs), rhs=rhs,
                            residual=abs(float(lhs) - rhs), tolerance=tolerance)
