"""Verification chain for the 1/n decrease-rate bound on sum non-Gaussianness.

For a standardized law X and a fixed SNR budget Q the chain links, per n:

    n * D(W + sqrt(Q/n) X)                (single-letter scaled divergence)
      >= D(W + sqrt(Q/n) S_n)             (data processing on the sum)
       = D(S_n) - delta_n                 (definition of the gap delta_n)

with 0 <= delta_n <= D(S_n) -> 0, while the Taylor behaviour of the channel
divergence at zero SNR turns the scaled left side into (1/2) D''(0) Q^2 / n
plus a remainder.  Every link is computed here from the pipelines and
reported with explicit margins; the bound comparison degrades to DEGENERATE
when the measured D''(0) is numerically indistinguishable from zero, which
is the generic outcome for light-tailed laws.  delta_n * n / Q^2 is reported
alongside so a reader can judge the unquantified remainder directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .channel import channel_divergence, channel_grid
from .convolve import NormalizedSum, normalized_sum_density, sum_grid
from .density import DEFAULT_POINTS, GridSpec, SourceDistribution
from .entropy import non_gaussianness
from .errors import RateUndefinedError
from .taylor import (
    TaylorEstimate,
    estimates_agree,
    mmse_gap_slope,
    second_derivative_at_zero,
)

MONOTONICITY_SLACK = 1e-7
DPI_SLACK = 1e-7
DELTA_SLACK = 1e-7
NOISE_FLOOR = 1e-10
DEFAULT_Q_SWEEP = (1.0, 4.0, 16.0, 64.0)
MAX_N = 4096

PASS = "PASS"
FAIL = "FAIL"
DEGENERATE = "DEGENERATE"


def n_schedule(n_max: int) -> list[int]:
    """1..8 exactly, then half-octave steps: resolves small-n monotonicity
    and leaves at least five points per factor-8 tail window."""
    if not 1 <= n_max <= MAX_N:
        raise ValueError(f"n_max must be in [1, {MAX_N}]")
    ns = list(range(1, min(8, n_max) + 1))
    k = 1
    while True:
        n = int(round(8 * 2 ** (k / 2)))
        if n > n_max:
            break
        if n > ns[-1]:
            ns.append(n)
        k += 1
    return ns


def sum_divergence_sequence(x_law: SourceDistribution, n_max: int,
                            points: int | None = None) -> dict[int, float]:
    """D(S_n) over the schedule, via CF powering plus the entropy pipeline."""
    schedule = n_schedule(n_max)

    def one(n: int) -> float:
        grid = normalized_sum_density(x_law, n,
                                      None if points is None
                                      else sum_grid(x_law, n, points))
        return non_gaussianness(grid).value

    values = parallel_map(one, schedule)
    return dict(zip(schedule, values))


def monotonicity_check(sequence: dict[int, float],
                       slack: float = MONOTONICITY_SLACK) -> str:
    """PASS iff D is nonincreasing along consecutive schedule entries."""
    ns = sorted(sequence)
    ok = all(sequence[b] <= sequence[a] + slack for a, b in zip(ns, ns[1:]))
    return PASS if ok else FAIL


@dataclass(frozen=True)
class ScalingResidual:
    """Grid-resolution self-consistency of n * D(W + sqrt(Q/n) X)."""

    q: float
    n: int
    coarse: float
    fine: float
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


def scaling_identity_check(x_law, Q: float, n: int,
                           points: int = DEFAULT_POINTS,
                           tolerance: float = 1e-5) -> ScalingResidual:
    """Evaluate the factorized divergence at two resolutions.

    The sum-rule D(eta) = n * D(W + sqrt(Q/n) X) is exact analytically; what
    needs checking is that its numerical value is grid-converged, so the
    same quantity is computed at N and 2N points."""
    if n < 1 or Q <= 0:
        raise ValueError("need n >= 1 and Q > 0")
    q = Q / n
    coarse = n * channel_divergence(x_law, q, channel_grid(x_law, q, points))
    fine = n * channel_divergence(x_law, q, channel_grid(x_law, q, 2 * points))
    return ScalingResidual(q=q, n=n, coarse=coarse, fine=fine,
                           residual=abs(fine - coarse), tolerance=tolerance)


@dataclass(frozen=True)
class DpiMargin:
    """Both sides of the data-processing step and their margin."""

    q: float
    n: int
    scaled_single_letter: float
    sum_channel: float

    @property
    def margin(self) -> float:
        return self.scaled_single_letter - self.sum_channel

    @property
    def passed(self) -> bool:
        return self.margin >= -DPI_SLACK


def dpi_check(x_law: SourceDistribution, Q: float, n: int) -> DpiMargin:
    """n * D(W + sqrt(Q/n) X) >= D(W + sqrt(Q/n) S_n), within slack."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q = Q / n
    lhs = n * channel_divergence(x_law, q)
    rhs = channel_divergence(NormalizedSum(x_law, n), q)
    return DpiMargin(q=q, n=n, scaled_single_letter=lhs, sum_channel=rhs)


def delta_gap(x_law: SourceDistribution, Q: float, n: int,
              d_sum: float | None = None) -> float:
    """delta_n = D(S_n) - D(W + sqrt(Q/n) S_n), the saturation gap."""
    if d_sum is None:
        d_sum = non_gaussianness(normalized_sum_density(x_law, n)).value
    return d_sum - channel_divergence(NormalizedSum(x_law, n), Q / n)


@dataclass(frozen=True)
class BoundCheck:
    verdicts: dict[int, str]
    empirical_n: int | None
    degenerate: bool


def bound_check(d_sum: dict[int, float], d2: TaylorEstimate,
                Q: float) -> BoundCheck:
    """Compare D(S_n) against the explicit term (1/2) d2 Q^2 / n per n.

    A noise-floor or nonpositive d2 estimate makes the explicit term
    vacuous; every verdict is then DEGENERATE rather than a false PASS or
    FAIL, and only the rate fit remains meaningful."""
    ns = sorted(d_sum)
    if d2.noise_floor or d2.value <= 0.0:
        return BoundCheck(verdicts={n: DEGENERATE for n in ns},
                          empirical_n=None, degenerate=True)
    verdicts = {n: (PASS if d_sum[n] <= 0.5 * d2.value * Q * Q / n else FAIL)
                for n in ns}
    empirical = None
    for i, n in enumerate(ns):
        if all(verdicts[m] == PASS for m in ns[i:]):
            empirical = n
            break
    return BoundCheck(verdicts=verdicts, empirical_n=empirical,
                      degenerate=False)


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    n_lo: int
    n_hi: int
    count: int


def rate_fit(sequence: dict[int, float], tail_fraction: float = 0.4,
             noise_floor: float = NOISE_FLOOR) -> RateFit:
    """Least-squares slope of ln D versus ln n over the schedule tail."""
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    ns = np.array(sorted(sequence))
    ds = np.array([sequence[n] for n in ns])
    live = ds > noise_floor
    ns, ds = ns[live], ds[live]
    k = max(int(math.ceil(tail_fraction * len(ns))), 5)
    if len(ns) < k or len(ns) < 5:
        raise RateUndefinedError(
            "fewer than five points above the noise floor in the tail")
    ns, ds = ns[-k:], ds[-k:]
    lx, ly = np.log(ns), np.log(ds)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    resid = ly - (ly.mean() + slope * (lx - lx.mean()))
    stderr = float(np.sqrt(np.sum(resid**2) / max(len(ns) - 2, 1) / sxx))
    return RateFit(slope=slope, stderr=stderr, n_lo=int(ns[0]),
                   n_hi=int(ns[-1]), count=len(ns))


@dataclass(frozen=True)
class CapacityGapReport:
    """Capacity excess of aggregated-interference channels over Gaussian.

    A channel hit by the normalized sum of n i.i.d. interferers has capacity
    exceeding the matched Gaussian channel by exactly the interference
    non-Gaussianness, so the excess column is D(S_n) in nats and its decay
    rate is the interference-aggregation convergence rate."""

    law: str
    n_values: tuple[int, ...]
    excess_nats: tuple[float, ...]
    rate_slope: float | None
    rate_stderr: float | None


def capacity_gap_report(x_law: SourceDistribution, n_max: int,
                        tail_fraction: float = 0.4) -> CapacityGapReport:
    seq = sum_divergence_sequence(x_law, n_max)
    try:
        fit = rate_fit(seq, tail_fraction)
        slope, stderr = fit.slope, fit.stderr
    except RateUndefinedError:
        slope = stderr = None
    ns = tuple(sorted(seq))
    return CapacityGapReport(law=x_law.family, n_values=ns,
                             excess_nats=tuple(seq[n] for n in ns),
                             rate_slope=slope, rate_stderr=stderr)


@dataclass(frozen=True)
class Theorem1Report:
    """Everything the decrease-rate experiment produces for one (law, Q)."""

    law: str
    Q: float
    n_values: tuple[int, ...]
    d_sum: tuple[float, ...]
    d_channel: tuple[float, ...]
    scaled_lhs: tuple[float, ...]
    delta: tuple[float, ...]
    delta_scaled: tuple[float, ...]   # delta * n / Q^2, remainder diagnostic
    d2_ratio: TaylorEstimate
    d2_slope: TaylorEstimate
    bound: tuple[float, ...]
    bound_verdicts: tuple[str, ...]
    empirical_n: int | None
    rate_slope: float | None
    rate_stderr: float | None
    verdicts: dict[str, str] = field(default_factory=dict)

    def dpi_margins(self) -> tuple[float, ...]:
        return tuple(l - c for l, c in zip(self.scaled_lhs, self.d_channel))

    def to_dict(self) -> dict:
        def taylor_dict(t: TaylorEstimate) -> dict:
            return {"value": t.value, "uncertainty": t.uncertainty,
                    "method": t.method, "noise_floor": t.noise_floor,
                    "ladder": [list(pair) for pair in t.ladder]}

        return {
            "law": self.law,
            "Q": self.Q,
            "n": list(self.n_values),
            "d_sum": list(self.d_sum),
            "d_channel": list(self.d_channel),
            "scaled_lhs": list(self.scaled_lhs),
            "delta": list(self.delta),
            "delta_scaled": list(self.delta_scaled),
            "dpi_margins": list(self.dpi_margins()),
            "d2_ratio": taylor_dict(self.d2_ratio),
            "d2_slope": taylor_dict(self.d2_slope),
            "bound": list(self.bound),
            "bound_verdicts": list(self.bound_verdicts),
            "empirical_n": self.empirical_n,
            "rate_slope": self.rate_slope,
            "rate_stderr": self.rate_stderr,
            "verdicts": dict(self.verdicts),
        }


def _chain_verdicts(report_inputs: dict) -> dict[str, str]:
    d_sum = report_inputs["d_sum"]
    d_channel = report_inputs["d_channel"]
    scaled = report_inputs["scaled_lhs"]
    delta = report_inputs["delta"]
    dpi_ok = all(l >= c - DPI_SLACK for l, c in zip(scaled, d_channel))
    bracket_ok = all(-DELTA_SLACK <= dl <= ds + DELTA_SLACK
                     for dl, ds in zip(delta, d_sum))
    chain_ok = dpi_ok and all(
        l >= ds - dl - 2.0 * DPI_SLACK
        for l, ds, dl in zip(scaled, d_sum, delta))
    return {
        "dpi": PASS if dpi_ok else FAIL,
        "delta_bracket": PASS if bracket_ok else FAIL,
        "chain": PASS if chain_ok else FAIL,
    }


def run_theorem1(x_law: SourceDistribution, Q: float, n_max: int = 64,
                 tail_fraction: float = 0.4,
                 d_sum: dict[int, float] | None = None,
                 d2_pair: tuple[TaylorEstimate, TaylorEstimate] | None = None,
                 ) -> Theorem1Report:
    """Assemble the full verification chain for one law and one Q."""
    if d_sum is None:
        d_sum = sum_divergence_sequence(x_law, n_max)
    ns = sorted(d_sum)
    if d2_pair is None:
        d2_pair = (second_derivative_at_zero(x_law), mmse_gap_slope(x_law))
    d2_ratio, d2_slope = d2_pair

    def channel_side(n: int) -> tuple[float, float]:
        q = Q / n
        return (n * channel_divergence(x_law, q),
                channel_divergence(NormalizedSum(x_law, n), q))

    sides = parallel_map(channel_side, ns)
    scaled = tuple(s[0] for s in sides)
    d_chan = tuple(s[1] for s in sides)
    d_sums = tuple(d_sum[n] for n in ns)
    delta = tuple(ds - dc for ds, dc in zip(d_sums, d_chan))
    delta_scaled = tuple(dl * n / (Q * Q) for dl, n in zip(delta, ns))

    bc = bound_check(d_sum, d2_ratio, Q)
    bound = tuple(0.5 * d2_ratio.value * Q * Q / n for n in ns)

    try:
        fit = rate_fit(d_sum, tail_fraction)
        slope, stderr = fit.slope, fit.stderr
    except RateUndefinedError:
        slope = stderr = None

    verdicts = _chain_verdicts({
        "d_sum": d_sums, "d_channel": d_chan,
        "scaled_lhs": scaled, "delta": delta})
    verdicts["monotonicity"] = monotonicity_check(d_sum)
    verdicts["taylor_agreement"] = (PASS if estimates_agree(d2_ratio, d2_slope)
                                    else FAIL)
    verdicts["bound"] = (DEGENERATE if bc.degenerate else
                         (PASS if bc.empirical_n is not None else FAIL))
    verdicts["rate"] = DEGENERATE if slope is None else PASS

    return Theorem1Report(
        law=x_law.family, Q=Q, n_values=tuple(ns), d_sum=d_sums,
        d_channel=d_chan, scaled_lhs=scaled, delta=delta,
        delta_scaled=delta_scaled, d2_ratio=d2_ratio, d2_slope=d2_slope,
        bound=bound, bound_verdicts=tuple(bc.verdicts[n] for n in ns),
        empirical_n=bc.empirical_n, rate_slope=slope, rate_stderr=stderr,
        verdicts=verdicts)


def theorem1_sweep(x_law: SourceDistribution,
                   q_values=DEFAULT_Q_SWEEP, n_max: int = 64,
                   tail_fraction: float = 0.4) -> list[Theorem1Report]:
    """Run the chain over a Q sweep, sharing the n-sequence and d2 work.

    The sweep makes the bound's Q trade-off inspectable: larger Q inflates
    the explicit constant (1/2) d2 Q^2 but shrinks delta_n, moving the
    empirical onset N."""
    d_sum = sum_divergence_sequence(x_law, n_max)
    d2_pair = (second_derivative_at_zero(x_law), mmse_gap_slope(x_law))
    return [run_theorem1(x_law, float(Q), n_max, tail_fraction,
                         d_sum=d_sum, d2_pair=d2_pair)
            for Q in q_values]
