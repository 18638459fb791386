"""Non-Gaussianness laboratory.

Computes the divergence from the matched Gaussian for normalized i.i.d.
sums and scalar Gaussian-channel outputs, and verifies the full chain
behind the 1/n decrease-rate bound: monotonicity, zero-SNR Taylor
behaviour, divergence/MMSE identities, data processing, and the decay-rate
fit.
"""

__version__ = "0.1.0"

from .density import (
    BUILTIN_LAWS,
    DensityGrid,
    ExponentialCentered,
    Gaussian,
    GaussianMixture,
    GridSpec,
    Laplace,
    MomentSummary,
    Rademacher,
    SourceDistribution,
    Uniform,
    builtin_law,
    characteristic_function,
    default_grid,
    exponential,
    gaussian,
    gaussian_mixture,
    laplace,
    moments,
    pdf_of,
    rademacher,
    standardize,
    tail_radius,
    uniform,
)
from .convolve import (
    NormalizedSum,
    bandlimited_density,
    convolve_densities,
    normalized_sum_density,
    renormalize,
    sum_grid,
)
from .entropy import NonGaussianness, differential_entropy, non_gaussianness
from .channel import (
    ChannelPoint,
    IdentityResidual,
    MmseCurve,
    channel_divergence,
    channel_grid,
    channel_output_density,
    channel_point,
    cmmse_identity_check,
    conditional_mean,
    divergence_curve,
    immse_identity_check,
    mmse,
    mmse_gap,
)
from .taylor import (
    TaylorEstimate,
    estimates_agree,
    mmse_gap_slope,
    second_derivative_at_zero,
)
from .theorem1 import (
    CapacityGapReport,
    Theorem1Report,
    bound_check,
    capacity_gap_report,
    delta_gap,
    dpi_check,
    monotonicity_check,
    n_schedule,
    rate_fit,
    run_theorem1,
    scaling_identity_check,
    sum_divergence_sequence,
    theorem1_sweep,
)
from . import errors
