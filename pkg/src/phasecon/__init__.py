"""Constellation design for AWGN channels with residual phase jitter.

The package evaluates achievable rates of arbitrary two-dimensional signal
sets under a Tikhonov-distributed carrier phase error and optimizes both
point positions and binary labels by simulated annealing.
"""

from .analysis import (
    CapacityCurve,
    MismatchReport,
    campaign_cell_seed,
    design_campaign,
    mismatch_matrix,
    pnsd_sweep,
    pragmatic_gap,
    snr_sweep,
)
from .annealer import (
    AnnealTrace,
    SAConfig,
    displacement_schedule,
    metropolis_accept,
    perturb_point,
    sa_optimize,
    swap_labels,
    with_seed,
)
from .capacity import (
    AMI,
    MIN_MC_SAMPLES,
    OBJECTIVES,
    PAMI,
    PNSD_WARN_DEG,
    CapacityResult,
    QuadratureGrid,
    ami_monte_carlo,
    ami_quadrature,
    gauss_hermite_nodes,
    pami_monte_carlo,
    pami_quadrature,
    sample_tikhonov,
)
from .likelihood import (
    awgn_metric,
    decision_metric,
    exact_log_likelihood,
    log_bessel_i0,
    log_ratio,
    phase_estimate,
    tikhonov_log_pdf,
)
from .model import (
    ChannelParams,
    Constellation,
    ConstellationError,
    FormatError,
    LabelBits,
    constellation_from_json,
    constellation_to_json,
    gray_code,
    hamming_distance,
    is_gray,
    load_constellation,
    make_constellation,
    normalize_average_power,
    reference_constellation,
    save_constellation,
)

__version__ = "0.1.0"

__all__ = [
    "AMI",
    "MIN_MC_SAMPLES",
    "AnnealTrace",
    "CapacityCurve",
    "CapacityResult",
    "ChannelParams",
    "Constellation",
    "ConstellationError",
    "FormatError",
    "LabelBits",
    "MismatchReport",
    "OBJECTIVES",
    "PAMI",
    "PNSD_WARN_DEG",
    "QuadratureGrid",
    "SAConfig",
    "ami_monte_carlo",
    "ami_quadrature",
    "awgn_metric",
    "campaign_cell_seed",
    "constellation_from_json",
    "constellation_to_json",
    "decision_metric",
    "design_campaign",
    "displacement_schedule",
    "exact_log_likelihood",
    "gauss_hermite_nodes",
    "gray_code",
    "hamming_distance",
    "is_gray",
    "load_constellation",
    "log_bessel_i0",
    "log_ratio",
    "make_constellation",
    "metropolis_accept",
    "mismatch_matrix",
    "normalize_average_power",
    "pami_monte_carlo",
    "pami_quadrature",
    "perturb_point",
    "phase_estimate",
    "pnsd_sweep",
    "pragmatic_gap",
    "reference_constellation",
    "sa_optimize",
    "sample_tikhonov",
    "save_constellation",
    "snr_sweep",
    "swap_labels",
    "tikhonov_log_pdf",
    "with_seed",
]
