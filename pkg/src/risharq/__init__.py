"""Outage analysis and Monte-Carlo validation for HARQ-aided multi-RIS links."""

__version__ = "0.1.0"

from .analytic import (
    CurvePoint,
    DiversityFit,
    HarqParams,
    HarqScheme,
    OutageCurve,
    asymptotic_outage,
    asymptotic_outage_curve,
    coding_gain,
    exact_outage_curve,
    fit_diversity,
    gain_cdf,
    outage_cc,
    outage_probability,
    outage_threshold,
    outage_type1,
    snr_offset_factor,
    sum_gain_cdf,
)
from .channel import (
    ChannelStats,
    DirectLink,
    NetworkConfig,
    PathLossSpec,
    PhaseConfig,
    RisPanel,
    compute_stats,
    db_to_linear,
    generate_los_phases,
    linear_to_db,
    path_gain,
)
from .errors import (
    ConfigError,
    DegenerateNetworkError,
    DomainError,
    FitError,
    RisHarqError,
    TruncationError,
)
from .montecarlo import (
    OutageEstimate,
    SimulationPlan,
    accumulated_information,
    estimate_outage,
    sample_equivalent_channel,
    simulate_outage_curves,
)
from .optimizer import PhaseSolution, compare_strategies, optimal_phases
from .specfun import (
    TruncationPolicy,
    adaptive_series_order,
    log_poisson_weight,
    poisson_gamma_series,
    poisson_gamma_tail_bound,
    reg_lower_gamma,
)

__all__ = [
    "__version__",
    # channel
    "ChannelStats",
    "DirectLink",
    "NetworkConfig",
    "PathLossSpec",
    "PhaseConfig",
    "RisPanel",
    "compute_stats",
    "db_to_linear",
    "generate_los_phases",
    "linear_to_db",
    "path_gain",
    # analytic
    "CurvePoint",
    "DiversityFit",
    "HarqParams",
    "HarqScheme",
    "OutageCurve",
    "asymptotic_outage",
    "asymptotic_outage_curve",
    "coding_gain",
    "exact_outage_curve",
    "fit_diversity",
    "gain_cdf",
    "outage_cc",
    "outage_probability",
    "outage_threshold",
    "outage_type1",
    "snr_offset_factor",
    "sum_gain_cdf",
    # montecarlo
    "OutageEstimate",
    "SimulationPlan",
    "accumulated_information",
    "estimate_outage",
    "sample_equivalent_channel",
    "simulate_outage_curves",
    # optimizer
    "PhaseSolution",
    "compare_strategies",
    "optimal_phases",
    # specfun
    "TruncationPolicy",
    "adaptive_series_order",
    "log_poisson_weight",
    "poisson_gamma_series",
    "poisson_gamma_tail_bound",
    "reg_lower_gamma",
    # errors
    "RisHarqError",
    "ConfigError",
    "DegenerateNetworkError",
    "DomainError",
    "FitError",
    "TruncationError",
]
