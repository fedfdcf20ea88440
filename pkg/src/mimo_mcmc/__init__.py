"""MCMC detectors for integer least-squares problems, with exact spectral,
mixing-time and local-minima analysis at small dimensions."""

from .detectors import (
    DetectionTrace,
    McmcConfig,
    bit_errors,
    conditional_flip_probability,
    lmmse_detect,
    ql_transform,
    run_detector,
    run_reversible,
    run_sequential,
    update_residual,
    zf_detect,
)
from .localmin import (
    LocalMinimaReport,
    check_flipset_condition,
    closed_form_2x2_gaussian,
    construct_exponential_instance,
    enumerate_local_minima,
    is_local_minimum,
    prob_local_min_2x2,
)
from .model import (
    ChannelKind,
    DimensionCapError,
    MimoInstance,
    exhaustive_ml,
    generate_instance,
    residual_energy,
    state_energies,
)
from .spectral import (
    SpectralReport,
    TransitionMatrix,
    bottleneck_singleton,
    build_transition_matrix,
    coupling_mixing_estimate,
    exact_min_conductance,
    spectral_gap,
    stationary_distribution,
    tv_mixing_time,
)
from .temperature import (
    TemperatureSolution,
    binomial_sum,
    gaussian_integral,
    ml_error_union_bound,
    saddle_point_estimate,
    solve_alpha_approx,
    solve_alpha_exact,
    stationary_prob_transmitted,
)

__version__ = "0.1.0"
