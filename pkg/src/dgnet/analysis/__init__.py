from dgnet.analysis.diagnostics import (
    DensityHistogram,
    WaveSpeedPlane,
    face_triples,
    input_density_histogram,
    pressure_coefficient,
    wave_speed_profile,
)
from dgnet.analysis.errors import (
    ErrorSeries,
    convergence_rates,
    l2_error_exact,
    nonzero_components,
    pairwise_rates,
    relative_l2,
)
from dgnet.analysis.indicator import (
    IndicatorSeries,
    accumulated_error_bound,
    error_indicator,
    jacobian_gap_estimate,
    one_step_amplification,
    trajectory_errors,
)

__all__ = [
    "DensityHistogram",
    "ErrorSeries",
    "IndicatorSeries",
    "WaveSpeedPlane",
    "accumulated_error_bound",
    "convergence_rates",
    "error_indicator",
    "face_triples",
    "input_density_histogram",
    "jacobian_gap_estimate",
    "l2_error_exact",
    "nonzero_components",
    "one_step_amplification",
    "pairwise_rates",
    "pressure_coefficient",
    "relative_l2",
    "trajectory_errors",
    "wave_speed_profile",
]
