"""Three-state quantum walks on the line: simulation, band structure, localization."""

from .coins import (
    Coin,
    CoinFamily,
    EigenSystem,
    InvariantViolation,
    coin_c1,
    coin_c2,
    coin_from_spectral,
    eigensystem_of,
    fourier_coin,
    grover_coin,
    grover_eigensystem,
    permutation_coin,
    reflecting_coin,
    transmitting_coin,
)
from .localization import (
    LocalizationReport,
    TrappingEstimate,
    flat_band_detect,
    localization_report,
    origin_series,
    trapping_estimate,
)
from .spectral import (
    BranchTrackingError,
    DispersionTable,
    PeakVelocityResult,
    VelocityMethod,
    dispersion_analytic,
    dispersion_numeric,
    group_velocity,
    linear_approx_deviation,
    momentum_propagator,
    peak_velocities_numeric,
    peak_velocity_c1,
    peak_velocity_c2,
    stationary_point,
)
from .walk import (
    ProbabilityDistribution,
    WalkState,
    evolve,
    initial_state,
    peak_positions,
    probability_distribution,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "Coin",
    "CoinFamily",
    "EigenSystem",
    "InvariantViolation",
    "coin_c1",
    "coin_c2",
    "coin_from_spectral",
    "eigensystem_of",
    "fourier_coin",
    "grover_coin",
    "grover_eigensystem",
    "permutation_coin",
    "reflecting_coin",
    "transmitting_coin",
    "LocalizationReport",
    "TrappingEstimate",
    "flat_band_detect",
    "localization_report",
    "origin_series",
    "trapping_estimate",
    "BranchTrackingError",
    "DispersionTable",
    "PeakVelocityResult",
    "VelocityMethod",
    "dispersion_analytic",
    "dispersion_numeric",
    "group_velocity",
    "linear_approx_deviation",
    "momentum_propagator",
    "peak_velocities_numeric",
    "peak_velocity_c1",
    "peak_velocity_c2",
    "stationary_point",
    "ProbabilityDistribution",
    "WalkState",
    "evolve",
    "initial_state",
    "peak_positions",
    "probability_distribution",
    "step",
    "__version__",
]
