"""Transmit-power scheduling for a high-speed train crossing one base-station cell.

The library models the link between a trackside base station and a passing
train (distance, effective noise, instantaneous capacity), builds five
average-power-constrained transmit schedules (constant, channel inversion,
water-filling, a closed-form proportionally fair approximation and an
iteratively refined proportionally fair schedule) and scores them with
service and fairness metrics.
"""

__version__ = "0.1.0"

from .allocators import (
    SCHEMES,
    CalibrationError,
    LambdaPower,
    PowerProfile,
    SolveReport,
    SolverSettings,
    SolveStep,
    calibrate_noise,
    constant_pa,
    inversion_pa,
    mean_power,
    pf_epsilon_optimal_pa,
    pf_near_optimal_pa,
    total_power_for_lambda,
    waterfilling_pa,
)
from .analysis import (
    SchemeMetrics,
    compare_schemes,
    pf_criterion_gap,
    pf_utility,
    pgd_allocation,
    random_feasible_profile,
    scheme_metrics,
)
from .channel import (
    Scenario,
    ServiceCurve,
    capacity,
    channel_service,
    distance,
    noise_power,
    service_curve,
    service_samples,
)
from .config import ConfigError, OutputConfig, RunConfig, ScenarioConfig, load_config
from .numerics import (
    BracketError,
    QuadratureGrid,
    find_root_monotone,
    integrate,
    lambert_w0,
)

__all__ = [
    "__version__",
    "SCHEMES",
    "BracketError",
    "CalibrationError",
    "ConfigError",
    "LambdaPower",
    "OutputConfig",
    "PowerProfile",
    "QuadratureGrid",
    "RunConfig",
    "Scenario",
    "ScenarioConfig",
    "SchemeMetrics",
    "ServiceCurve",
    "SolveReport",
    "SolverSettings",
    "SolveStep",
    "calibrate_noise",
    "capacity",
    "channel_service",
    "compare_schemes",
    "constant_pa",
    "distance",
    "find_root_monotone",
    "integrate",
    "inversion_pa",
    "lambert_w0",
    "load_config",
    "mean_power",
    "noise_power",
    "pf_criterion_gap",
    "pf_epsilon_optimal_pa",
    "pf_near_optimal_pa",
    "pf_utility",
    "pgd_allocation",
    "random_feasible_profile",
    "scheme_metrics",
    "service_curve",
    "service_samples",
    "total_power_for_lambda",
    "waterfilling_pa",
]
