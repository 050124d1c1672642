"""Suspension ride/handling simulation and characteristic optimization.

Quarter-car and half-car vertical dynamics with linear or nonlinear
spring/damper characteristics, deterministic road excitation, fixed-step
integration, ISO-weighted comfort metrics and a projected quasi-Newton
optimizer over characteristic scale factors.
"""

__version__ = "0.1.0"

from .analysis import BodeResult, h1_magnitude, numeric_bode
from .characteristics import (
    DamperCurve,
    DamperFit,
    LinearLaw,
    ScaledCharacteristic,
    SpringTable,
    damper_force,
    fit_damper_curve,
    load_table,
    save_table,
    scale_characteristic,
    spring_force,
)
from .config import RunConfig, load_config, resolve_config
from .errors import (
    ComparisonError,
    ConfigError,
    CurveError,
    DivergenceError,
    EquilibriumError,
    FitError,
    OptimizationError,
    SuspoptError,
)
from .objectives import (
    MetricSet,
    ObjectiveSpec,
    comfort_loss,
    evaluate_objective,
    handling_loss,
    rms,
    tire_accel_penalty,
    tire_force_range,
)
from .optimizer import (
    DesignVector,
    GridSurface,
    MinimizeResult,
    RunHistory,
    grid_surface,
    minimize,
)
from .road import RoadProfile, chirp_profile, dual_track_profile, random_profile
from .runner import compare_runs, prepare_problem, run_bode, run_grid, run_scenario
from .simulate import Trajectory, integrate, trim_transient
from .vehicle import (
    HalfCarParams,
    QuarterCarParams,
    settle,
    static_equilibrium,
)
from .weighting import WeightingCurve, vertical_weighting, weighted_rms

__all__ = [
    "__version__",
    "LinearLaw",
    "DamperCurve",
    "SpringTable",
    "ScaledCharacteristic",
    "DamperFit",
    "scale_characteristic",
    "spring_force",
    "damper_force",
    "fit_damper_curve",
    "load_table",
    "save_table",
    "RoadProfile",
    "chirp_profile",
    "random_profile",
    "dual_track_profile",
    "QuarterCarParams",
    "HalfCarParams",
    "static_equilibrium",
    "settle",
    "Trajectory",
    "integrate",
    "trim_transient",
    "WeightingCurve",
    "vertical_weighting",
    "weighted_rms",
    "MetricSet",
    "ObjectiveSpec",
    "rms",
    "tire_force_range",
    "tire_accel_penalty",
    "comfort_loss",
    "handling_loss",
    "evaluate_objective",
    "DesignVector",
    "RunHistory",
    "MinimizeResult",
    "GridSurface",
    "minimize",
    "grid_surface",
    "BodeResult",
    "h1_magnitude",
    "numeric_bode",
    "RunConfig",
    "resolve_config",
    "load_config",
    "run_scenario",
    "run_bode",
    "run_grid",
    "compare_runs",
    "prepare_problem",
    "SuspoptError",
    "CurveError",
    "FitError",
    "EquilibriumError",
    "DivergenceError",
    "OptimizationError",
    "ConfigError",
    "ComparisonError",
]
