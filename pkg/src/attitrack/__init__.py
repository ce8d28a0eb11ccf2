"""Quaternion attitude tracking with gyro-bias observation and hysteretic switching."""

from .attmath import (
    SingularityError,
    gmat,
    jmat,
    quat_conj,
    quat_exp,
    quat_log,
    quat_mul,
    rotation_of,
    skew,
)
from .contraction import certify_trajectory, coupling_matrix, observer_jacobian
from .control import (
    ControllerGains,
    HysteresisState,
    continuous_control,
    control_effort,
    hysteresis_update,
    switched_control,
    tracking_error,
)
from .estimation import ObserverGains, ObserverState, coupled_bias_estimate, ideal_bias_estimate
from .plant import BodyState, InertiaModel, ReferenceState, step
from .sensing import GyroModel
from .sim import ScenarioConfig, SimulationAbort, builtin_scenario, compute_metrics, run_scenario

__version__ = "0.1.0"

__all__ = [
    "SingularityError", "gmat", "jmat", "quat_conj", "quat_exp", "quat_log", "quat_mul",
    "rotation_of", "skew", "certify_trajectory", "coupling_matrix", "observer_jacobian",
    "ControllerGains", "HysteresisState", "continuous_control", "control_effort",
    "hysteresis_update", "switched_control", "tracking_error", "ObserverGains",
    "ObserverState", "coupled_bias_estimate", "ideal_bias_estimate", "BodyState",
    "InertiaModel", "ReferenceState", "step", "GyroModel", "ScenarioConfig",
    "SimulationAbort", "builtin_scenario", "compute_metrics", "run_scenario",
]
