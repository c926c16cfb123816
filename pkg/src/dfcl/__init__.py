"""Directional-forgetting concurrent learning for discrete-time adaptive control."""

from .analysis import (
    AnalysisReport,
    DiagnosticsRecord,
    StabilityConstants,
    df_direction_eigs,
    diagnose,
    disturbance_term,
    lyapunov_quantities,
    pre_rank_bound,
    stability_constants,
    uub_radius,
    w_bound_asymptotic,
)
from .baselines import CondNumberStack, DataStack, cond_number_admit, stack_manager_admit
from .config import (
    ScenarioConfig,
    fig1_config,
    fig1_configs,
    load_config,
    parse_config,
    validate_config,
)
from .controller import (
    ControllerConfig,
    ReferenceModel,
    ReferenceSpec,
    control,
    ideal_control,
    reference_signal,
    reference_step,
)
from .errors import ConfigError, DivergenceError, SignalCorruptionError
from .estimator import (
    EstimatorState,
    InformationState,
    cl_step,
    df_update_information,
    eta_max_cl,
    information_state,
    normalization,
    numerical_rank,
    prediction_error,
    rank_would_increase,
)
from .plant import (
    BasisConfig,
    BasisTerm,
    DisturbanceSpec,
    PlantState,
    TrueParameters,
    build_regressor,
    disturbance_sample,
    plant_step,
)
from .report import export_comparison, export_csv, export_plot, read_csv
from .simulate import RunResult, StepRecord, compare, run_scenario, window_rmse

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "BasisConfig", "BasisTerm", "CondNumberStack",
    "ConfigError", "ControllerConfig", "DataStack", "DiagnosticsRecord",
    "DisturbanceSpec", "DivergenceError", "EstimatorState", "InformationState",
    "PlantState", "ReferenceModel", "ReferenceSpec", "RunResult",
    "ScenarioConfig", "SignalCorruptionError", "StabilityConstants",
    "StepRecord", "TrueParameters", "cl_step", "compare", "cond_number_admit",
    "control", "df_direction_eigs", "df_update_information", "diagnose",
    "disturbance_sample", "disturbance_term", "eta_max_cl", "export_comparison",
    "export_csv", "export_plot", "fig1_config", "fig1_configs", "ideal_control",
    "information_state", "load_config", "lyapunov_quantities", "normalization",
    "numerical_rank", "parse_config", "plant_step", "pre_rank_bound",
    "prediction_error", "rank_would_increase", "read_csv", "reference_signal",
    "reference_step", "run_scenario", "stability_constants",
    "stack_manager_admit", "uub_radius", "validate_config", "w_bound_asymptotic",
    "window_rmse", "build_regressor",
]
