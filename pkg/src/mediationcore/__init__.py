"""MediationCore - Causal mediation analysis with hidden confounders."""

from mediationcore.baselines import (
    LsemResult,
    OlsFit,
    demographic_disparity,
    fit_logistic,
    fit_ols,
    lsem_effects,
    lsem_i_effects,
)
from mediationcore.config import (
    Cell,
    DgpSpec,
    ExperimentConfig,
    FairnessSpec,
    expand_grid,
    load_config,
)
from mediationcore.console import ConsoleReporter, console_hooks
from mediationcore.dataset import (
    ColumnSpec,
    Dataset,
    SplitPair,
    load_csv,
    standardize,
    stratified_split,
    write_csv,
)
from mediationcore.dgp import (
    SyntheticConfig,
    generate_fairness_standin,
    generate_synthetic,
    true_effects_monte_carlo,
    true_effects_synthetic,
)
from mediationcore.effects import error_report, estimate_acde, estimate_acme, estimate_effects
from mediationcore.exceptions import (
    BaselineError,
    ConfigError,
    DatasetError,
    EstimationError,
    EstimatorError,
    MediationError,
    ObjectiveError,
    OutputError,
    ProbitError,
    SingularDesignError,
    TrainingError,
)
from mediationcore.experiment import Experiment, run_experiment
from mediationcore.fairness import run_fairness
from mediationcore.hooks import (
    CellEndData,
    CellStartData,
    EstimatorEndData,
    EstimatorErrorData,
    EstimatorStartData,
    Event,
    EventType,
    ExperimentEndData,
    ExperimentStartData,
    FairnessEndData,
    FairnessStartData,
    Hooks,
    ReplicationEndData,
    ReplicationStartData,
    TrainingEndData,
)
from mediationcore.logging import LoggingHandler, enable_logging
from mediationcore.model import MediationVAE, ModelConfig, load_checkpoint, save_checkpoint
from mediationcore.models import (
    EffectEstimate,
    ErrorReport,
    ExperimentResult,
    FairnessReport,
    TrueEffects,
)
from mediationcore.outputs import emit_outputs
from mediationcore.probit import ProbitFit, fit_probit
from mediationcore.semisynthetic import (
    ProxyNoiseConfig,
    SemiSynthConfig,
    calibrate_alpha,
    generate_jobs_standin,
    inject_proxy_noise,
    simulate_semisynthetic,
)
from mediationcore.training import TrainConfig, train

__all__ = [
    "BaselineError",
    "Cell",
    "CellEndData",
    "CellStartData",
    "ColumnSpec",
    "ConfigError",
    "ConsoleReporter",
    "Dataset",
    "DatasetError",
    "DgpSpec",
    "EffectEstimate",
    "ErrorReport",
    "EstimationError",
    "EstimatorEndData",
    "EstimatorError",
    "EstimatorErrorData",
    "EstimatorStartData",
    "Event",
    "EventType",
    "Experiment",
    "ExperimentConfig",
    "ExperimentEndData",
    "ExperimentResult",
    "ExperimentStartData",
    "FairnessEndData",
    "FairnessReport",
    "FairnessSpec",
    "FairnessStartData",
    "Hooks",
    "LoggingHandler",
    "LsemResult",
    "MediationError",
    "MediationVAE",
    "ModelConfig",
    "ObjectiveError",
    "OlsFit",
    "OutputError",
    "ProbitError",
    "ProbitFit",
    "ProxyNoiseConfig",
    "ReplicationEndData",
    "ReplicationStartData",
    "SemiSynthConfig",
    "SingularDesignError",
    "SplitPair",
    "SyntheticConfig",
    "TrainConfig",
    "TrainingEndData",
    "TrainingError",
    "TrueEffects",
    "calibrate_alpha",
    "console_hooks",
    "demographic_disparity",
    "emit_outputs",
    "enable_logging",
    "error_report",
    "estimate_acde",
    "estimate_acme",
    "estimate_effects",
    "expand_grid",
    "fit_logistic",
    "fit_ols",
    "fit_probit",
    "generate_fairness_standin",
    "generate_jobs_standin",
    "generate_synthetic",
    "inject_proxy_noise",
    "load_checkpoint",
    "load_config",
    "load_csv",
    "lsem_effects",
    "lsem_i_effects",
    "run_experiment",
    "run_fairness",
    "save_checkpoint",
    "simulate_semisynthetic",
    "standardize",
    "stratified_split",
    "train",
    "true_effects_monte_carlo",
    "true_effects_synthetic",
    "write_csv",
]
