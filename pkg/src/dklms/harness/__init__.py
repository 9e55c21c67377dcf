from .config import ConfigError, ExperimentConfig, dump_config, load_config, make_config
from .experiment import ExperimentResult, run_experiment, trial_stream
from .metrics import KernelRidge, MetricTrace, average_mse, empirical_regret
from .output import emit_results

__all__ = [
    "ConfigError", "ExperimentConfig", "ExperimentResult", "KernelRidge", "MetricTrace",
    "average_mse", "dump_config", "emit_results", "empirical_regret", "load_config",
    "make_config", "run_experiment", "trial_stream",
]
