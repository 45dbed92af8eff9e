from src.experiments.config import (ExperimentKind, SolverConfig, SweepConfig,
                                    load_sweep_config, parse_sweep_config,
                                    read_json)
from src.experiments.models import (ExperimentSummary, RunContext,
                                    SubspaceKey, SubspaceStore, TimingStats,
                                    timed)
from src.experiments.records import (RECORD_FIELDS, ExperimentRecord,
                                     read_records_csv, sort_records,
                                     write_records_csv)
from src.experiments.runner import (RUNNERS, ExperimentResult, build_subspace,
                                    fit_loglog_slope, run_decay,
                                    run_estimators, run_experiment,
                                    run_fidelity, run_proxy_validity,
                                    run_ratio)

__all__ = [
    "RECORD_FIELDS",
    "RUNNERS",
    "ExperimentKind",
    "ExperimentRecord",
    "ExperimentResult",
    "ExperimentSummary",
    "RunContext",
    "SubspaceKey",
    "SubspaceStore",
    "SolverConfig",
    "SweepConfig",
    "TimingStats",
    "build_subspace",
    "fit_loglog_slope",
    "load_sweep_config",
    "parse_sweep_config",
    "read_json",
    "read_records_csv",
    "run_decay",
    "run_estimators",
    "run_experiment",
    "run_fidelity",
    "run_proxy_validity",
    "run_ratio",
    "sort_records",
    "timed",
    "write_records_csv",
]
