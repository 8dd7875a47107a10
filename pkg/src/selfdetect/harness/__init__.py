from .config import BackendSpec, ExperimentConfig, load_config, parse_config
from .dataset import Dataset, load_dataset, parse_record
from .report import emit_report, rebuild_report
from .runner import InstanceRecord, RunResult, build_backend, process_instance, run_experiment, select_subset

__all__ = [
    "BackendSpec",
    "Dataset",
    "ExperimentConfig",
    "InstanceRecord",
    "RunResult",
    "build_backend",
    "emit_report",
    "load_config",
    "load_dataset",
    "parse_config",
    "parse_record",
    "process_instance",
    "rebuild_report",
    "run_experiment",
    "select_subset",
]
