from .config import (
    ALGORITHMS,
    PRESETS,
    RunConfigFile,
    deep_merge,
    load_run_config,
    set_dotted,
    validate_run_config,
)
from .problem import (
    FlowProblemFile,
    GeneratorSpec,
    QuadraticProblemFile,
    problem_file_adapter,
    problem_to_file,
)
from .summary import AnalysisReport, CheckResult, RunSummary

__all__ = [
    "ALGORITHMS",
    "PRESETS",
    "RunConfigFile",
    "deep_merge",
    "load_run_config",
    "set_dotted",
    "validate_run_config",
    "FlowProblemFile",
    "GeneratorSpec",
    "QuadraticProblemFile",
    "problem_file_adapter",
    "problem_to_file",
    "AnalysisReport",
    "CheckResult",
    "RunSummary",
]
