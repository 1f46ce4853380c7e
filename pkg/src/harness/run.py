import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from models import RunConfigFile, RunSummary, problem_to_file
from supplychain import (
    ConfigError,
    Problem,
    QuadraticProblem,
    SupplyChainError,
    convergence_time,
    exact_oracle,
    run_baseline,
    run_simulation,
    slater_check,
)
from supplychain.tracing import RunTrace, json_safe, trace_to_csv

logger = logging.getLogger("dapd-sco")

CONFIG_FILE = "config.yaml"
PROBLEM_FILE = "problem.json"
TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"
ANALYSIS_FILE = "analysis.json"


def resolve_problem(
    config: RunConfigFile, base_dir: Optional[Path], loader
) -> Problem:
    """The referenced problem file, else the generator built with the run seed."""
    if config.problem is not None:
        path = Path(config.problem)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        return loader(path)
    if config.generator is not None:
        return config.generator.build(config.seed)
    raise ConfigError("problem", "config names neither a problem file nor a generator")


def execute(config: RunConfigFile, problem: Problem) -> RunTrace:
    if config.algorithm == "dapdsco":
        return run_simulation(config.to_sim_config(problem))
    alpha, beta = config.schedules()
    return run_baseline(
        config.baseline_kind(),
        problem,
        alpha,
        beta,
        config.iterations,
        config.init,
        config.seed,
        config.lambda_max,
        config.trace_every,
    )


def summarize(config: RunConfigFile, problem: Problem, trace: RunTrace) -> RunSummary:
    final = trace.final()
    try:
        optimal_value = exact_oracle(problem).optimal_value
    except SupplyChainError as e:
        logger.warning({"message": "Oracle unavailable for summary", "error": e.message})
        optimal_value = None
    metadata = json_safe(trace.metadata)
    return RunSummary(
        algorithm=trace.algorithm,
        preset=config.preset,
        seed=config.seed,
        iterations=config.iterations,
        trace_every=config.trace_every,
        trace_rows=len(trace.k),
        k_star=convergence_time(
            trace,
            config.gap_threshold,
            config.violation_threshold,
            config.convergence_metric,
        ),
        convergence_metric=config.convergence_metric,
        gap_threshold=config.gap_threshold,
        violation_threshold=config.violation_threshold,
        final={name: final[name] for name in ("objective", "gap", "ergodic_gap", "violation")},
        messages=trace.message_totals(),
        clamped_reads=int(trace.metadata.get("clamped_reads", 0)),
        lambda_max=float(trace.metadata["lambda_max"]),
        optimal_value=optimal_value,
        slater=None if isinstance(problem, QuadraticProblem) else slater_check(problem).holds,
        metadata=metadata,
    )


def run_once(
    config: RunConfigFile, base_dir: Optional[Path], loader
) -> Tuple[Problem, RunTrace, RunSummary]:
    problem = resolve_problem(config, base_dir, loader)
    trace = execute(config, problem)
    return problem, trace, summarize(config, problem, trace)


def echo_config(config: RunConfigFile) -> Dict[str, Any]:
    """Config as written into the run directory, pointing at its own problem file."""
    data = config.model_dump(mode="json")
    data["problem"] = PROBLEM_FILE
    data["generator"] = None
    return data


class RunMixin:
    """Mixin for the run verb"""

    def default_run_dir(self, config: RunConfigFile) -> Path:
        return self.output_root / f"{config.algorithm}-{config.preset}-seed{config.seed}"

    def run(
        self,
        config: RunConfigFile,
        run_dir: Optional[Path] = None,
        base_dir: Optional[Path] = None,
    ) -> Dict[str, Any]:
        """Execute one run and write its directory.

        Args:
            config: Validated run config
            run_dir: Target directory, defaults to one under the output root
            base_dir: Directory that relative problem paths are resolved against

        Returns:
            Dictionary with the run directory and the summary contents
        """
        return self._run_job("run", self._run, config, run_dir, base_dir)

    def _run(self, config, run_dir, base_dir) -> Dict[str, Any]:
        run_dir = Path(run_dir) if run_dir is not None else self.default_run_dir(config)
        if run_dir.is_dir() and any(run_dir.iterdir()) and not self.overwrite:
            raise ConfigError(
                "output", f"'{run_dir}' already exists; pass overwrite to replace it"
            )

        problem, trace, summary = run_once(config, base_dir, self.load_problem)

        self._prepare_dir(run_dir)
        self._write_yaml(run_dir / CONFIG_FILE, echo_config(config))
        self._write_json(
            run_dir / PROBLEM_FILE, problem_to_file(problem).model_dump(mode="json")
        )
        self._write_text(run_dir / TRACE_FILE, trace_to_csv(trace))
        self._write_json(run_dir / SUMMARY_FILE, summary.model_dump(mode="json"))
        logger.info(
            {
                "message": "Run finished",
                "run_dir": str(run_dir),
                "algorithm": summary.algorithm,
                "k_star": summary.k_star,
                "final_gap": summary.final.gap,
                "final_violation": summary.final.violation,
            }
        )
        return {"run_dir": str(run_dir), "summary": summary.model_dump(mode="json")}
