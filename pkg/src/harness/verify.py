import logging
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import ValidationError

from models import AnalysisReport, CheckResult, RunSummary
from supplychain import (
    Problem,
    QuadraticProblem,
    TraceSchemaError,
    compute_constants,
    error_series_check,
    exact_oracle,
    iteration_budget_for,
    lyapunov_descent_check,
    rate_slope,
)
from supplychain.analysis import iterate_labels
from supplychain.tracing import RunTrace, trace_from_csv

from .run import ANALYSIS_FILE, PROBLEM_FILE, SUMMARY_FILE, TRACE_FILE

logger = logging.getLogger("dapd-sco")

RATE_GATE = -0.35
RATE_BAND = (-0.7, -0.35)


def _status(passed: bool, applicable: bool = True) -> str:
    if not applicable:
        return "n/a"
    return "pass" if passed else "fail"


class VerifyMixin:
    """Mixin for the verify verb"""

    def load_run(self, run_dir: Path) -> Tuple[RunSummary, Problem, RunTrace]:
        """Read a run directory back; missing or inconsistent files raise TraceSchemaError."""
        run_dir = Path(run_dir)
        if not run_dir.is_dir():
            raise TraceSchemaError(f"Run directory '{run_dir}' does not exist")
        summary_text = self._read_text(run_dir / SUMMARY_FILE, error=TraceSchemaError)
        try:
            summary = RunSummary.model_validate_json(summary_text)
        except ValidationError as e:
            raise TraceSchemaError(
                "Run summary does not match its schema", {"error": str(e.errors()[0])}
            )
        problem = self.load_problem(run_dir / PROBLEM_FILE)
        trace = trace_from_csv(
            self._read_text(run_dir / TRACE_FILE, error=TraceSchemaError),
            algorithm=summary.algorithm,
            metadata=summary.metadata,
            expected_rows=summary.trace_rows,
        )
        if (trace.x_labels, trace.lambda_labels) != iterate_labels(problem):
            raise TraceSchemaError(
                "Trace does not match its problem",
                {"trace_x": len(trace.x_labels), "trace_lambda": len(trace.lambda_labels)},
            )
        return summary, problem, trace

    def verify(self, run_dir: Path) -> AnalysisReport:
        """Run the descent, error-series and rate checks on a finished run.

        Writes ``analysis.json`` next to the trace and returns the report.
        """
        return self._run_job("verify", self._verify, Path(run_dir))

    def _verify(self, run_dir: Path) -> AnalysisReport:
        summary, problem, trace = self.load_run(run_dir)
        checks: Dict[str, CheckResult] = {}
        constants: Dict[str, float] = {}
        budget = None

        if isinstance(problem, QuadraticProblem):
            reason = "theory checks are stated for flow instances"
            checks["descent"] = CheckResult(name="descent", status="n/a", detail={"reason": reason})
            checks["error_series"] = CheckResult(
                name="error_series", status="n/a", detail={"reason": reason}
            )
        else:
            meta = summary.metadata
            theory = compute_constants(
                problem,
                summary.lambda_max,
                float(meta.get("sigma_c", 0.0)),
                float(meta.get("sigma_d", 0.0)),
            )
            constants = theory.as_dict()
            saddle = exact_oracle(problem)
            descent = lyapunov_descent_check(trace, theory, saddle, problem)
            checks["descent"] = CheckResult(
                name="descent",
                status=_status(descent.passed, descent.applicable),
                detail=descent.as_dict(),
            )
            if trace.every_tick and trace.n_records >= 2:
                series = error_series_check(trace, theory)
                checks["error_series"] = CheckResult(
                    name="error_series",
                    status=_status(series.passed),
                    detail=series.as_dict(),
                )
                v0 = float(
                    np.sum((trace.x[0] - saddle.x_star) ** 2)
                    + np.sum((trace.lam[0] - saddle.lambda_star) ** 2)
                )
                budget = iteration_budget_for(
                    summary.gap_threshold,
                    theory,
                    v0,
                    series.delay_constant,
                )
            else:
                checks["error_series"] = CheckResult(
                    name="error_series",
                    status="n/a",
                    detail={"reason": "trace does not record every tick"},
                )

        checks["rate"] = self._rate_check(trace)
        report = AnalysisReport(
            run=str(run_dir),
            algorithm=summary.algorithm,
            passed=all(check.status != "fail" for check in checks.values()),
            checks=checks,
            constants=constants,
            iteration_budget=budget,
        )
        self._write_json(run_dir / ANALYSIS_FILE, report.model_dump(mode="json"))
        logger.info(
            {
                "message": "Verification finished",
                "run_dir": str(run_dir),
                "passed": report.passed,
                **{name: check.status for name, check in checks.items()},
            }
        )
        return report

    def _rate_check(self, trace: RunTrace) -> CheckResult:
        try:
            fit = rate_slope(trace, "ergodic_gap")
        except ValueError as e:
            return CheckResult(name="rate", status="n/a", detail={"reason": str(e)})
        detail: Dict[str, Any] = fit.as_dict()
        detail["gate"] = RATE_GATE
        detail["in_band"] = RATE_BAND[0] <= fit.slope <= RATE_BAND[1]
        return CheckResult(name="rate", status=_status(fit.slope <= RATE_GATE), detail=detail)
