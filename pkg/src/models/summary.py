from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class MessageTotals(BaseModel):
    sent: int = 0
    dropped: int = 0
    delivered: int = 0


class FinalMetrics(BaseModel):
    objective: float
    gap: float
    ergodic_gap: float
    violation: float


class RunSummary(BaseModel):
    """Contents of ``summary.json`` in a run directory."""

    algorithm: str
    preset: str
    seed: int
    iterations: int
    trace_every: int = 1
    trace_rows: int
    k_star: Optional[int] = None
    convergence_metric: str = "gap"
    gap_threshold: float = 0.1
    violation_threshold: float = 0.05
    final: FinalMetrics
    messages: MessageTotals
    clamped_reads: int = 0
    lambda_max: float
    optimal_value: Optional[float] = None
    slater: Optional[bool] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)


class CheckResult(BaseModel):
    name: str
    status: str  # "pass", "fail" or "n/a"
    detail: Dict[str, Any] = Field(default_factory=dict)


class AnalysisReport(BaseModel):
    """Contents of ``analysis.json`` written by verify."""

    run: str
    algorithm: str
    passed: bool
    checks: Dict[str, CheckResult]
    constants: Dict[str, float] = Field(default_factory=dict)
    iteration_budget: Optional[int] = None
