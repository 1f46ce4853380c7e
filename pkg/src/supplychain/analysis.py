"""Metrics and theory checks over run traces.

The descent checker keeps every constant explicit. For a flow instance with
dual box radius Λ the per-tick error term is

    E_k = α²G² + β²D² + 2α S_k G U + 2β T_k D Λ

where S_k and T_k sum the dual and primal steps over the realized price and
flow staleness windows of tick k. Unequal steps add 2|α − β| Λ_R H_U and
bounded noise adds 2α σ_c Σu + 2β σ_d |R| Λ; both are reported as separate
terms and are zero for equal noiseless steps.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ProblemError, TraceSchemaError
from .oracles import SaddlePoint
from .problem import Problem, QuadraticProblem, SupplyChainProblem, lagrangian
from .tracing import METRIC_COLUMNS, RunTrace

logger = logging.getLogger("dapd-sco")

CHECK_TOLERANCE = 1e-9
GAP_FLOOR = 1e-12


@dataclass(frozen=True)
class TheoryConstants:
    G: float
    D: float
    U: float
    lambda_max: float
    lambda_radius: float
    H_U: float
    noise_primal: float = 0.0
    noise_dual: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def compute_constants(
    problem: SupplyChainProblem,
    lambda_max: float,
    sigma_c: float = 0.0,
    sigma_d: float = 0.0,
) -> TheoryConstants:
    """Bounds on gradients and residuals over the flow box and [0, Λ_max]."""
    if isinstance(problem, QuadraticProblem):
        raise ProblemError("Theory constants are defined for flow instances only")
    if not lambda_max > 0:
        raise ConfigError("lambda_max", "must be positive")

    q, c, u = problem.curvatures, problem.costs, problem.capacities
    head = problem.head_retailer
    into_retailer = head >= 0
    g_edge = np.maximum(q * u + c + sigma_c, lambda_max - c + sigma_c)

    capacity_in = np.bincount(
        head[into_retailer], weights=u[into_retailer], minlength=problem.n_retailers
    )
    d = problem.demand_vector
    d_retailer = np.maximum(d, capacity_in - d) + sigma_d

    return TheoryConstants(
        G=float(np.sqrt(np.sum(g_edge**2))),
        D=float(np.sqrt(np.sum(d_retailer**2))),
        U=float(math.sqrt(problem.n_edges) * np.max(u)),
        lambda_max=float(lambda_max),
        lambda_radius=float(math.sqrt(problem.n_retailers) * lambda_max),
        H_U=float(np.sqrt(np.sum(capacity_in**2))),
        noise_primal=float(sigma_c * np.sum(u)),
        noise_dual=float(sigma_d * problem.n_retailers * lambda_max),
    )


class MetricEvaluator:
    """Objective, duality gap and violation with the instance arrays cached."""

    def __init__(self, problem: Problem, lambda_max: float):
        if lambda_max < 0:
            raise ConfigError("lambda_max", "must be non-negative")
        self.problem = problem
        self.lambda_max = float(lambda_max)
        if isinstance(problem, QuadraticProblem):
            self._A = problem.matrix
            self._b = problem.rhs
            self._c = problem.curvature
            self._d = problem.linear
        else:
            self._q = problem.curvatures
            self._c = problem.costs
            self._u = problem.capacities
            self._head = problem.head_retailer
            self._mask = self._head >= 0
            self._demand = problem.demand_vector
            self._curved = self._q > 0
            self._safe_q = np.where(self._curved, self._q, 1.0)

    def _inbound(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(
            self._head[self._mask],
            weights=x[self._mask],
            minlength=len(self._demand),
        )

    def objective(self, x: np.ndarray) -> float:
        if isinstance(self.problem, QuadraticProblem):
            return float(np.sum(0.5 * self._c * x * x + self._d * x))
        return float(np.sum(0.5 * self._q * x * x + self._c * x))

    def violation(self, x: np.ndarray) -> float:
        if isinstance(self.problem, QuadraticProblem):
            return float(np.linalg.norm(self._A @ x - self._b))
        shortfall = np.maximum(0.0, self._demand - self._inbound(x))
        return float(np.linalg.norm(shortfall))

    def gap(self, x: np.ndarray, lam: np.ndarray) -> float:
        if isinstance(self.problem, QuadraticProblem):
            upper = self.objective(x) + self.lambda_max * self.violation(x)
            shifted = self._d + self._A.T @ lam
            lower = float(-np.sum(shifted**2 / (2.0 * self._c)) - lam @ self._b)
            return upper - lower

        upper = self.objective(x) + self.lambda_max * float(
            np.sum(np.maximum(0.0, self._demand - self._inbound(x)))
        )
        price = np.append(lam, 0.0)[self._head]
        linear_best = np.where(self._c - price < 0, self._u, 0.0)
        curved_best = np.clip((price - self._c) / self._safe_q, 0.0, self._u)
        best = np.where(self._curved, curved_best, linear_best)
        lower = float(
            np.sum(0.5 * self._q * best * best + (self._c - price) * best)
            + lam @ self._demand
        )
        return upper - lower


def duality_gap(problem: Problem, x, lam, lambda_max: float) -> float:
    """max over the bounded dual set of L(x̄, ·) minus min over the primal set of L(·, λ̄)."""
    evaluator = MetricEvaluator(problem, lambda_max)
    return evaluator.gap(np.asarray(x, dtype=float), np.asarray(lam, dtype=float))


def constraint_violation(problem: Problem, x) -> float:
    """‖max(0, d − h(x))‖₂ for flows, ‖A x − b‖₂ for the quadratic variant."""
    return MetricEvaluator(problem, 0.0).violation(np.asarray(x, dtype=float))


def iterate_labels(problem: Problem) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    if isinstance(problem, QuadraticProblem):
        return (
            tuple(str(i) for i in range(problem.n_agents)),
            tuple(str(r) for r in range(problem.n_rows)),
        )
    return tuple(e.id for e in problem.edges), problem.retailers


class TraceRecorder:
    """Accumulates iterates into a RunTrace, storing every ``trace_every``-th tick and the last."""

    def __init__(
        self,
        problem: Problem,
        lambda_max: float,
        algorithm: str,
        iterations: int,
        x0: np.ndarray,
        lam0: np.ndarray,
        trace_every: int = 1,
    ):
        if trace_every < 1:
            raise ConfigError("trace_every", "must be at least 1")
        self.algorithm = algorithm
        self.iterations = iterations
        self.trace_every = trace_every
        self.metrics = MetricEvaluator(problem, lambda_max)
        self.x_labels, self.lambda_labels = iterate_labels(problem)
        self._x_bar = np.zeros_like(np.asarray(x0, dtype=float))
        self._lam_bar = np.zeros_like(np.asarray(lam0, dtype=float))
        self._k: List[int] = []
        self._x: List[np.ndarray] = []
        self._lam: List[np.ndarray] = []
        self._columns: Dict[str, List[float]] = {name: [] for name in METRIC_COLUMNS}
        self._store(0, x0, lam0, 0.0, 0.0, 0, 0, 0, 0, 0, x0, lam0)

    def _store(self, k, x, lam, alpha, beta, dp, df, sent, dropped, delivered, x_bar, lam_bar):
        x = np.array(x, dtype=float)
        lam = np.array(lam, dtype=float)
        self._k.append(k)
        self._x.append(x)
        self._lam.append(lam)
        row = self._columns
        row["alpha"].append(alpha)
        row["beta"].append(beta)
        row["delay_price"].append(dp)
        row["delay_flow"].append(df)
        row["sent"].append(sent)
        row["dropped"].append(dropped)
        row["delivered"].append(delivered)
        row["objective"].append(self.metrics.objective(x))
        row["gap"].append(self.metrics.gap(x, lam))
        row["ergodic_gap"].append(self.metrics.gap(x_bar, lam_bar))
        row["violation"].append(self.metrics.violation(x))

    def record(
        self,
        k: int,
        x: np.ndarray,
        lam: np.ndarray,
        alpha: float,
        beta: float,
        delay_price: int = 0,
        delay_flow: int = 0,
        sent: int = 0,
        dropped: int = 0,
        delivered: int = 0,
    ) -> None:
        self._x_bar += (x - self._x_bar) / k
        self._lam_bar += (lam - self._lam_bar) / k
        if k % self.trace_every == 0 or k == self.iterations:
            self._store(
                k, x, lam, alpha, beta, delay_price, delay_flow,
                sent, dropped, delivered, self._x_bar, self._lam_bar,
            )

    def finish(self, metadata: Optional[Dict[str, Any]] = None) -> RunTrace:
        columns = {}
        for name, values in self._columns.items():
            dtype = int if name in ("delay_price", "delay_flow", "sent", "dropped", "delivered") else float
            columns[name] = np.array(values, dtype=dtype)
        info = dict(metadata or {})
        info.update(
            {
                "lambda_max": self.metrics.lambda_max,
                "trace_every": self.trace_every,
                "x_bar": self._x_bar.tolist(),
                "lambda_bar": self._lam_bar.tolist(),
            }
        )
        return RunTrace(
            algorithm=self.algorithm,
            x_labels=self.x_labels,
            lambda_labels=self.lambda_labels,
            k=np.array(self._k, dtype=int),
            x=np.vstack(self._x),
            lam=np.vstack(self._lam),
            columns=columns,
            metadata=info,
        )


def ergodic_average(trace: RunTrace, K: int) -> Tuple[np.ndarray, np.ndarray]:
    """Means of iterates 1..K."""
    if K < 1:
        raise ValueError("Ergodic average needs K >= 1")
    if not trace.every_tick or trace.n_records < K:
        raise TraceSchemaError(
            "Trace does not hold every iterate up to K",
            {"K": K, "records": trace.n_records},
        )
    return trace.x[1 : K + 1].mean(axis=0), trace.lam[1 : K + 1].mean(axis=0)


def _tick_arrays(trace: RunTrace) -> Dict[str, np.ndarray]:
    """Per-tick steps and realized ages: entry t belongs to the tick producing iterate t+1."""
    return {
        "alpha": trace.columns["alpha"][1:],
        "beta": trace.columns["beta"][1:],
        "delay_price": trace.columns["delay_price"][1:],
        "delay_flow": trace.columns["delay_flow"][1:],
    }


def _window_sums(steps: np.ndarray, ages: np.ndarray) -> np.ndarray:
    """Σ_{s=t−age_t}^{t−1} steps_s for every tick t."""
    prefix = np.concatenate([[0.0], np.cumsum(steps)])
    ticks = np.arange(len(steps))
    return prefix[ticks] - prefix[ticks - ages]


def error_terms(trace: RunTrace, constants: TheoryConstants) -> Dict[str, np.ndarray]:
    ticks = _tick_arrays(trace)
    alpha, beta = ticks["alpha"], ticks["beta"]
    S = _window_sums(beta, ticks["delay_price"])
    T = _window_sums(alpha, ticks["delay_flow"])
    c = constants
    squared = alpha**2 * c.G**2 + beta**2 * c.D**2
    delay = 2 * alpha * S * c.G * c.U + 2 * beta * T * c.D * c.lambda_max
    mismatch = 2 * np.abs(alpha - beta) * c.lambda_radius * c.H_U
    noise = 2 * alpha * c.noise_primal + 2 * beta * c.noise_dual
    return {
        "S": S,
        "T": T,
        "squared": squared,
        "delay": delay,
        "mismatch": mismatch,
        "noise": noise,
        "core": squared + delay,
        "E": squared + delay + mismatch + noise,
    }


@dataclass
class DescentReport:
    applicable: bool
    reason: str = ""
    checked_ticks: int = 0
    violations: List[int] = field(default_factory=list)
    max_excess: float = float("-inf")
    precondition_breaches: int = 0
    first_breach: Optional[int] = None
    trend_nonincreasing: bool = True
    trend_max_increase: float = float("-inf")
    descent_sum: float = 0.0
    extra_terms: float = 0.0
    tolerance: float = CHECK_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.applicable and not self.violations and self.precondition_breaches == 0

    def as_dict(self) -> Dict[str, Any]:
        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "passed": self.passed,
            "checked_ticks": self.checked_ticks,
            "violation_count": len(self.violations),
            "violations": self.violations[:50],
            "max_excess": self.max_excess,
            "precondition_breaches": self.precondition_breaches,
            "first_breach": self.first_breach,
            "trend_nonincreasing": self.trend_nonincreasing,
            "trend_max_increase": self.trend_max_increase,
            "descent_sum": self.descent_sum,
            "extra_terms": self.extra_terms,
            "tolerance": self.tolerance,
        }


def _not_applicable(trace: RunTrace, problem: Problem) -> Optional[str]:
    if isinstance(problem, QuadraticProblem):
        return "descent inequality is stated for flow instances"
    if not trace.every_tick:
        return "trace does not record every tick"
    if trace.metadata.get("activation_prob", 1.0) < 1.0:
        return "partial activation leaves coordinates without a step"
    if trace.metadata.get("drift", False):
        return "drifting parameters move the saddle point"
    if trace.n_records < 1:
        return "trace has no iterations"
    return None


def lyapunov_descent_check(
    trace: RunTrace,
    constants: TheoryConstants,
    saddle: Optional[SaddlePoint],
    problem: Problem,
    tolerance: float = CHECK_TOLERANCE,
) -> DescentReport:
    """Check V^{k+1} − V^k ≤ −2αΔ^x − 2βΔ^λ + E_k at every tick.

    Ticks from the first iterate with a price above Λ_max onward are counted
    as precondition breaches instead of violations; any breach fails the check.
    """
    if saddle is None:
        raise ProblemError("Descent check needs an oracle saddle point")
    reason = _not_applicable(trace, problem)
    if reason:
        logger.info({"message": "Descent check not applicable", "reason": reason})
        return DescentReport(applicable=False, reason=reason, tolerance=tolerance)

    x, lam = trace.x, trace.lam
    x_star, lam_star = saddle.x_star, saddle.lambda_star
    V = np.sum((x - x_star) ** 2, axis=1) + np.sum((lam - lam_star) ** 2, axis=1)

    L_star = lagrangian(problem, x_star, lam_star)
    d = problem.demand_vector
    head = problem.head_retailer
    incidence = np.zeros((problem.n_edges, problem.n_retailers))
    rows = np.nonzero(head >= 0)[0]
    incidence[rows, head[rows]] = 1.0
    cost = np.sum(0.5 * problem.curvatures * x * x + problem.costs * x, axis=1)
    h = x @ incidence
    delta_x = cost + (d - h) @ lam_star - L_star
    h_star = x_star @ incidence
    delta_lam = L_star - (saddle.optimal_value + lam @ (d - h_star))

    ticks = _tick_arrays(trace)
    terms = error_terms(trace, constants)
    alpha, beta = ticks["alpha"], ticks["beta"]
    n = len(alpha)
    lhs = V[1:] - V[:-1]
    descent = 2 * alpha * delta_x[:n] + 2 * beta * delta_lam[:n]
    excess = lhs + descent - terms["E"]

    peak = np.maximum.accumulate(np.max(lam, axis=1)) if lam.shape[1] else np.zeros(len(V))
    breached = peak[1:] > constants.lambda_max + tolerance
    checked = ~breached
    first_breach = int(np.argmax(breached)) if breached.any() else None

    violations = [int(t) for t in np.nonzero(checked & (excess > tolerance))[0]]
    trend = V[1:] + np.cumsum(descent - terms["E"])
    trend_steps = np.diff(np.concatenate([[V[0]], trend]))[checked]
    report = DescentReport(
        applicable=True,
        checked_ticks=int(np.sum(checked)),
        violations=violations,
        max_excess=float(np.max(excess[checked])) if checked.any() else float("-inf"),
        precondition_breaches=int(np.sum(breached)),
        first_breach=first_breach,
        trend_nonincreasing=bool(np.all(trend_steps <= tolerance)),
        trend_max_increase=float(np.max(trend_steps)) if trend_steps.size else float("-inf"),
        descent_sum=float(np.sum(descent[checked])),
        extra_terms=float(np.sum((terms["mismatch"] + terms["noise"])[checked])),
        tolerance=tolerance,
    )
    if violations:
        logger.warning(
            {
                "message": "Descent inequality violated",
                "count": len(violations),
                "first": violations[0],
                "max_excess": report.max_excess,
            }
        )
    if breached.any():
        logger.warning(
            {
                "message": "Price iterate left the dual box",
                "first_breach": first_breach,
                "lambda_max": constants.lambda_max,
            }
        )
    return report


@dataclass
class ErrorSeriesReport:
    diminishing: bool
    iterations: int
    partial_sum: float
    half_sum: float
    tail_fraction: float
    growth_exponent: float
    delay_constant: float
    delay_decay: float
    summable: bool

    @property
    def passed(self) -> bool:
        return self.summable

    def as_dict(self) -> Dict[str, Any]:
        result = dict(self.__dict__)
        result["passed"] = self.passed
        result["tail_within_5pct"] = self.tail_fraction < 0.05
        return result


def _is_diminishing(trace: RunTrace) -> bool:
    schedules = [trace.metadata.get(name) for name in ("alpha_schedule", "beta_schedule")]
    if all(isinstance(s, dict) for s in schedules):
        return all(s.get("kind") == "diminishing" and s.get("exponent", 0) > 0 for s in schedules)
    alpha = trace.columns["alpha"][1:]
    return len(alpha) > 1 and bool(alpha[-1] < alpha[0])


def error_series_check(trace: RunTrace, constants: TheoryConstants) -> ErrorSeriesReport:
    """Partial sums of E_k with the tail increment and a fitted growth exponent.

    A series the rate argument can absorb grows slower than √K; constant
    steps grow linearly and are reported as non-summable.
    """
    if not trace.every_tick or trace.n_records < 2:
        raise TraceSchemaError("Error series needs a trace with every tick recorded")
    terms = error_terms(trace, constants)
    partial = np.cumsum(terms["E"])
    K = len(partial)
    half = partial[K // 2 - 1] if K >= 2 else 0.0
    total = float(partial[-1])
    tail = (total - float(half)) / total if total > 0 else 0.0

    lo = max(1, K // 100)
    samples = np.unique(np.geomspace(lo, K, num=min(30, K - lo + 1)).astype(int))
    if len(samples) >= 2 and np.all(partial[samples - 1] > 0):
        exponent = float(np.polyfit(np.log(samples), np.log(partial[samples - 1]), 1)[0])
    else:
        exponent = 0.0

    window = max(1, K // 10)
    ticks = np.arange(K - window, K)
    delay_decay = float(np.mean(terms["S"][ticks] * np.sqrt(ticks + 1.0)))
    delay_constant = float(
        np.sum(terms["delay"]) + np.sum(terms["mismatch"]) + np.sum(terms["noise"])
    )
    diminishing = _is_diminishing(trace)
    return ErrorSeriesReport(
        diminishing=diminishing,
        iterations=K,
        partial_sum=total,
        half_sum=float(half),
        tail_fraction=float(tail),
        growth_exponent=exponent,
        delay_constant=delay_constant,
        delay_decay=delay_decay,
        summable=diminishing and exponent < 0.5,
    )


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float
    clipped: int
    samples: Tuple[int, ...]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "clipped": self.clipped,
            "samples": list(self.samples),
        }


def fit_rate(ks: Sequence[int], values: Sequence[float], floor: float = GAP_FLOOR) -> RateFit:
    """Least-squares slope of log(value) against log(k); values below ``floor`` are clipped."""
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ks) < 2:
        raise ValueError("Rate fit needs at least two samples")
    clipped = int(np.sum(values < floor))
    if clipped:
        logger.warning({"message": "Gap values clipped at numeric floor", "count": clipped})
    logs = np.log(np.maximum(values, floor))
    slope, intercept = np.polyfit(np.log(ks), logs, 1)
    fitted = slope * np.log(ks) + intercept
    residual = float(np.sqrt(np.mean((logs - fitted) ** 2)))
    return RateFit(float(slope), float(intercept), residual, clipped, tuple(int(k) for k in ks))


def rate_slope(
    trace: RunTrace,
    metric: str = "ergodic_gap",
    at: Optional[Sequence[int]] = None,
    points: int = 25,
) -> RateFit:
    """Fit the decay exponent of ``metric`` at logarithmically spaced iterations."""
    stored = trace.k[1:]
    values = trace.column(metric)[1:]
    if len(stored) == 0:
        raise TraceSchemaError("Trace has no iterations to fit")
    if at is None:
        if stored[-1] < 1000 * stored[0]:
            raise ValueError("Rate fit needs at least three decades of iterations")
        at = np.unique(np.geomspace(stored[0], stored[-1], num=points).astype(int))
    positions = np.searchsorted(stored, np.asarray(at), side="right") - 1
    if np.any(positions < 0):
        raise ValueError("Requested iteration precedes the first stored record")
    positions = np.unique(positions)
    return fit_rate(stored[positions], values[positions])


def convergence_time(
    trace: RunTrace,
    gap_thresh: float = 0.1,
    viol_thresh: float = 0.05,
    metric: str = "gap",
) -> Optional[int]:
    """First stored k ≥ 1 with ``metric`` < gap_thresh and violation < viol_thresh."""
    if not gap_thresh > 0 or not viol_thresh > 0:
        raise ValueError("Convergence thresholds must be positive")
    if trace.n_records == 0:
        return None
    gaps = trace.column(metric)[1:]
    violations = trace.column("violation")[1:]
    hits = np.nonzero((gaps < gap_thresh) & (violations < viol_thresh))[0]
    if hits.size == 0:
        return None
    return int(trace.k[1:][hits[0]])


def median_convergence_time(values: Sequence[Optional[int]]) -> float:
    """Median k* with runs that never converged counted as +inf."""
    if not values:
        return float("inf")
    return float(np.median([float("inf") if v is None else float(v) for v in values]))


def budget_constant(
    constants: TheoryConstants, v0: float, delay_constant: float = 0.0
) -> float:
    return v0 + constants.G**2 + constants.D**2 + delay_constant


def iteration_budget_for(
    epsilon: float,
    constants: TheoryConstants,
    v0: float,
    delay_constant: float = 0.0,
) -> int:
    """K ≥ ⌈(C/ε)²⌉ with C = V⁰ + G² + D² + C̃."""
    if not epsilon > 0:
        raise ValueError("Target accuracy must be positive")
    C = budget_constant(constants, v0, delay_constant)
    return int(math.ceil((C / epsilon) ** 2))
