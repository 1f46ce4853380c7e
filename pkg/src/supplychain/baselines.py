"""Comparison algorithms emitting traces in the shared schema.

- ``sync_pd``: synchronous Arrow–Hurwicz, every coordinate reads the previous iterate.
- ``admm``: two-block ADMM on the split x = z with z projected onto {A z = b}.
- ``gradient_push``: push-sum gradient descent on Σf_i + (μ/2)‖A x − b‖².
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import networkx as nx
import numpy as np

from .agents import StepSchedule, step_value
from .analysis import TraceRecorder
from .errors import ConfigError, ProblemError
from .problem import Problem, QuadraticProblem
from .simnet import initial_point, resolve_lambda_max, schedule_metadata
from .tracing import RunTrace

logger = logging.getLogger("dapd-sco")

BASELINES = ("sync_pd", "admm", "gradient_push")
MIXING_TOLERANCE = 1e-12


def ring_mixing(n: int) -> np.ndarray:
    """Bidirectional ring with self-loops; column j spreads 1/(outdeg_j + 1)."""
    if n < 1:
        raise ProblemError("Mixing network needs at least one node")
    adjacency = np.eye(n, dtype=bool)
    for i in range(n):
        adjacency[(i + 1) % n, i] = True
        adjacency[(i - 1) % n, i] = True
    return adjacency / adjacency.sum(axis=0, keepdims=True)


def validate_mixing(mixing: np.ndarray) -> np.ndarray:
    P = np.asarray(mixing, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ProblemError("Mixing matrix must be square")
    if np.any(P < 0):
        raise ProblemError("Mixing weights must be non-negative")
    if np.max(np.abs(P.sum(axis=0) - 1.0)) > MIXING_TOLERANCE:
        raise ProblemError("Mixing matrix must be column-stochastic")
    if np.any(np.diag(P) <= 0):
        raise ProblemError("Mixing matrix needs a positive diagonal")
    graph = nx.DiGraph()
    graph.add_nodes_from(range(P.shape[0]))
    sources, targets = np.nonzero(P.T > 0)
    graph.add_edges_from(zip(sources.tolist(), targets.tolist()))
    if not nx.is_strongly_connected(graph):
        raise ProblemError("Mixing network is not strongly connected")
    return P


@dataclass(frozen=True)
class BaselineKind:
    tag: str
    rho: float = 1.0
    penalty: float = 10.0
    mixing: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.tag not in BASELINES:
            raise ConfigError("algorithm", f"unknown baseline '{self.tag}'")
        if not self.rho > 0:
            raise ConfigError("admm_rho", "must be positive")
        if not self.penalty > 0:
            raise ConfigError("push_penalty", "must be positive")
        if self.mixing is not None:
            validate_mixing(self.mixing)


def _metadata(seed: int, init: str, alpha: StepSchedule, beta: StepSchedule, sent: int) -> Dict[str, Any]:
    return {
        "seed": seed,
        "init": init,
        "activation_prob": 1.0,
        "loss_rate": 0.0,
        "drift": False,
        "clamped_reads": 0,
        "messages": {"sent": sent, "dropped": 0, "delivered": sent},
        "alpha_schedule": schedule_metadata(alpha),
        "beta_schedule": schedule_metadata(beta),
    }


def sync_pd_run(
    problem: Problem,
    alpha: StepSchedule,
    beta: StepSchedule,
    iterations: int,
    init: str = "zeros",
    seed: int = 0,
    lambda_max: Optional[float] = None,
    trace_every: int = 1,
    x0: Optional[np.ndarray] = None,
    lam0: Optional[np.ndarray] = None,
) -> RunTrace:
    """Synchronous primal–dual: x^{k+1} uses λ^k and λ^{k+1} uses x^k."""
    if iterations < 1:
        raise ConfigError("iterations", "must be at least 1")
    start_x, start_lam = initial_point(problem, init, seed)
    x = start_x if x0 is None else np.array(x0, dtype=float)
    lam = start_lam if lam0 is None else np.array(lam0, dtype=float)
    recorder = TraceRecorder(
        problem,
        resolve_lambda_max(problem, lambda_max),
        "sync_pd",
        iterations,
        x,
        lam,
        trace_every,
    )

    if isinstance(problem, QuadraticProblem):
        A = problem.matrix
        columns = [
            [(r, float(A[r, i])) for r in problem.column_support[i]] for i in range(problem.n_agents)
        ]
        rows = [[(i, float(A[r, i])) for i in problem.row_support[r]] for r in range(problem.n_rows)]
        c = [float(v) for v in problem.curvature]
        d = [float(v) for v in problem.linear]
        b = [float(v) for v in problem.rhs]
        per_tick = problem.n_agents + problem.n_rows
        xs, lams = [float(v) for v in x], [float(v) for v in lam]
        for k in range(iterations):
            a, bk = step_value(alpha, k), step_value(beta, k)
            # agent accumulation order; unimpaired dapdsco traces match bit for bit
            x_next = []
            for i, column in enumerate(columns):
                grad = c[i] * xs[i] + d[i]
                for r, coeff in column:
                    grad += coeff * lams[r]
                x_next.append(xs[i] - a * grad)
            lam_next = []
            for r, row in enumerate(rows):
                total = 0.0
                for i, coeff in row:
                    total += coeff * xs[i]
                lam_next.append(lams[r] + bk * (total - b[r]))
            xs, lams = x_next, lam_next
            x, lam = np.array(xs), np.array(lams)
            recorder.record(k + 1, x, lam, a, bk, 0, 0, per_tick, 0, per_tick)
    else:
        head = problem.head_retailer
        mask = head >= 0
        q, c, u = problem.curvatures, problem.costs, problem.capacities
        demand = problem.demand_vector
        per_tick = problem.n_edges + problem.n_retailers
        for k in range(iterations):
            a, bk = step_value(alpha, k), step_value(beta, k)
            price = np.append(lam, 0.0)[head]
            g = (q * x + c) - price
            h = np.bincount(head[mask], weights=x[mask], minlength=problem.n_retailers)
            x_next = np.clip(x - a * g, 0.0, u)
            lam = np.maximum(0.0, lam + bk * (demand - h))
            x = x_next
            recorder.record(k + 1, x, lam, a, bk, 0, 0, per_tick, 0, per_tick)

    return recorder.finish(_metadata(seed, init, alpha, beta, per_tick * iterations))


def admm_run(
    problem: QuadraticProblem,
    rho: float = 1.0,
    iterations: int = 1000,
    init: str = "zeros",
    seed: int = 0,
    lambda_max: Optional[float] = None,
    trace_every: int = 1,
) -> RunTrace:
    """Two-block ADMM; the trace reports the feasible block z and λ = ρ (A⁺)ᵀ u."""
    if not isinstance(problem, QuadraticProblem):
        raise ProblemError("ADMM baseline needs a quadratic instance")
    if not rho > 0:
        raise ConfigError("admm_rho", "must be positive")
    A, b = problem.matrix, problem.rhs
    c, d = problem.curvature, problem.linear
    if np.linalg.matrix_rank(A) < problem.n_rows:
        raise ProblemError("ADMM needs a constraint matrix with full row rank")
    pseudo = np.linalg.pinv(A)

    x0, lam0 = initial_point(problem, init, seed)
    z = x0.copy()
    u = np.zeros(problem.n_agents)
    recorder = TraceRecorder(
        problem,
        resolve_lambda_max(problem, lambda_max),
        "admm",
        iterations,
        z,
        lam0,
        trace_every,
    )
    per_tick = 2 * problem.n_agents
    for k in range(iterations):
        x = (rho * (z - u) - d) / (c + rho)
        v = x + u
        z = v - pseudo @ (A @ v - b)
        u = u + x - z
        lam = rho * (pseudo.T @ u)
        recorder.record(k + 1, z, lam, rho, rho, 0, 0, per_tick, 0, per_tick)

    constant = StepSchedule.constant(rho)
    return recorder.finish(_metadata(seed, init, constant, constant, per_tick * iterations))


def _push_sum_mix(P: np.ndarray, values: np.ndarray, weights: np.ndarray):
    return P @ values, P @ weights


def push_sum_consensus(values, mixing: np.ndarray, iterations: int) -> np.ndarray:
    """Value/weight ratios after ``iterations`` rounds of mixing without gradients."""
    P = validate_mixing(mixing)
    w = np.asarray(values, dtype=float).copy()
    y = np.ones(P.shape[0])
    for _ in range(iterations):
        w, y = _push_sum_mix(P, w, y)
    return w / y if w.ndim == 1 else w / y[:, None]


def gradient_push_run(
    problem: QuadraticProblem,
    alpha: StepSchedule,
    iterations: int,
    mixing: Optional[np.ndarray] = None,
    penalty: float = 10.0,
    init: str = "zeros",
    seed: int = 0,
    lambda_max: Optional[float] = None,
    trace_every: int = 1,
) -> RunTrace:
    """Push-sum over the penalized objective; node i reports coordinate i of its ratio."""
    if not isinstance(problem, QuadraticProblem):
        raise ProblemError("Gradient push baseline needs a quadratic instance")
    if not penalty > 0:
        raise ConfigError("push_penalty", "must be positive")
    n = problem.n_agents
    P = validate_mixing(ring_mixing(n) if mixing is None else mixing)
    if P.shape[0] != n:
        raise ProblemError("Mixing matrix size must match the number of agents")
    A, b = problem.matrix, problem.rhs
    c, d = problem.curvature, problem.linear
    diagonal = np.arange(n)

    x0, _ = initial_point(problem, init, seed)
    W = np.tile(x0, (n, 1))
    y = np.ones(n)
    recorder = TraceRecorder(
        problem,
        resolve_lambda_max(problem, lambda_max),
        "gradient_push",
        iterations,
        x0,
        penalty * (A @ x0 - b),
        trace_every,
    )
    out_degree = np.count_nonzero(P, axis=0) - 1
    per_tick = int(np.sum(out_degree)) * (n + 1)
    for k in range(iterations):
        a = step_value(alpha, k)
        W, y = _push_sum_mix(P, W, y)
        Z = W / y[:, None]
        G = (penalty / n) * (Z @ A.T - b) @ A
        G[diagonal, diagonal] += c * Z[diagonal, diagonal] + d
        W = W - a * G
        x = (W / y[:, None])[diagonal, diagonal]
        lam = penalty * (A @ x - b)
        recorder.record(k + 1, x, lam, a, a, 0, 0, per_tick, 0, per_tick)

    logger.debug({"message": "Gradient push finished", "messages_per_tick": per_tick})
    return recorder.finish(_metadata(seed, init, alpha, alpha, per_tick * iterations))


def run_baseline(
    kind: BaselineKind,
    problem: Problem,
    alpha: StepSchedule,
    beta: StepSchedule,
    iterations: int,
    init: str = "zeros",
    seed: int = 0,
    lambda_max: Optional[float] = None,
    trace_every: int = 1,
) -> RunTrace:
    if kind.tag == "sync_pd":
        return sync_pd_run(
            problem, alpha, beta, iterations, init, seed, lambda_max, trace_every
        )
    if kind.tag == "admm":
        return admm_run(problem, kind.rho, iterations, init, seed, lambda_max, trace_every)
    return gradient_push_run(
        problem, alpha, iterations, kind.mixing, kind.penalty, init, seed,
        lambda_max, trace_every,
    )
