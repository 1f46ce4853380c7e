"""Exact saddle points used as ground truth for every gap metric."""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from .errors import InfeasibleProblemError, ProblemError, SingularSystemError
from .problem import Problem, QuadraticProblem, SupplyChainProblem, slater_check, total_cost

logger = logging.getLogger("dapd-sco")

KKT_RESIDUAL_TOLERANCE = 1e-10
# flow prices overshoot λ* while inbound flows catch up with demand
FLOW_RADIUS_FACTOR = 4.0
QUADRATIC_RADIUS_FACTOR = 2.0
_caveat_logged = False


@dataclass(frozen=True, eq=False)
class SaddlePoint:
    x_star: np.ndarray
    lambda_star: np.ndarray
    optimal_value: float
    metadata: Dict[str, Any] = field(default_factory=dict)


def _fill_linear(problem: SupplyChainProblem, edges, demand: float, x: np.ndarray):
    """Greedy fill by ascending (cost, edge-id); returns the marginal cost and order."""
    order = sorted(edges, key=lambda i: (problem.edges[i].cost, problem.edges[i].id))
    remaining = demand
    marginal = 0.0
    for i in order:
        if remaining <= 0:
            break
        take = min(problem.edges[i].capacity, remaining)
        x[i] = take
        remaining -= take
        marginal = problem.edges[i].cost
    return marginal, [problem.edges[i].id for i in order]


def _fill_quadratic(problem: SupplyChainProblem, edges, demand: float, x: np.ndarray):
    """Water-filling: find the price at which the clipped best responses meet demand."""
    c = np.array([problem.edges[i].cost for i in edges])
    q = np.array([problem.edges[i].curvature for i in edges])
    u = np.array([problem.edges[i].capacity for i in edges])

    def response(price: float) -> np.ndarray:
        return np.clip((price - c) / q, 0.0, u)

    upper = float(np.max(c + q * u))
    price = brentq(lambda p: float(np.sum(response(p))) - demand, 0.0, upper, xtol=1e-14)
    x[list(edges)] = response(price)
    return price, [problem.edges[i].id for i in edges]


def exact_oracle_greedy(problem: SupplyChainProblem) -> SaddlePoint:
    """Exact saddle point of the DAG problem, retailer by retailer.

    Constraints only couple the edges entering one retailer, and every cost is
    positive, so each constraint is tight at the optimum and edges that feed
    no retailer carry zero flow.
    """
    global _caveat_logged

    if not slater_check(problem).holds:
        logger.warning({"message": "Slater condition fails; solving anyway"})

    x = np.zeros(problem.n_edges)
    lam = np.zeros(problem.n_retailers)
    order: Dict[str, List[str]] = {}
    for r, retailer in enumerate(problem.retailers):
        edges = problem.inbound[retailer]
        demand = problem.demands[retailer]
        capacity = float(sum(problem.edges[i].capacity for i in edges))
        if capacity < demand:
            raise InfeasibleProblemError(
                f"Retailer '{retailer}' demand {demand} exceeds inbound capacity {capacity}",
                {"retailer": retailer, "demand": demand, "capacity": capacity},
            )
        kinds = {problem.edges[i].cost_kind for i in edges}
        if kinds == {"linear"}:
            lam[r], order[retailer] = _fill_linear(problem, edges, demand, x)
        elif kinds == {"quadratic"}:
            lam[r], order[retailer] = _fill_quadratic(problem, edges, demand, x)
        else:
            raise ProblemError(
                f"Retailer '{retailer}' mixes linear and quadratic inbound costs",
                {"retailer": retailer},
            )

    if not _caveat_logged:
        logger.info(
            {
                "message": "No conservation at warehouses: edges that feed no retailer carry zero optimal flow",
            }
        )
        _caveat_logged = True

    return SaddlePoint(
        x_star=x,
        lambda_star=lam,
        optimal_value=total_cost(problem, x),
        metadata={"kind": "greedy", "tie_breaking": "edge-id", "order": order},
    )


def _check_pivots(lu: np.ndarray, scale: float) -> None:
    pivots = np.diag(lu)
    tolerance = max(lu.shape) * np.finfo(float).eps * max(scale, 1.0)
    for i, value in enumerate(pivots):
        if abs(value) <= tolerance:
            raise SingularSystemError(i, float(value))


def exact_oracle_kkt(problem: QuadraticProblem) -> SaddlePoint:
    """Solve diag(c)·x + d + Aᵀλ = 0, A x = b by LU with partial pivoting."""
    n, m = problem.n_agents, problem.n_rows
    A = problem.matrix
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = np.diag(problem.curvature)
    kkt[:n, n:] = A.T
    kkt[n:, :n] = A
    rhs = np.concatenate([-problem.linear, problem.rhs])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(kkt)
    _check_pivots(lu, float(np.max(np.abs(kkt))))

    solution = linalg.lu_solve((lu, piv), rhs)
    residual = rhs - kkt @ solution
    if np.max(np.abs(residual)) > KKT_RESIDUAL_TOLERANCE:
        solution = solution + linalg.lu_solve((lu, piv), residual)

    x, lam = solution[:n], solution[n:]
    stationarity = float(
        np.linalg.norm(problem.curvature * x + problem.linear + A.T @ lam)
    )
    feasibility = float(np.linalg.norm(A @ x - problem.rhs))
    if max(stationarity, feasibility) > KKT_RESIDUAL_TOLERANCE:
        logger.warning(
            {
                "message": "KKT residuals above tolerance",
                "stationarity": stationarity,
                "feasibility": feasibility,
            }
        )
    return SaddlePoint(
        x_star=x,
        lambda_star=lam,
        optimal_value=total_cost(problem, x),
        metadata={
            "kind": "kkt",
            "stationarity_residual": stationarity,
            "feasibility_residual": feasibility,
        },
    )


def exact_oracle(problem: Problem) -> SaddlePoint:
    if isinstance(problem, QuadraticProblem):
        return exact_oracle_kkt(problem)
    return exact_oracle_greedy(problem)


def default_lambda_max(problem: Problem, saddle: SaddlePoint) -> float:
    """Dual radius around the oracle prices.

    4·max(1, max λ*) bounds the flow box, 2·max(1, ‖λ*‖) the quadratic ball.
    """
    if isinstance(problem, QuadraticProblem):
        return QUADRATIC_RADIUS_FACTOR * max(1.0, float(np.linalg.norm(saddle.lambda_star)))
    peak = float(np.max(saddle.lambda_star)) if saddle.lambda_star.size else 0.0
    return FLOW_RADIUS_FACTOR * max(1.0, peak)
