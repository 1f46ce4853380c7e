"""Problem instances: the three-tier DAG flow problem and its quadratic variant.

Flow vectors are numpy arrays aligned with ``SupplyChainProblem.edges``; price
vectors are aligned with ``SupplyChainProblem.retailers``. Both problem types
are immutable after construction, so every operation here is a pure function.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Mapping, NamedTuple, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from .errors import ProblemError

logger = logging.getLogger("dapd-sco")

TIERS = ("supplier", "warehouse", "retailer")
SLATER_EPSILON = 1e-3


@dataclass(frozen=True)
class Node:
    id: str
    tier: str


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    cost: float
    capacity: float
    curvature: float = 0.0

    @property
    def cost_kind(self) -> str:
        return "quadratic" if self.curvature > 0 else "linear"

    @property
    def cost_params(self) -> Tuple[float, ...]:
        if self.curvature > 0:
            return (self.curvature, self.cost)
        return (self.cost,)


@dataclass(frozen=True)
class SupplyChainProblem:
    """Min-cost flow over a DAG with inbound-demand constraints at retailers."""

    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]
    demands: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        node_ids = [n.id for n in self.nodes]
        if len(set(node_ids)) != len(node_ids):
            raise ProblemError("Node ids must be unique")
        for node in self.nodes:
            if node.tier not in TIERS:
                raise ProblemError(
                    f"Node '{node.id}' has unknown tier '{node.tier}'",
                    {"node": node.id, "tier": node.tier},
                )
        edge_ids = [e.id for e in self.edges]
        if len(set(edge_ids)) != len(edge_ids):
            raise ProblemError("Edge ids must be unique")

        known = set(node_ids)
        for edge in self.edges:
            if edge.source not in known or edge.target not in known:
                raise ProblemError(
                    f"Edge '{edge.id}' references an unknown node",
                    {"edge": edge.id, "source": edge.source, "target": edge.target},
                )
            if not edge.cost > 0:
                raise ProblemError(f"Edge '{edge.id}' needs a positive cost")
            if not edge.capacity > 0:
                raise ProblemError(f"Edge '{edge.id}' needs a positive capacity")
            if edge.curvature < 0:
                raise ProblemError(f"Edge '{edge.id}' has negative curvature")

        retailers = {n.id for n in self.nodes if n.tier == "retailer"}
        for node_id, demand in self.demands.items():
            if node_id not in retailers:
                raise ProblemError(
                    f"Demand given for non-retailer node '{node_id}'",
                    {"node": node_id},
                )
            if not demand > 0:
                raise ProblemError(f"Retailer '{node_id}' needs a positive demand")
        missing = retailers - set(self.demands)
        if missing:
            raise ProblemError(
                "Every retailer needs a demand", {"missing": sorted(missing)}
            )

        graph = nx.DiGraph()
        graph.add_nodes_from(node_ids)
        graph.add_edges_from((e.source, e.target) for e in self.edges)
        if not nx.is_directed_acyclic_graph(graph):
            raise ProblemError("Supply-chain graph must be acyclic")

    @cached_property
    def tiers(self) -> Dict[str, str]:
        return {n.id: n.tier for n in self.nodes}

    @cached_property
    def retailers(self) -> Tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.tier == "retailer")

    @cached_property
    def retailer_index(self) -> Dict[str, int]:
        return {r: i for i, r in enumerate(self.retailers)}

    @cached_property
    def edge_index(self) -> Dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.edges], dtype=float)

    @cached_property
    def capacities(self) -> np.ndarray:
        return np.array([e.capacity for e in self.edges], dtype=float)

    @cached_property
    def curvatures(self) -> np.ndarray:
        return np.array([e.curvature for e in self.edges], dtype=float)

    @cached_property
    def demand_vector(self) -> np.ndarray:
        return np.array([self.demands[r] for r in self.retailers], dtype=float)

    @cached_property
    def head_retailer(self) -> np.ndarray:
        """Retailer index of each edge's target, or -1 when it is not a retailer."""
        index = self.retailer_index
        return np.array([index.get(e.target, -1) for e in self.edges], dtype=int)

    @cached_property
    def inbound(self) -> Dict[str, Tuple[int, ...]]:
        """Edge indices feeding each retailer, in edge order."""
        result: Dict[str, list] = {r: [] for r in self.retailers}
        for i, edge in enumerate(self.edges):
            if edge.target in result:
                result[edge.target].append(i)
        return {r: tuple(idx) for r, idx in result.items()}

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_retailers(self) -> int:
        return len(self.retailers)


@dataclass(frozen=True)
class QuadraticProblem:
    """min Σ ½ c_i x_i² + d_i x_i  subject to  A x = b."""

    c: Tuple[float, ...]
    d: Tuple[float, ...]
    A: Tuple[Tuple[float, ...], ...]
    b: Tuple[float, ...]
    roles: Tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.c)
        if n == 0:
            raise ProblemError("Quadratic problem needs at least one agent")
        if len(self.d) != n:
            raise ProblemError("Linear coefficients d must match c in length")
        if any(not ci > 0 for ci in self.c):
            raise ProblemError("Quadratic coefficients c must be positive")
        if len(self.A) != len(self.b):
            raise ProblemError("Constraint matrix rows must match b in length")
        if len(self.A) > n:
            raise ProblemError("Constraint matrix has more rows than agents")
        for r, row in enumerate(self.A):
            if len(row) != n:
                raise ProblemError(f"Constraint row {r} has wrong length")
            if not any(v != 0 for v in row):
                raise ProblemError(f"Constraint row {r} is all zeros", {"row": r})
        if self.roles and len(self.roles) != n:
            raise ProblemError("Roles must label every agent")

    @property
    def n_agents(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.b)

    @cached_property
    def curvature(self) -> np.ndarray:
        return np.array(self.c, dtype=float)

    @cached_property
    def linear(self) -> np.ndarray:
        return np.array(self.d, dtype=float)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array(self.A, dtype=float).reshape(self.n_rows, self.n_agents)

    @cached_property
    def rhs(self) -> np.ndarray:
        return np.array(self.b, dtype=float)

    @cached_property
    def row_support(self) -> Tuple[Tuple[int, ...], ...]:
        """Agent indices with a nonzero coefficient in each row."""
        return tuple(
            tuple(i for i, v in enumerate(row) if v != 0) for row in self.A
        )

    @cached_property
    def column_support(self) -> Tuple[Tuple[int, ...], ...]:
        """Row indices with a nonzero coefficient in each agent's column."""
        return tuple(
            tuple(r for r, row in enumerate(self.A) if row[i] != 0)
            for i in range(self.n_agents)
        )


Problem = Union[SupplyChainProblem, QuadraticProblem]


class SlaterCheck(NamedTuple):
    holds: bool
    witness: np.ndarray


def cost_value(kind: str, params: Sequence[float], x: float) -> float:
    """Value of a separable edge/agent cost: linear ``c x`` or quadratic ``½ c x² + d x``."""
    if kind == "linear":
        (c,) = params
        return c * x
    if kind == "quadratic":
        c, d = params
        if not c > 0:
            raise ProblemError("Quadratic cost needs positive curvature")
        return 0.5 * c * x * x + d * x
    raise ProblemError(f"Unknown cost kind '{kind}'")


def cost_gradient(kind: str, params: Sequence[float], x: float) -> float:
    if kind == "linear":
        (c,) = params
        return c
    if kind == "quadratic":
        c, d = params
        if not c > 0:
            raise ProblemError("Quadratic cost needs positive curvature")
        return c * x + d
    raise ProblemError(f"Unknown cost kind '{kind}'")


def as_flow_vector(problem: SupplyChainProblem, x) -> np.ndarray:
    """Accept an edge-aligned array or an ``{edge-id: flow}`` mapping."""
    if isinstance(x, Mapping):
        unknown = set(x) - set(problem.edge_index)
        if unknown:
            raise ProblemError("Unknown edge ids in flow", {"edges": sorted(unknown)})
        vector = np.zeros(problem.n_edges)
        for edge_id, value in x.items():
            vector[problem.edge_index[edge_id]] = value
        return vector
    vector = np.asarray(x, dtype=float)
    if vector.shape != (problem.n_edges,):
        raise ProblemError(
            "Flow vector has the wrong dimension",
            {"expected": problem.n_edges, "got": list(vector.shape)},
        )
    return vector


def _price_vector(problem: SupplyChainProblem, lam) -> np.ndarray:
    vector = np.asarray(lam, dtype=float)
    if vector.shape != (problem.n_retailers,):
        raise ProblemError(
            "Price vector has the wrong dimension",
            {"expected": problem.n_retailers, "got": list(vector.shape)},
        )
    return vector


def inbound_flow(problem: SupplyChainProblem, x, retailer: str) -> float:
    """h_i(x): total flow on edges entering ``retailer``."""
    tier = problem.tiers.get(retailer)
    if tier is None:
        raise ProblemError(f"Unknown node '{retailer}'", {"node": retailer})
    if tier != "retailer":
        raise ProblemError(
            f"Node '{retailer}' is a {tier}, not a retailer", {"node": retailer}
        )
    flows = as_flow_vector(problem, x)
    total = 0.0
    for i in problem.inbound[retailer]:
        total += flows[i]
    return total


def inbound_flows(problem: SupplyChainProblem, x) -> np.ndarray:
    """h(x) for every retailer, accumulated in edge order."""
    flows = as_flow_vector(problem, x)
    mask = problem.head_retailer >= 0
    return np.bincount(
        problem.head_retailer[mask],
        weights=flows[mask],
        minlength=problem.n_retailers,
    ).astype(float)


def total_cost(problem: Problem, x) -> float:
    """C(x) for the DAG problem, Σ f_i(x_i) for the quadratic variant."""
    if isinstance(problem, QuadraticProblem):
        v = np.asarray(x, dtype=float)
        return float(np.sum(0.5 * problem.curvature * v * v + problem.linear * v))
    flows = as_flow_vector(problem, x)
    return float(
        np.sum(0.5 * problem.curvatures * flows * flows + problem.costs * flows)
    )


def cost_gradients(problem: SupplyChainProblem, x: np.ndarray) -> np.ndarray:
    return problem.curvatures * x + problem.costs


def lagrangian(problem: Problem, x, lam) -> float:
    """L(x, λ) = C(x) + Σ λ_i (d_i − h_i(x)); quadratic variant: f(x) + λᵀ(Ax − b)."""
    if isinstance(problem, QuadraticProblem):
        v = np.asarray(x, dtype=float)
        mu = np.asarray(lam, dtype=float)
        if v.shape != (problem.n_agents,) or mu.shape != (problem.n_rows,):
            raise ProblemError("Primal or dual vector has the wrong dimension")
        residual = problem.matrix @ v - problem.rhs
        return total_cost(problem, v) + float(mu @ residual)
    flows = as_flow_vector(problem, x)
    prices = _price_vector(problem, lam)
    shortfall = problem.demand_vector - inbound_flows(problem, flows)
    return total_cost(problem, flows) + float(prices @ shortfall)


def slater_check(
    problem: SupplyChainProblem, epsilon: float = SLATER_EPSILON
) -> SlaterCheck:
    """Strict feasibility of the interior witness x̄ = (1 − ε)·u."""
    witness = (1.0 - epsilon) * problem.capacities
    inbound = inbound_flows(problem, witness)
    holds = bool(np.all(inbound > problem.demand_vector))
    if not holds:
        short = [
            r
            for r, h, d in zip(problem.retailers, inbound, problem.demand_vector)
            if not h > d
        ]
        logger.debug({"message": "Slater condition fails", "retailers": short})
    return SlaterCheck(holds, witness)
