from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from supplychain import (
    Edge,
    Node,
    Problem,
    QuadraticProblem,
    SupplyChainProblem,
    generate_fig1,
    generate_quadratic,
    generate_three_tier,
)


class NodeRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    tier: Literal["supplier", "warehouse", "retailer"]


class EdgeRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    source: str
    target: str
    cost: float
    capacity: float
    curvature: float = 0.0


class FlowProblemFile(BaseModel):
    """Problem file for the DAG flow instance."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["flow"] = "flow"
    nodes: List[NodeRecord]
    edges: List[EdgeRecord]
    demands: Dict[str, float]

    def to_problem(self) -> SupplyChainProblem:
        return SupplyChainProblem(
            nodes=tuple(Node(n.id, n.tier) for n in self.nodes),
            edges=tuple(
                Edge(e.id, e.source, e.target, e.cost, e.capacity, e.curvature)
                for e in self.edges
            ),
            demands=dict(self.demands),
        )


class QuadraticProblemFile(BaseModel):
    """Problem file for the equality-constrained quadratic variant (dense A)."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["quadratic"] = "quadratic"
    c: List[float]
    d: List[float]
    A: List[List[float]]
    b: List[float]
    roles: List[str] = Field(default_factory=list)

    def to_problem(self) -> QuadraticProblem:
        return QuadraticProblem(
            c=tuple(self.c),
            d=tuple(self.d),
            A=tuple(tuple(row) for row in self.A),
            b=tuple(self.b),
            roles=tuple(self.roles),
        )


ProblemFile = Annotated[
    Union[FlowProblemFile, QuadraticProblemFile], Field(discriminator="kind")
]
problem_file_adapter = TypeAdapter(ProblemFile)


def problem_to_file(problem: Problem) -> Union[FlowProblemFile, QuadraticProblemFile]:
    if isinstance(problem, QuadraticProblem):
        return QuadraticProblemFile(
            c=list(problem.c),
            d=list(problem.d),
            A=[list(row) for row in problem.A],
            b=list(problem.b),
            roles=list(problem.roles),
        )
    return FlowProblemFile(
        nodes=[NodeRecord(id=n.id, tier=n.tier) for n in problem.nodes],
        edges=[
            EdgeRecord(
                id=e.id,
                source=e.source,
                target=e.target,
                cost=e.cost,
                capacity=e.capacity,
                curvature=e.curvature,
            )
            for e in problem.edges
        ],
        demands=dict(problem.demands),
    )


class GeneratorSpec(BaseModel):
    """Seeded instance recipe; ``seed`` defaults to the run seed."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["three_tier", "fig1", "quadratic"] = "three_tier"
    seed: Optional[int] = None
    n_s: int = 2
    n_w: int = 3
    n_r: int = 5
    cost_range: Tuple[float, float] = (0.5, 2.0)
    demand_range: Tuple[float, float] = (0.0, 1.0)
    curvature_range: Tuple[float, float] = (0.5, 2.0)
    linear_range: Tuple[float, float] = (-1.0, 1.0)
    target_range: Tuple[float, float] = (0.0, 1.0)

    def build(self, default_seed: int = 0) -> Problem:
        seed = default_seed if self.seed is None else self.seed
        if self.kind == "fig1":
            return generate_fig1(seed, self.cost_range, self.demand_range)
        if self.kind == "quadratic":
            return generate_quadratic(
                seed,
                self.n_s,
                self.n_w,
                self.n_r,
                self.curvature_range,
                self.linear_range,
                self.target_range,
            )
        return generate_three_tier(
            seed, self.n_s, self.n_w, self.n_r, self.cost_range, self.demand_range
        )
