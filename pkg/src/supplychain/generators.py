"""Seeded instance generators for the three-tier network and the quadratic variant."""

import logging
from typing import List, Tuple

import numpy as np

from .errors import ProblemError
from .problem import Edge, Node, QuadraticProblem, SupplyChainProblem

logger = logging.getLogger("dapd-sco")

CAPACITY_HEADROOM = 1.5


def _check_range(name: str, bounds: Tuple[float, float]) -> Tuple[float, float]:
    lo, hi = float(bounds[0]), float(bounds[1])
    if not hi >= lo:
        raise ProblemError(f"Range '{name}' is empty", {name: [lo, hi]})
    return lo, hi


def _positive_uniform(rng: np.random.Generator, lo: float, hi: float, size: int):
    """Uniform on (max(lo, 0), hi]; the upper end is closed so zero never appears."""
    if not hi > 0:
        raise ProblemError("Demand range must contain positive values", {"range": [lo, hi]})
    lo = max(lo, 0.0)
    return hi - (hi - lo) * rng.random(size)


def _nodes(prefix: str, tier: str, count: int) -> List[Node]:
    return [Node(f"{prefix}{i + 1}", tier) for i in range(count)]


def _layered_problem(
    rng: np.random.Generator,
    suppliers: List[Node],
    warehouses: List[Node],
    retailers: List[Node],
    links: List[Tuple[Node, Node]],
    cost_range: Tuple[float, float],
    demand_range: Tuple[float, float],
) -> SupplyChainProblem:
    lo_c, hi_c = _check_range("cost_range", cost_range)
    if not lo_c > 0:
        raise ProblemError("Costs must be positive", {"cost_range": [lo_c, hi_c]})
    lo_d, hi_d = _check_range("demand_range", demand_range)

    demands = _positive_uniform(rng, lo_d, hi_d, len(retailers))
    demand_of = {r.id: float(d) for r, d in zip(retailers, demands)}
    costs = rng.uniform(lo_c, hi_c, len(links))

    in_degree = {r.id: 0 for r in retailers}
    out_share = {w.id: 0.0 for w in warehouses}
    for src, dst in links:
        if dst.id in in_degree:
            in_degree[dst.id] += 1
            out_share[src.id] += demand_of[dst.id]
    supplier_degree = {w.id: 0 for w in warehouses}
    for src, dst in links:
        if dst.id in supplier_degree:
            supplier_degree[dst.id] += 1

    edges = []
    for (src, dst), cost in zip(links, costs):
        if dst.tier == "retailer":
            capacity = CAPACITY_HEADROOM * demand_of[dst.id] / in_degree[dst.id]
        else:
            # warehouses with no retailer still need a positive capacity
            capacity = (
                CAPACITY_HEADROOM
                * max(out_share[dst.id], float(np.mean(demands)))
                / max(supplier_degree[dst.id], 1)
            )
        edges.append(
            Edge(f"{src.id}-{dst.id}", src.id, dst.id, float(cost), float(capacity))
        )

    return SupplyChainProblem(
        nodes=tuple(suppliers + warehouses + retailers),
        edges=tuple(edges),
        demands=demand_of,
    )


def generate_three_tier(
    seed: int,
    n_s: int = 2,
    n_w: int = 3,
    n_r: int = 5,
    cost_range: Tuple[float, float] = (0.5, 2.0),
    demand_range: Tuple[float, float] = (0.0, 1.0),
) -> SupplyChainProblem:
    """Complete bipartite supplier→warehouse and warehouse→retailer layers.

    Every retailer's inbound capacities sum to 1.5× its demand, which makes
    the Slater witness strictly feasible.
    """
    if min(n_s, n_w, n_r) < 1:
        raise ProblemError(
            "Tier counts must be at least 1", {"n_s": n_s, "n_w": n_w, "n_r": n_r}
        )
    rng = np.random.default_rng(seed)
    suppliers = _nodes("S", "supplier", n_s)
    warehouses = _nodes("W", "warehouse", n_w)
    retailers = _nodes("R", "retailer", n_r)
    links = [(s, w) for s in suppliers for w in warehouses]
    links += [(w, r) for w in warehouses for r in retailers]
    problem = _layered_problem(
        rng, suppliers, warehouses, retailers, links, cost_range, demand_range
    )
    logger.debug(
        {
            "message": "Generated three-tier instance",
            "seed": seed,
            "nodes": len(problem.nodes),
            "edges": problem.n_edges,
        }
    )
    return problem


def generate_fig1(
    seed: int,
    cost_range: Tuple[float, float] = (0.5, 2.0),
    demand_range: Tuple[float, float] = (0.0, 1.0),
) -> SupplyChainProblem:
    """One supplier, two warehouses; W1 serves R1, R2 and W2 serves R3, R4."""
    rng = np.random.default_rng(seed)
    suppliers = _nodes("S", "supplier", 1)
    warehouses = _nodes("W", "warehouse", 2)
    retailers = _nodes("R", "retailer", 4)
    links = [(suppliers[0], warehouses[0]), (suppliers[0], warehouses[1])]
    links += [
        (warehouses[0], retailers[0]),
        (warehouses[0], retailers[1]),
        (warehouses[1], retailers[2]),
        (warehouses[1], retailers[3]),
    ]
    return _layered_problem(
        rng, suppliers, warehouses, retailers, links, cost_range, demand_range
    )


def generate_quadratic(
    seed: int,
    n_s: int = 2,
    n_w: int = 3,
    n_r: int = 5,
    curvature_range: Tuple[float, float] = (0.5, 2.0),
    linear_range: Tuple[float, float] = (-1.0, 1.0),
    target_range: Tuple[float, float] = (0.0, 1.0),
) -> QuadraticProblem:
    """Quadratic variant with one scalar decision per agent.

    Agents are ordered suppliers, warehouses, retailers. Warehouse ``w`` is fed
    by supplier ``w mod n_s`` and serves the retailers ``r`` with
    ``r mod n_w == w``. Rows:

    - warehouse balance: ``x_s / |W(s)| − x_w = 0`` (its share of the supplier's
      output equals its throughput);
    - retailer delivery: ``x_w / |R(w)| + x_r = b_r`` (the retailer draws its
      warehouse share, net of its own consumption, to the target ``b_r``).

    Each row owns a distinct agent with unit coefficient, so ``A`` has full
    row rank ``n_w + n_r``.
    """
    if min(n_s, n_w, n_r) < 1:
        raise ProblemError(
            "Tier counts must be at least 1", {"n_s": n_s, "n_w": n_w, "n_r": n_r}
        )
    lo_c, hi_c = _check_range("curvature_range", curvature_range)
    if not lo_c > 0:
        raise ProblemError("Curvatures must be positive", {"curvature_range": [lo_c, hi_c]})
    lo_d, hi_d = _check_range("linear_range", linear_range)
    lo_b, hi_b = _check_range("target_range", target_range)

    rng = np.random.default_rng(seed)
    n = n_s + n_w + n_r
    c = rng.uniform(lo_c, hi_c, n)
    d = rng.uniform(lo_d, hi_d, n)

    supplier_of = [w % n_s for w in range(n_w)]
    warehouse_of = [r % n_w for r in range(n_r)]
    fan_out = [supplier_of.count(s) for s in range(n_s)]
    fan_in = [warehouse_of.count(w) for w in range(n_w)]

    rows = []
    for w in range(n_w):
        row = [0.0] * n
        row[supplier_of[w]] = 1.0 / fan_out[supplier_of[w]]
        row[n_s + w] = -1.0
        rows.append(tuple(row))
    for r in range(n_r):
        w = warehouse_of[r]
        row = [0.0] * n
        row[n_s + w] = 1.0 / fan_in[w]
        row[n_s + n_w + r] = 1.0
        rows.append(tuple(row))
    b = [0.0] * n_w + list(rng.uniform(lo_b, hi_b, n_r))

    roles = ("supplier",) * n_s + ("warehouse",) * n_w + ("retailer",) * n_r
    return QuadraticProblem(
        c=tuple(float(v) for v in c),
        d=tuple(float(v) for v in d),
        A=tuple(rows),
        b=tuple(float(v) for v in b),
        roles=roles,
    )
