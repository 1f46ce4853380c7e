"""Discrete-tick simulation of the agent ensemble over an impaired message layer.

Each tick: (1) drift the parameters, (2) draw activations, (3) active agents
read their buffers as of the end of the previous tick and update, (4) messages
are dropped or delivered, stamped with the index of the iterate they carry.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agents import (
    BalanceAgentState,
    EdgeAgentState,
    QuadraticAgentState,
    RetailerAgentState,
    StalenessBuffer,
    StepSchedule,
    balance_update,
    edge_read_delayed_price,
    edge_update,
    quadratic_update,
    retailer_read_delayed_flows,
    retailer_update,
    step_value,
)
from .analysis import TraceRecorder
from .errors import ConfigError
from .oracles import default_lambda_max, exact_oracle
from .problem import Problem, QuadraticProblem, SupplyChainProblem
from .tracing import RunTrace

logger = logging.getLogger("dapd-sco")

PRESETS = ("theory", "experiment-s10")
INIT_RECIPES = ("zeros", "uniform")
DRIFT_TARGETS = ("cost", "demand", "capacity")

# stream purposes
ACTIVATION, DELAY, LOSS, NOISE, INIT = range(5)


class UniformStream:
    """Counter-based uniform stream for one (agent, purpose) pair, drawn in blocks."""

    def __init__(self, seed: int, agent: int, purpose: int, block: int = 512):
        sequence = np.random.SeedSequence(seed, spawn_key=(agent, purpose))
        self._generator = np.random.Generator(np.random.Philox(sequence))
        self._block = block
        self._values: List[float] = []
        self._next = 0

    def random(self) -> float:
        if self._next == len(self._values):
            self._values = self._generator.random(self._block).tolist()
            self._next = 0
        value = self._values[self._next]
        self._next += 1
        return value


@dataclass(frozen=True)
class DriftSchedule:
    """Multiplicative factor on one parameter family.

    ``piecewise`` interpolates ``knots`` [(tick, factor), ...] linearly and
    holds the end values; ``decay`` is ``1 + amplitude / (k+1)**power``.
    """

    target: str
    kind: str = "piecewise"
    knots: Tuple[Tuple[float, float], ...] = ((0.0, 1.0),)
    amplitude: float = 0.0
    power: float = 2.0

    def __post_init__(self):
        if self.target not in DRIFT_TARGETS:
            raise ConfigError("impairments.drift.target", f"unknown target '{self.target}'")
        if self.kind == "piecewise":
            if not self.knots:
                raise ConfigError("impairments.drift.knots", "at least one knot required")
            ticks = [k for k, _ in self.knots]
            if any(b <= a for a, b in zip(ticks, ticks[1:])):
                raise ConfigError("impairments.drift.knots", "knot ticks must increase")
        elif self.kind == "decay":
            if self.power <= 0:
                raise ConfigError("impairments.drift.power", "must be positive")
        else:
            raise ConfigError("impairments.drift.kind", f"unknown drift kind '{self.kind}'")

    def factor(self, k: int) -> float:
        if self.kind == "decay":
            return 1.0 + self.amplitude / (k + 1) ** self.power
        ticks = [t for t, _ in self.knots]
        values = [v for _, v in self.knots]
        return float(np.interp(k, ticks, values))


@dataclass(frozen=True)
class LinkOutage:
    """Links down for ticks ``start <= k < end``; ``edges`` empty means every link."""

    start: int
    end: int
    edges: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ConfigError("impairments.outages", "need 0 <= start < end")

    def covers(self, k: int, edge_id: str) -> bool:
        return self.start <= k < self.end and (not self.edges or edge_id in self.edges)


@dataclass(frozen=True)
class ImpairmentModel:
    delay_coeff: float = 0.0
    gamma: float = 0.0
    tau: int = 0
    loss_rate: float = 0.0
    activation_prob: float = 1.0
    sigma_c: float = 0.0
    sigma_d: float = 0.0
    drift: Tuple[DriftSchedule, ...] = ()
    outages: Tuple[LinkOutage, ...] = ()

    def __post_init__(self):
        if self.delay_coeff < 0:
            raise ConfigError("impairments.delay_coeff", "must be non-negative")
        if not 0 <= self.gamma < 0.5:
            raise ConfigError("impairments.gamma", "must lie in [0, 0.5)")
        if self.tau < 0:
            raise ConfigError("impairments.tau", "must be non-negative")
        if not 0 <= self.loss_rate < 1:
            raise ConfigError("impairments.loss_rate", "must lie in [0, 1)")
        if not 0 < self.activation_prob <= 1:
            raise ConfigError("impairments.activation_prob", "must lie in (0, 1]")
        if self.sigma_c < 0:
            raise ConfigError("impairments.sigma_c", "must be non-negative")
        if self.sigma_d < 0:
            raise ConfigError("impairments.sigma_d", "must be non-negative")
        targets = [d.target for d in self.drift]
        if len(set(targets)) != len(targets):
            raise ConfigError("impairments.drift", "one schedule per target")

    def delay_cap(self, k: int) -> int:
        if k <= 0 or self.delay_coeff == 0:
            return 0
        return min(self.tau, math.ceil(self.delay_coeff * k**self.gamma))

    def drift_for(self, target: str) -> Optional[DriftSchedule]:
        for schedule in self.drift:
            if schedule.target == target:
                return schedule
        return None

    def link_down(self, k: int, edge_id: str) -> bool:
        return any(o.covers(k, edge_id) for o in self.outages)


@dataclass
class SimConfig:
    problem: Problem
    alpha: StepSchedule = field(default_factory=StepSchedule)
    beta: StepSchedule = field(default_factory=StepSchedule)
    impairments: ImpairmentModel = field(default_factory=ImpairmentModel)
    iterations: int = 1000
    seed: int = 0
    trace_every: int = 1
    preset: str = "theory"
    init: str = "zeros"
    lambda_max: Optional[float] = None
    parallel_workers: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations", "must be at least 1")
        if self.trace_every < 1:
            raise ConfigError("trace_every", "must be at least 1")
        if self.preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset '{self.preset}'")
        if self.init not in INIT_RECIPES:
            raise ConfigError("init", f"unknown init recipe '{self.init}'")
        if self.lambda_max is not None and not self.lambda_max > 0:
            raise ConfigError("lambda_max", "must be positive")
        if self.parallel_workers < 1:
            raise ConfigError("parallel_workers", "must be at least 1")
        if isinstance(self.problem, QuadraticProblem):
            if self.impairments.drift_for("capacity") is not None:
                raise ConfigError(
                    "impairments.drift", "capacity drift needs a flow instance"
                )
            if any(o.edges for o in self.impairments.outages):
                raise ConfigError(
                    "impairments.outages", "per-edge outages need a flow instance"
                )
        else:
            known = set(self.problem.edge_index)
            for outage in self.impairments.outages:
                unknown = set(outage.edges) - known
                if unknown:
                    raise ConfigError(
                        "impairments.outages", f"unknown edges {sorted(unknown)}"
                    )
        schedule = self.impairments.drift_for("capacity")
        if schedule is not None:
            if schedule.kind == "piecewise":
                lowest = min(v for _, v in schedule.knots)
            else:
                lowest = 1.0 + min(schedule.amplitude, 0.0)
            if lowest <= 0:
                raise ConfigError(
                    "impairments.drift", "capacity factor must stay positive"
                )


@dataclass
class MessageLog:
    """Per-tick scalar message counts with running totals."""

    sent: List[int] = field(default_factory=list)
    dropped: List[int] = field(default_factory=list)
    delivered: List[int] = field(default_factory=list)

    def tick(self, sent: int, dropped: int, delivered: int) -> None:
        if delivered + dropped != sent:
            raise AssertionError("Message conservation broken")
        self.sent.append(sent)
        self.dropped.append(dropped)
        self.delivered.append(delivered)

    @property
    def totals(self) -> Dict[str, int]:
        return {
            "sent": sum(self.sent),
            "dropped": sum(self.dropped),
            "delivered": sum(self.delivered),
        }


def sample_delay(stream: UniformStream, k: int, model: ImpairmentModel) -> int:
    """Uniform integer on [0, min(τ, ⌈c_δ k^γ⌉)]; no draw when the cap is zero."""
    if k < 0:
        raise ValueError("Tick must be non-negative")
    cap = model.delay_cap(k)
    if cap == 0:
        return 0
    return min(int(stream.random() * (cap + 1)), cap)


def inject_noise(stream: UniformStream, value: float, sigma: float) -> float:
    """value + U[−σ, σ]; no draw when σ is zero."""
    if sigma < 0:
        raise ValueError("Noise bound must be non-negative")
    if sigma == 0:
        return value
    return value + sigma * (2.0 * stream.random() - 1.0)


def apply_drift(params, k: int, schedule: Optional[DriftSchedule]):
    """Parameters at tick k; capacities must remain positive."""
    if schedule is None:
        return params
    factor = schedule.factor(k)
    if schedule.target == "capacity" and not factor > 0:
        raise ConfigError("impairments.drift", f"capacity factor {factor} at tick {k}")
    return np.asarray(params, dtype=float) * factor


def drift_partial_sums(
    base: float, schedule: DriftSchedule, step: StepSchedule, K: int
) -> np.ndarray:
    """Σ_{k≤K} α_k |p(k) − p| for every K, the quantity that must stay bounded."""
    alphas = np.array([step_value(step, k) for k in range(K)])
    factors = np.array([schedule.factor(k) for k in range(K)])
    return np.cumsum(alphas * np.abs(base * factors - base))


def initial_point(problem: Problem, recipe: str, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Initial iterate: zeros, or one uniform draw per agent from its init stream."""
    if recipe not in INIT_RECIPES:
        raise ConfigError("init", f"unknown init recipe '{recipe}'")
    if isinstance(problem, QuadraticProblem):
        x = np.zeros(problem.n_agents)
        lam = np.zeros(problem.n_rows)
        if recipe == "uniform":
            x = np.array(
                [2.0 * UniformStream(seed, i, INIT).random() - 1.0 for i in range(problem.n_agents)]
            )
        return x, lam
    x = np.zeros(problem.n_edges)
    lam = np.zeros(problem.n_retailers)
    if recipe == "uniform":
        x = np.array(
            [
                UniformStream(seed, i, INIT).random() * e.capacity
                for i, e in enumerate(problem.edges)
            ]
        )
    return x, lam


def resolve_lambda_max(problem: Problem, configured: Optional[float]) -> float:
    if configured is not None:
        return configured
    return default_lambda_max(problem, exact_oracle(problem))


def schedule_metadata(schedule: StepSchedule) -> Dict[str, Any]:
    return {
        "kind": schedule.kind,
        "scale": schedule.scale,
        "exponent": schedule.exponent,
        "value": schedule.value,
    }


class _Simulation:
    """Shared tick loop; subclasses own agent construction and the per-tick exchange."""

    algorithm = "dapdsco"

    def __init__(self, config: SimConfig):
        self.config = config
        self.model = config.impairments
        self.seed = config.seed
        self.log = MessageLog()
        self._streams: Dict[Tuple[int, int], UniformStream] = {}
        self._pool: Optional[ThreadPoolExecutor] = None

    def stream(self, agent: int, purpose: int) -> UniformStream:
        key = (agent, purpose)
        if key not in self._streams:
            self._streams[key] = UniformStream(self.seed, agent, purpose)
        return self._streams[key]

    def active(self, agent: int) -> bool:
        p = self.model.activation_prob
        return p >= 1.0 or self.stream(agent, ACTIVATION).random() < p

    def lost(self, agent: int) -> bool:
        rate = self.model.loss_rate
        return rate > 0 and self.stream(agent, LOSS).random() < rate

    def _map(self, fn, items):
        if self._pool is None:
            return [fn(item) for item in items]
        return list(self._pool.map(fn, items))

    def run(self) -> RunTrace:
        config = self.config
        x0, lam0 = initial_point(config.problem, config.init, config.seed)
        lambda_max = resolve_lambda_max(config.problem, config.lambda_max)
        self.build(x0, lam0)
        recorder = TraceRecorder(
            config.problem,
            lambda_max,
            self.algorithm,
            config.iterations,
            x0,
            lam0,
            config.trace_every,
        )
        logger.info(
            {
                "message": "Simulation started",
                "iterations": config.iterations,
                "seed": config.seed,
                "preset": config.preset,
                "workers": config.parallel_workers,
            }
        )
        if config.parallel_workers > 1:
            self._pool = ThreadPoolExecutor(max_workers=config.parallel_workers)
        try:
            for k in range(config.iterations):
                alpha = step_value(config.alpha, k)
                beta = step_value(config.beta, k)
                self.drift(k)
                delay_price, delay_flow = self.update(k, alpha, beta)
                sent, dropped = self.deliver(k)
                self.log.tick(sent, dropped, sent - dropped)
                x, lam = self.iterate()
                self.check_invariants(x, lam, k)
                recorder.record(
                    k + 1, x, lam, alpha, beta, delay_price, delay_flow,
                    sent, dropped, sent - dropped,
                )
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None

        clamped = self.clamped_reads()
        totals = self.log.totals
        logger.info({"message": "Simulation finished", "clamped_reads": clamped, **totals})
        return recorder.finish(
            {
                "seed": config.seed,
                "preset": config.preset,
                "init": config.init,
                "activation_prob": self.model.activation_prob,
                "loss_rate": self.model.loss_rate,
                "drift": bool(self.model.drift),
                "sigma_c": self.model.sigma_c,
                "sigma_d": self.model.sigma_d,
                "tau": self.model.tau,
                "gamma": self.model.gamma,
                "delay_coeff": self.model.delay_coeff,
                "clamped_reads": clamped,
                "messages": totals,
                "alpha_schedule": schedule_metadata(config.alpha),
                "beta_schedule": schedule_metadata(config.beta),
            }
        )

    def build(self, x0: np.ndarray, lam0: np.ndarray) -> None:
        raise NotImplementedError

    def drift(self, k: int) -> None:
        raise NotImplementedError

    def update(self, k: int, alpha: float, beta: float) -> Tuple[int, int]:
        raise NotImplementedError

    def deliver(self, k: int) -> Tuple[int, int]:
        raise NotImplementedError

    def iterate(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def check_invariants(self, x: np.ndarray, lam: np.ndarray, k: int) -> None:
        pass

    def clamped_reads(self) -> int:
        raise NotImplementedError


class DagSimulation(_Simulation):
    """Edge agents and retailer agents exchanging flows and prices."""

    def build(self, x0: np.ndarray, lam0: np.ndarray) -> None:
        problem: SupplyChainProblem = self.config.problem
        tau = self.model.tau
        self.n_edges = problem.n_edges
        self.base_costs = problem.costs
        self.base_capacities = problem.capacities
        self.base_demands = problem.demand_vector

        self.edges: List[EdgeAgentState] = []
        for i, edge in enumerate(problem.edges):
            r = problem.head_retailer[i]
            buffer = (
                StalenessBuffer(tau, float(lam0[r]), owner=edge.id) if r >= 0 else None
            )
            self.edges.append(
                EdgeAgentState(
                    edge_id=edge.id,
                    x=float(x0[i]),
                    cost=edge.cost,
                    capacity=edge.capacity,
                    schedule=self.config.alpha,
                    curvature=edge.curvature,
                    price_buffer=buffer,
                )
            )
        self.retailers: List[RetailerAgentState] = []
        self.inbound: List[Tuple[int, ...]] = []
        for r, retailer in enumerate(problem.retailers):
            edges = problem.inbound[retailer]
            buffers = tuple(
                (problem.edges[i].id, StalenessBuffer(tau, float(x0[i]), owner=retailer))
                for i in edges
            )
            self.retailers.append(
                RetailerAgentState(
                    retailer_id=retailer,
                    lam=float(lam0[r]),
                    demand=float(problem.demand_vector[r]),
                    schedule=self.config.beta,
                    flow_buffers=buffers,
                )
            )
            self.inbound.append(edges)
        self.head = [int(r) for r in problem.head_retailer]
        self.slot_of = {}
        for r, edges in enumerate(self.inbound):
            for slot, i in enumerate(edges):
                self.slot_of[i] = slot
        self.edge_active = [True] * self.n_edges
        self.retailer_active = [True] * len(self.retailers)

    def drift(self, k: int) -> None:
        model = self.model
        if not model.drift:
            return
        costs = apply_drift(self.base_costs, k, model.drift_for("cost"))
        capacities = apply_drift(self.base_capacities, k, model.drift_for("capacity"))
        demands = apply_drift(self.base_demands, k, model.drift_for("demand"))
        for i, state in enumerate(self.edges):
            state.cost = float(costs[i])
            state.capacity = float(capacities[i])
            state.x = min(state.x, state.capacity)
        for r, state in enumerate(self.retailers):
            state.demand = float(demands[r])

    def _edge_step(self, item):
        i, k, alpha = item
        state = self.edges[i]
        if not self.edge_active[i]:
            state.k += 1
            return 0
        if state.price_buffer is None:
            price, age = 0.0, 0
        else:
            nominal = sample_delay(self.stream(i, DELAY), k, self.model)
            price, age = edge_read_delayed_price(state, nominal)
        cost = inject_noise(self.stream(i, NOISE), state.cost, self.model.sigma_c)
        edge_update(state, price, alpha, cost)
        return age

    def _retailer_step(self, item):
        r, k, beta = item
        state = self.retailers[r]
        agent = self.n_edges + r
        if not self.retailer_active[r]:
            state.k += 1
            return 0
        stream = self.stream(agent, DELAY)
        nominal = [sample_delay(stream, k, self.model) for _ in state.flow_buffers]
        flows, ages = retailer_read_delayed_flows(state, nominal)
        demand = inject_noise(self.stream(agent, NOISE), state.demand, self.model.sigma_d)
        retailer_update(state, flows, beta, demand)
        return max(ages) if ages else 0

    def update(self, k: int, alpha: float, beta: float) -> Tuple[int, int]:
        for i in range(self.n_edges):
            self.edge_active[i] = self.active(i)
        for r in range(len(self.retailers)):
            self.retailer_active[r] = self.active(self.n_edges + r)
        price_ages = self._map(self._edge_step, [(i, k, alpha) for i in range(self.n_edges)])
        flow_ages = self._map(
            self._retailer_step, [(r, k, beta) for r in range(len(self.retailers))]
        )
        return max(price_ages, default=0), max(flow_ages, default=0)

    def deliver(self, k: int) -> Tuple[int, int]:
        stamp = k + 1
        sent = dropped = 0
        for i, state in enumerate(self.edges):
            if not self.edge_active[i]:
                continue
            sent += 1
            lost = self.lost(i)
            if lost or self.model.link_down(k, state.edge_id):
                dropped += 1
                continue
            r = self.head[i]
            if r >= 0:
                _, buffer = self.retailers[r].flow_buffers[self.slot_of[i]]
                buffer.write(stamp, state.x)
        for r, state in enumerate(self.retailers):
            if not self.retailer_active[r]:
                continue
            sent += 1
            lost = self.lost(self.n_edges + r)
            links = [
                i
                for i in self.inbound[r]
                if not self.model.link_down(k, self.edges[i].edge_id)
            ]
            if lost or (self.inbound[r] and not links):
                dropped += 1
                continue
            for i in links:
                self.edges[i].price_buffer.write(stamp, state.lam)
        return sent, dropped

    def iterate(self) -> Tuple[np.ndarray, np.ndarray]:
        x = np.array([s.x for s in self.edges], dtype=float)
        lam = np.array([s.lam for s in self.retailers], dtype=float)
        return x, lam

    def check_invariants(self, x: np.ndarray, lam: np.ndarray, k: int) -> None:
        capacities = np.array([s.capacity for s in self.edges])
        if np.any(x < 0) or np.any(x > capacities) or np.any(lam < 0):
            raise AssertionError(f"Box or sign invariant broken at tick {k}")

    def clamped_reads(self) -> int:
        total = sum(s.price_buffer.clamped for s in self.edges if s.price_buffer is not None)
        total += sum(b.clamped for s in self.retailers for _, b in s.flow_buffers)
        return total


class QuadraticSimulation(_Simulation):
    """Primal agents and row (balance) agents of the equality-constrained variant."""

    def build(self, x0: np.ndarray, lam0: np.ndarray) -> None:
        problem: QuadraticProblem = self.config.problem
        tau = self.model.tau
        A = problem.matrix
        self.n_agents = problem.n_agents
        self.base_linear = problem.linear
        self.base_rhs = problem.rhs

        self.agents: List[QuadraticAgentState] = []
        for i in range(problem.n_agents):
            column = tuple(
                (r, float(A[r, i]), StalenessBuffer(tau, float(lam0[r]), owner=f"x{i}"))
                for r in problem.column_support[i]
            )
            self.agents.append(
                QuadraticAgentState(
                    index=i,
                    x=float(x0[i]),
                    curvature=float(problem.curvature[i]),
                    linear=float(problem.linear[i]),
                    schedule=self.config.alpha,
                    column=column,
                )
            )
        self.rows: List[BalanceAgentState] = []
        for r in range(problem.n_rows):
            entries = tuple(
                (i, float(A[r, i]), StalenessBuffer(tau, float(x0[i]), owner=f"row{r}"))
                for i in problem.row_support[r]
            )
            self.rows.append(
                BalanceAgentState(
                    row=r,
                    lam=float(lam0[r]),
                    target=float(problem.rhs[r]),
                    schedule=self.config.beta,
                    entries=entries,
                )
            )
        # (row, position) of each agent's buffer slot inside the row owner
        self.entry_slot = {
            (r, i): pos
            for r, row in enumerate(self.rows)
            for pos, (i, _, _) in enumerate(row.entries)
        }
        self.column_slot = {
            (i, r): pos
            for i, agent in enumerate(self.agents)
            for pos, (r, _, _) in enumerate(agent.column)
        }
        self.agent_active = [True] * problem.n_agents
        self.row_active = [True] * problem.n_rows

    def drift(self, k: int) -> None:
        model = self.model
        if not model.drift:
            return
        linear = apply_drift(self.base_linear, k, model.drift_for("cost"))
        rhs = apply_drift(self.base_rhs, k, model.drift_for("demand"))
        for i, state in enumerate(self.agents):
            state.linear = float(linear[i])
        for r, state in enumerate(self.rows):
            state.target = float(rhs[r])

    def _agent_step(self, item):
        i, k, alpha = item
        state = self.agents[i]
        if not self.agent_active[i]:
            state.k += 1
            return 0
        stream = self.stream(i, DELAY)
        prices, ages = [], []
        for _, _, buffer in state.column:
            value, age = buffer.read(state.k, sample_delay(stream, k, self.model))
            prices.append(value)
            ages.append(age)
        linear = inject_noise(self.stream(i, NOISE), state.linear, self.model.sigma_c)
        quadratic_update(state, prices, alpha, linear)
        return max(ages, default=0)

    def _row_step(self, item):
        r, k, beta = item
        state = self.rows[r]
        agent = self.n_agents + r
        if not self.row_active[r]:
            state.k += 1
            return 0
        stream = self.stream(agent, DELAY)
        values, ages = [], []
        for _, _, buffer in state.entries:
            value, age = buffer.read(state.k, sample_delay(stream, k, self.model))
            values.append(value)
            ages.append(age)
        target = inject_noise(self.stream(agent, NOISE), state.target, self.model.sigma_d)
        balance_update(state, values, beta, target)
        return max(ages, default=0)

    def update(self, k: int, alpha: float, beta: float) -> Tuple[int, int]:
        for i in range(self.n_agents):
            self.agent_active[i] = self.active(i)
        for r in range(len(self.rows)):
            self.row_active[r] = self.active(self.n_agents + r)
        price_ages = self._map(self._agent_step, [(i, k, alpha) for i in range(self.n_agents)])
        flow_ages = self._map(self._row_step, [(r, k, beta) for r in range(len(self.rows))])
        return max(price_ages, default=0), max(flow_ages, default=0)

    def deliver(self, k: int) -> Tuple[int, int]:
        stamp = k + 1
        down = self.model.link_down(k, "")
        sent = dropped = 0
        for i, state in enumerate(self.agents):
            if not self.agent_active[i]:
                continue
            sent += 1
            if self.lost(i) or down:
                dropped += 1
                continue
            for r, _, _ in state.column:
                _, _, buffer = self.rows[r].entries[self.entry_slot[(r, i)]]
                buffer.write(stamp, state.x)
        for r, state in enumerate(self.rows):
            if not self.row_active[r]:
                continue
            sent += 1
            if self.lost(self.n_agents + r) or down:
                dropped += 1
                continue
            for i, _, _ in state.entries:
                _, _, buffer = self.agents[i].column[self.column_slot[(i, r)]]
                buffer.write(stamp, state.lam)
        return sent, dropped

    def iterate(self) -> Tuple[np.ndarray, np.ndarray]:
        x = np.array([s.x for s in self.agents], dtype=float)
        lam = np.array([s.lam for s in self.rows], dtype=float)
        return x, lam

    def clamped_reads(self) -> int:
        total = sum(b.clamped for s in self.agents for _, _, b in s.column)
        total += sum(b.clamped for s in self.rows for _, _, b in s.entries)
        return total


def run_simulation(config: SimConfig) -> RunTrace:
    """Run K ticks; identical config and seed give an identical trace."""
    if isinstance(config.problem, QuadraticProblem):
        return QuadraticSimulation(config).run()
    return DagSimulation(config).run()
