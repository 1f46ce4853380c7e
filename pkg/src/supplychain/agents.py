"""Agent state machines: edge and retailer agents for the DAG problem, and the
primal/balance agents of the quadratic variant.

Each state is owned by one executor. Updates mutate only the owning state and
are deterministic given (state, inputs), so replaying an input trace replays
the trajectory.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .problem import cost_gradient

logger = logging.getLogger("dapd-sco")


@dataclass(frozen=True)
class StepSchedule:
    """α_k or β_k: ``scale / (k+1)**exponent`` (diminishing) or a fixed value."""

    kind: str = "diminishing"
    scale: float = 1.0
    exponent: float = 0.5
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind == "diminishing":
            if not self.scale > 0:
                raise ConfigError("steps.scale", "must be positive")
            if self.exponent < 0:
                raise ConfigError("steps.exponent", "must be non-negative")
        elif self.kind == "constant":
            if self.value is None or not self.value > 0:
                raise ConfigError("steps.value", "constant schedule needs a positive value")
        else:
            raise ConfigError("steps.kind", f"unknown schedule kind '{self.kind}'")

    @classmethod
    def constant(cls, value: float) -> "StepSchedule":
        return cls(kind="constant", value=value)

    @property
    def is_diminishing(self) -> bool:
        return self.kind == "diminishing" and self.exponent > 0


def step_value(schedule: StepSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("Iteration index must be non-negative")
    if schedule.kind == "constant":
        return schedule.value
    return schedule.scale / (k + 1) ** schedule.exponent


class StalenessBuffer:
    """Ring buffer of τ+1 stamped values; stamp ``s`` lives at slot ``s mod (τ+1)``."""

    def __init__(self, tau: int, initial: float, owner: str = ""):
        if tau < 0:
            raise ConfigError("impairments.tau", "must be non-negative")
        self.capacity = tau + 1
        self.owner = owner
        self._stamps: List[int] = [-1] * self.capacity
        self._values: List[float] = [0.0] * self.capacity
        self._stamps[0] = 0
        self._values[0] = initial
        self.clamped = 0

    def write(self, stamp: int, value: float) -> None:
        slot = stamp % self.capacity
        if stamp > self._stamps[slot]:
            self._stamps[slot] = stamp
            self._values[slot] = value

    def read(self, k: int, nominal_age: int) -> Tuple[float, int]:
        """Value with the largest stamp ≤ k − age, else the oldest retained one."""
        target = k - nominal_age
        slot = target % self.capacity
        if target >= 0 and self._stamps[slot] == target:
            return self._values[slot], nominal_age

        best = -1
        oldest = None
        for i, stamp in enumerate(self._stamps):
            if stamp < 0:
                continue
            if stamp <= target and (best < 0 or stamp > self._stamps[best]):
                best = i
            if oldest is None or stamp < self._stamps[oldest]:
                oldest = i
        chosen = best if best >= 0 else oldest
        age = k - self._stamps[chosen]
        if age > nominal_age:
            self.clamped += 1
            logger.debug(
                {
                    "message": "Stale read clamped",
                    "agent": self.owner,
                    "tick": k,
                    "nominal_age": nominal_age,
                    "effective_age": age,
                }
            )
        return self._values[chosen], age

    def entries(self) -> Dict[int, float]:
        return {s: v for s, v in zip(self._stamps, self._values) if s >= 0}


@dataclass
class EdgeAgentState:
    edge_id: str
    x: float
    cost: float
    capacity: float
    schedule: StepSchedule
    curvature: float = 0.0
    price_buffer: Optional[StalenessBuffer] = None
    k: int = 0

    def snapshot(self) -> Dict[str, Any]:
        return {"edge": self.edge_id, "k": self.k, "x": self.x}


@dataclass
class RetailerAgentState:
    retailer_id: str
    lam: float
    demand: float
    schedule: StepSchedule
    flow_buffers: Tuple[Tuple[str, StalenessBuffer], ...] = field(default_factory=tuple)
    k: int = 0

    def snapshot(self) -> Dict[str, Any]:
        return {"retailer": self.retailer_id, "k": self.k, "lambda": self.lam}


def edge_read_delayed_price(state: EdgeAgentState, nominal_age: int) -> Tuple[float, int]:
    """λ̃_j^k and its realized age; edges into non-retailers see a zero price."""
    if nominal_age < 0:
        raise ValueError("Nominal age must be non-negative")
    if state.price_buffer is None:
        return 0.0, 0
    return state.price_buffer.read(state.k, nominal_age)


def edge_update(
    state: EdgeAgentState, price: float, step: float, cost: Optional[float] = None
) -> float:
    """Projected gradient step x ← Π_[0,u](x − α (∇f(x) − λ̃))."""
    observed = state.cost if cost is None else cost
    if state.curvature > 0:
        grad = cost_gradient("quadratic", (state.curvature, observed), state.x)
    else:
        grad = cost_gradient("linear", (observed,), state.x)
    g = grad - price
    state.x = min(max(state.x - step * g, 0.0), state.capacity)
    state.k += 1
    return state.x


def retailer_read_delayed_flows(
    state: RetailerAgentState, nominal_ages: List[int]
) -> Tuple[List[float], List[int]]:
    flows, ages = [], []
    for (_, buffer), age in zip(state.flow_buffers, nominal_ages):
        value, effective = buffer.read(state.k, age)
        flows.append(value)
        ages.append(effective)
    return flows, ages


def retailer_update(
    state: RetailerAgentState,
    delayed_flows: List[float],
    step: float,
    demand: Optional[float] = None,
) -> float:
    """Projected ascent λ ← [λ + β (d − h̃)]₊ on the delayed inbound total."""
    h = 0.0
    for value in delayed_flows:
        h += value
    observed = state.demand if demand is None else demand
    residual = observed - h
    state.lam = max(0.0, state.lam + step * residual)
    state.k += 1
    return state.lam


@dataclass
class QuadraticAgentState:
    """Agent i of the quadratic variant: unconstrained x_i with delayed row prices."""

    index: int
    x: float
    curvature: float
    linear: float
    schedule: StepSchedule
    column: Tuple[Tuple[int, float, StalenessBuffer], ...] = field(default_factory=tuple)
    k: int = 0

    def snapshot(self) -> Dict[str, Any]:
        return {"agent": self.index, "k": self.k, "x": self.x}


@dataclass
class BalanceAgentState:
    """Owner of one row of A x = b: unprojected ascent on the delayed residual."""

    row: int
    lam: float
    target: float
    schedule: StepSchedule
    entries: Tuple[Tuple[int, float, StalenessBuffer], ...] = field(default_factory=tuple)
    k: int = 0

    def snapshot(self) -> Dict[str, Any]:
        return {"row": self.row, "k": self.k, "lambda": self.lam}


def quadratic_update(
    state: QuadraticAgentState,
    delayed_prices: List[float],
    step: float,
    linear: Optional[float] = None,
) -> float:
    observed = state.linear if linear is None else linear
    grad = cost_gradient("quadratic", (state.curvature, observed), state.x)
    for (_, coeff, _), price in zip(state.column, delayed_prices):
        grad += coeff * price
    state.x = state.x - step * grad
    state.k += 1
    return state.x


def balance_update(
    state: BalanceAgentState,
    delayed_values: List[float],
    step: float,
    target: Optional[float] = None,
) -> float:
    total = 0.0
    for (_, coeff, _), value in zip(state.entries, delayed_values):
        total += coeff * value
    observed = state.target if target is None else target
    state.lam = state.lam + step * (total - observed)
    state.k += 1
    return state.lam
