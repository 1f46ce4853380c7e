import copy
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from models.problem import GeneratorSpec
from supplychain import (
    BaselineKind,
    ConfigError,
    DriftSchedule,
    ImpairmentModel,
    LinkOutage,
    Problem,
    SimConfig,
    StepSchedule,
)

ALGORITHMS = ("dapdsco", "sync_pd", "admm", "gradient_push")

PRESETS: Dict[str, Dict[str, Any]] = {
    "theory": {
        "generator": {"kind": "three_tier"},
        "iterations": 10000,
        "steps": {
            "alpha": {"kind": "diminishing", "scale": 1.0, "exponent": 0.5},
            "beta": {"kind": "diminishing", "scale": 1.0, "exponent": 0.5},
        },
        "impairments": {
            "gamma": 0.3,
            "delay_coeff": 1.0,
            "loss_rate": 0.0,
            "activation_prob": 1.0,
        },
        "init": "zeros",
        "convergence_metric": "ergodic_gap",
    },
    "experiment-s10": {
        "generator": {"kind": "quadratic", "n_s": 2, "n_w": 3, "n_r": 5},
        "iterations": 2000,
        "steps": {
            "alpha": {"kind": "constant", "value": 0.01},
            "beta": {"kind": "constant", "value": 0.05},
        },
        "impairments": {
            "tau": 5,
            "gamma": 0.0,
            "delay_coeff": 5.0,
            "loss_rate": 0.1,
            "activation_prob": 1.0,
        },
        "init": "uniform",
        "convergence_metric": "gap",
    },
}


class StepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["diminishing", "constant"] = "diminishing"
    scale: float = 1.0
    exponent: float = 0.5
    value: Optional[float] = None

    def to_schedule(self) -> StepSchedule:
        return StepSchedule(
            kind=self.kind, scale=self.scale, exponent=self.exponent, value=self.value
        )


class StepsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: StepConfig = Field(default_factory=StepConfig)
    beta: StepConfig = Field(default_factory=StepConfig)


class DriftConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    target: Literal["cost", "demand", "capacity"]
    kind: Literal["piecewise", "decay"] = "piecewise"
    knots: List[Tuple[float, float]] = Field(default_factory=lambda: [(0.0, 1.0)])
    amplitude: float = 0.0
    power: float = 2.0


class OutageConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: int
    end: int
    edges: List[str] = Field(default_factory=list)


class ImpairmentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tau: Optional[int] = None
    gamma: float = 0.0
    delay_coeff: float = 0.0
    loss_rate: float = 0.0
    activation_prob: float = 1.0
    sigma_c: float = 0.0
    sigma_d: float = 0.0
    drift: List[DriftConfig] = Field(default_factory=list)
    outages: List[OutageConfig] = Field(default_factory=list)

    def resolved_tau(self, iterations: int) -> int:
        """Explicit τ, else deep enough that the delay cap never exceeds the buffer."""
        if self.tau is not None:
            return self.tau
        if self.delay_coeff == 0:
            return 0
        return math.ceil(self.delay_coeff * iterations**self.gamma)

    def to_model(self, iterations: int) -> ImpairmentModel:
        return ImpairmentModel(
            delay_coeff=self.delay_coeff,
            gamma=self.gamma,
            tau=self.resolved_tau(iterations),
            loss_rate=self.loss_rate,
            activation_prob=self.activation_prob,
            sigma_c=self.sigma_c,
            sigma_d=self.sigma_d,
            drift=tuple(
                DriftSchedule(
                    target=d.target,
                    kind=d.kind,
                    knots=tuple(tuple(k) for k in d.knots),
                    amplitude=d.amplitude,
                    power=d.power,
                )
                for d in self.drift
            ),
            outages=tuple(
                LinkOutage(o.start, o.end, tuple(o.edges)) for o in self.outages
            ),
        )


class RunConfigFile(BaseModel):
    """Run configuration as read from YAML, after preset defaults are merged in."""

    model_config = ConfigDict(extra="forbid")

    preset: Literal["theory", "experiment-s10"] = "theory"
    algorithm: Literal["dapdsco", "sync_pd", "admm", "gradient_push"] = "dapdsco"
    problem: Optional[str] = None
    generator: Optional[GeneratorSpec] = None
    seed: int = 0
    iterations: int = 10000
    steps: StepsConfig = Field(default_factory=StepsConfig)
    impairments: ImpairmentConfig = Field(default_factory=ImpairmentConfig)
    init: Literal["zeros", "uniform"] = "zeros"
    trace_every: int = 1
    lambda_max: Optional[float] = None
    admm_rho: float = 1.0
    push_penalty: float = 10.0
    gap_threshold: float = 0.1
    violation_threshold: float = 0.05
    convergence_metric: Literal["gap", "ergodic_gap"] = "gap"
    parallel_workers: int = 1

    def schedules(self) -> Tuple[StepSchedule, StepSchedule]:
        return self.steps.alpha.to_schedule(), self.steps.beta.to_schedule()

    def to_sim_config(self, problem: Problem) -> SimConfig:
        alpha, beta = self.schedules()
        return SimConfig(
            problem=problem,
            alpha=alpha,
            beta=beta,
            impairments=self.impairments.to_model(self.iterations),
            iterations=self.iterations,
            seed=self.seed,
            trace_every=self.trace_every,
            preset=self.preset,
            init=self.init,
            lambda_max=self.lambda_max,
            parallel_workers=self.parallel_workers,
        )

    def baseline_kind(self) -> BaselineKind:
        return BaselineKind(self.algorithm, rho=self.admm_rho, penalty=self.push_penalty)

    def with_overrides(self, **overrides: Any) -> "RunConfigFile":
        """Copy with dotted-key overrides, e.g. ``{"impairments.loss_rate": 0.1}``."""
        data = self.model_dump(mode="json")
        for key, value in overrides.items():
            set_dotted(data, key, value)
        return validate_run_config(data)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        if not isinstance(child, dict):
            raise ConfigError(key, f"'{part}' is not a section")
        node = child
    node[parts[-1]] = value


def validate_run_config(data: Dict[str, Any]) -> RunConfigFile:
    """Validate raw config data; the first pydantic error becomes a ConfigError naming its key."""
    try:
        return RunConfigFile.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigError(key, first["msg"]) from e


def load_run_config(data: Optional[Dict[str, Any]]) -> RunConfigFile:
    """Merge the named preset beneath user keys, then validate."""
    data = dict(data or {})
    preset = data.get("preset", "theory")
    if preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset '{preset}'")
    merged = deep_merge(PRESETS[preset], data)
    if merged.get("problem") is not None and "generator" not in data:
        merged.pop("generator", None)
    return validate_run_config(merged)
