from .agents import (
    BalanceAgentState,
    EdgeAgentState,
    QuadraticAgentState,
    RetailerAgentState,
    StalenessBuffer,
    StepSchedule,
    edge_read_delayed_price,
    edge_update,
    retailer_read_delayed_flows,
    retailer_update,
    step_value,
)
from .analysis import (
    DescentReport,
    ErrorSeriesReport,
    RateFit,
    TheoryConstants,
    compute_constants,
    constraint_violation,
    convergence_time,
    duality_gap,
    ergodic_average,
    error_series_check,
    fit_rate,
    iteration_budget_for,
    lyapunov_descent_check,
    median_convergence_time,
    rate_slope,
)
from .baselines import (
    BaselineKind,
    admm_run,
    gradient_push_run,
    push_sum_consensus,
    ring_mixing,
    run_baseline,
    sync_pd_run,
)
from .errors import (
    ConfigError,
    InfeasibleProblemError,
    ProblemError,
    SingularSystemError,
    SupplyChainError,
    TraceSchemaError,
    VerificationError,
)
from .generators import generate_fig1, generate_quadratic, generate_three_tier
from .oracles import (
    SaddlePoint,
    default_lambda_max,
    exact_oracle,
    exact_oracle_greedy,
    exact_oracle_kkt,
)
from .problem import (
    Edge,
    Node,
    Problem,
    QuadraticProblem,
    SupplyChainProblem,
    cost_gradient,
    cost_value,
    inbound_flow,
    lagrangian,
    slater_check,
    total_cost,
)
from .simnet import (
    DriftSchedule,
    ImpairmentModel,
    LinkOutage,
    MessageLog,
    SimConfig,
    apply_drift,
    drift_partial_sums,
    inject_noise,
    run_simulation,
    sample_delay,
)
from .tracing import RunTrace, trace_from_csv, trace_to_csv

__all__ = [name for name in dir() if not name.startswith("_")]
