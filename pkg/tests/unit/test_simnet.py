"""Unit tests for the impaired message layer and the tick loop."""

import numpy as np
import pytest

from supplychain import (
    ConfigError,
    DriftSchedule,
    ImpairmentModel,
    LinkOutage,
    MessageLog,
    SimConfig,
    StepSchedule,
    apply_drift,
    drift_partial_sums,
    inject_noise,
    run_simulation,
    sample_delay,
)
from supplychain.simnet import DELAY, NOISE, UniformStream, initial_point


def _run(problem, iterations=200, seed=0, **impairments):
    config = SimConfig(
        problem=problem,
        iterations=iterations,
        seed=seed,
        impairments=ImpairmentModel(**impairments),
    )
    return run_simulation(config)


class TestUniformStream:
    def test_reproducible(self):
        """Test the same (seed, agent, purpose) replays the same draws."""
        a = UniformStream(3, 1, DELAY)
        b = UniformStream(3, 1, DELAY)
        assert [a.random() for _ in range(600)] == [b.random() for _ in range(600)]

    def test_purposes_independent(self):
        """Test different purposes of one agent draw different values."""
        a = UniformStream(3, 1, DELAY)
        b = UniformStream(3, 1, NOISE)
        assert [a.random() for _ in range(5)] != [b.random() for _ in range(5)]


class TestSampleDelay:
    def test_zero_at_first_tick(self):
        """Test k=0 always yields a zero delay."""
        model = ImpairmentModel(delay_coeff=5.0, gamma=0.3, tau=10)
        stream = UniformStream(0, 0, DELAY)
        assert all(sample_delay(stream, 0, model) == 0 for _ in range(100))

    def test_growing_cap(self):
        """Test c=1, γ=0.3, τ=10 at k=1000 draws from [0, 8]."""
        model = ImpairmentModel(delay_coeff=1.0, gamma=0.3, tau=10)
        assert model.delay_cap(1000) == 8
        stream = UniformStream(1, 0, DELAY)
        draws = [sample_delay(stream, 1000, model) for _ in range(3000)]
        assert min(draws) == 0
        assert max(draws) == 8

    def test_cap_limited_by_tau(self):
        """Test the cap never exceeds τ."""
        model = ImpairmentModel(delay_coeff=5.0, gamma=0.0, tau=2)
        assert model.delay_cap(500) == 2

    def test_negative_tick_rejected(self):
        """Test k < 0 is an error."""
        with pytest.raises(ValueError):
            sample_delay(UniformStream(0, 0, DELAY), -1, ImpairmentModel())


class TestInjectNoise:
    def test_zero_sigma_returns_value(self):
        """Test σ=0 is the identity."""
        assert inject_noise(UniformStream(0, 0, NOISE), 2.5, 0.0) == 2.5

    def test_bounded_and_centered(self):
        """Test draws lie in [v−σ, v+σ] with mean near v."""
        stream = UniformStream(0, 0, NOISE)
        draws = np.array([inject_noise(stream, 1.0, 0.2) for _ in range(10_000)])
        assert draws.min() >= 0.8
        assert draws.max() <= 1.2
        assert abs(draws.mean() - 1.0) < 0.01

    def test_negative_sigma_rejected(self):
        """Test σ < 0 is an error."""
        with pytest.raises(ValueError):
            inject_noise(UniformStream(0, 0, NOISE), 1.0, -0.1)


class TestDrift:
    def test_linear_knots(self):
        """Test +10% over K=1000 gives factor 1.05 at K/2 and holds after."""
        schedule = DriftSchedule("cost", knots=((0, 1.0), (1000, 1.1)))
        assert apply_drift([2.0], 500, schedule)[0] == pytest.approx(2.1)
        assert schedule.factor(5000) == pytest.approx(1.1)

    def test_no_schedule_is_identity(self):
        """Test params pass through unchanged without a schedule."""
        params = [1.0, 2.0]
        assert apply_drift(params, 10, None) is params

    def test_decay_kind(self):
        """Test 1 + a/(k+1)^p."""
        schedule = DriftSchedule("demand", kind="decay", amplitude=0.5, power=2.0)
        assert schedule.factor(0) == pytest.approx(1.5)
        assert schedule.factor(9) == pytest.approx(1.005)

    def test_nonpositive_capacity_factor(self):
        """Test a capacity factor reaching zero raises ConfigError."""
        schedule = DriftSchedule("capacity", knots=((0, 1.0), (10, -1.0)))
        with pytest.raises(ConfigError):
            apply_drift([1.0], 10, schedule)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"target": "price"},
            {"target": "cost", "knots": ()},
            {"target": "cost", "knots": ((5, 1.0), (5, 1.1))},
            {"target": "cost", "kind": "decay", "power": 0.0},
            {"target": "cost", "kind": "sine"},
        ],
    )
    def test_invalid_schedules(self, kwargs):
        """Test drift schedule validation."""
        with pytest.raises(ConfigError):
            DriftSchedule(**kwargs)

    def test_partial_sums_bounded_for_decaying_drift(self):
        """Test Σ α_k |p(k) − p| plateaus when the drift decays faster than the steps."""
        schedule = DriftSchedule("cost", kind="decay", amplitude=1.0, power=2.0)
        sums = drift_partial_sums(2.0, schedule, StepSchedule(), 4000)
        assert len(sums) == 4000
        assert np.all(np.diff(sums) >= 0)
        assert sums[-1] - sums[1999] < 1e-4 * sums[-1]

    def test_partial_sums_grow_for_persistent_drift(self):
        """Test a drift that does not vanish keeps accumulating."""
        schedule = DriftSchedule("cost", knots=((0, 1.0), (10, 1.1)))
        sums = drift_partial_sums(1.0, schedule, StepSchedule(), 4000)
        assert sums[-1] > 1.3 * sums[1999]


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs,key",
        [
            ({"gamma": 0.5}, "impairments.gamma"),
            ({"loss_rate": 1.0}, "impairments.loss_rate"),
            ({"activation_prob": 0.0}, "impairments.activation_prob"),
            ({"tau": -1}, "impairments.tau"),
            ({"sigma_c": -0.1}, "impairments.sigma_c"),
            ({"delay_coeff": -1.0}, "impairments.delay_coeff"),
        ],
    )
    def test_impairment_ranges(self, kwargs, key):
        """Test out-of-range impairments name the offending key."""
        with pytest.raises(ConfigError) as exc:
            ImpairmentModel(**kwargs)
        assert exc.value.key == key

    def test_duplicate_drift_targets(self):
        """Test one drift schedule per target."""
        with pytest.raises(ConfigError):
            ImpairmentModel(drift=(DriftSchedule("cost"), DriftSchedule("cost")))

    def test_outage_window(self):
        """Test an outage needs 0 <= start < end."""
        with pytest.raises(ConfigError):
            LinkOutage(5, 5)

    @pytest.mark.parametrize(
        "kwargs,key",
        [
            ({"iterations": 0}, "iterations"),
            ({"trace_every": 0}, "trace_every"),
            ({"preset": "fast"}, "preset"),
            ({"init": "random"}, "init"),
            ({"lambda_max": 0.0}, "lambda_max"),
            ({"parallel_workers": 0}, "parallel_workers"),
        ],
    )
    def test_sim_config_fields(self, fig1_problem, kwargs, key):
        """Test SimConfig rejects invalid scalar fields."""
        with pytest.raises(ConfigError) as exc:
            SimConfig(problem=fig1_problem, **kwargs)
        assert exc.value.key == key

    def test_unknown_outage_edge(self, fig1_problem):
        """Test per-edge outages must name existing edges."""
        model = ImpairmentModel(outages=(LinkOutage(0, 10, ("nope",)),))
        with pytest.raises(ConfigError, match="unknown edges"):
            SimConfig(problem=fig1_problem, impairments=model)

    def test_quadratic_rejects_capacity_drift_and_edge_outages(self, quadratic_problem):
        """Test flow-only impairments are refused on the quadratic variant."""
        with pytest.raises(ConfigError):
            SimConfig(
                problem=quadratic_problem,
                impairments=ImpairmentModel(drift=(DriftSchedule("capacity"),)),
            )
        with pytest.raises(ConfigError):
            SimConfig(
                problem=quadratic_problem,
                impairments=ImpairmentModel(outages=(LinkOutage(0, 5, ("a",)),)),
            )

    def test_capacity_drift_must_stay_positive(self, fig1_problem):
        """Test a capacity schedule with a non-positive knot is refused up front."""
        schedule = DriftSchedule("capacity", knots=((0, 1.0), (100, 0.0)))
        with pytest.raises(ConfigError):
            SimConfig(problem=fig1_problem, impairments=ImpairmentModel(drift=(schedule,)))


class TestMessageLog:
    def test_conservation_enforced(self):
        """Test sent must equal delivered plus dropped."""
        log = MessageLog()
        log.tick(5, 1, 4)
        assert log.totals == {"sent": 5, "dropped": 1, "delivered": 4}
        with pytest.raises(AssertionError):
            log.tick(5, 1, 3)


class TestInitialPoint:
    def test_zeros(self, fig1_problem):
        """Test the zeros recipe."""
        x, lam = initial_point(fig1_problem, "zeros", 0)
        assert not x.any() and not lam.any()

    def test_uniform_in_box(self, fig1_problem):
        """Test uniform flows stay inside the capacity box and prices start at zero."""
        x, lam = initial_point(fig1_problem, "uniform", 4)
        assert np.all(x >= 0) and np.all(x <= fig1_problem.capacities)
        assert not lam.any()

    def test_unknown_recipe(self, fig1_problem):
        """Test unknown recipes are rejected."""
        with pytest.raises(ConfigError):
            initial_point(fig1_problem, "ones", 0)


class TestDagSimulation:
    def test_trace_shape(self, fig1_problem):
        """Test one row per iterate plus the initial one."""
        trace = _run(fig1_problem, iterations=50)
        assert trace.x.shape == (51, fig1_problem.n_edges)
        assert trace.lam.shape == (51, fig1_problem.n_retailers)
        assert trace.k.tolist() == list(range(51))
        assert trace.algorithm == "dapdsco"

    def test_trace_every_keeps_last(self, fig1_problem):
        """Test thinning stores multiples of trace_every and the final iterate."""
        config = SimConfig(problem=fig1_problem, iterations=25, trace_every=10)
        trace = run_simulation(config)
        assert trace.k.tolist() == [0, 10, 20, 25]

    def test_message_count_full_activation(self, fig1_problem):
        """Test K (|E| + |R|) scalar messages without impairments."""
        trace = _run(fig1_problem, iterations=100)
        totals = trace.message_totals()
        assert totals["sent"] == 100 * (6 + 4)
        assert totals["dropped"] == 0
        assert trace.metadata["clamped_reads"] == 0

    def test_iterates_stay_in_box(self, fig1_problem):
        """Test flows stay in [0, u] and prices non-negative under impairments."""
        trace = _run(
            fig1_problem, iterations=300, delay_coeff=2.0, gamma=0.3, tau=5,
            loss_rate=0.2, sigma_c=0.1, sigma_d=0.1,
        )
        assert np.all(trace.x >= 0)
        assert np.all(trace.x <= fig1_problem.capacities)
        assert np.all(trace.lam >= 0)

    def test_deterministic_replay(self, fig1_problem):
        """Test identical seeds reproduce the trace bit for bit."""
        kwargs = dict(delay_coeff=2.0, gamma=0.2, tau=4, loss_rate=0.1, activation_prob=0.8)
        first = _run(fig1_problem, seed=9, **kwargs)
        second = _run(fig1_problem, seed=9, **kwargs)
        assert np.array_equal(first.x, second.x)
        assert np.array_equal(first.lam, second.lam)
        third = _run(fig1_problem, seed=10, **kwargs)
        assert not np.array_equal(first.x, third.x)

    def test_parallel_workers_match_serial(self, fig1_problem):
        """Test the thread pool does not change the trajectory."""
        model = ImpairmentModel(delay_coeff=1.0, gamma=0.2, tau=3, loss_rate=0.1)
        serial = run_simulation(SimConfig(problem=fig1_problem, iterations=100, impairments=model))
        pooled = run_simulation(
            SimConfig(problem=fig1_problem, iterations=100, impairments=model, parallel_workers=3)
        )
        assert np.array_equal(serial.x, pooled.x)
        assert np.array_equal(serial.lam, pooled.lam)

    def test_loss_conserves_messages(self, fig1_problem):
        """Test every row satisfies sent = delivered + dropped with some drops."""
        trace = _run(fig1_problem, iterations=200, loss_rate=0.3)
        sent = trace.columns["sent"]
        assert np.array_equal(sent, trace.columns["dropped"] + trace.columns["delivered"])
        assert trace.message_totals()["dropped"] > 0

    def test_losses_cause_clamped_reads(self, fig1_problem):
        """Test missing stamps fall back to older values and are counted."""
        trace = _run(fig1_problem, iterations=300, loss_rate=0.5, delay_coeff=2.0, tau=2)
        assert trace.metadata["clamped_reads"] > 0

    def test_partial_activation_sends_fewer(self, fig1_problem):
        """Test inactive agents send nothing."""
        trace = _run(fig1_problem, iterations=300, activation_prob=0.5)
        assert trace.message_totals()["sent"] < 300 * 10 * 0.6

    def test_global_outage_drops_everything(self, fig1_problem):
        """Test every message sent during the window is dropped."""
        model = ImpairmentModel(outages=(LinkOutage(10, 20),))
        trace = run_simulation(SimConfig(problem=fig1_problem, iterations=40, impairments=model))
        window = slice(11, 21)
        assert np.array_equal(trace.columns["dropped"][window], trace.columns["sent"][window])
        assert trace.columns["dropped"][21:].sum() == 0

    def test_edge_outage_drops_one_link(self, fig1_problem):
        """Test a downed link drops its flow and isolates the retailer it feeds."""
        model = ImpairmentModel(outages=(LinkOutage(0, 40, ("W1-R1",)),))
        trace = run_simulation(SimConfig(problem=fig1_problem, iterations=40, impairments=model))
        # R1 has W1-R1 as its only inbound link, so its broadcast is dropped too
        assert trace.message_totals()["dropped"] == 80

    def test_drift_recorded_in_metadata(self, fig1_problem):
        """Test drifting runs are flagged."""
        trace = _run(
            fig1_problem, iterations=20, drift=(DriftSchedule("cost", knots=((0, 1.0), (20, 1.1))),)
        )
        assert trace.metadata["drift"] is True

    def test_gap_shrinks_without_impairments(self, fig1_problem):
        """Test the ergodic gap at K=2000 is below its early value."""
        trace = _run(fig1_problem, iterations=2000)
        gaps = trace.columns["ergodic_gap"]
        assert gaps[-1] < gaps[10]


class TestQuadraticSimulation:
    def test_message_count(self, quadratic_problem):
        """Test N + m messages per tick at full activation."""
        trace = _run(quadratic_problem, iterations=50)
        assert trace.message_totals()["sent"] == 50 * (10 + 8)

    def test_constant_steps_converge(self, quadratic_problem):
        """Test small constant steps drive the violation down."""
        config = SimConfig(
            problem=quadratic_problem,
            iterations=3000,
            alpha=StepSchedule.constant(0.01),
            beta=StepSchedule.constant(0.05),
        )
        trace = run_simulation(config)
        violations = trace.columns["violation"]
        assert violations[-1] < violations[1]

    def test_global_outage_only(self, quadratic_problem):
        """Test a global outage drops every message in the window."""
        model = ImpairmentModel(outages=(LinkOutage(0, 5),))
        trace = run_simulation(SimConfig(problem=quadratic_problem, iterations=10, impairments=model))
        assert trace.columns["dropped"][1:6].tolist() == [18] * 5
