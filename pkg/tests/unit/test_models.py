"""Unit tests for the config and problem-file models."""

import pytest

from models import (
    PRESETS,
    GeneratorSpec,
    RunConfigFile,
    deep_merge,
    load_run_config,
    problem_file_adapter,
    problem_to_file,
    set_dotted,
    validate_run_config,
)
from supplychain import ConfigError, QuadraticProblem, SupplyChainProblem


class TestPresets:
    def test_theory_defaults(self):
        """Test an empty config resolves to the theory preset."""
        config = load_run_config({})
        assert config.preset == "theory"
        assert config.iterations == 10000
        assert config.generator.kind == "three_tier"
        assert config.convergence_metric == "ergodic_gap"
        alpha, beta = config.schedules()
        assert alpha.is_diminishing and beta.is_diminishing

    def test_theory_tau_grows_with_horizon(self, three_tier_problem):
        """Test τ defaults to ⌈c K^γ⌉."""
        config = load_run_config({"preset": "theory"})
        assert config.impairments.tau is None
        assert config.impairments.resolved_tau(10000) == 16
        assert config.to_sim_config(three_tier_problem).impairments.tau == 16

    def test_experiment_preset(self):
        """Test the constant-step quadratic preset."""
        config = load_run_config({"preset": "experiment-s10"})
        assert config.iterations == 2000
        assert config.generator.kind == "quadratic"
        assert config.impairments.tau == 5
        assert config.impairments.loss_rate == 0.1
        assert config.init == "uniform"
        alpha, beta = config.schedules()
        assert (alpha.value, beta.value) == (0.01, 0.05)

    def test_user_keys_win(self):
        """Test user values override nested preset values key by key."""
        config = load_run_config(
            {"preset": "experiment-s10", "impairments": {"loss_rate": 0.3}, "seed": 4}
        )
        assert config.impairments.loss_rate == 0.3
        assert config.impairments.tau == 5
        assert config.seed == 4

    def test_problem_path_drops_preset_generator(self):
        """Test a user problem file replaces the preset's generator."""
        config = load_run_config({"problem": "instance.json"})
        assert config.problem == "instance.json"
        assert config.generator is None

    def test_unknown_preset(self):
        """Test unknown presets name the preset key."""
        with pytest.raises(ConfigError) as exc:
            load_run_config({"preset": "fast"})
        assert exc.value.key == "preset"

    def test_presets_do_not_mutate(self):
        """Test merging leaves the preset table untouched."""
        before = PRESETS["theory"]["impairments"]["gamma"]
        load_run_config({"impairments": {"gamma": 0.1}})
        assert PRESETS["theory"]["impairments"]["gamma"] == before


class TestValidation:
    def test_unknown_key_named(self):
        """Test extra keys are refused with their dotted path."""
        with pytest.raises(ConfigError) as exc:
            load_run_config({"impairments": {"jitter": 1.0}})
        assert exc.value.key == "impairments.jitter"

    def test_bad_type_named(self):
        """Test type errors name the offending key."""
        with pytest.raises(ConfigError) as exc:
            validate_run_config({"iterations": "many"})
        assert exc.value.key == "iterations"

    def test_unknown_algorithm(self):
        """Test algorithms are a closed set."""
        with pytest.raises(ConfigError) as exc:
            load_run_config({"algorithm": "newton"})
        assert exc.value.key == "algorithm"

    def test_engine_errors_surface_on_conversion(self, fig1_problem):
        """Test range errors caught by the engine keep their key."""
        config = load_run_config({"impairments": {"gamma": 0.7}})
        with pytest.raises(ConfigError) as exc:
            config.to_sim_config(fig1_problem)
        assert exc.value.key == "impairments.gamma"

    def test_drift_and_outages_convert(self, fig1_problem):
        """Test nested drift and outage sections become engine objects."""
        config = load_run_config(
            {
                "impairments": {
                    "drift": [{"target": "cost", "knots": [[0, 1.0], [100, 1.1]]}],
                    "outages": [{"start": 5, "end": 10, "edges": ["W1-R1"]}],
                }
            }
        )
        model = config.to_sim_config(fig1_problem).impairments
        assert model.drift_for("cost").factor(50) == pytest.approx(1.05)
        assert model.link_down(7, "W1-R1")
        assert not model.link_down(7, "W2-R3")

    def test_baseline_kind(self):
        """Test baseline parameters flow into the kind."""
        kind = load_run_config({"algorithm": "admm", "admm_rho": 2.0}).baseline_kind()
        assert (kind.tag, kind.rho) == ("admm", 2.0)


class TestOverrides:
    def test_dotted_overrides(self):
        """Test dotted keys update nested values and revalidate."""
        config = load_run_config({"preset": "experiment-s10"})
        updated = config.with_overrides(**{"impairments.loss_rate": 0.0, "seed": 3})
        assert updated.impairments.loss_rate == 0.0
        assert updated.seed == 3
        assert config.impairments.loss_rate == 0.1

    def test_override_through_scalar_rejected(self):
        """Test a dotted path cannot descend into a scalar."""
        with pytest.raises(ConfigError) as exc:
            set_dotted({"seed": 1}, "seed.value", 2)
        assert exc.value.key == "seed.value"

    def test_set_dotted_creates_sections(self):
        """Test missing intermediate sections are created."""
        data = {}
        set_dotted(data, "steps.alpha.value", 0.1)
        assert data == {"steps": {"alpha": {"value": 0.1}}}

    def test_deep_merge(self):
        """Test nested dicts merge and other values replace."""
        merged = deep_merge({"a": {"b": 1, "c": 2}, "d": [1]}, {"a": {"c": 3}, "d": [2]})
        assert merged == {"a": {"b": 1, "c": 3}, "d": [2]}


class TestProblemFiles:
    def test_generator_spec_seed(self):
        """Test the run seed is used unless the spec pins its own."""
        assert GeneratorSpec().build(5) == GeneratorSpec(seed=5).build(0)

    def test_flow_file_round_trip(self, fig1_problem):
        """Test a flow instance survives the file form."""
        data = problem_to_file(fig1_problem).model_dump(mode="json")
        assert data["kind"] == "flow"
        restored = problem_file_adapter.validate_python(data).to_problem()
        assert isinstance(restored, SupplyChainProblem)
        assert restored == fig1_problem

    def test_quadratic_file(self, quadratic_problem):
        """Test the discriminator selects the quadratic form."""
        data = problem_to_file(quadratic_problem).model_dump(mode="json")
        restored = problem_file_adapter.validate_python(data).to_problem()
        assert isinstance(restored, QuadraticProblem)
        assert restored.n_rows == quadratic_problem.n_rows


def test_default_config_is_valid_model():
    """Test RunConfigFile defaults validate on their own."""
    assert RunConfigFile().algorithm == "dapdsco"
