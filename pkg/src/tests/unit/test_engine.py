"""
Unit tests for the distributed mirror-descent engine.
"""
import numpy as np
import pytest

from src.models.geometry import Geometry, RegularizerSpec
from src.models.problem import CompositeProblem
from src.models.run import NetworkState, RunConfig, StepsizeRule
from src.pipeline.engine import (
    bregman_radius,
    consensus_envelope,
    dcsmd_step,
    disagreement,
    dsed_step_reference,
    dsgd_step_reference,
    ergodic_outputs,
    initialize,
    run,
    stepsize_at,
)
from src.services.graph_service import build_schedule, schedule_mixing_constants
from src.services.problem_service import all_subgradients, reference_optimum
from src.tests.support.factories.simulation_factory import (
    create_lasso_problem,
    create_noise_model,
    create_run_config,
    create_simplex_problem,
)
from src.utils.errors import InvalidParameterError, InvariantViolationError
from src.utils.rng import StreamFactory


def _consensus_problem(m: int, n: int) -> CompositeProblem:
    return CompositeProblem(
        features=np.zeros((m, n)),
        responses=np.zeros(m),
        geometry=Geometry.box(n),
        reg=RegularizerSpec(),
        G=0.0,
        G_psi=0.0,
    )


class TestRunConfig:
    """Test RunConfig model."""

    def test_recorded_steps_end_at_horizon(self):
        """Test that the last recorded step is always T."""
        assert RunConfig(T=12, record_every=5).recorded_steps() == [5, 10, 12]
        assert RunConfig(T=10, record_every=5).recorded_steps() == [5, 10]
        assert RunConfig(T=3, record_every=5).recorded_steps() == [3]

    def test_invalid_values(self):
        """Test that T, stride and seed are validated."""
        with pytest.raises(InvalidParameterError):
            RunConfig(T=0)
        with pytest.raises(InvalidParameterError):
            RunConfig(T=10, record_every=0)
        with pytest.raises(InvalidParameterError):
            RunConfig(T=10, seed=-1)
        with pytest.raises(InvalidParameterError):
            RunConfig(T=10, radius_floor=0.0)


class TestStepsize:
    """Test stepsize_at function."""

    def test_varying(self):
        """Test alpha_t = 1 / sqrt(t + 1)."""
        config = create_run_config(T=10)

        assert stepsize_at(config, 3) == pytest.approx(0.5)
        assert stepsize_at(config, 1) == pytest.approx(1.0 / np.sqrt(2.0))

    def test_constant(self):
        """Test alpha_t = 1 / sqrt(T) at every step."""
        config = create_run_config(T=16, stepsize='constant-horizon')

        assert {stepsize_at(config, t) for t in (1, 8, 16)} == {0.25}

    @pytest.mark.parametrize('t', [0, 11])
    def test_outside_horizon(self, t):
        """Test that t outside 1..T is rejected."""
        with pytest.raises(InvalidParameterError):
            stepsize_at(create_run_config(T=10), t)


class TestInitialize:
    """Test initialize function."""

    def test_box_points_in_unit_cube(self, lasso_problem):
        """Test that box initial points lie in [0, 1]^n."""
        x = initialize(lasso_problem, np.random.default_rng(0))

        assert x.shape == (6, 4)
        assert np.min(x) >= 0.0 and np.max(x) <= 1.0

    def test_simplex_points_feasible(self, simplex_problem):
        """Test that simplex initial points sum to one above the floor."""
        x = initialize(simplex_problem, np.random.default_rng(0))

        np.testing.assert_allclose(x.sum(axis=1), np.ones(6))
        assert np.min(x) > 0.0


class TestStep:
    """Test dcsmd_step and the agent-by-agent references."""

    def test_matches_projected_sgd(self, ring_schedule):
        """Test the vectorized box step against the per-agent loop."""
        problem = create_lasso_problem(lam=0.0)
        rng = np.random.default_rng(1)
        state = NetworkState(x=initialize(problem, rng))
        noise = rng.normal(0.0, 0.1, (6, 4))

        stepped = dcsmd_step(problem, ring_schedule, state, 0.3, noise)

        expected = dsgd_step_reference(
            ring_schedule.weight_at(1).weights, state.x, all_subgradients(problem, state.x) - noise,
            0.3, problem.geometry.lower, problem.geometry.upper,
        )
        np.testing.assert_allclose(stepped.x, expected, atol=1e-12)

    def test_matches_entropic_descent(self, ring_schedule):
        """Test the vectorized simplex step against the per-agent loop."""
        problem = create_simplex_problem(floor=0.0)
        rng = np.random.default_rng(2)
        state = NetworkState(x=initialize(problem, rng))
        noise = rng.normal(0.0, 0.1, (6, 4))

        stepped = dcsmd_step(problem, ring_schedule, state, 0.3, noise)

        expected = dsed_step_reference(
            ring_schedule.weight_at(1).weights, state.x, all_subgradients(problem, state.x) - noise, 0.3,
        )
        np.testing.assert_allclose(stepped.x, expected, atol=1e-12)

    def test_updates_sums_without_mutation(self, lasso_problem, ring_schedule):
        """Test that the step returns a new state with updated ergodic sums."""
        x = initialize(lasso_problem, np.random.default_rng(3))
        state = NetworkState(x=x.copy())

        first = dcsmd_step(lasso_problem, ring_schedule, state, 0.5, np.zeros((6, 4)))
        second = dcsmd_step(lasso_problem, ring_schedule, first, 0.25, np.zeros((6, 4)))

        assert state.t == 1 and np.all(state.sum_x == 0.0)
        assert (first.t, second.t) == (2, 3)
        assert second.alpha_ref == 0.5
        assert second.sum_alpha == pytest.approx(1.5)
        np.testing.assert_allclose(second.sum_x, x + first.x)
        np.testing.assert_allclose(second.sum_alpha_x, x + 0.5 * first.x)

    def test_infeasible_iterate(self, lasso_problem, ring_schedule):
        """Test that an iterate outside the domain is an invariant violation."""
        state = NetworkState(x=np.full((6, 4), 2.0))

        with pytest.raises(InvariantViolationError):
            dcsmd_step(lasso_problem, ring_schedule, state, 0.5, np.zeros((6, 4)))

    def test_pure_consensus_preserves_average(self, ring_schedule):
        """Test that zero gradients only average and stay under the mixing envelope."""
        problem = _consensus_problem(6, 3)
        x_init = np.random.default_rng(4).uniform(-1.0, 1.0, (6, 3))
        mixing = schedule_mixing_constants(ring_schedule)
        state = NetworkState(x=x_init.copy())

        for _ in range(50):
            state = dcsmd_step(problem, ring_schedule, state, 1.0, np.zeros((6, 3)))
            np.testing.assert_allclose(state.x.mean(axis=0), x_init.mean(axis=0), atol=1e-12)
            bound = consensus_envelope(mixing, state.t, x_init, problem.geometry.norm)
            assert disagreement(problem, state.x) <= bound + 1e-12


class TestErgodicOutputs:
    """Test ergodic_outputs and disagreement."""

    def test_no_steps(self, lasso_problem):
        """Test that averages need at least one step."""
        with pytest.raises(InvalidParameterError):
            ergodic_outputs(lasso_problem, NetworkState(x=np.zeros((6, 4))))

    def test_averages(self, lasso_problem):
        """Test the equi-weight and weighted averages from running sums."""
        state = NetworkState(
            x=np.zeros((6, 4)), t=3,
            sum_x=np.full((6, 4), 0.8), sum_alpha_x=np.full((6, 4), 0.3), sum_alpha=1.5,
        )

        x_tilde, x_hat = ergodic_outputs(lasso_problem, state)

        np.testing.assert_allclose(x_tilde, 0.4)
        np.testing.assert_allclose(x_hat, 0.2)

    def test_disagreement(self, lasso_problem):
        """Test max_i ||x_i - mean|| in the l2 norm."""
        x = np.zeros((6, 4))
        x[0] = [0.6, 0.0, 0.0, 0.0]

        assert disagreement(lasso_problem, x) == pytest.approx(0.5)


class TestRun:
    """Test run function."""

    def test_trajectory_shape(self, lasso_problem, ring_schedule, gaussian_noise):
        """Test recorded steps, shapes and stepsizes."""
        result = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=50))

        np.testing.assert_array_equal(result.trajectory.steps, np.arange(5, 51, 5))
        assert result.trajectory.errors.shape == (10, 6)
        assert len(result.trajectory) == 10
        np.testing.assert_allclose(result.trajectory.stepsizes, 1.0 / np.sqrt(np.arange(5, 51, 5) + 1.0))
        assert result.state.t == 51

    def test_errors_nonnegative(self, lasso_problem, ring_schedule, gaussian_noise):
        """Test that recorded errors do not drop below the reference optimum."""
        result = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=100))

        assert result.trajectory.errors.min() >= -1e-9
        assert result.trajectory.errors_weighted.min() >= -1e-9
        assert result.initial_error > 0.0

    def test_reproducible(self, lasso_problem, ring_schedule, gaussian_noise):
        """Test that the same seed and trial reproduce the run bit for bit."""
        config = create_run_config(T=30, seed=5, trial=2)
        optimum = reference_optimum(lasso_problem)

        first = run(lasso_problem, ring_schedule, gaussian_noise, config, optimum=optimum)
        second = run(lasso_problem, ring_schedule, gaussian_noise, config, optimum=optimum,
                     streams=StreamFactory(5))

        np.testing.assert_array_equal(first.trajectory.errors, second.trajectory.errors)

    def test_trials_differ(self, lasso_problem, ring_schedule, gaussian_noise):
        """Test that different trials draw different noise and initial points."""
        first = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=20, trial=0))
        second = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=20, trial=1))

        assert not np.array_equal(first.trajectory.errors, second.trajectory.errors)

    def test_constant_stepsize_outputs_coincide(self, lasso_problem, ring_schedule, gaussian_noise):
        """Test that equal weights make both ergodic outputs identical."""
        result = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=40, stepsize='constant-horizon'))

        np.testing.assert_array_equal(result.x_tilde, result.x_hat)
        np.testing.assert_array_equal(result.trajectory.errors, result.trajectory.errors_weighted)

    def test_simplex_run_feasible(self, simplex_problem, ring_schedule):
        """Test that simplex runs keep the ergodic outputs on the simplex."""
        result = run(simplex_problem, ring_schedule, create_noise_model(scale=1e-2), create_run_config(T=40))

        np.testing.assert_allclose(result.x_tilde.sum(axis=1), np.ones(6), atol=1e-12)
        assert np.min(result.x_hat) > 0.0

    def test_explicit_initial_points(self, lasso_problem, ring_schedule):
        """Test that x_init is used as the first iterate."""
        x_init = np.zeros((6, 4))
        config = create_run_config(T=1, record_every=1)

        result = run(lasso_problem, ring_schedule, create_noise_model(scale=0.0), config, x_init=x_init)

        np.testing.assert_array_equal(result.x_tilde, x_init)

    def test_size_mismatch(self, lasso_problem, gaussian_noise):
        """Test that schedule and noise sizes must match the problem."""
        with pytest.raises(InvalidParameterError):
            run(lasso_problem, build_schedule('static-ring', 5), gaussian_noise, create_run_config())
        with pytest.raises(InvalidParameterError):
            run(lasso_problem, build_schedule('static-ring', 6), create_noise_model(n=3), create_run_config())

    def test_stepsize_rule_enum(self):
        """Test that the config carries the stepsize enum."""
        assert create_run_config(stepsize='constant-horizon').stepsize == StepsizeRule.CONSTANT_HORIZON


class TestBregmanRadius:
    """Test the optional max(rho, d_t) diagnostic."""

    def test_off_by_default(self, lasso_problem, ring_schedule, gaussian_noise):
        result = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=10))

        assert result.trajectory.bregman_radius is None

    def test_first_step_and_monotone(self, lasso_problem, ring_schedule):
        """Test d_1 from the initial points and a running maximum afterwards."""
        optimum = reference_optimum(lasso_problem)
        config = create_run_config(T=20, record_every=1, radius_floor=1e-12)

        result = run(lasso_problem, ring_schedule, create_noise_model(scale=1e-2), config,
                     optimum=optimum, x_init=np.zeros((6, 4)))

        radius = result.trajectory.bregman_radius
        assert radius.shape == (20,)
        np.testing.assert_allclose(radius[0], np.linalg.norm(optimum.x_star) / np.sqrt(2.0), rtol=1e-12)
        assert np.all(np.diff(radius) >= 0.0)

    def test_floor_dominates(self, lasso_problem, ring_schedule, gaussian_noise):
        """Test that a large rho is recorded as is."""
        result = run(lasso_problem, ring_schedule, gaussian_noise, create_run_config(T=10, radius_floor=1e3))

        np.testing.assert_array_equal(result.trajectory.bregman_radius, np.full(2, 1e3))

    def test_entropic_radius(self, simplex_problem):
        """Test sqrt of the largest KL divergence from x* over the rows."""
        x_star = np.array([0.5, 0.5, 0.0, 0.0])
        x = np.array([[0.25, 0.25, 0.25, 0.25], [0.5, 0.5, 1e-12, 1e-12]])

        assert bregman_radius(simplex_problem, x_star, x) == pytest.approx(np.sqrt(np.log(2.0)), rel=1e-9)
