"""
Unit tests for the problem service.
"""
import math

import numpy as np
import pytest

from src.models.geometry import Geometry, RegularizerKind, RegularizerSpec
from src.services.problem_service import (
    all_subgradients,
    generate_elastic_net_instance,
    generate_lasso_instance,
    generate_simplex_instance,
    global_objective,
    local_objective,
    local_subgradient,
    noisy_gradient,
    objective_many,
    project_simplex,
    read_instance_csv,
    reference_optimum,
    wolfe_gap,
    write_instance_csv,
)
from src.tests.support.factories.simulation_factory import (
    create_lasso_problem,
    create_noise_model,
    create_simplex_problem,
)
from src.utils.errors import ArtifactIOError, DomainError, InvalidParameterError, SolverFailedError


class TestInstanceGeneration:
    """Test the instance generators."""

    def test_lasso_instance(self, lasso_problem):
        """Test shapes, planted vector and constants of a lasso instance."""
        assert lasso_problem.features.shape == (6, 4)
        assert lasso_problem.responses.shape == (6,)
        np.testing.assert_array_equal(lasso_problem.planted, [1.0, 1.0, 0.0, 0.0])
        assert np.max(np.abs(lasso_problem.features)) <= 1.0
        assert lasso_problem.reg.kind == RegularizerKind.L1
        assert lasso_problem.G_psi == pytest.approx(0.1 * 2.0)

    def test_subgradient_bound(self, lasso_problem):
        """Test G = max_i ||a_i|| (||a_i|| r + |b_i|) on [-1, 1]^n."""
        norms = np.linalg.norm(lasso_problem.features, axis=1)
        expected = np.max(norms * (norms * 2.0 + np.abs(lasso_problem.responses)))

        assert lasso_problem.G == pytest.approx(expected)

    def test_zero_lambda_has_no_regularizer(self):
        """Test that lam = 0 gives plain least squares over the box."""
        problem = create_lasso_problem(lam=0.0)

        assert problem.reg.kind == RegularizerKind.NONE
        assert problem.G_psi == 0.0

    def test_same_seed_same_data(self):
        """Test that the data depend only on the stream."""
        first = create_lasso_problem(seed=3)
        second = create_lasso_problem(seed=3)

        np.testing.assert_array_equal(first.features, second.features)
        np.testing.assert_array_equal(first.responses, second.responses)

    def test_elastic_net_instance(self):
        """Test the elastic-net constants."""
        problem = generate_elastic_net_instance(4, 4, 0.5, 0.1, np.random.default_rng(0))

        assert problem.name == 'elastic-net'
        assert problem.G_psi == pytest.approx(0.5 * 2.0 + 0.1 * 2.0)

    def test_simplex_instance(self, simplex_problem):
        """Test that the planted vector lies on the simplex."""
        assert simplex_problem.geometry.kind.value == 'entropic-simplex'
        np.testing.assert_allclose(simplex_problem.planted, [0.5, 0.5, 0.0, 0.0])
        assert simplex_problem.G_psi == 0.0

    def test_simplex_needs_even_dimension(self):
        """Test that odd n is rejected."""
        with pytest.raises(InvalidParameterError):
            generate_simplex_instance(4, 5, np.random.default_rng(0))


class TestObjectives:
    """Test gradients and objective evaluation."""

    def test_local_subgradient(self, lasso_problem):
        """Test (<a_i, x> - b_i) a_i."""
        x = np.array([0.5, -0.5, 0.0, 1.0])
        a = lasso_problem.features[2]
        expected = (a @ x - lasso_problem.responses[2]) * a

        np.testing.assert_allclose(local_subgradient(lasso_problem, 2, x), expected)

    def test_all_subgradients_row_per_agent(self, lasso_problem):
        """Test that row i is agent i's gradient at its own point."""
        X = np.random.default_rng(1).uniform(-1.0, 1.0, (6, 4))

        grads = all_subgradients(lasso_problem, X)

        for i in range(6):
            np.testing.assert_allclose(grads[i], local_subgradient(lasso_problem, i, X[i]))

    def test_outside_domain(self, lasso_problem):
        """Test that points outside the box raise DomainError."""
        with pytest.raises(DomainError):
            local_subgradient(lasso_problem, 0, np.array([2.0, 0.0, 0.0, 0.0]))
        with pytest.raises(DomainError):
            local_objective(lasso_problem, 0, np.array([0.0, 0.0, 0.0, -1.5]))

    def test_global_is_sum_of_locals(self, lasso_problem):
        """Test F = sum_i (f_i + psi)."""
        x = np.array([0.1, 0.2, -0.3, 0.4])

        total = sum(local_objective(lasso_problem, i, x) for i in range(6))

        assert global_objective(lasso_problem, x) == pytest.approx(total)

    def test_objective_many(self, lasso_problem):
        """Test the batched evaluation against global_objective."""
        points = np.random.default_rng(2).uniform(-1.0, 1.0, (5, 4))

        values = objective_many(lasso_problem, points)

        np.testing.assert_allclose(values, [global_objective(lasso_problem, p) for p in points])

    def test_noisy_gradient_zero_noise(self, lasso_problem):
        """Test that zero-scale noise leaves the gradient unchanged."""
        x = np.zeros(4)

        g = noisy_gradient(lasso_problem, 1, x, create_noise_model(scale=0.0), np.random.default_rng(0))

        np.testing.assert_array_equal(g, local_subgradient(lasso_problem, 1, x))


class TestReferenceOptimum:
    """Test reference_optimum and its helpers."""

    def test_unconstrained_least_squares(self):
        """Test that a wide box with lam = 0 recovers the least-squares solution."""
        problem = generate_lasso_instance(5, 3, 0.0, np.random.default_rng(9), lower=-1e3, upper=1e3)
        expected, *_ = np.linalg.lstsq(problem.features, problem.responses, rcond=None)

        optimum = reference_optimum(problem)

        np.testing.assert_allclose(optimum.x_star, expected, atol=1e-7)
        assert optimum.solver_residual <= 1e-10

    def test_lasso_beats_feasible_points(self, lasso_problem):
        """Test that F(x*) is below F at random feasible points."""
        optimum = reference_optimum(lasso_problem)
        points = np.random.default_rng(5).uniform(-1.0, 1.0, (200, 4))

        assert lasso_problem.geometry.feasibility_violation(optimum.x_star) == 0.0
        assert optimum.F_star == pytest.approx(global_objective(lasso_problem, optimum.x_star))
        assert np.all(objective_many(lasso_problem, points) >= optimum.F_star - 1e-9)

    def test_simplex_wolfe_gap(self, simplex_problem):
        """Test that the simplex solution is feasible with a small Wolfe gap."""
        optimum = reference_optimum(simplex_problem)

        assert np.sum(optimum.x_star) == pytest.approx(1.0, abs=1e-9)
        assert np.min(optimum.x_star) >= -1e-12
        assert wolfe_gap(simplex_problem, optimum.x_star) <= 1e-8

    def test_iteration_cap(self, lasso_problem):
        """Test that an exhausted iteration cap raises SolverFailedError."""
        with pytest.raises(SolverFailedError) as exc_info:
            reference_optimum(lasso_problem, max_iterations=1)

        assert exc_info.value.details['iterations'] == 1

    def test_project_simplex(self):
        """Test the sort-based projection."""
        np.testing.assert_allclose(project_simplex(np.array([0.5, 1.5])), [0.0, 1.0])
        np.testing.assert_allclose(project_simplex(np.array([0.2, 0.2, 0.2])), np.full(3, 1.0 / 3.0))


class TestInstanceCsv:
    """Test instance CSV persistence."""

    def test_read_back(self, tmp_path, lasso_problem):
        """Test that a written instance reads back with the same data."""
        path = write_instance_csv(lasso_problem, tmp_path / 'instances' / 'lasso.csv')

        restored = read_instance_csv(path, lasso_problem.geometry, lasso_problem.reg, name='lasso')

        np.testing.assert_array_equal(restored.features, lasso_problem.features)
        np.testing.assert_array_equal(restored.responses, lasso_problem.responses)
        assert restored.G == pytest.approx(lasso_problem.G)

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises ArtifactIOError."""
        with pytest.raises(ArtifactIOError):
            read_instance_csv(tmp_path / 'absent.csv', Geometry.box(2), RegularizerSpec())

    def test_header_only(self, tmp_path):
        """Test that a file without agent rows is rejected."""
        path = tmp_path / 'empty.csv'
        path.write_text('agent,a_0,b\n')

        with pytest.raises(ArtifactIOError):
            read_instance_csv(path, Geometry.box(1), RegularizerSpec())

    def test_simplex_geometry_kept(self, tmp_path):
        """Test reading a simplex instance with its own geometry."""
        problem = create_simplex_problem()
        path = write_instance_csv(problem, tmp_path / 'simplex.csv')

        restored = read_instance_csv(path, problem.geometry, problem.reg)

        assert restored.geometry.kind == problem.geometry.kind
        assert math.isclose(restored.G, problem.G)


class TestOracleProperties:
    """Test the gradient oracle against finite differences, its bound and the loss convexity."""

    def test_gradient_matches_central_difference(self):
        """Test the gradient against central differences of f_i at interior points."""
        problem = create_lasso_problem(lam=0.0)
        rng = np.random.default_rng(5)
        h = 1e-5

        for i in range(problem.m):
            x = rng.uniform(-0.5, 0.5, problem.n)
            numeric = np.array([
                (local_objective(problem, i, x + h * e) - local_objective(problem, i, x - h * e)) / (2.0 * h)
                for e in np.eye(problem.n)
            ])
            np.testing.assert_allclose(local_subgradient(problem, i, x), numeric, rtol=0.0, atol=1e-6)

    def test_noisy_gradient_is_unbiased(self, lasso_problem):
        """Test that the mean of 10^5 noisy gradients lies within 3 standard errors of the gradient."""
        noise = create_noise_model(scale=1e-3)
        rng = np.random.default_rng(6)
        x = np.array([0.2, -0.1, 0.4, 0.0])
        count = 100_000

        total = np.zeros(4)
        for _ in range(count):
            total += noisy_gradient(lasso_problem, 3, x, noise, rng)
        bias = total / count - local_subgradient(lasso_problem, 3, x)

        assert np.all(np.abs(bias) <= 3.0 * noise.std / math.sqrt(count))

    @pytest.mark.parametrize('factory', [create_lasso_problem, create_simplex_problem])
    def test_subgradients_bounded_by_g(self, factory):
        """Test that max_i ||g_i(x)||_* <= G over sampled feasible points."""
        problem = factory()
        rng = np.random.default_rng(7)

        for _ in range(200):
            if problem.geometry.is_box:
                X = rng.uniform(problem.geometry.lower, problem.geometry.upper, (problem.m, problem.n))
            else:
                X = rng.dirichlet(np.ones(problem.n), problem.m)
            norms = problem.geometry.dual_norm(all_subgradients(problem, X))
            assert norms.max() <= problem.G * (1.0 + 1e-12)

    def test_local_objective_convex(self, lasso_problem):
        """Test f_i + psi along random chords of the box."""
        rng = np.random.default_rng(8)

        for _ in range(100):
            i = int(rng.integers(lasso_problem.m))
            x, y = rng.uniform(-1.0, 1.0, (2, lasso_problem.n))
            t = float(rng.uniform())
            mixed = local_objective(lasso_problem, i, t * x + (1.0 - t) * y)
            chord = t * local_objective(lasso_problem, i, x) + (1.0 - t) * local_objective(lasso_problem, i, y)
            assert mixed <= chord + 1e-12
