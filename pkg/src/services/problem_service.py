"""
Problem service for distributed composite least-squares instances.

This module generates instances following the regression protocol
(uniform features, planted data-generating vector, Gaussian response noise),
evaluates local and global objectives and gradients, and computes the
centralized reference optimum every error is measured against.
"""
import csv
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from src.models.geometry import Geometry, RegularizerKind, RegularizerSpec
from src.models.noise import NoiseModel
from src.models.problem import CompositeProblem, ReferenceOptimum
from src.services.geometry_service import mirror_step, regularizer_lipschitz, regularizer_value
from src.services.noise_service import sample
from src.utils.errors import ArtifactIOError, DomainError, InvalidParameterError, SolverFailedError
from src.utils.logging import get_logger


logger = get_logger(__name__)

DOMAIN_TOL = 1e-9
BOX_SOLVER_TOL = 1e-10
SIMPLEX_SOLVER_TOL = 1e-8
SOLVER_MAX_ITERATIONS = 1_000_000
FRANK_WOLFE_POLISH = 10
ENTROPIC_WARM_START = 500


def _subgradient_bound(features: np.ndarray, responses: np.ndarray, geometry: Geometry) -> float:
    """G = max_i ||a_i||_* (||a_i||_* r_X + |b_i|)."""
    dual = geometry.dual_norm(features)
    return float(np.max(dual * (dual * geometry.radius() + np.abs(responses))))


def _draw_regression_data(
    m: int,
    n: int,
    planted: np.ndarray,
    rng: np.random.Generator,
    data_noise_std: float,
) -> Tuple[np.ndarray, np.ndarray]:
    features = rng.uniform(-1.0, 1.0, size=(m, n))
    responses = features @ planted + data_noise_std * rng.standard_normal(m)
    return features, responses


def _box_instance(
    m: int,
    n: int,
    reg: RegularizerSpec,
    lower: float,
    upper: float,
    rng: np.random.Generator,
    data_noise_std: float,
    name: str,
) -> CompositeProblem:
    if m < 1:
        raise InvalidParameterError('m', m, 'need at least one agent')
    geometry = Geometry.box(n, lower, upper)
    planted = np.zeros(n)
    planted[: n // 2] = 1.0
    features, responses = _draw_regression_data(m, n, planted, rng, data_noise_std)
    return CompositeProblem(
        features=features,
        responses=responses,
        geometry=geometry,
        reg=reg,
        G=_subgradient_bound(features, responses, geometry),
        G_psi=regularizer_lipschitz(geometry, reg),
        planted=planted,
        name=name,
    )


def generate_lasso_instance(
    m: int,
    n: int,
    lam: float,
    rng: np.random.Generator,
    lower: float = -1.0,
    upper: float = 1.0,
    data_noise_std: float = 1.0,
) -> CompositeProblem:
    """
    Distributed lasso over a box.

    a_i ~ U[-1, 1]^n, b_i = <a_i, x_planted> + eps_i with eps_i ~ N(0, 1) i.i.d.
    per agent, x_planted = 1 on the first floor(n/2) coordinates. Every agent
    carries the full l1 weight lam.

    Args:
        m: Agent count
        n: Dimension
        lam: l1 weight (0 gives least squares over the box)
        rng: Data stream of the trial
        lower: Box lower bound
        upper: Box upper bound
        data_noise_std: Standard deviation of the response noise

    Returns:
        CompositeProblem with euclidean-box geometry
    """
    reg = RegularizerSpec.l1(lam) if lam > 0.0 else RegularizerSpec()
    return _box_instance(m, n, reg, lower, upper, rng, data_noise_std, 'lasso')


def generate_elastic_net_instance(
    m: int,
    n: int,
    lam1: float,
    lam2: float,
    rng: np.random.Generator,
    lower: float = -1.0,
    upper: float = 1.0,
    data_noise_std: float = 1.0,
) -> CompositeProblem:
    """Same data protocol as the lasso with psi = (lam1/2)||x||^2 + lam2 ||x||_1."""
    reg = RegularizerSpec.elastic_net(lam1, lam2)
    return _box_instance(m, n, reg, lower, upper, rng, data_noise_std, 'elastic-net')


def generate_simplex_instance(
    m: int,
    n: int,
    rng: np.random.Generator,
    floor: Optional[float] = None,
    data_noise_std: float = 1.0,
) -> CompositeProblem:
    """
    Distributed least squares over the probability simplex.

    The planted vector has 2/n on its first n/2 coordinates, so it sums to 1.

    Raises:
        InvalidParameterError: If n is odd
    """
    if n % 2 != 0:
        raise InvalidParameterError('n', n, 'simplex instances need an even dimension')
    geometry = Geometry.simplex(n) if floor is None else Geometry.simplex(n, floor)
    planted = np.zeros(n)
    planted[: n // 2] = 2.0 / n
    features, responses = _draw_regression_data(m, n, planted, rng, data_noise_std)
    reg = RegularizerSpec(kind=RegularizerKind.INDICATOR)
    return CompositeProblem(
        features=features,
        responses=responses,
        geometry=geometry,
        reg=reg,
        G=_subgradient_bound(features, responses, geometry),
        G_psi=0.0,
        planted=planted,
        name='simplex',
    )


def _check_domain(problem: CompositeProblem, x: np.ndarray):
    violation = problem.geometry.feasibility_violation(x)
    if violation > DOMAIN_TOL:
        raise DomainError(violation, DOMAIN_TOL)


def local_subgradient(problem: CompositeProblem, i: int, x: np.ndarray) -> np.ndarray:
    """
    Gradient (<a_i, x> - b_i) a_i of agent i's loss.

    Raises:
        DomainError: If x is outside the domain
    """
    x = np.asarray(x, dtype=float)
    _check_domain(problem, x)
    a = problem.features[i]
    return (float(a @ x) - float(problem.responses[i])) * a


def all_subgradients(problem: CompositeProblem, X: np.ndarray) -> np.ndarray:
    """Row i holds agent i's gradient at its own point X[i]; no domain check."""
    residuals = np.einsum('ij,ij->i', problem.features, X) - problem.responses
    return residuals[:, None] * problem.features


def noisy_gradient(
    problem: CompositeProblem,
    i: int,
    x: np.ndarray,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Clean gradient minus one noise draw."""
    return local_subgradient(problem, i, x) - sample(noise, rng)


def local_objective(problem: CompositeProblem, i: int, x: np.ndarray) -> float:
    """f_i(x) + psi(x)."""
    x = np.asarray(x, dtype=float)
    _check_domain(problem, x)
    residual = float(problem.features[i] @ x) - float(problem.responses[i])
    return 0.5 * residual * residual + float(regularizer_value(problem.reg, x))


def global_objective(problem: CompositeProblem, x: np.ndarray) -> float:
    """
    F(x) = sum_i [0.5 (<a_i, x> - b_i)^2 + psi(x)].

    Raises:
        DomainError: If x is outside the domain
    """
    x = np.asarray(x, dtype=float)
    _check_domain(problem, x)
    residuals = problem.features @ x - problem.responses
    return float(0.5 * residuals @ residuals + problem.m * regularizer_value(problem.reg, x))


def objective_many(problem: CompositeProblem, points: np.ndarray) -> np.ndarray:
    """F evaluated at every row of `points` (k, n); no domain check."""
    residuals = points @ problem.features.T - problem.responses
    return 0.5 * np.sum(residuals * residuals, axis=1) + problem.m * regularizer_value(problem.reg, points)


def _summed_regularizer(problem: CompositeProblem) -> RegularizerSpec:
    """psi scaled by m, the regularizer of the centralized problem."""
    reg = problem.reg
    return RegularizerSpec(kind=reg.kind, lam=reg.lam * problem.m,
                           lam1=reg.lam1 * problem.m, lam2=reg.lam2 * problem.m)


def _smooth_gradient(problem: CompositeProblem, x: np.ndarray) -> np.ndarray:
    return problem.features.T @ (problem.features @ x - problem.responses)


def _lipschitz(problem: CompositeProblem) -> float:
    top = float(np.linalg.eigvalsh(problem.features.T @ problem.features)[-1])
    return max(top, 1e-12)


def _solve_box(problem: CompositeProblem, tol: float, max_iterations: int) -> ReferenceOptimum:
    """Accelerated proximal gradient with adaptive restart."""
    geometry = problem.geometry
    reg = _summed_regularizer(problem)
    lipschitz = _lipschitz(problem)
    step = 1.0 / lipschitz

    def prox_grad(point: np.ndarray) -> np.ndarray:
        return mirror_step(geometry, reg, point, _smooth_gradient(problem, point), step)

    x = geometry.project_feasible(np.zeros(problem.n))
    z = x.copy()
    momentum = 1.0
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        x_next = prox_grad(z)
        # gradient-mapping norm L * ||x - T(x)||
        residual = lipschitz * float(np.linalg.norm(x_next - prox_grad(x_next)))
        if residual <= tol:
            x = x_next
            break
        # gradient-based restart
        if np.dot(z - x_next, x_next - x) > 0.0:
            momentum = 1.0
            z = x_next.copy()
        else:
            momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
            z = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x)
            momentum = momentum_next
        x = x_next
    else:
        raise SolverFailedError(max_iterations, residual, tol)

    return ReferenceOptimum(
        x_star=x,
        F_star=global_objective(problem, x),
        solver_iterations=iteration,
        solver_residual=residual,
    )


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    n = v.shape[0]
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, n + 1)
    rho = int(np.nonzero(u - cumulative / index > 0.0)[0][-1])
    shift = cumulative[rho] / (rho + 1.0)
    return np.maximum(v - shift, 0.0)


def wolfe_gap(problem: CompositeProblem, x: np.ndarray) -> float:
    """max over simplex vertices s of <grad f(x), x - s>."""
    grad = _smooth_gradient(problem, x)
    return float(grad @ x - np.min(grad))


def _solve_simplex(problem: CompositeProblem, tol: float, max_iterations: int) -> ReferenceOptimum:
    """Entropic warm start, accelerated projected gradient, then Frank-Wolfe polish."""
    n = problem.n
    lipschitz = _lipschitz(problem)
    step = 1.0 / lipschitz

    x = np.full(n, 1.0 / n)
    warm_scale = 1.0 / max(problem.G * problem.m, 1e-12)
    for k in range(1, ENTROPIC_WARM_START + 1):
        logits = np.log(np.maximum(x, 1e-300)) - (warm_scale / np.sqrt(k)) * _smooth_gradient(problem, x)
        logits -= np.max(logits)
        x = np.exp(logits)
        x /= np.sum(x)

    z = x.copy()
    momentum = 1.0
    iterations = ENTROPIC_WARM_START
    for iteration in range(1, max_iterations + 1):
        x_next = project_simplex(z - step * _smooth_gradient(problem, z))
        fixed_point = lipschitz * float(np.linalg.norm(x_next - project_simplex(x_next - step * _smooth_gradient(problem, x_next))))
        iterations += 1
        if fixed_point <= tol * 1e-2:
            x = x_next
            break
        if np.dot(z - x_next, x_next - x) > 0.0:
            momentum = 1.0
            z = x_next.copy()
        else:
            momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
            z = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x)
            momentum = momentum_next
        x = x_next

    quadratic = problem.features.T @ problem.features
    for _ in range(FRANK_WOLFE_POLISH):
        grad = _smooth_gradient(problem, x)
        vertex = np.zeros(n)
        vertex[int(np.argmin(grad))] = 1.0
        direction = vertex - x
        curvature = float(direction @ quadratic @ direction)
        if curvature <= 0.0:
            break
        gamma = min(max(-float(grad @ direction) / curvature, 0.0), 1.0)
        x = x + gamma * direction
        iterations += 1

    residual = wolfe_gap(problem, x)
    if residual > tol:
        raise SolverFailedError(iterations, residual, tol)
    return ReferenceOptimum(
        x_star=x,
        F_star=global_objective(problem, x),
        solver_iterations=iterations,
        solver_residual=residual,
    )


def reference_optimum(
    problem: CompositeProblem,
    tol: Optional[float] = None,
    max_iterations: int = SOLVER_MAX_ITERATIONS,
) -> ReferenceOptimum:
    """
    Centralized minimizer of F over the domain.

    Box instances use accelerated proximal gradient on sum_i f_i with the
    regularizer scaled by m, stopped when the gradient mapping L (x - T(x))
    of the prox-gradient map T has norm at most tol (default 1e-10).
    Simplex instances are stopped on the Wolfe gap (default 1e-8).

    Args:
        problem: Instance
        tol: Residual tolerance (default depends on the geometry)
        max_iterations: Iteration cap

    Returns:
        ReferenceOptimum

    Raises:
        SolverFailedError: If the tolerance is not met within the cap
    """
    if problem.geometry.is_box:
        optimum = _solve_box(problem, BOX_SOLVER_TOL if tol is None else tol, max_iterations)
    else:
        optimum = _solve_simplex(problem, SIMPLEX_SOLVER_TOL if tol is None else tol, max_iterations)
    logger.debug(
        "Reference optimum computed",
        context={'instance': problem.name, 'F_star': optimum.F_star,
                 'iterations': optimum.solver_iterations, 'residual': optimum.solver_residual}
    )
    return optimum


def write_instance_csv(problem: CompositeProblem, path: Union[str, Path]) -> Path:
    """
    Write the instance data as `agent, a_0..a_{n-1}, b` rows.

    Raises:
        ArtifactIOError: If the file cannot be written
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['agent'] + [f'a_{j}' for j in range(problem.n)] + ['b'])
            for i in range(problem.m):
                writer.writerow([i] + [repr(float(v)) for v in problem.features[i]] + [repr(float(problem.responses[i]))])
    except OSError as e:
        raise ArtifactIOError(str(path), str(e)) from e
    return path


def read_instance_csv(
    path: Union[str, Path],
    geometry: Geometry,
    reg: RegularizerSpec,
    name: str = 'custom',
) -> CompositeProblem:
    """
    Rebuild an instance from write_instance_csv output.

    Raises:
        ArtifactIOError: If the file is missing or malformed
    """
    path = Path(path)
    try:
        with open(path, newline='') as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        raise ArtifactIOError(str(path), str(e)) from e
    if len(rows) < 2:
        raise ArtifactIOError(str(path), 'instance file has no agent rows')
    try:
        body = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    except ValueError as e:
        raise ArtifactIOError(str(path), f'non-numeric value: {e}') from e
    features, responses = body[:, :-1], body[:, -1]
    return CompositeProblem(
        features=features,
        responses=responses,
        geometry=geometry,
        reg=reg,
        G=_subgradient_bound(features, responses, geometry),
        G_psi=regularizer_lipschitz(geometry, reg),
        name=name,
    )
