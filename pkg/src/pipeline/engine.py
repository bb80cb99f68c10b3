"""
Distributed composite stochastic mirror descent engine.

Every agent i holds x_{i,t}. One synchronous step:

    y_{i,t}   = sum_j [W_t]_{ij} x_{j,t}
    g_hat     = grad f_i(x_{i,t}) - xi_{i,t}
    x_{i,t+1} = argmin_x <g_hat, x> + D_Phi(x || y_{i,t}) / alpha_t + psi(x)

With the Euclidean box geometry and no regularizer this is projected
distributed SGD; with the entropic simplex geometry it is distributed
entropic descent. The whole network is stored as (m, n) arrays.
"""
import time
from typing import Optional, Tuple

import numpy as np

from src.models.graph import GraphSchedule, MixingConstants
from src.models.noise import NoiseModel
from src.models.problem import CompositeProblem, ReferenceOptimum
from src.models.run import NetworkState, RunConfig, RunResult, StepsizeRule, Trajectory
from src.services.geometry_service import bregman, check_supported, mirror_step
from src.services.noise_service import AgentNoise
from src.services.problem_service import all_subgradients, objective_many, reference_optimum
from src.utils.errors import InvalidParameterError, InvariantViolationError
from src.utils.logging import get_logger
from src.utils.rng import StreamFactory


logger = get_logger(__name__)

FEASIBILITY_TOL = 1e-9
ERROR_TOL = 1e-9


def stepsize_at(config: RunConfig, t: int) -> float:
    """
    Stepsize alpha_t.

    varying-invsqrt: 1 / sqrt(t + 1); constant-horizon: 1 / sqrt(T).

    Raises:
        InvalidParameterError: If t is outside 1..T
    """
    if t < 1 or t > config.T:
        raise InvalidParameterError('t', t, f'step must lie in 1..{config.T}')
    if config.stepsize == StepsizeRule.CONSTANT_HORIZON:
        return 1.0 / np.sqrt(config.T)
    return 1.0 / np.sqrt(t + 1.0)


def initialize(problem: CompositeProblem, rng: np.random.Generator) -> np.ndarray:
    """
    Initial iterates x_{i,1} for every agent.

    Box: U[0, 1]^n clamped into the box. Simplex: symmetric Dirichlet(1),
    floored and renormalized.

    Returns:
        (m, n) array of feasible points
    """
    geometry = problem.geometry
    if geometry.is_box:
        return geometry.project_feasible(rng.uniform(0.0, 1.0, size=(problem.m, problem.n)))
    return geometry.project_feasible(rng.dirichlet(np.ones(problem.n), size=problem.m))


def _check_feasible(problem: CompositeProblem, x: np.ndarray, what: str, t: int):
    violation = problem.geometry.feasibility_violation(x)
    if violation > FEASIBILITY_TOL:
        raise InvariantViolationError(f'{what} left the domain', {'step': t, 'violation': violation})


def dcsmd_step(
    problem: CompositeProblem,
    schedule: GraphSchedule,
    state: NetworkState,
    alpha: float,
    noise: np.ndarray,
) -> NetworkState:
    """
    One synchronous step for all agents.

    Args:
        problem: Instance
        schedule: Communication schedule (W_t for t = state.t)
        state: Network state at step t
        alpha: Stepsize alpha_t
        noise: (m, n) noise draws xi_{i,t}

    Returns:
        New NetworkState at step t + 1; `state` is not modified

    Raises:
        InvariantViolationError: If any iterate is infeasible
    """
    t = state.t
    x = state.x
    _check_feasible(problem, x, 'iterate', t)

    gradients = all_subgradients(problem, x) - noise
    y = schedule.weight_at(t).weights @ x
    x_next = mirror_step(problem.geometry, problem.reg, y, gradients, alpha)

    alpha_ref = alpha if state.alpha_ref is None else state.alpha_ref
    weight = alpha / alpha_ref
    return NetworkState(
        x=x_next,
        t=t + 1,
        sum_x=state.sum_x + x,
        sum_alpha_x=state.sum_alpha_x + weight * x,
        sum_alpha=state.sum_alpha + weight,
        alpha_ref=alpha_ref,
    )


def dsgd_step_reference(
    weights: np.ndarray,
    x: np.ndarray,
    gradients: np.ndarray,
    alpha: float,
    lower: np.ndarray,
    upper: np.ndarray,
) -> np.ndarray:
    """Projected distributed SGD step, coded agent by agent."""
    m = x.shape[0]
    out = np.empty_like(x)
    for i in range(m):
        y_i = weights[i] @ x
        out[i] = np.minimum(np.maximum(y_i - alpha * gradients[i], lower), upper)
    return out


def dsed_step_reference(weights: np.ndarray, x: np.ndarray, gradients: np.ndarray, alpha: float) -> np.ndarray:
    """Distributed entropic descent step, coded agent by agent without flooring."""
    m = x.shape[0]
    out = np.empty_like(x)
    for i in range(m):
        y_i = weights[i] @ x
        unnormalized = y_i * np.exp(-alpha * gradients[i])
        out[i] = unnormalized / np.sum(unnormalized)
    return out


def ergodic_outputs(problem: CompositeProblem, state: NetworkState) -> Tuple[np.ndarray, np.ndarray]:
    """
    Equi-weight and stepsize-weighted running averages of the visited iterates.

    Returns:
        (x_tilde, x_hat), each (m, n) and feasible

    Raises:
        InvalidParameterError: If no step has been taken
    """
    steps = state.steps_taken
    if steps < 1:
        raise InvalidParameterError('steps', steps, 'ergodic outputs need at least one step')
    x_tilde = problem.geometry.project_feasible(state.sum_x / float(steps))
    x_hat = problem.geometry.project_feasible(state.sum_alpha_x / state.sum_alpha)
    return x_tilde, x_hat


def disagreement(problem: CompositeProblem, x: np.ndarray) -> float:
    """max_i ||x_i - mean(x)|| in the geometry's norm."""
    return float(np.max(problem.geometry.norm(x - np.mean(x, axis=0))))


def consensus_envelope(mixing: MixingConstants, t: int, x_init: np.ndarray, norm) -> float:
    """omega * gamma^(t-1) * sum_j ||x_{j,1}||: pure-consensus disagreement bound at step t."""
    return float(mixing.omega * mixing.gamma ** (t - 1) * np.sum(norm(x_init)))


def bregman_radius(problem: CompositeProblem, x_star: np.ndarray, x: np.ndarray) -> float:
    """max_i sqrt(D_Phi(x* || x_i)) over the rows of x."""
    return float(np.sqrt(np.max(bregman(problem.geometry, x_star, x))))


def run(
    problem: CompositeProblem,
    schedule: GraphSchedule,
    noise: NoiseModel,
    config: RunConfig,
    optimum: Optional[ReferenceOptimum] = None,
    streams: Optional[StreamFactory] = None,
    x_init: Optional[np.ndarray] = None,
) -> RunResult:
    """
    Run T synchronous steps and record errors of the ergodic outputs.

    Args:
        problem: Instance
        schedule: Communication schedule with schedule.m == problem.m
        noise: Gradient-noise model with noise.n == problem.n
        config: Horizon, stepsize rule, seed, trial and recording stride
        optimum: Reference optimum (computed if omitted)
        streams: Random streams (default: StreamFactory(config.seed))
        x_init: Initial iterates (default: drawn from the trial's init stream)

    Returns:
        RunResult with trajectory and final ergodic outputs
    """
    if schedule.m != problem.m:
        raise InvalidParameterError('schedule.m', schedule.m, f'must equal problem.m = {problem.m}')
    if noise.n != problem.n:
        raise InvalidParameterError('noise.n', noise.n, f'must equal problem.n = {problem.n}')
    check_supported(problem.geometry, problem.reg)

    streams = streams or StreamFactory(config.seed)
    optimum = optimum or reference_optimum(problem)
    if x_init is None:
        x_init = initialize(problem, streams.init(config.trial))
    agent_noise = AgentNoise(noise, streams.noise_streams(config.trial, problem.m))

    recorded = set(config.recorded_steps())
    rows = len(recorded)
    steps = np.zeros(rows, dtype=int)
    errors = np.zeros((rows, problem.m))
    errors_weighted = np.zeros((rows, problem.m))
    spread = np.zeros(rows)
    stepsizes = np.zeros(rows)
    radius = np.zeros(rows) if config.radius_floor is not None else None
    d_t = 0.0

    state = NetworkState(x=np.array(x_init, dtype=float))
    initial_error = float(np.median(objective_many(problem, state.x) - optimum.F_star))
    started = time.perf_counter()
    row = 0
    for t in range(1, config.T + 1):
        alpha = stepsize_at(config, t)
        current = state.x
        if radius is not None:
            d_t = max(d_t, bregman_radius(problem, optimum.x_star, current))
        state = dcsmd_step(problem, schedule, state, alpha, agent_noise.draw())
        if t in recorded:
            x_tilde, x_hat = ergodic_outputs(problem, state)
            steps[row] = t
            errors[row] = objective_many(problem, x_tilde) - optimum.F_star
            errors_weighted[row] = objective_many(problem, x_hat) - optimum.F_star
            spread[row] = disagreement(problem, current)
            stepsizes[row] = alpha
            if radius is not None:
                radius[row] = max(config.radius_floor, d_t)
            row += 1

    _check_feasible(problem, state.x, 'final iterate', state.t)
    x_tilde, x_hat = ergodic_outputs(problem, state)
    worst = float(min(errors.min(), errors_weighted.min()))
    if worst < -ERROR_TOL:
        logger.warning(
            "Recorded error below the reference optimum",
            context={'min_error': worst, 'F_star': optimum.F_star}
        )
    logger.debug(
        "Run finished",
        context={'T': config.T, 'trial': config.trial, 'final_median': float(np.median(errors[-1])),
                 'elapsed_s': round(time.perf_counter() - started, 3)}
    )
    return RunResult(
        trajectory=Trajectory(
            steps=steps,
            errors=errors,
            errors_weighted=errors_weighted,
            disagreement=spread,
            stepsizes=stepsizes,
            bregman_radius=radius,
        ),
        state=state,
        x_tilde=x_tilde,
        x_hat=x_hat,
        initial_error=initial_error,
    )
