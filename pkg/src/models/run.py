"""
Run models for the distributed mirror-descent engine.

RunConfig fixes the horizon and stepsize rule, NetworkState carries every
agent's iterate and running ergodic sums, and Trajectory / RunResult hold
what a run records.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from src.utils.errors import InvalidParameterError


class StepsizeRule(str, Enum):
    """Stepsize schedule enumeration."""
    VARYING_INVSQRT = 'varying-invsqrt'
    CONSTANT_HORIZON = 'constant-horizon'


@dataclass(frozen=True)
class RunConfig:
    """
    Configuration of one simulated run.

    Attributes:
        T: Horizon (number of iterations)
        stepsize: Stepsize rule
        seed: Master seed
        record_every: Trajectory thinning stride
        trial: Trial index (selects the random streams)
        radius_floor: rho of the Bregman-radius diagnostic max(rho, d_t);
            None leaves it off
    """
    T: int
    stepsize: StepsizeRule = StepsizeRule.VARYING_INVSQRT
    seed: int = 0
    record_every: int = 10
    trial: int = 0
    radius_floor: Optional[float] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> bool:
        if self.T < 1:
            raise InvalidParameterError('T', self.T, 'horizon must be >= 1')
        if self.record_every < 1:
            raise InvalidParameterError('record_every', self.record_every, 'stride must be >= 1')
        if self.seed < 0:
            raise InvalidParameterError('seed', self.seed, 'seed must be >= 0')
        if self.radius_floor is not None and not self.radius_floor > 0.0:
            raise InvalidParameterError('radius_floor', self.radius_floor, 'must be > 0')
        return True

    def recorded_steps(self) -> List[int]:
        """Steps at which the trajectory is recorded; always ends at T."""
        steps = list(range(self.record_every, self.T + 1, self.record_every))
        if not steps or steps[-1] != self.T:
            steps.append(self.T)
        return steps

    def to_dict(self) -> Dict[str, Any]:
        return {
            'T': self.T,
            'stepsize': self.stepsize.value,
            'seed': self.seed,
            'record_every': self.record_every,
            'trial': self.trial,
            'radius_floor': self.radius_floor,
        }


@dataclass(eq=False)
class NetworkState:
    """
    All agents' states at the start of a step.

    The ergodic sums cover the iterates x_{i,1}, ..., x_{i,t-1}; the current
    iterate x_{i,t} is added when step t runs.

    Attributes:
        x: (m, n) current iterates x_{i,t}
        t: Index of the step about to run (starts at 1)
        sum_x: Running sum of iterates (equi-weight average)
        sum_alpha_x: Running sum of (alpha_t / alpha_ref) x_{i,t}
        sum_alpha: Running sum of alpha_t / alpha_ref
        alpha_ref: First stepsize; weights are kept relative to it so that a
            constant stepsize gives weights of exactly 1
    """
    x: np.ndarray
    t: int = 1
    sum_x: np.ndarray = field(default=None)
    sum_alpha_x: np.ndarray = field(default=None)
    sum_alpha: float = 0.0
    alpha_ref: Optional[float] = None

    def __post_init__(self):
        if self.sum_x is None:
            self.sum_x = np.zeros_like(self.x)
        if self.sum_alpha_x is None:
            self.sum_alpha_x = np.zeros_like(self.x)

    @property
    def steps_taken(self) -> int:
        return self.t - 1

    def copy(self) -> 'NetworkState':
        return NetworkState(
            x=self.x.copy(),
            t=self.t,
            sum_x=self.sum_x.copy(),
            sum_alpha_x=self.sum_alpha_x.copy(),
            sum_alpha=self.sum_alpha,
            alpha_ref=self.alpha_ref,
        )


@dataclass(eq=False)
class Trajectory:
    """
    Recorded run history.

    Attributes:
        steps: Recorded step indices t
        errors: (R, m) F(x_tilde_l^t) - F* per recorded step and agent
        errors_weighted: (R, m) F(x_hat_l^t) - F*
        disagreement: (R,) max_i ||x_{i,t} - mean_t||
        stepsizes: (R,) alpha_t
        bregman_radius: (R,) max(rho, d_t) with d_t the largest
            sqrt(D_Phi(x* || x_{i,s})) over agents and s <= t; None unless
            RunConfig.radius_floor is set
    """
    steps: np.ndarray
    errors: np.ndarray
    errors_weighted: np.ndarray
    disagreement: np.ndarray
    stepsizes: np.ndarray
    bregman_radius: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.steps.shape[0])


@dataclass(eq=False)
class RunResult:
    """
    Everything a run produces.

    Attributes:
        trajectory: Recorded history
        state: Final network state (after T steps)
        x_tilde: (m, n) equi-weight ergodic outputs
        x_hat: (m, n) stepsize-weighted ergodic outputs
        initial_error: Median over agents of F(x_{l,1}) - F*
    """
    trajectory: Trajectory
    state: NetworkState
    x_tilde: np.ndarray
    x_hat: np.ndarray
    initial_error: float
