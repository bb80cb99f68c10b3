"""
Communication topology models for the simulator.

This module defines the doubly stochastic communication matrix, the
time-varying schedule that produces one matrix per step, and the geometric
mixing constants of the transition products.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from src.utils.errors import InvalidParameterError, InvariantViolationError


STOCHASTIC_TOL = 1e-12


class ScheduleKind(str, Enum):
    """Topology family enumeration."""
    STATIC_RING = 'static-ring'
    STATIC_COMPLETE = 'static-complete'
    B_CYCLIC_PARTITION = 'B-cyclic-partition'


@dataclass(frozen=True, eq=False)
class CommMatrix:
    """
    Doubly stochastic weight matrix W used for one consensus round.

    Attributes:
        weights: (m, m) nonnegative array, rows and columns summing to 1
        eta: Declared lower bound on the diagonal and on positive entries
    """
    weights: np.ndarray
    eta: float

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def edges(self) -> set:
        """Off-diagonal (i, j) pairs with positive weight."""
        rows, cols = np.nonzero(self.weights)
        return {(int(i), int(j)) for i, j in zip(rows, cols) if i != j}

    def stochasticity_error(self) -> float:
        """Largest deviation of a row or column sum from 1."""
        row_err = np.max(np.abs(self.weights.sum(axis=1) - 1.0))
        col_err = np.max(np.abs(self.weights.sum(axis=0) - 1.0))
        return float(max(row_err, col_err))

    def validate(self, tol: float = STOCHASTIC_TOL) -> bool:
        """
        Validate the matrix invariants.

        Returns:
            True if the matrix is valid

        Raises:
            InvariantViolationError: If any invariant fails
        """
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvariantViolationError('weight matrix must be square', {'shape': list(w.shape)})
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise InvariantViolationError('weights must lie in [0, 1]')
        err = self.stochasticity_error()
        if err > tol:
            raise InvariantViolationError('double stochasticity', {'max_sum_error': err})
        if np.any(np.diag(w) < self.eta - tol):
            raise InvariantViolationError('diagonal entries must be >= eta', {'eta': self.eta})
        off = w[~np.eye(w.shape[0], dtype=bool)]
        positive = off[off > 0.0]
        if positive.size and np.min(positive) < self.eta - tol:
            raise InvariantViolationError('positive off-diagonal entries must be >= eta', {'eta': self.eta})
        return True


@dataclass(frozen=True)
class MixingConstants:
    """
    Constants of the geometric transition-product bound omega * gamma**(t-s).

    Attributes:
        omega: Prefactor, at least 1
        gamma: Per-step decay rate in (0, 1)
    """
    omega: float
    gamma: float

    def bound(self, lag: int) -> float:
        """Envelope value for a transition product spanning t - s = lag."""
        return self.omega * self.gamma ** lag

    def to_dict(self) -> Dict[str, Any]:
        return {'omega': self.omega, 'gamma': self.gamma}


@dataclass(frozen=True, eq=False)
class GraphSchedule:
    """
    Time-varying communication schedule.

    weight_at(t) returns the matrix used at step t (t >= 1). Schedules are
    periodic: step t uses phase (t - 1) mod len(phases).

    Attributes:
        m: Agent count
        B: Connectivity window length
        eta: Minimum positive weight
        kind: Topology family
        seed: Seed used for randomized families
        phases: One CommMatrix per phase of the period
    """
    m: int
    B: int
    eta: float
    kind: ScheduleKind
    seed: int
    phases: Tuple[CommMatrix, ...] = field(repr=False)

    def __post_init__(self):
        if self.B < 1:
            raise InvalidParameterError('B', self.B, 'window length must be >= 1')
        if not self.phases:
            raise InvalidParameterError('phases', 0, 'schedule needs at least one phase')

    @property
    def period(self) -> int:
        return len(self.phases)

    def weight_at(self, t: int) -> CommMatrix:
        """
        Communication matrix at step t.

        Args:
            t: Step index, starting at 1

        Returns:
            CommMatrix for that step
        """
        if t < 1:
            raise InvalidParameterError('t', t, 'steps start at 1')
        return self.phases[(t - 1) % self.period]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'm': self.m,
            'B': self.B,
            'eta': self.eta,
            'seed': self.seed,
        }
