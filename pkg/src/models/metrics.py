"""
Error-series and trial-summary models.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.utils.errors import InvariantViolationError


STATS = ('max', 'min', 'median')


@dataclass(eq=False)
class ErrorSeries:
    """
    Per-agent optimization errors of one trial.

    Attributes:
        steps: (R,) strictly increasing recorded steps
        errors: (R, m) e_l(t) = F(x_tilde_l^t) - F*
        disagreement: (R,) consensus disagreement d(t)
    """
    steps: np.ndarray
    errors: np.ndarray
    disagreement: np.ndarray

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=int)
        self.errors = np.asarray(self.errors, dtype=float)
        self.disagreement = np.asarray(self.disagreement, dtype=float)
        if self.steps.size > 1 and np.any(np.diff(self.steps) <= 0):
            raise InvariantViolationError('recorded steps must be strictly increasing')

    @property
    def agents(self) -> int:
        return int(self.errors.shape[1])


@dataclass(eq=False)
class TrialSummary:
    """
    Per-step agent quantiles, averaged over trials.

    A single trial's quantiles are a TrialSummary with trials == 1.

    Attributes:
        steps: (R,) recorded steps
        max: (R,) mean over trials of the max over agents
        min: (R,) mean over trials of the min over agents
        median: (R,) mean over trials of the median over agents
        trials: Number of trials averaged
        slope: Rate-fit slope of log(median) vs log(t), if fitted
        r_squared: Coefficient of determination of the fit
    """
    steps: np.ndarray
    max: np.ndarray
    min: np.ndarray
    median: np.ndarray
    trials: int = 1
    slope: Optional[float] = None
    r_squared: Optional[float] = None
    disagreement: Optional[np.ndarray] = field(default=None, repr=False)

    def stat(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def check_ordering(self, tol: float = 1e-12) -> bool:
        """min <= median <= max at every step."""
        return bool(np.all(self.min <= self.median + tol) and np.all(self.median <= self.max + tol))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'steps': self.steps.tolist(),
            'max': self.max.tolist(),
            'min': self.min.tolist(),
            'median': self.median.tolist(),
            'trials': self.trials,
            'slope': self.slope,
            'r_squared': self.r_squared,
        }
