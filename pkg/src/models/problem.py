"""
Composite problem models.

F(x) = sum_i [ 0.5 * (<a_i, x> - b_i)^2 + psi(x) ] over the geometry's domain,
with one (a_i, b_i) data pair per agent.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.models.geometry import Geometry, RegularizerSpec
from src.utils.errors import InvalidParameterError, InvalidSizeError


@dataclass(frozen=True, eq=False)
class CompositeProblem:
    """
    Distributed composite least-squares instance.

    Attributes:
        features: (m, n) array, row i is agent i's a_i
        responses: (m,) array of b_i
        geometry: Domain and mirror map
        reg: Regularizer shared by every agent
        G: Dual-norm bound on the local subgradients over the domain
        G_psi: Lipschitz constant of the regularizer
        planted: Data-generating vector (not the minimizer)
        name: Instance family tag
    """
    features: np.ndarray
    responses: np.ndarray
    geometry: Geometry
    reg: RegularizerSpec
    G: float
    G_psi: float
    planted: Optional[np.ndarray] = field(default=None, repr=False)
    name: str = 'custom'

    def __post_init__(self):
        self.validate()

    @property
    def m(self) -> int:
        return int(self.features.shape[0])

    @property
    def n(self) -> int:
        return int(self.features.shape[1])

    def validate(self) -> bool:
        if self.features.ndim != 2:
            raise InvalidParameterError('features', self.features.shape, 'features must be an (m, n) array')
        if self.m < 1:
            raise InvalidSizeError('m', self.m, 1)
        if self.responses.shape != (self.m,):
            raise InvalidParameterError('responses', self.responses.shape, f'responses must have shape ({self.m},)')
        if self.geometry.n != self.n:
            raise InvalidParameterError('geometry.n', self.geometry.n, f'geometry dimension must equal {self.n}')
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'm': self.m,
            'n': self.n,
            'geometry': self.geometry.to_dict(),
            'reg': self.reg.to_dict(),
            'G': self.G,
            'G_psi': self.G_psi,
        }


@dataclass(frozen=True, eq=False)
class ReferenceOptimum:
    """
    Centralized solution used as the error baseline.

    Attributes:
        x_star: Minimizer of F over the domain
        F_star: F(x_star)
        solver_iterations: Iterations used by the reference solver
        solver_residual: Final optimality residual
    """
    x_star: np.ndarray
    F_star: float
    solver_iterations: int
    solver_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x_star': self.x_star.tolist(),
            'F_star': self.F_star,
            'solver_iterations': self.solver_iterations,
            'solver_residual': self.solver_residual,
        }
