"""
Gradient-noise models.

A NoiseModel is a symmetric, mean-zero vector noise family together with the
nominal sub-Weibull tail parameters of its dual norm.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

from scipy.special import gamma as gamma_fn

from src.utils.errors import InvalidParameterError, InvalidSizeError


class NoiseFamily(str, Enum):
    """Noise family enumeration."""
    UNIFORM_BOX = 'uniform-box'
    GAUSSIAN_ISO = 'gaussian-iso'
    LAPLACE_IID = 'laplace-iid'
    WEIBULL_TAIL = 'weibull-tail'


# Nominal theta of each family's norm; weibull-tail takes its own.
NOMINAL_THETA = {
    NoiseFamily.UNIFORM_BOX: 0.5,
    NoiseFamily.GAUSSIAN_ISO: 0.5,
    NoiseFamily.LAPLACE_IID: 1.0,
}


@dataclass(frozen=True)
class NoiseModel:
    """
    Sub-Weibull vector-noise family.

    Scale semantics per family:
        uniform-box: half-width of the cube [-scale, scale]^n
        gaussian-iso: per-component variance
        laplace-iid: Laplace scale b of each component
        weibull-tail: Weibull scale of each component magnitude

    Attributes:
        family: Noise family
        scale: Family-specific scale (0 gives the zero vector)
        n: Dimension
        weibull_theta: Tail parameter of the weibull-tail family (shape 1/theta)
        kappa_hint: Optional nominal kappa
    """
    family: NoiseFamily
    scale: float
    n: int
    weibull_theta: float = 2.0
    kappa_hint: Optional[float] = None

    def __post_init__(self):
        self.validate()

    @property
    def theta(self) -> float:
        """Nominal tail parameter theta of the noise norm."""
        if self.family == NoiseFamily.WEIBULL_TAIL:
            return self.weibull_theta
        return NOMINAL_THETA[self.family]

    @property
    def std(self) -> float:
        """Per-component standard deviation."""
        if self.family == NoiseFamily.UNIFORM_BOX:
            return self.scale / 3.0 ** 0.5
        if self.family == NoiseFamily.GAUSSIAN_ISO:
            return self.scale ** 0.5
        if self.family == NoiseFamily.LAPLACE_IID:
            return self.scale * 2.0 ** 0.5
        # E[W^2] of Weibull(shape k, scale s) is s^2 Gamma(1 + 2/k)
        return self.scale * float(gamma_fn(1.0 + 2.0 * self.weibull_theta)) ** 0.5

    def validate(self) -> bool:
        if self.n < 1:
            raise InvalidSizeError('n', self.n, 1)
        if self.scale < 0.0:
            raise InvalidParameterError('scale', self.scale, 'noise scale must be >= 0')
        if self.family == NoiseFamily.WEIBULL_TAIL and self.weibull_theta < 0.5:
            raise InvalidParameterError('weibull_theta', self.weibull_theta, 'theta must be >= 1/2')
        if self.kappa_hint is not None and self.kappa_hint <= 0.0:
            raise InvalidParameterError('kappa_hint', self.kappa_hint, 'kappa must be > 0')
        return True

    def with_dimension(self, n: int) -> 'NoiseModel':
        """Same family and scale in another dimension."""
        return NoiseModel(self.family, self.scale, n, self.weibull_theta, self.kappa_hint)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'family': self.family.value, 'scale': self.scale, 'n': self.n, 'theta': self.theta}
        if self.kappa_hint is not None:
            data['kappa_hint'] = self.kappa_hint
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NoiseModel':
        return cls(
            family=NoiseFamily(data['family']),
            scale=float(data['scale']),
            n=int(data['n']),
            weibull_theta=float(data.get('weibull_theta', data.get('theta', 2.0))
                                if data['family'] == NoiseFamily.WEIBULL_TAIL.value else 2.0),
            kappa_hint=data.get('kappa_hint'),
        )


@dataclass(frozen=True)
class MomentRow:
    """One line of the sub-Weibull moment diagnostic report."""
    family: str
    theta: float
    kappa_hat: float
    p: float
    empirical_moment: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.empirical_moment <= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family,
            'theta': self.theta,
            'kappa_hat': self.kappa_hat,
            'p': self.p,
            'empirical_moment': self.empirical_moment,
            'bound': self.bound,
        }
