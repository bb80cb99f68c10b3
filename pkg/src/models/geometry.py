"""
Mirror-descent geometry models.

A Geometry bundles the distance-generating function, its domain, and the
primal/dual norm pair used for every gradient, noise and disagreement
measurement. A RegularizerSpec describes the composite term psi.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from src.utils.errors import InvalidParameterError, InvalidSizeError


DEFAULT_SIMPLEX_FLOOR = 1e-12


class GeometryKind(str, Enum):
    """Geometry enumeration."""
    EUCLIDEAN_BOX = 'euclidean-box'
    ENTROPIC_SIMPLEX = 'entropic-simplex'


class RegularizerKind(str, Enum):
    """Composite regularizer enumeration."""
    NONE = 'none'
    L1 = 'l1'
    ELASTIC_NET = 'elastic-net'
    INDICATOR = 'indicator'


@dataclass(frozen=True, eq=False)
class Geometry:
    """
    Distance-generating function with its domain and norm pair.

    euclidean-box: Phi = 0.5 * ||x||_2^2 on the box [lower, upper], norms (l2, l2).
    entropic-simplex: Phi = sum x log x on the simplex, norms (l1, l-inf);
    iterates are kept at or above `floor`.

    Attributes:
        kind: Geometry family
        n: Dimension
        lower: Box lower bounds (euclidean-box only)
        upper: Box upper bounds (euclidean-box only)
        floor: Simplex floor epsilon (entropic-simplex only)
    """
    kind: GeometryKind
    n: int
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    floor: float = DEFAULT_SIMPLEX_FLOOR

    @classmethod
    def box(cls, n: int, lower: Any = -1.0, upper: Any = 1.0) -> 'Geometry':
        """Euclidean geometry over a box; scalar bounds are broadcast."""
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
        geom = cls(kind=GeometryKind.EUCLIDEAN_BOX, n=n, lower=lo, upper=hi)
        geom.validate()
        return geom

    @classmethod
    def simplex(cls, n: int, floor: float = DEFAULT_SIMPLEX_FLOOR) -> 'Geometry':
        """Entropic geometry over the probability simplex."""
        geom = cls(kind=GeometryKind.ENTROPIC_SIMPLEX, n=n, floor=floor)
        geom.validate()
        return geom

    @property
    def sigma_phi(self) -> float:
        """Strong-convexity modulus of Phi w.r.t. the geometry norm (Pinsker for the simplex)."""
        return 1.0

    @property
    def is_box(self) -> bool:
        return self.kind == GeometryKind.EUCLIDEAN_BOX

    def validate(self) -> bool:
        """
        Validate the geometry parameters.

        Raises:
            InvalidSizeError: If n < 1
            InvalidParameterError: If box bounds or floor are out of range
        """
        if self.n < 1:
            raise InvalidSizeError('n', self.n, 1)
        if self.is_box:
            if self.lower is None or self.upper is None:
                raise InvalidParameterError('bounds', None, 'box geometry needs lower and upper bounds')
            if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
                raise InvalidParameterError('bounds', self.lower.shape, f'bounds must have shape ({self.n},)')
            if np.any(self.lower >= self.upper):
                raise InvalidParameterError('bounds', None, 'need lower[j] < upper[j] for every j')
        else:
            if not 0.0 <= self.floor < 1.0 / self.n:
                raise InvalidParameterError('floor', self.floor, f'simplex floor must lie in [0, 1/{self.n})')
        return True

    def norm(self, x: np.ndarray) -> np.ndarray:
        """Primal norm along the last axis (l2 for box, l1 for simplex)."""
        if self.is_box:
            return np.linalg.norm(x, ord=2, axis=-1)
        return np.sum(np.abs(x), axis=-1)

    def dual_norm(self, g: np.ndarray) -> np.ndarray:
        """Dual norm along the last axis (l2 for box, l-inf for simplex)."""
        if self.is_box:
            return np.linalg.norm(g, ord=2, axis=-1)
        return np.max(np.abs(g), axis=-1)

    def radius(self) -> float:
        """Largest primal norm of a domain point."""
        if self.is_box:
            return float(np.sqrt(np.sum(np.maximum(self.lower ** 2, self.upper ** 2))))
        return 1.0

    def feasibility_violation(self, x: np.ndarray) -> float:
        """Largest constraint violation of x (0 for feasible points)."""
        x = np.asarray(x, dtype=float)
        if self.is_box:
            below = np.max(self.lower - x, initial=0.0)
            above = np.max(x - self.upper, initial=0.0)
            return float(max(below, above, 0.0))
        negative = float(max(-np.min(x), 0.0))
        mass = float(np.max(np.abs(np.sum(x, axis=-1) - 1.0)))
        return max(negative, mass)

    def project_feasible(self, x: np.ndarray) -> np.ndarray:
        """
        Map a numerically near-feasible point back into the domain.

        Box: clamp. Simplex: floor at epsilon and renormalize.
        """
        if self.is_box:
            return np.clip(x, self.lower, self.upper)
        out = np.maximum(x, self.floor)
        return out / np.sum(out, axis=-1, keepdims=True)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind.value, 'n': self.n}
        if self.is_box:
            data['lower'] = self.lower.tolist()
            data['upper'] = self.upper.tolist()
        else:
            data['floor'] = self.floor
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Geometry':
        kind = GeometryKind(data['kind'])
        if kind == GeometryKind.EUCLIDEAN_BOX:
            return cls.box(int(data['n']), data.get('lower', -1.0), data.get('upper', 1.0))
        return cls.simplex(int(data['n']), float(data.get('floor', DEFAULT_SIMPLEX_FLOOR)))


@dataclass(frozen=True)
class RegularizerSpec:
    """
    Composite regularizer psi shared by all agents.

    l1: psi(x) = lam * ||x||_1
    elastic-net: psi(x) = (lam1 / 2) * ||x||_2^2 + lam2 * ||x||_1
    indicator: the domain indicator (already enforced by the geometry)

    Attributes:
        kind: Regularizer family
        lam: l1 weight
        lam1: Quadratic weight of the elastic net
        lam2: l1 weight of the elastic net
    """
    kind: RegularizerKind = RegularizerKind.NONE
    lam: float = 0.0
    lam1: float = 0.0
    lam2: float = 0.0

    @classmethod
    def l1(cls, lam: float) -> 'RegularizerSpec':
        reg = cls(kind=RegularizerKind.L1, lam=float(lam))
        reg.validate()
        return reg

    @classmethod
    def elastic_net(cls, lam1: float, lam2: float) -> 'RegularizerSpec':
        reg = cls(kind=RegularizerKind.ELASTIC_NET, lam1=float(lam1), lam2=float(lam2))
        reg.validate()
        return reg

    def validate(self) -> bool:
        for name in ('lam', 'lam1', 'lam2'):
            value = getattr(self, name)
            if value < 0.0 or not np.isfinite(value):
                raise InvalidParameterError(name, value, 'regularizer weights must be finite and >= 0')
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'lam': self.lam, 'lam1': self.lam1, 'lam2': self.lam2}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RegularizerSpec':
        reg = cls(
            kind=RegularizerKind(data.get('kind', 'none')),
            lam=float(data.get('lam', 0.0)),
            lam1=float(data.get('lam1', 0.0)),
            lam2=float(data.get('lam2', 0.0)),
        )
        reg.validate()
        return reg
