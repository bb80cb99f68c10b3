"""
Noise service: sub-Weibull samplers and empirical tail diagnostics.

Samplers draw symmetric, mean-zero gradient noise. The diagnostics fit the
Orlicz scale kappa of a sample and check the moment, centering, summation and
concentration properties of sub-Weibull variables on that same sample, so
every check is evaluated under one empirical measure.
"""
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from src.models.noise import MomentRow, NoiseFamily, NoiseModel
from src.utils.errors import EstimationFailedError, InvalidParameterError
from src.utils.logging import get_logger


logger = get_logger(__name__)

KAPPA_GRID_RATIO = 1.05
KAPPA_GRID_SPAN = 1e6
MIN_KAPPA_SAMPLES = 10_000
ORLICZ_LEVEL = 2.0
DEFAULT_CHUNK = 256


def sample_block(model: NoiseModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    Draw `size` independent noise vectors.

    Args:
        model: Noise family and scale
        rng: Generator owning this stream
        size: Number of vectors

    Returns:
        (size, n) array
    """
    shape = (size, model.n)
    if model.scale == 0.0:
        return np.zeros(shape)
    if model.family == NoiseFamily.UNIFORM_BOX:
        return rng.uniform(-model.scale, model.scale, size=shape)
    if model.family == NoiseFamily.GAUSSIAN_ISO:
        return rng.normal(0.0, np.sqrt(model.scale), size=shape)
    if model.family == NoiseFamily.LAPLACE_IID:
        return rng.laplace(0.0, model.scale, size=shape)
    signs = 2.0 * rng.integers(0, 2, size=shape) - 1.0
    return signs * model.scale * rng.weibull(1.0 / model.weibull_theta, size=shape)


def sample(model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one noise vector of dimension n."""
    return sample_block(model, rng, 1)[0]


class AgentNoise:
    """
    Per-agent noise streams of one trial.

    Each agent owns its generator and draws its noise in fixed-size chunks,
    so the sequence an agent sees depends only on its own stream.
    """

    def __init__(self, model: NoiseModel, streams: Sequence[np.random.Generator], chunk: int = DEFAULT_CHUNK):
        self.model = model
        self.streams = list(streams)
        self.chunk = chunk
        self._buffers = [np.empty((0, model.n)) for _ in self.streams]
        self._cursor = [0] * len(self.streams)

    def _next_for(self, agent: int) -> np.ndarray:
        if self._cursor[agent] >= self._buffers[agent].shape[0]:
            self._buffers[agent] = sample_block(self.model, self.streams[agent], self.chunk)
            self._cursor[agent] = 0
        row = self._buffers[agent][self._cursor[agent]]
        self._cursor[agent] += 1
        return row

    def draw(self) -> np.ndarray:
        """One noise vector per agent, shape (m, n)."""
        if self.model.scale == 0.0:
            return np.zeros((len(self.streams), self.model.n))
        return np.stack([self._next_for(i) for i in range(len(self.streams))])


def moment_bound(theta: float, kappa: float, p: float) -> float:
    """
    Moment bound 2 * Gamma(theta * p + 1) * kappa^p of a sub-Weibull variable.

    Example:
        >>> moment_bound(0.5, 1.0, 2.0)
        2.0
    """
    if p <= 0.0:
        raise InvalidParameterError('p', p, 'moment order must be > 0')
    if kappa <= 0.0:
        raise InvalidParameterError('kappa', kappa, 'kappa must be > 0')
    return float(2.0 * gamma_fn(theta * p + 1.0) * kappa ** p)


def orlicz_mean(values: np.ndarray, theta: float, kappa: float) -> float:
    """Empirical mean of exp((|v| / kappa)^(1/theta)); inf on overflow."""
    scaled = np.abs(np.asarray(values, dtype=float)) / kappa
    with np.errstate(over='ignore'):
        return float(np.mean(np.exp(scaled ** (1.0 / theta))))


def kappa_grid(reference: float) -> np.ndarray:
    """Geometric grid from reference / SPAN to reference * SPAN with ratio 1.05."""
    count = int(np.ceil(np.log(KAPPA_GRID_SPAN ** 2) / np.log(KAPPA_GRID_RATIO))) + 1
    return reference / KAPPA_GRID_SPAN * KAPPA_GRID_RATIO ** np.arange(count)


def fit_kappa(values: np.ndarray, theta: float, reference: float = 1.0, family: str = 'empirical') -> float:
    """
    Smallest grid kappa whose empirical Orlicz mean is at most 2.

    The Orlicz mean is non-increasing in kappa, so the grid is binary-searched.

    Args:
        values: Scalar samples
        theta: Tail parameter
        reference: Grid centre (the noise scale, or 1)
        family: Label for error reporting

    Returns:
        kappa_hat

    Raises:
        EstimationFailedError: If no grid point satisfies the condition
    """
    grid = kappa_grid(reference if reference > 0.0 else 1.0)
    if orlicz_mean(values, theta, grid[-1]) > ORLICZ_LEVEL:
        raise EstimationFailedError(family, theta, float(grid[-1]))
    lo, hi = 0, len(grid) - 1
    if orlicz_mean(values, theta, grid[lo]) <= ORLICZ_LEVEL:
        return float(grid[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if orlicz_mean(values, theta, grid[mid]) <= ORLICZ_LEVEL:
            hi = mid
        else:
            lo = mid
    return float(grid[hi])


def norm_samples(
    model: NoiseModel,
    dual_norm: Callable[[np.ndarray], np.ndarray],
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Dual norms of `count` noise draws."""
    return np.asarray(dual_norm(sample_block(model, rng, count)), dtype=float)


def estimate_kappa(
    model: NoiseModel,
    dual_norm: Callable[[np.ndarray], np.ndarray],
    count: int,
    rng: np.random.Generator,
    theta: Optional[float] = None,
) -> float:
    """
    Estimate kappa of the noise's dual norm by an Orlicz grid search.

    Args:
        model: Noise model
        dual_norm: Dual norm along the last axis (Geometry.dual_norm)
        count: Sample count N >= 10^4
        rng: Diagnostic stream
        theta: Tail parameter to test (default: the model's nominal theta)

    Returns:
        kappa_hat

    Raises:
        InvalidParameterError: If count < 10^4
        EstimationFailedError: If the grid is exhausted
    """
    if count < MIN_KAPPA_SAMPLES:
        raise InvalidParameterError('count', count, f'need at least {MIN_KAPPA_SAMPLES} samples')
    theta = model.theta if theta is None else theta
    values = norm_samples(model, dual_norm, count, rng)
    kappa = fit_kappa(values, theta, model.scale, model.family.value)
    logger.debug(
        "Estimated kappa",
        context={'family': model.family.value, 'theta': theta, 'kappa_hat': kappa, 'samples': count}
    )
    return kappa


def v_theta(theta: float) -> float:
    """Concentration constant: (4e)^theta for theta <= 1, 2 (2 e theta)^theta above."""
    if theta <= 1.0:
        return float((4.0 * np.e) ** theta)
    return float(2.0 * (2.0 * np.e * theta) ** theta)


def c_theta(theta: float) -> float:
    """Centering constant 2^(max(theta, 1) + 1) Gamma(theta + 1) / ln(2)^theta."""
    return float(2.0 ** (max(theta, 1.0) + 1.0) * gamma_fn(theta + 1.0) / np.log(2.0) ** theta)


def K_theta(theta: float, m: int) -> float:
    """Summation constant: m^theta for theta > 1, else 1."""
    return float(m ** theta) if theta > 1.0 else 1.0


def concentration_check(samples: np.ndarray, kappas: np.ndarray, theta: float, delta: float) -> bool:
    """
    Whether |sum x_i| <= log(2/delta)^theta * v_theta * sum kappa_i.

    Args:
        samples: (k,) scalar draws
        kappas: (k,) sub-Weibull scales of the draws
        theta: Common tail parameter
        delta: Confidence level in (0, 1)
    """
    if not 0.0 < delta < 1.0:
        raise InvalidParameterError('delta', delta, 'confidence must lie in (0, 1)')
    radius = np.log(2.0 / delta) ** theta * v_theta(theta) * float(np.sum(kappas))
    return bool(abs(float(np.sum(samples))) <= radius)


def concentration_violation_frequency(samples: np.ndarray, kappas: np.ndarray, theta: float, delta: float) -> float:
    """
    Fraction of repetitions (rows of `samples`) violating concentration_check.
    """
    samples = np.atleast_2d(samples)
    radius = np.log(2.0 / delta) ** theta * v_theta(theta) * float(np.sum(kappas))
    return float(np.mean(np.abs(samples.sum(axis=1)) > radius))


def violation_tolerance(delta: float, repetitions: int) -> float:
    """Monte-Carlo acceptance level delta + 3 sqrt(delta (1 - delta) / M)."""
    return delta + 3.0 * np.sqrt(delta * (1.0 - delta) / repetitions)


def moment_report(
    model: NoiseModel,
    values: np.ndarray,
    kappa_hat: float,
    orders: Sequence[float] = (1.0, 2.0, 4.0),
) -> List[MomentRow]:
    """
    Empirical moments of the noise norm against the sub-Weibull moment bound.

    Args:
        model: Noise model (family and nominal theta)
        values: Dual-norm samples
        kappa_hat: kappa fitted on `values`
        orders: Moment orders p

    Returns:
        One MomentRow per order
    """
    values = np.abs(np.asarray(values, dtype=float))
    rows = []
    for p in orders:
        rows.append(MomentRow(
            family=model.family.value,
            theta=model.theta,
            kappa_hat=kappa_hat,
            p=float(p),
            empirical_moment=float(np.mean(values ** p)),
            bound=moment_bound(model.theta, kappa_hat, p),
        ))
    return rows


def centering_check(values: np.ndarray, theta: float, kappa_hat: float) -> Tuple[bool, float]:
    """
    Check that the centered sample is sub-Weibull with scale c_theta * kappa_hat.

    Returns:
        (passes, Orlicz mean of the centered sample at c_theta * kappa_hat)
    """
    values = np.asarray(values, dtype=float)
    centered = values - np.mean(values)
    level = orlicz_mean(centered, theta, c_theta(theta) * kappa_hat)
    return level <= ORLICZ_LEVEL, level


def summation_check(copies: np.ndarray, theta: float) -> Tuple[bool, float]:
    """
    Check the summation property on m copies.

    Args:
        copies: (N, m) samples, column i holding copy i
        theta: Tail parameter

    Returns:
        (passes, Orlicz mean of the row sums at K_theta * sum kappa_i)
    """
    copies = np.asarray(copies, dtype=float)
    kappas = [fit_kappa(copies[:, i], theta, float(np.std(copies[:, i])) or 1.0) for i in range(copies.shape[1])]
    scale = K_theta(theta, copies.shape[1]) * float(np.sum(kappas))
    level = orlicz_mean(copies.sum(axis=1), theta, scale)
    return level <= ORLICZ_LEVEL, level
