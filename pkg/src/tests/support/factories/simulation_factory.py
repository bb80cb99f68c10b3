"""
Data factories for simulation testing.

These factories build small, seeded instances with sensible defaults and
support overrides, so tests only spell out what they care about.
"""
from typing import Any, Dict, Optional, Sequence

import numpy as np

from src.models.experiment import ExperimentConfig, VariantSpec
from src.models.metrics import ErrorSeries, TrialSummary
from src.models.noise import NoiseFamily, NoiseModel
from src.models.problem import CompositeProblem
from src.models.run import RunConfig, StepsizeRule
from src.services.problem_service import generate_lasso_instance, generate_simplex_instance


def create_lasso_problem(m: int = 6, n: int = 4, lam: float = 0.1, seed: int = 0, **overrides: Any) -> CompositeProblem:
    """
    Create a small lasso instance over [-1, 1]^n.

    Args:
        m: Agent count
        n: Dimension
        lam: l1 weight
        seed: Seed of the data stream
        **overrides: Keyword arguments forwarded to generate_lasso_instance

    Returns:
        CompositeProblem

    Example:
        >>> problem = create_lasso_problem(m=3, lam=0.0)
        >>> problem.reg.kind.value
        'none'
    """
    return generate_lasso_instance(m, n, lam, np.random.default_rng(seed), **overrides)


def create_simplex_problem(m: int = 6, n: int = 4, seed: int = 0, **overrides: Any) -> CompositeProblem:
    """Create a small least-squares instance over the probability simplex."""
    return generate_simplex_instance(m, n, np.random.default_rng(seed), **overrides)


def create_noise_model(family: str = 'gaussian-iso', scale: float = 1e-3, n: int = 4, **overrides: Any) -> NoiseModel:
    """Create a noise model from the family's config name."""
    return NoiseModel(family=NoiseFamily(family), scale=scale, n=n, **overrides)


def create_run_config(T: int = 50, stepsize: str = 'varying-invsqrt', **overrides: Any) -> RunConfig:
    """Create a short run configuration recording every 5 steps by default."""
    data: Dict[str, Any] = {'record_every': 5}
    data.update(overrides)
    return RunConfig(T=T, stepsize=StepsizeRule(stepsize), **data)


def create_error_series(errors: Sequence[Sequence[float]], steps: Optional[Sequence[int]] = None) -> ErrorSeries:
    """
    Create an error series from per-step rows of per-agent errors.

    Steps default to 1, 2, ..., len(errors); disagreement defaults to zeros.
    """
    errors = np.asarray(errors, dtype=float)
    if steps is None:
        steps = np.arange(1, errors.shape[0] + 1)
    return ErrorSeries(steps=np.asarray(steps), errors=errors, disagreement=np.zeros(errors.shape[0]))


def create_trial_summary(median: Sequence[float], steps: Optional[Sequence[int]] = None,
                         spread: float = 0.1, trials: int = 1) -> TrialSummary:
    """Create a summary whose max/min sit `spread` (relative) around the median."""
    median = np.asarray(median, dtype=float)
    if steps is None:
        steps = np.arange(1, median.shape[0] + 1)
    return TrialSummary(
        steps=np.asarray(steps, dtype=int),
        max=median * (1.0 + spread),
        min=median * (1.0 - spread),
        median=median,
        trials=trials,
    )


def create_variant(name: str = 'default', **blocks: Dict[str, Any]) -> VariantSpec:
    """
    Create a small lasso variant (m=6, n=4, T=40); any block can be updated.

    Example:
        >>> create_variant(noise={'family': 'laplace-iid', 'scale': 0.1}).noise['family']
        'laplace-iid'
    """
    data = {
        'problem': {'kind': 'lasso', 'm': 6, 'n': 4, 'lam': 0.1},
        'schedule': {'kind': 'static-ring', 'B': 1},
        'noise': {'family': 'gaussian-iso', 'scale': 1e-3},
        'run': {'T': 40, 'stepsize': 'varying-invsqrt', 'record_every': 4},
    }
    for section, values in blocks.items():
        data[section].update(values)
    return VariantSpec(name=name, **data)


def create_experiment_config(output_dir, variants: Optional[Sequence[VariantSpec]] = None,
                             **overrides: Any) -> ExperimentConfig:
    """Create a two-trial experiment writing under `output_dir`."""
    data: Dict[str, Any] = {
        'name': 'smoke',
        'description': 'Smoke experiment',
        'variants': tuple(variants or (create_variant(),)),
        'trials': 2,
        'seed': 0,
        'output_dir': output_dir,
    }
    data.update(overrides)
    return ExperimentConfig(**data)
