"""
Experiment presets and config-file resolution.

Each preset reproduces one figure of the regression experiments at desk
scale: a baseline setting plus the parameter that the figure sweeps. Config
files describe the same blocks in TOML; see README.md for the format.
"""
from copy import deepcopy
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from src.models.experiment import ExperimentConfig, VariantSpec
from src.utils.config import get_parameter, load_config_file
from src.utils.errors import UnknownPresetError, UsageError


DEFAULT_HORIZON = 5000
DEFAULT_RECORD_EVERY = 10
DEFAULT_TRIALS = 10
ALL_STATS = ('max', 'min', 'median')
MEDIAN_ONLY = ('median',)

LASSO_BASE: Dict[str, Dict[str, Any]] = {
    'problem': {'kind': 'lasso', 'm': 60, 'n': 20, 'lam': 0.1, 'lower': -1.0, 'upper': 1.0},
    'schedule': {'kind': 'static-ring', 'B': 1},
    'noise': {'family': 'gaussian-iso', 'scale': 1e-3},
    'run': {'T': DEFAULT_HORIZON, 'stepsize': 'varying-invsqrt', 'record_every': DEFAULT_RECORD_EVERY},
}

SIMPLEX_BASE: Dict[str, Dict[str, Any]] = {
    'problem': {'kind': 'simplex', 'm': 60, 'n': 20},
    'schedule': {'kind': 'static-ring', 'B': 1},
    'noise': {'family': 'gaussian-iso', 'scale': 1e-3},
    'run': {'T': DEFAULT_HORIZON, 'stepsize': 'varying-invsqrt', 'record_every': DEFAULT_RECORD_EVERY},
}


def _variant(name: str, base: Dict[str, Dict[str, Any]], **overrides: Dict[str, Any]) -> VariantSpec:
    blocks = deepcopy(base)
    for section, values in overrides.items():
        blocks[section].update(values)
    return VariantSpec(name=name, **blocks)


def _sweep(base: Dict[str, Dict[str, Any]], section: str, key: str, values: List[Any]) -> Tuple[VariantSpec, ...]:
    return tuple(_variant(f'{key}{value}', base, **{section: {key: value}}) for value in values)


def _fig1() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig1',
        description='Lasso over a box: max/min/median error across agents (m=60, n=20, lambda=0.1)',
        variants=(_variant('default', LASSO_BASE),),
        stats=ALL_STATS,
    )


def _fig2_noise() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig2-noise',
        description='Lasso under uniform, Gaussian and Laplace gradient noise',
        variants=(
            _variant('uniform', LASSO_BASE, noise={'family': 'uniform-box', 'scale': 0.5}),
            _variant('gaussian', LASSO_BASE, noise={'family': 'gaussian-iso', 'scale': 0.1}),
            _variant('laplace', LASSO_BASE, noise={'family': 'laplace-iid', 'scale': 0.1}),
        ),
        stats=MEDIAN_ONLY,
    )


def _fig3_dim() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig3-dim',
        description='Lasso with problem dimension n in {10, 20, 30}',
        variants=_sweep(LASSO_BASE, 'problem', 'n', [10, 20, 30]),
        stats=MEDIAN_ONLY,
    )


def _fig4_agents() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig4-agents',
        description='Lasso on a ring with m in {30, 60, 90} agents',
        variants=_sweep(LASSO_BASE, 'problem', 'm', [30, 60, 90]),
        stats=MEDIAN_ONLY,
    )


def _fig5_stepsize() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig5-stepsize',
        description='Lasso with constant 1/sqrt(T) against varying 1/sqrt(t+1) stepsizes',
        variants=(
            _variant('constant', LASSO_BASE, run={'stepsize': 'constant-horizon'}),
            _variant('varying', LASSO_BASE, run={'stepsize': 'varying-invsqrt'}),
        ),
        stats=MEDIAN_ONLY,
    )


def _fig7_dsed() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig7-dsed',
        description='Entropic descent on the simplex: max/min/median error (m=60, n=20)',
        variants=(_variant('default', SIMPLEX_BASE),),
        stats=ALL_STATS,
    )


def _fig8_dsed_dim() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig8-dsed-dim',
        description='Entropic descent with problem dimension n in {10, 20, 30}',
        variants=_sweep(SIMPLEX_BASE, 'problem', 'n', [10, 20, 30]),
        stats=MEDIAN_ONLY,
    )


def _fig9_dsed_agents() -> ExperimentConfig:
    return ExperimentConfig(
        name='fig9-dsed-agents',
        description='Entropic descent on a ring with m in {30, 60, 90} agents',
        variants=_sweep(SIMPLEX_BASE, 'problem', 'm', [30, 60, 90]),
        stats=MEDIAN_ONLY,
    )


PRESETS: Dict[str, Callable[[], ExperimentConfig]] = {
    'fig1': _fig1,
    'fig2-noise': _fig2_noise,
    'fig3-dim': _fig3_dim,
    'fig4-agents': _fig4_agents,
    'fig5-stepsize': _fig5_stepsize,
    'fig7-dsed': _fig7_dsed,
    'fig8-dsed-dim': _fig8_dsed_dim,
    'fig9-dsed-agents': _fig9_dsed_agents,
}


def preset(name: str) -> ExperimentConfig:
    """
    Resolve a preset name.

    Args:
        name: One of PRESETS

    Returns:
        ExperimentConfig with 10 trials, T=5000 and record_every=10

    Raises:
        UnknownPresetError: If the name does not resolve

    Example:
        >>> preset('fig1').trials
        10
    """
    if name not in PRESETS:
        raise UnknownPresetError(name, PRESETS.keys())
    return PRESETS[name]()


def list_presets() -> List[Tuple[str, str]]:
    """(name, description) for every preset, in declaration order."""
    return [(name, factory().description) for name, factory in PRESETS.items()]


BLOCK_KEYS: Dict[str, Dict[str, Any]] = {
    'problem': {'kind': 'lasso', 'm': 60, 'n': 20, 'lam': 0.1, 'lam1': 0.0, 'lam2': 0.0,
                'lower': -1.0, 'upper': 1.0, 'floor': 1e-12, 'data_noise_std': 1.0},
    'schedule': {'kind': 'static-ring', 'B': 1, 'eta': 0.0, 'seed': 0},
    'noise': {'family': 'gaussian-iso', 'scale': 1e-3, 'weibull_theta': 2.0},
    'run': {'T': DEFAULT_HORIZON, 'stepsize': 'varying-invsqrt', 'record_every': DEFAULT_RECORD_EVERY},
}


def _block(config: Dict[str, Any], section: str) -> Dict[str, Any]:
    block = {}
    for key, default in BLOCK_KEYS[section].items():
        value = get_parameter(config, f'{section}.{key}', default)
        if value is not None:
            block[key] = value
    unknown = set(config.get(section, {})) - set(BLOCK_KEYS[section])
    if unknown:
        raise UsageError(f"Unknown keys in [{section}]: {', '.join(sorted(unknown))}",
                         details={'section': section, 'keys': sorted(unknown)})
    # eta = 0 selects the family's natural value
    if section == 'schedule' and not block.get('eta'):
        block.pop('eta', None)
    return block


def config_from_file(path: Union[str, Path]) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a TOML file.

    Sections: [experiment] (name, description, trials, seed, output_dir,
    stats), [problem], [schedule], [noise], [run], and an optional [sweep]
    with `parameter = "problem.n"` and `values = [10, 20, 30]` that expands
    the file into one variant per value. Every key can be overridden from the
    environment as DCSMD_<SECTION>_<KEY>.

    Raises:
        UsageError: If the file is missing, malformed or has unknown keys
    """
    config = load_config_file(path)
    blocks = {section: _block(config, section) for section in BLOCK_KEYS}
    name = str(get_parameter(config, 'experiment.name', Path(path).stem))

    sweep = config.get('sweep')
    if sweep:
        parameter = sweep.get('parameter', '')
        section, _, key = parameter.partition('.')
        if section not in BLOCK_KEYS or key not in BLOCK_KEYS[section]:
            raise UsageError(f"Invalid sweep parameter '{parameter}'", details={'parameter': parameter})
        values = sweep.get('values') or []
        if not values:
            raise UsageError("Sweep needs a non-empty list of values")
        variants = tuple(_variant(f'{key}{value}', blocks, **{section: {key: value}}) for value in values)
    else:
        variants = (_variant('default', blocks),)

    stats = get_parameter(config, 'experiment.stats', list(ALL_STATS))
    if isinstance(stats, str):
        stats = [s.strip() for s in stats.split(',') if s.strip()]
    stats = tuple(stats)
    unknown_stats = set(stats) - set(ALL_STATS)
    if unknown_stats:
        raise UsageError(f"Unknown statistics: {', '.join(sorted(unknown_stats))}")
    return ExperimentConfig(
        name=name,
        description=str(get_parameter(config, 'experiment.description', f'Experiment from {path}')),
        variants=variants,
        trials=int(get_parameter(config, 'experiment.trials', DEFAULT_TRIALS)),
        seed=int(get_parameter(config, 'experiment.seed', 0)),
        output_dir=Path(get_parameter(config, 'experiment.output_dir', 'results')),
        stats=stats,
    )


def resolve(preset_name: Optional[str] = None, config_path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """Preset or config file, exactly one of them."""
    if (preset_name is None) == (config_path is None):
        raise UsageError("Specify exactly one of --preset or --config")
    if preset_name is not None:
        return preset(preset_name)
    return config_from_file(config_path)
