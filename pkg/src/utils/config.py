"""
Configuration utility for experiment config files and environment overrides.

Experiment configs are TOML files with one section per concern
([experiment], [problem], [schedule], [noise], [run]). Parsed files are
cached in-process, and any value can be overridden from the environment with
DCSMD_<SECTION>_<KEY>.
"""
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Optional, Dict, Any, Union

from src.utils.errors import UsageError


# Cache for parsed config files (path -> parsed dict)
_config_cache: Dict[str, Dict[str, Any]] = {}

ENV_PREFIX = 'DCSMD'


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Parse a TOML experiment config file.

    Uses in-memory caching keyed by the resolved path.

    Args:
        path: Path to the TOML file

    Returns:
        Parsed configuration dictionary

    Raises:
        UsageError: If the file is missing or is not valid TOML

    Example:
        >>> config = load_config_file('experiments/lasso.toml')
        >>> config['problem']['m']
        60
    """
    cache_key = str(Path(path).resolve())
    if cache_key in _config_cache:
        return _config_cache[cache_key]

    try:
        with open(path, 'rb') as handle:
            parsed = tomllib.load(handle)
    except FileNotFoundError as e:
        raise UsageError(f"Config file '{path}' not found", details={'path': str(path)}) from e
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"Config file '{path}' is not valid TOML: {e}", details={'path': str(path)}) from e

    _config_cache[cache_key] = parsed
    return parsed


def _coerce(raw: str, default: Any) -> Any:
    """Convert an environment string to the type of the default value."""
    if isinstance(default, bool):
        return raw.strip().lower() in ('1', 'true', 'yes', 'on')
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def get_parameter(config: Dict[str, Any], name: str, default: Optional[Any] = None) -> Any:
    """
    Retrieve a dotted configuration value with environment override.

    Args:
        config: Parsed config dictionary
        name: Dotted key, e.g. 'problem.m'
        default: Value returned when the key is absent (default: None)

    Returns:
        Environment override if set, else the config value, else default

    Example:
        >>> get_parameter(config, 'run.horizon', default=5000)
    """
    env_name = f"{ENV_PREFIX}_{name.replace('.', '_').upper()}"
    if env_name in os.environ:
        return _coerce(os.environ[env_name], default)

    node: Any = config
    for part in name.split('.'):
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node


def clear_cache():
    """
    Clear the configuration cache.

    Useful for testing or when config files change on disk.
    """
    _config_cache.clear()


def get_worker_count(default: Optional[int] = None) -> int:
    """
    Number of worker processes for trial execution.

    Args:
        default: Explicit count (e.g. --workers); wins over DCSMD_WORKERS

    Returns:
        Worker count, at least 1
    """
    if default is not None:
        return max(1, int(default))
    raw = os.environ.get(f"{ENV_PREFIX}_WORKERS")
    if raw:
        return max(1, int(raw))
    return max(1, os.cpu_count() or 1)
