"""
Run ID generation utility for the simulator.

Run IDs have the format run_{preset}_{seed}_{hash} and are derived from the
experiment inputs only, so a rerun with the same preset and seed logs and
writes under the same ID.
"""
import hashlib
import json
import re
from typing import Any, Dict, Optional


def generate_run_id(preset: str, seed: int, config: Optional[Dict[str, Any]] = None) -> str:
    """
    Generate a run ID in format: run_{preset}_{seed}_{hash8}.

    Args:
        preset: Preset name (or 'custom' for explicit configs)
        seed: Master seed
        config: Resolved config dictionary mixed into the hash (default: None)

    Returns:
        Run ID string

    Example:
        >>> generate_run_id('fig1', 0)
        >>> # Returns: run_fig1_0_5d41402a
    """
    payload = json.dumps({'preset': preset, 'seed': seed, 'config': config}, sort_keys=True, default=str)
    digest = hashlib.sha256(payload.encode('utf-8')).hexdigest()[:8]
    slug = re.sub(r'[^A-Za-z0-9]+', '-', preset).strip('-') or 'custom'
    return f"run_{slug}_{seed}_{digest}"
