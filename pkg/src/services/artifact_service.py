"""
Artifact service for experiment outputs.

This module writes and reads the per-run and summary CSVs, the final-error
table, the SVG figure and the JSON manifest. Every writer wraps filesystem
failures in ArtifactIOError carrying the offending path. Floats are written
with repr precision so that CSVs parse back to identical values.
"""
import csv
import json
import platform
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import networkx  # noqa: E402
import numpy as np  # noqa: E402
import scipy  # noqa: E402

from src.models.metrics import STATS, TrialSummary  # noqa: E402
from src.utils.errors import ArtifactIOError  # noqa: E402
from src.utils.logging import get_logger  # noqa: E402


logger = get_logger(__name__)

RUNS_HEADER = ['step', 'stat', 'value', 'trial', 'preset']
SUMMARY_HEADER = ['step', 'max_mean', 'min_mean', 'median_mean']
FINALS_HEADER = ['variant', 'max', 'min', 'median', 'slope', 'r_squared']
FIGURE_SIZE = (8.0, 5.0)
FIGURE_DPI = 100
SVG_HASH_SALT = 'dcsmd-sw'


def _fmt(value: Any) -> str:
    if value is None:
        return ''
    return repr(float(value))


def _write_rows(path: Path, header: List[str], rows: Sequence[Sequence[Any]]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ArtifactIOError(str(path), str(e)) from e
    return path


def _read_rows(path: Path, header: List[str]) -> List[Dict[str, str]]:
    try:
        with open(path, newline='') as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != header:
                raise ArtifactIOError(str(path), f'unexpected header {reader.fieldnames}')
            return list(reader)
    except OSError as e:
        raise ArtifactIOError(str(path), str(e)) from e


def write_runs_csv(path: Union[str, Path], summaries: Sequence[TrialSummary], preset: str) -> Path:
    """
    Write single-trial summaries as `step, stat, value, trial, preset` rows.

    Args:
        path: Destination file
        summaries: One single-trial summary per trial, in trial order
        preset: Preset (or config) name stored on every row

    Returns:
        Path written
    """
    rows = []
    for trial, summary in enumerate(summaries):
        for k, step in enumerate(summary.steps):
            for stat in STATS:
                rows.append([int(step), stat, _fmt(summary.stat(stat)[k]), trial, preset])
    return _write_rows(Path(path), RUNS_HEADER, rows)


def read_runs_csv(path: Union[str, Path]) -> List[TrialSummary]:
    """
    Parse a runs CSV back into single-trial summaries, ordered by trial.

    Raises:
        ArtifactIOError: If the file is missing or malformed
    """
    path = Path(path)
    table: Dict[int, Dict[str, Dict[int, float]]] = {}
    try:
        for row in _read_rows(path, RUNS_HEADER):
            trial = int(row['trial'])
            table.setdefault(trial, {s: {} for s in STATS})[row['stat']][int(row['step'])] = float(row['value'])
    except (KeyError, ValueError) as e:
        raise ArtifactIOError(str(path), f'malformed row: {e}') from e

    summaries = []
    for trial in sorted(table):
        steps = np.array(sorted(table[trial]['median']), dtype=int)
        values = {s: np.array([table[trial][s][t] for t in steps]) for s in STATS}
        summaries.append(TrialSummary(steps=steps, trials=1, **values))
    return summaries


def write_summary_csv(path: Union[str, Path], summary: TrialSummary) -> Path:
    """Write `step, max_mean, min_mean, median_mean` rows."""
    rows = [
        [int(step), _fmt(summary.max[k]), _fmt(summary.min[k]), _fmt(summary.median[k])]
        for k, step in enumerate(summary.steps)
    ]
    return _write_rows(Path(path), SUMMARY_HEADER, rows)


def read_summary_csv(path: Union[str, Path], trials: int = 1) -> TrialSummary:
    """Parse a summary CSV back into a TrialSummary."""
    path = Path(path)
    rows = _read_rows(path, SUMMARY_HEADER)
    try:
        return TrialSummary(
            steps=np.array([int(r['step']) for r in rows], dtype=int),
            max=np.array([float(r['max_mean']) for r in rows]),
            min=np.array([float(r['min_mean']) for r in rows]),
            median=np.array([float(r['median_mean']) for r in rows]),
            trials=trials,
        )
    except ValueError as e:
        raise ArtifactIOError(str(path), f'malformed row: {e}') from e


def write_finals_csv(path: Union[str, Path], summaries: Mapping[str, TrialSummary]) -> Path:
    """Final max/min/median and rate fit per variant."""
    rows = []
    for variant, summary in summaries.items():
        rows.append([
            variant,
            _fmt(summary.max[-1]),
            _fmt(summary.min[-1]),
            _fmt(summary.median[-1]),
            _fmt(summary.slope),
            _fmt(summary.r_squared),
        ])
    return _write_rows(Path(path), FINALS_HEADER, rows)


def write_figure_svg(
    path: Union[str, Path],
    summaries: Mapping[str, TrialSummary],
    stats: Sequence[str],
    title: str,
) -> Path:
    """
    Render the error curves as an 800x500 SVG with a log10 error axis.

    One line per (variant, statistic); the legend uses the variant names.
    """
    path = Path(path)
    single = len(summaries) == 1
    with plt.rc_context({'svg.hashsalt': SVG_HASH_SALT, 'svg.fonttype': 'none'}):
        fig, ax = plt.subplots(figsize=FIGURE_SIZE, dpi=FIGURE_DPI)
        try:
            for variant, summary in summaries.items():
                for stat in stats:
                    values = np.where(summary.stat(stat) > 0.0, summary.stat(stat), np.nan)
                    label = stat if single else (variant if len(stats) == 1 else f'{variant} {stat}')
                    ax.plot(summary.steps, values, label=label, linewidth=1.2)
            ax.set_yscale('log')
            ax.set_xlabel('iteration t')
            ax.set_ylabel('optimization error')
            ax.set_title(title)
            ax.grid(True, which='both', alpha=0.3)
            ax.legend(loc='upper right')
            fig.tight_layout()
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format='svg', metadata={'Date': None})
        except OSError as e:
            raise ArtifactIOError(str(path), str(e)) from e
        finally:
            plt.close(fig)
    return path


def package_versions() -> Dict[str, str]:
    """Versions of the numerical stack, recorded in the manifest."""
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'networkx': networkx.__version__,
        'matplotlib': matplotlib.__version__,
    }


def write_manifest(path: Union[str, Path], manifest: Dict[str, Any]) -> Path:
    """Write the manifest as sorted, indented JSON."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + '\n')
    except OSError as e:
        raise ArtifactIOError(str(path), str(e)) from e
    return path


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactIOError(str(path), str(e)) from e
