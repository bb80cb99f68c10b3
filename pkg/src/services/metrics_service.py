"""
Metrics service: agent quantiles, cross-trial aggregation and rate fits.
"""
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.models.metrics import ErrorSeries, STATS, TrialSummary
from src.utils.errors import AlignmentError, FitDomainError, TrialCountMismatchError
from src.utils.logging import get_logger


logger = get_logger(__name__)

MIN_FIT_POINTS = 10
ERROR_FLOOR = -1e-9


def agent_quantiles(series: ErrorSeries, steps: Optional[np.ndarray] = None) -> TrialSummary:
    """
    Max, min and median over agents at every recorded step.

    The median of an even agent count is the midpoint of the central pair.

    Args:
        series: One trial's per-agent errors
        steps: Expected step grid (default: the series' own)

    Returns:
        Single-trial TrialSummary

    Raises:
        AlignmentError: If the series does not match `steps` or its own rows
    """
    if series.errors.shape[0] != series.steps.shape[0]:
        raise AlignmentError(series.steps.shape[0], series.errors.shape[0])
    if steps is not None and not np.array_equal(np.asarray(steps), series.steps):
        raise AlignmentError(len(steps), series.steps.shape[0])
    return TrialSummary(
        steps=series.steps.copy(),
        max=np.max(series.errors, axis=1),
        min=np.min(series.errors, axis=1),
        median=np.median(series.errors, axis=1),
        trials=1,
        disagreement=series.disagreement.copy(),
    )


def aggregate_trials(summaries: Sequence[TrialSummary], count: int = 10) -> TrialSummary:
    """
    Mean over trials of each per-step statistic.

    Args:
        summaries: Single-trial summaries on a shared step grid
        count: Declared number of trials

    Returns:
        Aggregated TrialSummary with trials == count

    Raises:
        TrialCountMismatchError: If len(summaries) != count
        AlignmentError: If the step grids differ
    """
    if len(summaries) != count:
        raise TrialCountMismatchError(count, len(summaries))
    reference = summaries[0].steps
    for summary in summaries[1:]:
        if not np.array_equal(summary.steps, reference):
            raise AlignmentError(reference.shape[0], summary.steps.shape[0])

    stacked = {name: np.stack([s.stat(name) for s in summaries]) for name in STATS}
    disagreement = None
    if all(s.disagreement is not None for s in summaries):
        disagreement = np.mean(np.stack([s.disagreement for s in summaries]), axis=0)
    return TrialSummary(
        steps=reference.copy(),
        max=np.mean(stacked['max'], axis=0),
        min=np.mean(stacked['min'], axis=0),
        median=np.mean(stacked['median'], axis=0),
        trials=count,
        disagreement=disagreement,
    )


def rate_fit(summary: TrialSummary, window: float = 0.5) -> Tuple[float, float]:
    """
    Least-squares slope of log(median error) against log(t) over the last part of the run.

    Args:
        summary: Trial summary
        window: Trailing fraction of the horizon to fit (default: last half)

    Returns:
        (slope, R^2); R^2 is 1 for a perfectly flat series

    Raises:
        FitDomainError: If the window has fewer than 10 points or a nonpositive error
    """
    horizon = summary.steps[-1]
    mask = summary.steps >= (1.0 - window) * horizon
    steps = summary.steps[mask].astype(float)
    values = summary.median[mask]
    if steps.size < MIN_FIT_POINTS:
        raise FitDomainError(f'need at least {MIN_FIT_POINTS} points in the window', int(steps.size))
    if np.any(values <= 0.0):
        raise FitDomainError('nonpositive median error in the window', int(steps.size))

    log_t = np.log(steps)
    log_e = np.log(values)
    slope, intercept = np.polyfit(log_t, log_e, 1)
    fitted = slope * log_t + intercept
    total = float(np.sum((log_e - np.mean(log_e)) ** 2))
    residual = float(np.sum((log_e - fitted) ** 2))
    r_squared = 1.0 - residual / total if total > 0.0 else 1.0
    return float(slope), float(r_squared)


def with_rate_fit(summary: TrialSummary) -> TrialSummary:
    """Attach slope and R^2 to the summary; a failed fit is logged and skipped."""
    try:
        summary.slope, summary.r_squared = rate_fit(summary)
    except FitDomainError as e:
        logger.warning("Rate fit skipped", context=e.to_dict())
    return summary


def final_errors(summary: TrialSummary) -> Dict[str, float]:
    """Last recorded (max, min, median) means."""
    return {name: float(summary.stat(name)[-1]) for name in STATS}


def monotone_after(summary: TrialSummary, t0: int, slack: float = 0.05, stat: str = 'median') -> bool:
    """
    Whether the statistic never rises more than `slack` above its running minimum after t0.
    """
    values = summary.stat(stat)[summary.steps >= t0]
    if values.size == 0:
        return True
    running_min = np.minimum.accumulate(values)
    return bool(np.all(values <= running_min * (1.0 + slack) + 1e-15))


def convergence_gap(ratios: Mapping[str, float], threshold: float = 0.1) -> Optional[Dict[str, object]]:
    """
    Variants whose final/initial error ratio did not drop below `threshold`.

    Args:
        ratios: Final median error over initial median error, by variant name
        threshold: Target ratio

    Returns:
        None when every variant is below the threshold, else a dict with the
        threshold, the missing variants' ratios and the worst of them
    """
    missed = {name: float(ratio) for name, ratio in ratios.items() if not ratio < threshold}
    if not missed:
        return None
    return {
        'threshold': threshold,
        'missed': missed,
        'worst': max(missed, key=missed.get),
    }


def errors_nonnegative(series: ErrorSeries, tol: float = -ERROR_FLOOR) -> bool:
    """Reference optimality: every recorded error is >= -tol."""
    return bool(np.all(series.errors >= -tol))


def tail_ordering_report(finals: Mapping[str, float], slowest: str = 'laplace') -> Dict[str, object]:
    """
    Side-by-side final errors of the noise-family variants.

    Args:
        finals: Final median error by variant name
        slowest: Substring of the variant expected to end with the largest error

    Returns:
        Dict with the finals, the variant with the largest error, and the flag
    """
    worst = max(finals, key=finals.get)
    return {
        'finals': dict(finals),
        'slowest_variant': worst,
        f'{slowest}_slowest': slowest in worst,
    }
