"""
Experiment pipeline: expand a config into (variant, trial) jobs, run them on a
bounded worker pool and write every artifact from a single collector.

Artifacts under <output_dir>/<experiment name>/:
    <variant>/runs.csv      per-trial agent quantiles
    <variant>/summary.csv   quantiles averaged over trials
    finals.csv              last-step statistics and rate fit per variant
    <experiment name>.svg   error curves
    manifest.json           config echo, versions, seeds, observations
"""
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.models.experiment import ExperimentConfig, VariantSpec
from src.models.graph import GraphSchedule, ScheduleKind
from src.models.metrics import ErrorSeries, TrialSummary
from src.models.noise import NoiseFamily, NoiseModel
from src.models.problem import CompositeProblem
from src.models.run import RunConfig, StepsizeRule
from src.pipeline.engine import run
from src.services import artifact_service
from src.services.graph_service import build_schedule
from src.services.metrics_service import (
    agent_quantiles,
    aggregate_trials,
    convergence_gap,
    final_errors,
    monotone_after,
    tail_ordering_report,
    with_rate_fit,
)
from src.services.problem_service import (
    generate_elastic_net_instance,
    generate_lasso_instance,
    generate_simplex_instance,
    reference_optimum,
)
from src.utils.config import get_worker_count
from src.utils.errors import SimulationError, UsageError
from src.utils.logging import get_logger
from src.utils.rng import StreamFactory
from src.utils.run_id import generate_run_id


logger = get_logger(__name__)

MONOTONE_AFTER_STEP = 100
MONOTONE_SLACK = 0.05
CONVERGED_FRACTION = 0.1
SLOW_MIXING_CAUSE = (
    'consensus-limited: the ergodic averages are still spread across agents at the horizon; '
    'sparse schedules such as the 60-agent ring (second eigenvalue about 0.996) need a longer horizon'
)


@dataclass(frozen=True)
class TrialJob:
    """One (variant, trial) unit of work; picklable for the worker pool."""
    variant: VariantSpec
    trial: int
    seed: int


@dataclass(eq=False)
class TrialOutcome:
    """What a trial hands back to the collector."""
    variant: str
    trial: int
    summary: TrialSummary
    initial_error: float
    ergodic_outputs_equal: bool
    elapsed: float


@dataclass(eq=False)
class ExperimentOutcome:
    """Aggregated results and artifact paths of one executed experiment."""
    run_id: str
    summaries: Dict[str, TrialSummary]
    initial_errors: Dict[str, float]
    observations: Dict[str, Any]
    paths: Dict[str, Path] = field(default_factory=dict)


def _member(enum_cls, value: Any, name: str):
    """Enum member for a config value; unknown values are usage errors."""
    try:
        return enum_cls(value)
    except ValueError as e:
        raise UsageError(f"Unknown {name} '{value}'; expected one of: {', '.join(m.value for m in enum_cls)}",
                         details={'name': name, 'value': value}) from e


def build_problem(block: Dict[str, Any], rng: np.random.Generator) -> CompositeProblem:
    """Instance from a [problem] block."""
    kind = block.get('kind', 'lasso')
    m, n = int(block['m']), int(block['n'])
    data_noise_std = float(block.get('data_noise_std', 1.0))
    if kind == 'lasso':
        return generate_lasso_instance(m, n, float(block.get('lam', 0.0)), rng,
                                       float(block.get('lower', -1.0)), float(block.get('upper', 1.0)),
                                       data_noise_std)
    if kind == 'elastic-net':
        return generate_elastic_net_instance(m, n, float(block.get('lam1', 0.0)), float(block.get('lam2', 0.0)),
                                             rng, float(block.get('lower', -1.0)), float(block.get('upper', 1.0)),
                                             data_noise_std)
    if kind == 'simplex':
        floor = block.get('floor')
        return generate_simplex_instance(m, n, rng, None if floor is None else float(floor), data_noise_std)
    raise UsageError(f"Unknown problem.kind '{kind}'; expected one of: lasso, elastic-net, simplex",
                     details={'name': 'problem.kind', 'value': kind})


def build_schedule_block(block: Dict[str, Any], m: int) -> GraphSchedule:
    """Schedule from a [schedule] block."""
    eta = block.get('eta')
    return build_schedule(
        _member(ScheduleKind, block.get('kind', 'static-ring'), 'schedule.kind').value,
        m,
        B=int(block.get('B', 1)),
        eta=None if eta is None else float(eta),
        seed=int(block.get('seed', 0)),
    )


def build_noise(block: Dict[str, Any], n: int) -> NoiseModel:
    """Noise model from a [noise] block."""
    return NoiseModel(
        family=_member(NoiseFamily, block.get('family', 'gaussian-iso'), 'noise.family'),
        scale=float(block.get('scale', 0.0)),
        n=n,
        weibull_theta=float(block.get('weibull_theta', 2.0)),
    )


def build_run_config(block: Dict[str, Any], seed: int, trial: int) -> RunConfig:
    """RunConfig from a [run] block."""
    return RunConfig(
        T=int(block['T']),
        stepsize=_member(StepsizeRule, block.get('stepsize', 'varying-invsqrt'), 'run.stepsize'),
        seed=seed,
        record_every=int(block.get('record_every', 10)),
        trial=trial,
    )


def validate_variant(variant: VariantSpec, seed: int):
    """Build every component of trial 0 once so config errors surface before any work starts."""
    streams = StreamFactory(seed)
    problem = build_problem(variant.problem, streams.data(0))
    build_schedule_block(variant.schedule, problem.m)
    build_noise(variant.noise, problem.n)
    build_run_config(variant.run, seed, 0)


def run_trial(job: TrialJob) -> TrialOutcome:
    """
    Execute one trial: fresh data, reference optimum, engine run, quantiles.

    Module-level so the process pool can pickle it.
    """
    start_time = time.time()
    logger.set_trial(job.trial)
    try:
        streams = StreamFactory(job.seed)
        problem = build_problem(job.variant.problem, streams.data(job.trial))
        schedule = build_schedule_block(job.variant.schedule, problem.m)
        noise = build_noise(job.variant.noise, problem.n)
        config = build_run_config(job.variant.run, job.seed, job.trial)

        optimum = reference_optimum(problem)
        result = run(problem, schedule, noise, config, optimum=optimum, streams=streams)
        series = ErrorSeries(
            steps=result.trajectory.steps,
            errors=result.trajectory.errors,
            disagreement=result.trajectory.disagreement,
        )
        outcome = TrialOutcome(
            variant=job.variant.name,
            trial=job.trial,
            summary=agent_quantiles(series),
            initial_error=result.initial_error,
            ergodic_outputs_equal=bool(np.array_equal(result.x_tilde, result.x_hat)),
            elapsed=time.time() - start_time,
        )
        logger.debug(
            "Trial finished",
            context={'variant': job.variant.name, 'initial_error': outcome.initial_error,
                     'elapsed_seconds': round(outcome.elapsed, 3)},
        )
        return outcome
    finally:
        logger.set_trial(None)


def _run_jobs(jobs: List[TrialJob], workers: int) -> List[TrialOutcome]:
    """Run jobs and return outcomes in submission order."""
    if workers <= 1 or len(jobs) <= 1:
        return [run_trial(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(run_trial, jobs))


def _sweep_ordering(config: ExperimentConfig, finals: Dict[str, float]) -> Optional[Dict[str, Any]]:
    """Whether final error is non-decreasing along a problem.m / problem.n sweep."""
    for key in ('n', 'm'):
        values = [v.problem.get(key) for v in config.variants]
        if len(config.variants) > 1 and len(set(values)) == len(values):
            ordered = [v.name for v in sorted(config.variants, key=lambda v: v.problem[key])]
            sequence = [finals[name] for name in ordered]
            return {
                'parameter': f'problem.{key}',
                'order': ordered,
                'non_decreasing': bool(all(b >= a for a, b in zip(sequence, sequence[1:]))),
            }
    return None


def _ratio(final: float, initial: float) -> float:
    return float(final / initial) if initial > 0.0 else float('inf')


def _observations(
    config: ExperimentConfig,
    summaries: Dict[str, TrialSummary],
    initial_errors: Dict[str, float],
    outcomes: List[TrialOutcome],
) -> Dict[str, Any]:
    finals = {name: final_errors(s)['median'] for name, s in summaries.items()}
    ratios = {name: _ratio(finals[name], initial_errors[name]) for name in summaries}
    variants: Dict[str, Any] = {}
    for name, summary in summaries.items():
        variants[name] = {
            'final': final_errors(summary),
            'initial_median_error': initial_errors[name],
            'final_to_initial': ratios[name],
            'max_final_to_initial': _ratio(final_errors(summary)['max'], initial_errors[name]),
            'converged_below_10pct': bool(finals[name] < CONVERGED_FRACTION * initial_errors[name]),
            'monotone_after_100': monotone_after(summary, MONOTONE_AFTER_STEP, MONOTONE_SLACK),
            'slope': summary.slope,
            'r_squared': summary.r_squared,
            'ergodic_outputs_equal': all(o.ergodic_outputs_equal for o in outcomes if o.variant == name),
        }
    observations: Dict[str, Any] = {'variants': variants, 'qualitative_reproduction': True}
    families = {v.name: v.noise.get('family') for v in config.variants}
    if len(set(families.values())) > 1:
        observations['noise_tail_ordering'] = tail_ordering_report(finals)
    ordering = _sweep_ordering(config, finals)
    if ordering:
        observations['sweep_ordering'] = ordering
    gap = convergence_gap(ratios, CONVERGED_FRACTION)
    if gap:
        gap['cause'] = SLOW_MIXING_CAUSE
        observations['convergence_gap'] = gap
        logger.warning(
            f"{len(gap['missed'])} variant(s) ended above {CONVERGED_FRACTION:.0%} of the initial error",
            context={'missed': gap['missed']},
        )
    return observations


def execute(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    run_id: Optional[str] = None,
) -> ExperimentOutcome:
    """
    Run every (variant, trial) job and write the artifacts.

    Args:
        config: Resolved experiment
        workers: Worker processes (default: DCSMD_WORKERS or CPU count)
        run_id: Correlation id (default: derived from name, seed and config)

    Returns:
        ExperimentOutcome with per-variant summaries and artifact paths

    Raises:
        SimulationError: Any module error aborts the experiment
    """
    config.validate()
    run_id = run_id or generate_run_id(config.name, config.seed, config.to_dict())
    workers = get_worker_count(workers)
    logger.set_run_id(run_id)
    logger.set_preset(config.name)
    start_time = time.time()

    for variant in config.variants:
        validate_variant(variant, config.seed)

    jobs = [TrialJob(variant=v, trial=k, seed=config.seed) for v in config.variants for k in range(config.trials)]
    logger.info(
        f"Starting experiment {config.name}",
        context={'variants': [v.name for v in config.variants], 'trials': config.trials,
                 'jobs': len(jobs), 'workers': workers}
    )
    try:
        outcomes = _run_jobs(jobs, workers)
    except SimulationError:
        logger.error(f"Experiment {config.name} aborted", exc_info=True)
        raise

    out_dir = Path(config.output_dir) / config.name
    summaries: Dict[str, TrialSummary] = {}
    initial_errors: Dict[str, float] = {}
    paths: Dict[str, Path] = {}
    for variant in config.variants:
        trials = [o for o in outcomes if o.variant == variant.name]
        per_trial = [o.summary for o in trials]
        summary = with_rate_fit(aggregate_trials(per_trial, count=config.trials))
        summaries[variant.name] = summary
        initial_errors[variant.name] = float(np.mean([o.initial_error for o in trials]))
        paths[f'{variant.name}/runs.csv'] = artifact_service.write_runs_csv(
            out_dir / variant.name / 'runs.csv', per_trial, config.name)
        paths[f'{variant.name}/summary.csv'] = artifact_service.write_summary_csv(
            out_dir / variant.name / 'summary.csv', summary)

    paths['finals.csv'] = artifact_service.write_finals_csv(out_dir / 'finals.csv', summaries)
    paths[f'{config.name}.svg'] = artifact_service.write_figure_svg(
        out_dir / f'{config.name}.svg', summaries, config.stats, config.description)

    observations = _observations(config, summaries, initial_errors, outcomes)
    manifest = {
        'run_id': run_id,
        'config': config.to_dict(),
        'versions': artifact_service.package_versions(),
        'seeds': {'master': config.seed, 'trials': list(range(config.trials))},
        'observations': observations,
    }
    paths['manifest.json'] = artifact_service.write_manifest(out_dir / 'manifest.json', manifest)

    logger.info(
        f"Experiment {config.name} finished",
        context={'output_dir': str(out_dir), 'elapsed_s': round(time.time() - start_time, 2),
                 'final_medians': {k: v['final']['median'] for k, v in observations['variants'].items()}}
    )
    return ExperimentOutcome(
        run_id=run_id,
        summaries=summaries,
        initial_errors=initial_errors,
        observations=observations,
        paths=paths,
    )
