"""
Invariant and diagnostic suite behind the `verify` command.

Each check builds its own inputs from a diagnostic random stream, evaluates
one family of properties (mixing, stochasticity, mirror-step exactness,
Bregman identities, sub-Weibull tail behaviour, reference-solver accuracy,
engine equivalences) and reports pass/fail with the worst observed value.
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

import numpy as np

from src.models.geometry import Geometry, RegularizerSpec
from src.models.noise import NoiseFamily, NoiseModel
from src.models.problem import CompositeProblem
from src.models.run import NetworkState
from src.services import geometry_service, graph_service, noise_service, problem_service
from src.pipeline import engine
from src.utils.logging import get_logger
from src.utils.rng import StreamFactory


logger = get_logger(__name__)

PROBES = 10_000
NOISE_SAMPLES = 100_000
REPETITIONS = 10_000
DELTA = 0.05


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verification check."""
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'passed': self.passed, 'detail': self.detail}


def _draw(geom: Geometry, rng: np.random.Generator, count: int) -> np.ndarray:
    """`count` interior points of the domain, one per row."""
    if geom.is_box:
        return rng.uniform(geom.lower, geom.upper, size=(count, geom.n))
    return rng.dirichlet(np.ones(geom.n), size=count)


def check_mixing(streams: StreamFactory) -> CheckResult:
    """Geometric mixing bound with zero violations for m in {3, 10, 60}, B in {1, 2}."""
    violations = 0
    worst_sum = 0.0
    disconnected = 0
    for m in (3, 10, 60):
        for B in (1, 2):
            schedule = graph_service.build_schedule('static-ring' if B == 1 else 'B-cyclic-partition',
                                                    m, B=B, eta=1.0 / 3.0, seed=streams.schedule_seed(m * 10 + B))
            count, sum_error = graph_service.mixing_violations(schedule, max_lag=200)
            violations += count
            worst_sum = max(worst_sum, sum_error)
            disconnected += sum(not graph_service.window_union_connected(schedule, k) for k in range(4))
    passed = violations == 0 and worst_sum <= 1e-10 and disconnected == 0
    return CheckResult('graph.mixing', passed,
                       f'violations={violations} max_sum_error={worst_sum:.2e} disconnected_windows={disconnected}')


def check_mirror_step(streams: StreamFactory) -> CheckResult:
    """Projection equivalence, l1 grid oracle, simplex mass and first-order optimality."""
    rng = streams.diagnostic(1)
    n = 5
    box = Geometry.box(n)
    none = RegularizerSpec()

    clamp_error = 0.0
    batches = 10
    for _ in range(batches):
        y = rng.uniform(-1.0, 1.0, size=(PROBES // batches, n))
        g = rng.normal(0.0, 2.0, size=y.shape)
        alpha = float(rng.uniform(0.01, 1.0))
        stepped = geometry_service.mirror_step(box, none, y, g, alpha)
        clamp_error = max(clamp_error, float(np.max(np.abs(stepped - np.clip(y - alpha * g, -1.0, 1.0)))))

    grid = np.arange(-10_000, 10_001) * 1e-4
    oracle_gap = 0.0
    for _ in range(100):
        y_j, g_j = rng.uniform(-1.0, 1.0), rng.normal(0.0, 2.0)
        alpha, lam = rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.0)
        x_j = float(geometry_service.mirror_step(Geometry.box(1), RegularizerSpec.l1(lam),
                                                 np.array([y_j]), np.array([g_j]), alpha)[0])

        def objective(x):
            return alpha * g_j * x + 0.5 * (x - y_j) ** 2 + alpha * lam * np.abs(x)

        oracle_gap = max(oracle_gap, abs(float(objective(x_j)) - float(np.min(objective(grid)))))

    simplex = Geometry.simplex(n)
    y = rng.dirichlet(np.ones(n), size=PROBES)
    g = rng.normal(0.0, 3.0, size=y.shape)
    x = geometry_service.mirror_step(simplex, none, y, g, 0.5)
    mass_error = float(np.max(np.abs(x.sum(axis=1) - 1.0)))
    negative = bool(np.any(x < 0.0))

    residual = 0.0
    pairs = [(box, none), (box, RegularizerSpec.l1(0.3)), (box, RegularizerSpec.elastic_net(0.5, 0.2)),
             (simplex, none)]
    for geom, reg in pairs:
        for _ in range(200):
            y_i = _draw(geom, rng, 1)[0]
            g_i = rng.normal(0.0, 2.0, size=n)
            alpha = float(rng.uniform(0.05, 1.0))
            x_i = geometry_service.mirror_step(geom, reg, y_i, g_i, alpha)
            residual = max(residual, geometry_service.verify_first_order_optimality(geom, reg, y_i, g_i, alpha, x_i))

    passed = clamp_error <= 1e-12 and oracle_gap <= 2e-4 and mass_error <= 1e-12 and not negative and residual <= 1e-8
    return CheckResult(
        'geometry.mirror_step', passed,
        f'clamp={clamp_error:.1e} l1_oracle_gap={oracle_gap:.1e} mass={mass_error:.1e} residual={residual:.1e}'
    )


def check_bregman(streams: StreamFactory) -> CheckResult:
    """Three-point identity, strong-convexity lower bound and separate convexity."""
    rng = streams.diagnostic(2)
    n = 5
    worst_identity = 0.0
    worst_gap = 0.0
    separate_failures = 0
    for geom in (Geometry.box(n), Geometry.simplex(n)):
        x, y, z = _draw(geom, rng, PROBES), _draw(geom, rng, PROBES), _draw(geom, rng, PROBES)
        worst_identity = max(worst_identity, float(np.max(np.abs(geometry_service.three_point_residual(geom, x, y, z)))))
        worst_gap = min(worst_gap, float(np.min(geometry_service.strong_convexity_gap(geom, x, y))))
        for k in range(PROBES):
            points = _draw(geom, rng, 3)
            weights = rng.dirichlet(np.ones(3))
            if not geometry_service.separate_convexity_check(geom, x[k], points, weights):
                separate_failures += 1
    passed = worst_identity <= 1e-10 and worst_gap >= -1e-10 and separate_failures == 0
    return CheckResult('geometry.bregman', passed,
                       f'three_point={worst_identity:.1e} min_gap={worst_gap:.1e} separate_failures={separate_failures}')


DIAGNOSTIC_FAMILIES = (
    NoiseModel(NoiseFamily.UNIFORM_BOX, 0.5, 20),
    NoiseModel(NoiseFamily.GAUSSIAN_ISO, 1e-3, 20),
    NoiseModel(NoiseFamily.LAPLACE_IID, 0.1, 20),
    NoiseModel(NoiseFamily.WEIBULL_TAIL, 0.01, 20, weibull_theta=2.0),
)


def check_sub_weibull(streams: StreamFactory) -> CheckResult:
    """Moment, centering and summation properties per family, plus Monte-Carlo concentration."""
    dual_norm = Geometry.box(20).dual_norm
    failures: List[str] = []
    for index, model in enumerate(DIAGNOSTIC_FAMILIES):
        values = noise_service.norm_samples(model, dual_norm, NOISE_SAMPLES, streams.diagnostic(10 + index))
        kappa = noise_service.fit_kappa(values, model.theta, model.scale, model.family.value)
        for row in noise_service.moment_report(model, values, kappa):
            if not row.holds:
                failures.append(f'{model.family.value}:moment p={row.p:g}')
        if not noise_service.centering_check(values, model.theta, kappa)[0]:
            failures.append(f'{model.family.value}:centering')
        if not noise_service.summation_check(values.reshape(-1, 5), model.theta)[0]:
            failures.append(f'{model.family.value}:summation')

    frequencies = {}
    cases = (('gaussian k=1', NoiseModel(NoiseFamily.GAUSSIAN_ISO, 1.0, 1), 1),
             ('laplace k=10', NoiseModel(NoiseFamily.LAPLACE_IID, 1.0, 1), 10))
    for index, (label, model, k) in enumerate(cases):
        calibration = noise_service.sample_block(model, streams.diagnostic(20 + index), NOISE_SAMPLES)[:, 0]
        kappa = noise_service.fit_kappa(calibration, model.theta, model.scale, model.family.value)
        draws = noise_service.sample_block(model.with_dimension(k), streams.diagnostic(30 + index), REPETITIONS)
        frequency = noise_service.concentration_violation_frequency(draws, np.full(k, kappa), model.theta, DELTA)
        frequencies[label] = frequency
        if frequency > noise_service.violation_tolerance(DELTA, REPETITIONS):
            failures.append(f'{label}:concentration')

    detail = ' '.join(f'{k}={v:.4f}' for k, v in frequencies.items())
    if failures:
        detail += ' failed=' + ','.join(failures)
    return CheckResult('noise.sub_weibull', not failures, detail)


def check_reference_solver(streams: StreamFactory) -> CheckResult:
    """5-agent, 3-dimensional least squares with an inactive box against lstsq."""
    problem = problem_service.generate_lasso_instance(5, 3, 0.0, streams.diagnostic(40), lower=-1e3, upper=1e3)
    optimum = problem_service.reference_optimum(problem)
    closed_form = np.linalg.lstsq(problem.features, problem.responses, rcond=None)[0]
    error = float(np.max(np.abs(optimum.x_star - closed_form)))
    return CheckResult('problem.reference_optimum', error <= 1e-8, f'max_abs_error={error:.1e}')


def check_engine(streams: StreamFactory) -> CheckResult:
    """Vectorized step against agent-by-agent DSGD/DSED, and pure-consensus behaviour."""
    rng = streams.diagnostic(50)
    m, n = 10, 6
    schedule = graph_service.build_schedule('static-ring', m)
    weights = schedule.weight_at(1).weights

    box = problem_service.generate_lasso_instance(m, n, 0.0, rng)
    x = box.geometry.project_feasible(rng.uniform(-1.0, 1.0, size=(m, n)))
    noise = rng.normal(0.0, 0.1, size=(m, n))
    state = NetworkState(x=x)
    stepped = engine.dcsmd_step(box, schedule, state, 0.3, noise).x
    direct = engine.dsgd_step_reference(weights, x, problem_service.all_subgradients(box, x) - noise, 0.3,
                                        box.geometry.lower, box.geometry.upper)
    dsgd_gap = float(np.max(np.abs(stepped - direct)))

    simplex = problem_service.generate_simplex_instance(m, n, rng, floor=0.0)
    x = rng.dirichlet(np.ones(n), size=m)
    stepped = engine.dcsmd_step(simplex, schedule, NetworkState(x=x), 0.3, noise).x
    direct = engine.dsed_step_reference(weights, x, problem_service.all_subgradients(simplex, x) - noise, 0.3)
    dsed_gap = float(np.max(np.abs(stepped - direct)))

    # zero data and zero noise: pure consensus
    flat = CompositeProblem(features=np.zeros((m, n)), responses=np.zeros(m), geometry=Geometry.box(n),
                            reg=RegularizerSpec(), G=0.0, G_psi=0.0)
    x = rng.uniform(-1.0, 1.0, size=(m, n))
    mixing = graph_service.schedule_mixing_constants(schedule)
    state = NetworkState(x=x.copy())
    average_drift = 0.0
    envelope_breaks = 0
    for t in range(1, 201):
        if engine.disagreement(flat, state.x) > engine.consensus_envelope(mixing, t, x, flat.geometry.norm) + 1e-12:
            envelope_breaks += 1
        state = engine.dcsmd_step(flat, schedule, state, 0.5, np.zeros((m, n)))
        average_drift = max(average_drift, float(np.max(np.abs(state.x.mean(axis=0) - x.mean(axis=0)))))

    passed = dsgd_gap <= 1e-12 and dsed_gap <= 1e-12 and average_drift <= 1e-12 and envelope_breaks == 0
    return CheckResult(
        'engine.equivalence', passed,
        f'dsgd={dsgd_gap:.1e} dsed={dsed_gap:.1e} average_drift={average_drift:.1e} envelope_breaks={envelope_breaks}'
    )


CHECKS: List[Callable[[StreamFactory], CheckResult]] = [
    check_mixing,
    check_mirror_step,
    check_bregman,
    check_sub_weibull,
    check_reference_solver,
    check_engine,
]


def run_checks(seed: int = 0) -> List[CheckResult]:
    """Run every check with streams derived from `seed`."""
    streams = StreamFactory(seed)
    results = []
    for check in CHECKS:
        result = check(streams)
        logger.info(f"Check {result.name}: {'pass' if result.passed else 'FAIL'}", context=result.to_dict())
        results.append(result)
    return results
