"""
Graph service for time-varying doubly stochastic communication topologies.

This module builds ring and complete-graph Metropolis matrices, B-cyclic
schedules that activate a rotating subset of ring edges, transition products
W_t ... W_s and the geometric mixing constants that bound them.
"""
from typing import Iterator, List, Tuple

import networkx as nx
import numpy as np

from src.models.graph import CommMatrix, GraphSchedule, MixingConstants, ScheduleKind
from src.utils.errors import InvalidParameterError, InvalidRangeError, InvalidSizeError
from src.utils.logging import get_logger


logger = get_logger(__name__)


def _metropolis_weights(graph: nx.Graph, degrees: dict, edges: List[Tuple[int, int]]) -> np.ndarray:
    """
    Metropolis weights 1 / (1 + max(deg_i, deg_j)) on `edges`, residual mass on the diagonal.

    Args:
        graph: Graph whose node set indexes the matrix
        degrees: Degrees used in the Metropolis rule
        edges: Undirected edges that carry weight this round

    Returns:
        (m, m) symmetric doubly stochastic array
    """
    m = graph.number_of_nodes()
    weights = np.zeros((m, m))
    for i, j in edges:
        w = 1.0 / (1.0 + max(degrees[i], degrees[j]))
        weights[i, j] = w
        weights[j, i] = w
    np.fill_diagonal(weights, 0.0)
    np.fill_diagonal(weights, 1.0 - weights.sum(axis=1))
    return weights


def metropolis_ring(m: int) -> CommMatrix:
    """
    Metropolis weight matrix of the ring on m agents.

    For m >= 3 every agent keeps 1/3 and gives 1/3 to each neighbour; for
    m = 2 all entries are 1/2.

    Args:
        m: Agent count

    Returns:
        CommMatrix with eta equal to its smallest positive entry

    Raises:
        InvalidSizeError: If m < 2
    """
    if m < 2:
        raise InvalidSizeError('m', m, 2)
    ring = nx.cycle_graph(m)
    degrees = dict(ring.degree())
    weights = _metropolis_weights(ring, degrees, list(ring.edges()))
    matrix = CommMatrix(weights=weights, eta=float(np.min(weights[weights > 0.0])))
    matrix.validate()
    return matrix


def static_complete(m: int) -> CommMatrix:
    """Uniform averaging matrix 1/m on the complete graph."""
    if m < 1:
        raise InvalidSizeError('m', m, 1)
    matrix = CommMatrix(weights=np.full((m, m), 1.0 / m), eta=1.0 / m)
    matrix.validate()
    return matrix


def _check_eta(eta: float, phases: List[np.ndarray]):
    if not 0.0 < eta < 1.0:
        raise InvalidParameterError('eta', eta, 'eta must lie in (0, 1)')
    smallest = min(float(np.min(w[w > 0.0])) for w in phases)
    if eta > smallest + 1e-15:
        raise InvalidParameterError(
            'eta', eta,
            f'too large for a doubly stochastic completion (smallest admissible weight is {smallest:.6g})'
        )


def b_cyclic_schedule(m: int, B: int, eta: float, seed: int = 0) -> GraphSchedule:
    """
    B-cyclic partition of the ring's edges.

    The ring's edges are shuffled with `seed` and dealt into B phases; step t
    activates phase (t - 1) mod B. Each phase keeps the ring's Metropolis
    weights on its active edges and puts the residual mass on the diagonal,
    so every B consecutive steps together activate the whole ring.

    Args:
        m: Agent count
        B: Connectivity window length
        eta: Declared minimum positive weight
        seed: Seed for the edge-to-phase assignment

    Returns:
        GraphSchedule of period B

    Raises:
        InvalidSizeError: If m < 2
        InvalidParameterError: If B < 1 or eta admits no completion
    """
    if m < 2:
        raise InvalidSizeError('m', m, 2)
    if B < 1:
        raise InvalidParameterError('B', B, 'window length must be >= 1')

    ring = nx.cycle_graph(m)
    degrees = dict(ring.degree())
    edges = list(ring.edges())
    order = np.random.default_rng(seed).permutation(len(edges))
    assignment = {phase: [] for phase in range(B)}
    for position, edge_index in enumerate(order):
        assignment[position % B].append(edges[edge_index])

    phases = [_metropolis_weights(ring, degrees, assignment[phase]) for phase in range(B)]
    _check_eta(eta, phases)

    schedule = GraphSchedule(
        m=m,
        B=B,
        eta=float(eta),
        kind=ScheduleKind.B_CYCLIC_PARTITION,
        seed=int(seed),
        phases=tuple(CommMatrix(weights=w, eta=float(eta)) for w in phases),
    )
    for matrix in schedule.phases:
        matrix.validate()
    logger.debug(
        "Built B-cyclic schedule",
        context={'m': m, 'B': B, 'eta': eta, 'seed': seed,
                 'edges_per_phase': [len(assignment[p]) for p in range(B)]}
    )
    return schedule


def build_schedule(kind: str, m: int, B: int = 1, eta: float = None, seed: int = 0) -> GraphSchedule:
    """
    Build a schedule from its config description.

    Args:
        kind: 'static-ring', 'static-complete' or 'B-cyclic-partition'
        m: Agent count
        B: Window length (static families use B = 1)
        eta: Minimum weight (default: the family's natural value)
        seed: Seed for randomized families

    Returns:
        GraphSchedule
    """
    try:
        kind = ScheduleKind(kind)
    except ValueError as e:
        raise InvalidParameterError('kind', kind, f"expected one of {[k.value for k in ScheduleKind]}") from e
    if kind == ScheduleKind.STATIC_RING:
        matrix = metropolis_ring(m)
        declared = matrix.eta if eta is None else float(eta)
        _check_eta(declared, [matrix.weights])
        return GraphSchedule(m=m, B=1, eta=declared, kind=kind, seed=int(seed),
                             phases=(CommMatrix(matrix.weights, declared),))
    if kind == ScheduleKind.STATIC_COMPLETE:
        matrix = static_complete(m)
        declared = matrix.eta if eta is None else float(eta)
        if m > 1:
            _check_eta(declared, [matrix.weights])
        return GraphSchedule(m=m, B=1, eta=declared, kind=kind, seed=int(seed),
                             phases=(CommMatrix(matrix.weights, declared),))
    if eta is None:
        eta = 1.0 / m
    return b_cyclic_schedule(m, B, eta, seed)


def transition_product(schedule: GraphSchedule, t: int, s: int) -> CommMatrix:
    """
    Transition matrix Psi(t, s) = W_t W_{t-1} ... W_s.

    Args:
        schedule: Communication schedule
        t: Last step of the product
        s: First step of the product

    Returns:
        CommMatrix of the product

    Raises:
        InvalidRangeError: If s < 1 or t < s
    """
    if s < 1 or t < s:
        raise InvalidRangeError(s, t)
    product = schedule.weight_at(s).weights.copy()
    for k in range(s + 1, t + 1):
        product = schedule.weight_at(k).weights @ product
    return CommMatrix(weights=product, eta=0.0)


def iter_transition_products(schedule: GraphSchedule, s: int, max_lag: int) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Yield (t, Psi(t, s)) for t = s, ..., s + max_lag, built incrementally.
    """
    if s < 1 or max_lag < 0:
        raise InvalidRangeError(s, s + max_lag)
    product = schedule.weight_at(s).weights.copy()
    yield s, product
    for t in range(s + 1, s + max_lag + 1):
        product = schedule.weight_at(t).weights @ product
        yield t, product


def mixing_constants(m: int, B: int, eta: float) -> MixingConstants:
    """
    Constants of the transition-product bound |Psi(t,s)_ij - 1/m| <= omega * gamma**(t-s).

    omega = (1 - eta / (4 m^2))^-2, gamma = (1 - eta / (4 m^2))^(1/B).

    Raises:
        InvalidSizeError: If m < 2
        InvalidParameterError: If B < 1 or eta is outside (0, 1)
    """
    if m < 2:
        raise InvalidSizeError('m', m, 2)
    if B < 1:
        raise InvalidParameterError('B', B, 'window length must be >= 1')
    if not 0.0 < eta < 1.0:
        raise InvalidParameterError('eta', eta, 'eta must lie in (0, 1)')
    base = 1.0 - eta / (4.0 * m * m)
    return MixingConstants(omega=base ** -2, gamma=base ** (1.0 / B))


def schedule_mixing_constants(schedule: GraphSchedule) -> MixingConstants:
    """Mixing constants for a schedule's declared (m, B, eta)."""
    return mixing_constants(schedule.m, schedule.B, schedule.eta)


def window_union_connected(schedule: GraphSchedule, k: int) -> bool:
    """
    Whether the union graph over steps kB+1, ..., (k+1)B is strongly connected.
    """
    union = nx.DiGraph()
    union.add_nodes_from(range(schedule.m))
    for t in range(k * schedule.B + 1, (k + 1) * schedule.B + 1):
        union.add_edges_from(schedule.weight_at(t).edges())
    return nx.is_strongly_connected(union)


def mixing_violations(schedule: GraphSchedule, max_lag: int = 200, tol: float = 1e-12) -> Tuple[int, float]:
    """
    Count (s, t) pairs with 1 <= t - s <= max_lag breaking the mixing bound.

    The schedule is periodic, so s only needs to range over one period.

    Returns:
        (violation count, worst product row/column-sum error)
    """
    constants = schedule_mixing_constants(schedule)
    m = schedule.m
    violations = 0
    worst_sum_error = 0.0
    for s in range(1, schedule.period + 1):
        for t, product in iter_transition_products(schedule, s, max_lag):
            worst_sum_error = max(
                worst_sum_error,
                float(np.max(np.abs(product.sum(axis=0) - 1.0))),
                float(np.max(np.abs(product.sum(axis=1) - 1.0))),
            )
            if t == s:
                continue
            deviation = float(np.max(np.abs(product - 1.0 / m)))
            if deviation > constants.bound(t - s) + tol:
                violations += 1
    return violations, worst_sum_error
