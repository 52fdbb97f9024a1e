"""
Reweighted min-sum message passing for quadratic objectives.

Messages are quadratics m_{i→j}(x) = ½·a·x² + b·x stored by coefficient; the
normalization constant is never tracked. With c ≡ 1 the updates reduce to
standard Gaussian belief propagation.

Local terms for the message i→j::

    A_{i\\j} = Γ_ii + Σ_{k∈∂i\\j} c_ki·a_{k→i} + (c_ij − 1)·a_{j→i}
    B_{i\\j} = h_i  − Σ_{k∈∂i\\j} c_ki·b_{k→i} − (c_ij − 1)·b_{j→i}

and, with g = Γ_ij/c_ij, a_{i→j} = −g²/A_{i\\j}, b_{i→j} = g·B_{i\\j}/A_{i\\j}.
Beliefs are τ_i(x) = ½·A_i·x² − B_i·x, so the mean estimate is B_i/A_i.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ModelError, ParameterError
from .model import (
    DirectedEdgeIndex,
    EdgeParameters,
    QuadraticModel,
    edge_set,
    validate_model,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 10_000
ROUNDOFF = 64 * np.finfo(float).eps


class _Unbounded:
    """Marker for a message whose local minimization is unbounded below."""

    _instance: Optional["_Unbounded"] = None

    def __new__(cls) -> "_Unbounded":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Unbounded"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()
Coefficient = Union[float, _Unbounded]


@dataclass(frozen=True)
class ReweightedSystem:
    """
    A model, its directed edges and the reweighting parameters, with the
    per-edge constants the update loops need precomputed.
    """

    model: QuadraticModel
    params: EdgeParameters
    index: DirectedEdgeIndex
    c: Tuple[float, ...] = field(repr=False)
    g: Tuple[float, ...] = field(repr=False)
    others: Tuple[Tuple[Tuple[int, float], ...], ...] = field(repr=False)
    targets: np.ndarray = field(repr=False)

    @classmethod
    def build(
        cls, model: QuadraticModel, params: EdgeParameters
    ) -> "ReweightedSystem":
        violations = validate_model(model)
        if violations:
            raise ModelError(
                "Model is not usable by message passing: "
                + ", ".join(violations)
            )
        index = edge_set(model)
        c = tuple(float(v) for v in params.directed(index))
        if any(v == 0.0 for v in c):
            raise ParameterError("Reweighting parameters must be nonzero")
        gamma = model.gamma
        g = tuple(
            float(gamma[i, j]) / c[e] for e, (i, j) in enumerate(index.edges)
        )
        others = []
        for e, (i, j) in enumerate(index.edges):
            others.append(
                tuple(
                    (f, c[f])
                    for f in index.incoming[i]
                    if index.edges[f][0] != j
                )
            )
        targets = np.array([j for _, j in index.edges], dtype=int)
        return cls(model, params, index, c, g, tuple(others), targets)

    @property
    def n(self) -> int:
        return self.model.n

    def __len__(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class MessageState:
    """
    Message coefficients per directed edge.

    Entries flagged in ``unbounded`` hold NaN in both ``a`` and ``b``.
    ``min_local`` is the smallest A_{i\\j} met by the update that produced
    this state (``inf`` for the initial state).
    """

    a: np.ndarray
    b: np.ndarray
    unbounded: np.ndarray
    t: int = 0
    min_local: float = math.inf

    def __post_init__(self) -> None:
        for name in ("a", "b", "unbounded"):
            array = np.array(
                getattr(self, name),
                dtype=bool if name == "unbounded" else float,
            )
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @classmethod
    def zeros(cls, size: int) -> "MessageState":
        return cls(np.zeros(size), np.zeros(size), np.zeros(size, dtype=bool))

    @property
    def valid(self) -> bool:
        return not bool(self.unbounded.any())

    def coefficient(self, e: int) -> Tuple[Coefficient, float]:
        if self.unbounded[e]:
            return UNBOUNDED, math.nan
        return float(self.a[e]), float(self.b[e])

    @classmethod
    def _from_lists(
        cls,
        a: List[float],
        b: List[float],
        unbounded: List[bool],
        t: int,
        min_local: float,
    ) -> "MessageState":
        return cls(np.array(a), np.array(b), np.array(unbounded), t, min_local)


@dataclass(frozen=True)
class BeliefSummary:
    """Per-node belief coefficients; mean/variance are NaN where A_i <= 0."""

    A: np.ndarray
    B: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    decodable: np.ndarray

    @property
    def all_decodable(self) -> bool:
        return bool(self.decodable.all())


@dataclass(frozen=True)
class Schedule:
    """Update schedule: 'synchronous', 'asynchronous' or 'damped'."""

    kind: str = "synchronous"
    order: Optional[Tuple[int, ...]] = None
    delta: float = 0.5

    KINDS = ("synchronous", "asynchronous", "damped")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ParameterError(
                f"Unknown schedule '{self.kind}'; use one of {self.KINDS}"
            )
        if self.kind == "damped" and not 0.0 < self.delta < 1.0:
            raise ParameterError(f"Damping must lie in (0, 1), got {self.delta}")
        if self.order is not None:
            object.__setattr__(self, "order", tuple(int(v) for v in self.order))

    @classmethod
    def synchronous(cls) -> "Schedule":
        return cls("synchronous")

    @classmethod
    def asynchronous(cls, order: Optional[Sequence[int]] = None) -> "Schedule":
        return cls("asynchronous", order=None if order is None else tuple(order))

    @classmethod
    def damped(cls, delta: float = 0.5) -> "Schedule":
        return cls("damped", delta=delta)


@dataclass
class RunReport:
    """Outcome of ``run``."""

    iterations: int
    converged: bool
    residual_history: List[float]
    a_residual_history: List[float]
    a_monotone: bool
    trees_positive: bool
    unbounded: bool
    final_means: np.ndarray
    final_variances: np.ndarray
    final_state: MessageState
    schedule: Schedule
    distance_estimate: float = math.inf


def _check_order(order: Sequence[int], n: int) -> Tuple[int, ...]:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(n)):
        raise ParameterError(f"Order {order} is not a permutation of 0..{n - 1}")
    return order


def _local(
    system: ReweightedSystem,
    e: int,
    a: Sequence[float],
    b: Sequence[float],
    unbounded: Sequence[bool],
) -> Tuple[Coefficient, float]:
    i = system.index.edges[e][0]
    A = float(system.model.gamma[i, i])
    B = float(system.model.h[i])
    for f, cf in system.others[e]:
        if unbounded[f]:
            return UNBOUNDED, math.nan
        A += cf * a[f]
        B -= cf * b[f]
    cm1 = system.c[e] - 1.0
    if cm1 != 0.0:
        r = system.index.reverse[e]
        if unbounded[r]:
            return UNBOUNDED, math.nan
        A += cm1 * a[r]
        B -= cm1 * b[r]
    return A, B


def local_terms(
    state: MessageState, system: ReweightedSystem, i: int, j: int
) -> Tuple[Coefficient, float]:
    """A_{i\\j} and B_{i\\j} for the message i→j under ``state``."""
    e = system.index.index(i, j)
    return _local(system, e, state.a, state.b, state.unbounded)


def send_message(
    A_loc: Coefficient, B_loc: float, gamma_ij: float, c_ij: float
) -> Tuple[Coefficient, float]:
    """Minimize the local quadratic over x_i; Unbounded unless A_loc > 0."""
    if A_loc is UNBOUNDED or not A_loc > 0.0:
        return UNBOUNDED, math.nan
    g = gamma_ij / c_ij
    return -(g * g) / A_loc, B_loc * g / A_loc


def _update(
    system: ReweightedSystem,
    e: int,
    a: Sequence[float],
    b: Sequence[float],
    unbounded: Sequence[bool],
) -> Tuple[Coefficient, float, Coefficient]:
    A, B = _local(system, e, a, b, unbounded)
    if A is UNBOUNDED or not A > 0.0:
        return UNBOUNDED, math.nan, A
    g = system.g[e]
    return -(g * g) / A, B * g / A, A


def sync_step(state: MessageState, system: ReweightedSystem) -> MessageState:
    """Update every message from the previous state simultaneously."""
    a = state.a.tolist()
    b = state.b.tolist()
    unb = state.unbounded.tolist()
    new_a = list(a)
    new_b = list(b)
    new_unb = list(unb)
    min_local = math.inf
    for e in range(len(system)):
        value_a, value_b, A = _update(system, e, a, b, unb)
        if A is UNBOUNDED:
            min_local = -math.inf
        else:
            min_local = min(min_local, A)
        if value_a is UNBOUNDED:
            new_a[e] = new_b[e] = math.nan
            new_unb[e] = True
        else:
            new_a[e], new_b[e], new_unb[e] = value_a, value_b, False
    return MessageState._from_lists(
        new_a, new_b, new_unb, state.t + 1, min_local
    )


def update_incoming(
    state: MessageState,
    system: ReweightedSystem,
    nodes: Sequence[int],
    update_variances: bool = True,
) -> MessageState:
    """
    For each j in ``nodes``, in turn, update m_{i→j} for i ∈ ∂j; later
    updates see earlier ones.

    With ``update_variances=False`` the a-coefficients are held fixed and
    only the linear coefficients move.
    """
    index = system.index
    a = state.a.tolist()
    b = state.b.tolist()
    unb = state.unbounded.tolist()
    min_local = math.inf
    for j in nodes:
        for e in index.incoming[j]:
            value_a, value_b, A = _update(system, e, a, b, unb)
            if A is UNBOUNDED:
                min_local = -math.inf
            else:
                min_local = min(min_local, A)
            if value_a is UNBOUNDED:
                a[e] = b[e] = math.nan
                unb[e] = True
            elif update_variances:
                a[e], b[e], unb[e] = value_a, value_b, False
            else:
                b[e] = value_b
    return MessageState._from_lists(a, b, unb, state.t + 1, min_local)


def async_sweep(
    state: MessageState,
    system: ReweightedSystem,
    order: Optional[Sequence[int]] = None,
    update_variances: bool = True,
) -> MessageState:
    """One cyclic sweep over every node in ``order`` (ascending by default)."""
    order = _check_order(range(system.n) if order is None else order, system.n)
    return update_incoming(state, system, order, update_variances)


def damped_step(
    state: MessageState, system: ReweightedSystem, delta: float
) -> MessageState:
    """δ·old + (1 − δ)·synchronous update, coefficientwise."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"Damping must lie in (0, 1), got {delta}")
    fresh = sync_step(state, system)
    unbounded = state.unbounded | fresh.unbounded
    with np.errstate(invalid="ignore"):
        a = delta * state.a + (1.0 - delta) * fresh.a
        b = delta * state.b + (1.0 - delta) * fresh.b
    a[unbounded] = np.nan
    b[unbounded] = np.nan
    return MessageState(a, b, unbounded, fresh.t, fresh.min_local)


def beliefs(state: MessageState, system: ReweightedSystem) -> BeliefSummary:
    n = system.n
    c = np.asarray(system.c, dtype=float)
    unbounded = state.unbounded
    a = np.where(unbounded, 0.0, state.a)
    b = np.where(unbounded, 0.0, state.b)
    A = np.diag(system.model.gamma) + np.bincount(
        system.targets, weights=c * a, minlength=n
    )
    B = system.model.h - np.bincount(system.targets, weights=c * b, minlength=n)
    broken = np.bincount(system.targets, weights=unbounded, minlength=n) > 0
    A[broken] = np.nan
    B[broken] = np.nan
    decodable = ~broken & (np.nan_to_num(A, nan=-1.0) > 0.0)
    mean = np.full(n, np.nan)
    variance = np.full(n, np.nan)
    mean[decodable] = B[decodable] / A[decodable]
    variance[decodable] = 1.0 / A[decodable]
    if not decodable.all():
        logger.debug(
            f"Nodes {np.flatnonzero(~decodable).tolist()} are not decodable"
        )
    return BeliefSummary(A, B, mean, variance, decodable)


def step(
    state: MessageState, system: ReweightedSystem, schedule: Schedule
) -> MessageState:
    if schedule.kind == "synchronous":
        return sync_step(state, system)
    if schedule.kind == "asynchronous":
        return async_sweep(state, system, schedule.order)
    return damped_step(state, system, schedule.delta)


def iterate_states(
    system: ReweightedSystem,
    schedule: Schedule,
    state: Optional[MessageState] = None,
) -> Iterator[MessageState]:
    """Yield the states after each iteration, starting from zero messages."""
    state = state or MessageState.zeros(len(system))
    while True:
        state = step(state, system, schedule)
        yield state


def _sup_change(new: np.ndarray, old: np.ndarray) -> float:
    if new.size == 0:
        return 0.0
    if not (np.isfinite(new).all() and np.isfinite(old).all()):
        return math.inf
    return float(np.max(np.abs(new - old)))


def _distance_estimate(residuals: Sequence[float], window: int = 3) -> float:
    """
    Distance of the latest iterate from the limit, from the last change and
    the slowest contraction ratio over the last ``window`` steps.
    """
    last = residuals[-1]
    if last == 0.0:
        return 0.0
    recent = residuals[-(window + 1):]
    ratios = [new / old for old, new in zip(recent, recent[1:]) if old > 0.0]
    if not ratios:
        return math.inf
    rate = max(ratios)
    if not rate < 1.0:
        return math.inf
    return last / (1.0 - rate)


def run(
    model: QuadraticModel,
    params: EdgeParameters,
    schedule: Optional[Schedule] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    system: Optional[ReweightedSystem] = None,
) -> RunReport:
    """
    Iterate until the mean estimates are within ``tol`` of their limit,
    ``max_iter`` is reached, or a message becomes Unbounded.

    The distance to the limit is the last sup-norm change divided by one
    minus the observed contraction ratio, so a converged run also has its
    last change at most ``tol``. Changes at round-off level count as
    converged.
    """
    if not tol > 0.0:
        raise ParameterError(f"Tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be at least 1, got {max_iter}")
    schedule = schedule or Schedule.synchronous()
    system = system or ReweightedSystem.build(model, params)
    if schedule.order is not None:
        _check_order(schedule.order, system.n)

    state = MessageState.zeros(len(system))
    current = beliefs(state, system)
    residuals: List[float] = []
    a_residuals: List[float] = []
    a_monotone = True
    trees_positive = True
    converged = False
    iterations = 0
    distance = math.inf

    for new_state in iterate_states(system, schedule, state):
        iterations = new_state.t
        if new_state.valid:
            if a_monotone and not bool(np.all(new_state.a <= state.a)):
                a_monotone = False
            a_residuals.append(_sup_change(new_state.a, state.a))
        else:
            trees_positive = False
            residuals.append(math.inf)
            a_residuals.append(math.inf)
            logger.warning(f"Unbounded message at iteration {iterations}; stopping")
            state = new_state
            current = beliefs(state, system)
            break
        if not new_state.min_local > 0.0:
            trees_positive = False
        summary = beliefs(new_state, system)
        if not summary.all_decodable:
            trees_positive = False
        residual = _sup_change(summary.mean, current.mean)
        residuals.append(residual)
        state, current = new_state, summary
        distance = _distance_estimate(residuals)
        floor = ROUNDOFF * max(1.0, float(np.max(np.abs(summary.mean))))
        if math.isfinite(residual) and (distance <= tol or residual <= floor):
            converged = True
            break
        if iterations >= max_iter:
            break

    unbounded = not state.valid
    if converged:
        logger.info(
            f"Converged after {iterations} {schedule.kind} iterations "
            f"(last change {residuals[-1]:.3e}, distance {distance:.3e})"
        )
    else:
        suffix = " (unbounded messages)" if unbounded else ""
        logger.info(
            f"No convergence after {iterations} {schedule.kind} iterations{suffix}"
        )
    return RunReport(
        iterations=iterations,
        converged=converged,
        residual_history=residuals,
        a_residual_history=a_residuals,
        a_monotone=a_monotone,
        trees_positive=trees_positive,
        unbounded=unbounded,
        final_means=current.mean,
        final_variances=current.variance,
        final_state=state,
        schedule=schedule,
        distance_estimate=distance,
    )


def node_belief(
    state: MessageState, system: ReweightedSystem, i: int
) -> Tuple[float, float]:
    """τ_i as (curvature, linear coefficient): ½·A·x² + lin·x."""
    summary = beliefs(state, system)
    return float(summary.A[i]), -float(summary.B[i])


def pairwise_belief(
    state: MessageState, system: ReweightedSystem, i: int, j: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    τ_ij = ψ_ij/c_ij + τ_i − m_{j→i} + τ_j − m_{i→j} as ½zᵀQz + ℓᵀz with
    z = (x_i, x_j).
    """
    A_ij, B_ij = local_terms(state, system, i, j)
    A_ji, B_ji = local_terms(state, system, j, i)
    if A_ij is UNBOUNDED or A_ji is UNBOUNDED:
        raise ModelError(f"Pairwise belief on ({i}, {j}) involves Unbounded")
    g = system.g[system.index.index(i, j)]
    Q = np.array([[A_ij, g], [g, A_ji]])
    lin = np.array([-B_ij, -B_ji])
    return Q, lin


def marginalize_pairwise(
    Q: np.ndarray, lin: np.ndarray
) -> Tuple[float, float]:
    """Minimize ½zᵀQz + ℓᵀz over the second coordinate (Schur complement)."""
    return (
        float(Q[0, 0] - Q[0, 1] * Q[1, 0] / Q[1, 1]),
        float(lin[0] - Q[0, 1] * lin[1] / Q[1, 1]),
    )


def reconstruct_objective(
    state: MessageState, system: ReweightedSystem
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Σ_i τ_i + Σ_{(i,j)} c_ij·(τ_ij − τ_i − τ_j) as (Q, ℓ) of ½xᵀQx + ℓᵀx.

    For any finite state this equals (Γ, −h); with c ≡ 1 it is the plain
    sum of node and edge beliefs.
    """
    if not state.valid:
        raise ModelError("Cannot reconstruct from a state with Unbounded")
    n = system.n
    summary = beliefs(state, system)
    Q = np.diag(summary.A)
    lin = -summary.B.copy()
    for i, j in system.index.undirected():
        c = system.params[(i, j)]
        Qe, le = pairwise_belief(state, system, i, j)
        block = np.zeros((n, n))
        vec = np.zeros(n)
        block[np.ix_([i, j], [i, j])] = Qe
        vec[[i, j]] = le
        block[i, i] -= summary.A[i]
        block[j, j] -= summary.A[j]
        vec[i] += summary.B[i]
        vec[j] += summary.B[j]
        Q = Q + c * block
        lin = lin + c * vec
    return Q, lin
