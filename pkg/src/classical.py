"""
Ground truth and classical splitting iterations.

Jacobi and Gauss-Seidel share one row-relaxation kernel so that the
Jacobi-as-Gauss-Seidel embedding on the doubled model performs the same
floating point operations in the same order.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import ModelError, ParameterError, SingularMatrixError
from .message_engine import MessageState, ReweightedSystem, async_sweep, local_terms
from .model import Edge, QuadraticModel

logger = logging.getLogger(__name__)

Rows = List[Tuple[List[int], List[float]]]


@dataclass
class IterateTrace:
    """Iterates x^0, x^1, ... of a splitting method and their residuals."""

    iterates: List[np.ndarray] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return max(len(self.iterates) - 1, 0)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def averaged(self) -> List[np.ndarray]:
        """(x^t + x^{t−1})/2 for t >= 1."""
        return [
            0.5 * (self.iterates[t] + self.iterates[t - 1])
            for t in range(1, len(self.iterates))
        ]


@dataclass(frozen=True)
class MeanSystem:
    """The linear system M·b = d satisfied by fixed points of the mean updates."""

    M: np.ndarray
    d: np.ndarray
    edges: Tuple[Edge, ...]
    A_star: np.ndarray

    def residual(self, b: np.ndarray) -> float:
        return float(np.max(np.abs(self.M @ b - self.d))) if self.d.size else 0.0


def direct_solve(model: QuadraticModel) -> np.ndarray:
    """Solve Γx = h by dense LU factorization."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(model.gamma)
        except (scipy.linalg.LinAlgWarning, ValueError) as e:
            raise SingularMatrixError(f"Cannot factorize Γ: {e}") from e
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrixError("Γ is singular")
    x = scipy.linalg.lu_solve((lu, piv), model.h)
    residual = float(np.linalg.norm(model.gamma @ x - model.h))
    if residual > 1e-10 * max(float(np.linalg.norm(model.h)), 1.0):
        logger.warning(f"Direct solve residual {residual:.3e}; Γ is ill-conditioned")
    return x


def _rows(matrix: np.ndarray) -> Tuple[Rows, List[float]]:
    """Off-diagonal nonzeros per row (ascending column) and the diagonal."""
    diag = np.diag(matrix).tolist()
    off = scipy.sparse.csr_matrix(matrix - np.diag(np.diag(matrix)))
    off.sort_indices()
    rows: Rows = []
    for j in range(matrix.shape[0]):
        lo, hi = off.indptr[j], off.indptr[j + 1]
        rows.append((off.indices[lo:hi].tolist(), off.data[lo:hi].tolist()))
    return rows, diag


def _relax(j: int, rows: Rows, diag: List[float], rhs: List[float], x) -> float:
    s = rhs[j]
    cols, vals = rows[j]
    for k, v in zip(cols, vals):
        s -= v * x[k]
    return s / diag[j]


def _residual(model: QuadraticModel, x: np.ndarray) -> float:
    return float(np.linalg.norm(model.gamma @ x - model.h))


def _check_diagonal(model: QuadraticModel) -> None:
    zeros = np.flatnonzero(np.diag(model.gamma) == 0.0)
    if zeros.size:
        raise ModelError(f"Zero diagonal entries at {zeros.tolist()}")


def _check_order(order: Sequence[int], n: int) -> List[int]:
    order = [int(v) for v in order]
    if sorted(order) != list(range(n)):
        raise ParameterError(f"Order {order} is not a permutation of 0..{n - 1}")
    return order


def _jacobi_steps(model: QuadraticModel, x0: np.ndarray) -> Iterator[np.ndarray]:
    rows, diag = _rows(model.gamma)
    rhs = model.h.tolist()
    n = model.n
    x = x0.tolist()
    while True:
        x = [_relax(j, rows, diag, rhs, x) for j in range(n)]
        yield np.array(x)


def jacobi_run(
    model: QuadraticModel,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> IterateTrace:
    """
    Jacobi iteration x^t_j = (h_j − Σ_{k≠j} Γ_jk·x^{t−1}_k)/Γ_jj.

    Converged when ‖x^t − x^{t−1}‖_∞ <= tol.
    """
    _check_diagonal(model)
    n = model.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    trace = IterateTrace([x.copy()], [_residual(model, x)])
    steps = _jacobi_steps(model, x)
    for _ in range(max_iter):
        x = next(steps)
        trace.iterates.append(x)
        trace.residuals.append(_residual(model, x))
        if np.max(np.abs(x - trace.iterates[-2]), initial=0.0) <= tol:
            trace.converged = True
            break
    logger.debug(
        f"Jacobi: {trace.iterations} iterations, converged={trace.converged}"
    )
    return trace


def _gauss_seidel_sweep(
    rows: Rows, diag: List[float], rhs: List[float], x: List[float], order
) -> List[float]:
    for j in order:
        x[j] = _relax(j, rows, diag, rhs, x)
    return x


def gauss_seidel_run(
    model: QuadraticModel,
    x0: Optional[np.ndarray] = None,
    order: Optional[Sequence[int]] = None,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> IterateTrace:
    """Gauss-Seidel; one iteration is one sweep over ``order``."""
    _check_diagonal(model)
    n = model.n
    order = _check_order(range(n) if order is None else order, n)
    rows, diag = _rows(model.gamma)
    rhs = model.h.tolist()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    trace = IterateTrace([x.copy()], [_residual(model, x)])
    for _ in range(max_iter):
        x = np.array(_gauss_seidel_sweep(rows, diag, rhs, x.tolist(), order))
        trace.iterates.append(x)
        trace.residuals.append(_residual(model, x))
        if np.max(np.abs(x - trace.iterates[-2]), initial=0.0) <= tol:
            trace.converged = True
            break
    logger.debug(
        f"Gauss-Seidel: {trace.iterations} sweeps, converged={trace.converged}"
    )
    return trace


def double_model(model: QuadraticModel) -> QuadraticModel:
    """Γ' = [[D, Γ−D], [Γ−D, D]] with h' = [h; h]."""
    D = np.diag(np.diag(model.gamma))
    M = model.gamma - D
    gamma = np.block([[D, M], [M, D]])
    return QuadraticModel(gamma, np.concatenate([model.h, model.h]))


def jacobi_gs_embedding_check(
    model: QuadraticModel,
    x0: Optional[np.ndarray] = None,
    steps: int = 10,
    tol: float = 1e-12,
) -> bool:
    """
    Check that t Gauss-Seidel sweeps on ``double_model`` from [x0; x0]
    give [x^{2t−1}; x^{2t}] of Jacobi on ``model``, for every t <= steps.
    """
    if steps < 1:
        raise ParameterError(f"steps must be at least 1, got {steps}")
    n = model.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    _check_diagonal(model)
    jacobi_steps = _jacobi_steps(model, x0)
    xs = [x0] + [next(jacobi_steps) for _ in range(2 * steps)]
    doubled = double_model(model)
    rows, diag = _rows(doubled.gamma)
    rhs = doubled.h.tolist()
    y = np.concatenate([x0, x0]).tolist()
    for t in range(1, steps + 1):
        y = _gauss_seidel_sweep(rows, diag, rhs, y, range(2 * n))
        expected = np.concatenate([xs[2 * t - 1], xs[2 * t]])
        gap = float(np.max(np.abs(np.array(y) - expected)))
        scale = max(1.0, float(np.max(np.abs(expected))))
        if gap > tol * scale:
            logger.debug(f"Embedding breaks at sweep {t} (gap {gap:.3e})")
            return False
    return True


def build_mean_system(
    system: ReweightedSystem, a_star: MessageState
) -> MeanSystem:
    """
    M and d over directed edges, with A*_{i\\j} from the converged
    variances ``a_star``.
    """
    if not a_star.valid:
        raise ModelError("Converged variances contain Unbounded messages")
    index = system.index
    size = len(index)
    M = np.zeros((size, size))
    d = np.zeros(size)
    A_star = np.zeros(size)
    h = system.model.h
    for e, (i, j) in enumerate(index.edges):
        A, _ = local_terms(a_star, system, i, j)
        if not math.isfinite(A):
            raise ModelError(f"A*_{i}\\{j} is not finite")
        g = system.g[e]
        A_star[e] = A
        M[e, e] = A
        for f, cf in system.others[e]:
            M[e, f] = cf * g
        M[e, index.reverse[e]] = (system.c[e] - 1.0) * g
        d[e] = h[i] * g
    return MeanSystem(M, d, index.edges, A_star)


def mean_sweep_equivalence_check(
    system: ReweightedSystem,
    a_star: MessageState,
    state: MessageState,
    order: Optional[Sequence[int]] = None,
    tol: float = 1e-12,
) -> Tuple[bool, str]:
    """
    Compare one asynchronous b-sweep (variances frozen at ``a_star``) with
    one Gauss-Seidel sweep on the mean system in the matching edge order.
    """
    n = system.n
    order = _check_order(range(n) if order is None else order, n)
    mean_system = build_mean_system(system, a_star)
    start = MessageState(a_star.a, state.b, a_star.unbounded, state.t)
    engine = async_sweep(start, system, order, update_variances=False)
    if not engine.valid:
        return False, "asynchronous sweep produced Unbounded messages"

    edge_order = [e for j in order for e in system.index.incoming[j]]
    if sorted(edge_order) != list(range(len(system))):
        return False, f"edge order {edge_order} does not cover every edge"
    rows, diag = _rows(mean_system.M)
    b = _gauss_seidel_sweep(
        rows, diag, mean_system.d.tolist(), state.b.tolist(), edge_order
    )
    gap = float(np.max(np.abs(engine.b - np.array(b)), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(engine.b), initial=0.0)))
    if gap > tol * scale:
        return False, f"sweeps differ by {gap:.3e}"
    return True, f"sweeps agree to {gap:.3e}"
