"""
Spectral certificates: walk-summability, scaled diagonal dominance and
positive definiteness, plus the adversarial 2-cover witness.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import networkx as nx
import numpy as np
import scipy.linalg

from .covers import CoveredModel, adversarial_two_cover
from .errors import ConvergenceError, ModelError
from .model import QuadraticModel, support_graph

logger = logging.getLogger(__name__)

DEFAULT_POWER_TOL = 1e-12
DEFAULT_POWER_MAX_ITER = 100_000
DEFAULT_WALK_TOL = 1e-9


@dataclass(frozen=True)
class PerronComponent:
    nodes: np.ndarray
    rho: float
    vector: np.ndarray


@dataclass(frozen=True)
class WalkSummability:
    summable: bool
    rho: float
    indeterminate: bool

    def __iter__(self):
        return iter((self.summable, self.rho))


@dataclass(frozen=True)
class AdversarialWitness:
    """z with zᵀΓ̃z = 1 − ρ on the adversarial cover of the unit-diagonal model."""

    cover: CoveredModel
    z: np.ndarray
    quadratic_form: float
    rho: float


def _power_iteration(
    block: np.ndarray, tol: float, max_iter: int
) -> Tuple[float, np.ndarray]:
    """
    Perron root and vector of an irreducible nonnegative block.

    Iterates on block + I, which is primitive, and stops once the
    Collatz-Wielandt bounds min(Bx/x) <= ρ(B) <= max(Bx/x) agree.
    """
    m = block.shape[0]
    shifted = block + np.eye(m)
    x = np.ones(m) / np.sqrt(m)
    lo, hi = 0.0, np.inf
    for iteration in range(1, max_iter + 1):
        y = shifted @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / np.linalg.norm(y)
        if hi - lo <= tol * hi:
            logger.debug(f"Power iteration converged in {iteration} steps")
            return 0.5 * (lo + hi) - 1.0, x
    best = 0.5 * (lo + hi) - 1.0
    logger.warning(
        f"Power iteration stopped after {max_iter} steps; best estimate {best:.12g}"
    )
    raise ConvergenceError(
        f"Power iteration did not converge in {max_iter} steps",
        best_estimate=best,
    )


def perron_components(
    matrix: np.ndarray,
    tol: float = DEFAULT_POWER_TOL,
    max_iter: int = DEFAULT_POWER_MAX_ITER,
) -> List[PerronComponent]:
    """Perron root and vector of every connected component of the support."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ModelError(f"Expected a square matrix, got shape {matrix.shape}")
    if np.any(matrix < 0.0):
        raise ModelError("Power iteration needs an entrywise nonnegative matrix")
    graph = support_graph(matrix + matrix.T)
    components = []
    for nodes in nx.connected_components(graph):
        nodes = np.array(sorted(nodes), dtype=int)
        block = matrix[np.ix_(nodes, nodes)]
        if nodes.size == 1:
            rho, vector = float(block[0, 0]), np.ones(1)
        else:
            rho, vector = _power_iteration(block, tol, max_iter)
        components.append(PerronComponent(nodes, rho, vector))
    return components


def spectral_radius_nonneg(
    matrix: np.ndarray,
    tol: float = DEFAULT_POWER_TOL,
    max_iter: int = DEFAULT_POWER_MAX_ITER,
) -> float:
    components = perron_components(matrix, tol, max_iter)
    return max((comp.rho for comp in components), default=0.0)


def perron_vector(
    matrix: np.ndarray,
    tol: float = DEFAULT_POWER_TOL,
    max_iter: int = DEFAULT_POWER_MAX_ITER,
) -> Tuple[float, np.ndarray]:
    """
    Spectral radius and a positive vector assembled from the Perron vectors
    of all components (each scaled to unit maximum).
    """
    components = perron_components(matrix, tol, max_iter)
    vector = np.zeros(np.asarray(matrix).shape[0])
    for comp in components:
        vector[comp.nodes] = comp.vector / comp.vector.max()
    rho = max((comp.rho for comp in components), default=0.0)
    return rho, vector


def _require_positive_diagonal(model: QuadraticModel) -> np.ndarray:
    diag = model.diagonal
    bad = np.flatnonzero(~(diag > 0.0))
    if bad.size:
        raise ModelError(f"Nonpositive diagonal at {bad.tolist()}")
    return diag


def normalize_diagonal(model: QuadraticModel) -> QuadraticModel:
    """D^{-1/2}·Γ·D^{-1/2} with h scaled by D^{-1/2}."""
    scale = 1.0 / np.sqrt(_require_positive_diagonal(model))
    gamma = scale[:, None] * model.gamma * scale[None, :]
    np.fill_diagonal(gamma, 1.0)
    return QuadraticModel(gamma, scale * model.h)


def walk_matrix(model: QuadraticModel) -> np.ndarray:
    """|I − D^{-1/2}ΓD^{-1/2}|."""
    normalized = normalize_diagonal(model).gamma
    return np.abs(np.eye(model.n) - normalized)


def walk_summability(
    model: QuadraticModel,
    tol: float = DEFAULT_WALK_TOL,
    power_tol: float = DEFAULT_POWER_TOL,
    power_max_iter: int = DEFAULT_POWER_MAX_ITER,
) -> WalkSummability:
    rho = spectral_radius_nonneg(walk_matrix(model), power_tol, power_max_iter)
    indeterminate = abs(rho - 1.0) <= tol
    if indeterminate:
        logger.warning(f"Walk-summability is indeterminate (rho = {rho:.12g})")
    return WalkSummability(rho < 1.0 - tol, rho, indeterminate)


def is_sdd_witness(model: QuadraticModel, w: np.ndarray) -> bool:
    """Strict check of |Γ_ii|·w_i > Σ_{j≠i} |Γ_ij|·w_j with w > 0."""
    w = np.asarray(w, dtype=float)
    if w.shape != (model.n,) or not np.all(w > 0.0):
        return False
    absolute = np.abs(model.gamma)
    diag = np.diag(absolute)
    off = absolute @ w - diag * w
    return bool(np.all(diag * w > off))


def sdd_witness(
    model: QuadraticModel,
    power_tol: float = DEFAULT_POWER_TOL,
    power_max_iter: int = DEFAULT_POWER_MAX_ITER,
) -> Optional[np.ndarray]:
    """
    A scaling w > 0 making Γ diagonally dominant, from the Perron vector of
    |I − D^{-1/2}ΓD^{-1/2}|, or None when no such w is found.
    """
    diag = _require_positive_diagonal(model)
    rho, vector = perron_vector(walk_matrix(model), power_tol, power_max_iter)
    if rho >= 1.0:
        return None
    w = vector / np.sqrt(diag)
    w = w / w.max()
    if not is_sdd_witness(model, w):
        logger.warning(
            f"Perron scaling fails the strict dominance check (rho = {rho:.12g})"
        )
        return None
    return w


def positive_definite_check(
    model: Union[QuadraticModel, np.ndarray]
) -> Tuple[bool, float]:
    """Minimum eigenvalue by dense symmetric eigensolve."""
    gamma = model.gamma if isinstance(model, QuadraticModel) else np.asarray(model)
    lam_min = float(scipy.linalg.eigvalsh(gamma, subset_by_index=[0, 0])[0])
    return lam_min > 0.0, lam_min


def adversarial_witness(
    model: QuadraticModel,
    power_tol: float = DEFAULT_POWER_TOL,
    power_max_iter: int = DEFAULT_POWER_MAX_ITER,
) -> AdversarialWitness:
    """
    Build the adversarial 2-cover of the unit-diagonal normalization and the
    vector z = (+x_v on copy 0, −x_v on copy 1)/√2, x the unit Perron vector
    of the dominant component of |I − Γ|.
    """
    normalized = normalize_diagonal(model)
    cover = adversarial_two_cover(normalized)
    components = perron_components(
        np.abs(np.eye(model.n) - normalized.gamma), power_tol, power_max_iter
    )
    top = max(components, key=lambda comp: comp.rho)
    x = np.zeros(model.n)
    x[top.nodes] = top.vector / np.linalg.norm(top.vector)
    signs = np.where(np.arange(cover.model.n) % 2 == 0, 1.0, -1.0)
    z = signs * x[cover.pi] / np.sqrt(2.0)
    quadratic_form = float(z @ cover.model.gamma @ z)
    return AdversarialWitness(cover, z, quadratic_form, top.rho)
