"""
Explicit computation trees of reweighted message passing.

The tree rooted at r with depth t unrolls τ_r^t. A tree node for base node v
whose parent is base node p realizes the message m_{v→p}; its children are
the nodes k ∈ ∂v \\ p (multiplier c_kv) and, unless c_vp = 1, a backtracking
copy of p (multiplier c_vp − 1). Each node carries the product ``weight`` of
the multipliers on its path to the root; its potential is weight·φ_v and its
coupling to the parent is weight·Γ_vp/c_vp.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ParameterError
from .message_engine import UNBOUNDED, Coefficient, ReweightedSystem

logger = logging.getLogger(__name__)

DEFAULT_EIGEN_LIMIT = 2000


@dataclass(frozen=True)
class ComputationTree:
    """
    Nodes in breadth-first order; node 0 is the root.

    ``parent[0]`` is −1 and ``coupling[0]`` is 0.
    """

    root: int
    depth: int
    origin: np.ndarray
    parent: np.ndarray
    level: np.ndarray
    weight: np.ndarray
    coupling: np.ndarray
    curvature: np.ndarray
    linear: np.ndarray

    @property
    def size(self) -> int:
        return int(self.origin.shape[0])

    def matrix(self) -> np.ndarray:
        """Dense coefficient matrix of the tree's quadratic objective."""
        T = np.diag(self.curvature)
        for u in range(1, self.size):
            T[u, self.parent[u]] = T[self.parent[u], u] = self.coupling[u]
        return T


@dataclass(frozen=True)
class TreeElimination:
    """
    Root min-marginal ½·A·x² − B·x of the tree objective.

    ``A_root`` is Unbounded when a non-root pivot, divided by its node
    weight, is not positive. ``lambda_min`` is None when the tree is larger
    than the eigensolve limit.
    """

    A_root: Coefficient
    B_root: float
    lambda_min: Optional[float]
    pivots_positive: bool
    min_pivot: float


def build_computation_tree(
    system: ReweightedSystem, root: int, depth: int
) -> ComputationTree:
    if depth < 0:
        raise ParameterError(f"Depth must be nonnegative, got {depth}")
    if not 0 <= root < system.n:
        raise ParameterError(f"Root {root} is not a node of the model")
    gamma = system.model.gamma
    h = system.model.h
    params = system.params
    neighbors = system.index.neighbors

    origin = [root]
    parent = [-1]
    level = [0]
    weight = [1.0]
    coupling = [0.0]
    frontier = [0]
    for d in range(1, depth + 1):
        next_frontier = []
        for u in frontier:
            v = origin[u]
            if u == 0:
                children = [(k, params[(k, v)]) for k in neighbors[v]]
            else:
                p = origin[parent[u]]
                children = [(k, params[(k, v)]) for k in neighbors[v] if k != p]
                c_vp = params[(v, p)]
                if c_vp != 1.0:
                    children.append((p, c_vp - 1.0))
            for k, multiplier in children:
                w = weight[u] * multiplier
                origin.append(k)
                parent.append(u)
                level.append(d)
                weight.append(w)
                coupling.append(w * gamma[k, v] / params[(k, v)])
                next_frontier.append(len(origin) - 1)
        frontier = next_frontier

    origin_arr = np.array(origin, dtype=int)
    weight_arr = np.array(weight)
    tree = ComputationTree(
        root=root,
        depth=depth,
        origin=origin_arr,
        parent=np.array(parent, dtype=int),
        level=np.array(level, dtype=int),
        weight=weight_arr,
        coupling=np.array(coupling),
        curvature=weight_arr * np.diag(gamma)[origin_arr],
        linear=weight_arr * h[origin_arr],
    )
    logger.debug(
        f"Computation tree at root {root}, depth {depth}: {tree.size} nodes"
    )
    return tree


def exact_tree_elimination(
    tree: ComputationTree, eigen_limit: int = DEFAULT_EIGEN_LIMIT
) -> TreeElimination:
    """
    Eliminate leaves toward the root.

    Eliminating u from ½P_u·x_u² − L_u·x_u + κ_u·x_u·x_q adds −κ_u²/P_u to
    P_q and subtracts κ_u·L_u/P_u from L_q.
    """
    P = tree.curvature.tolist()
    L = tree.linear.tolist()
    parent = tree.parent.tolist()
    coupling = tree.coupling.tolist()
    weight = tree.weight.tolist()
    unbounded = False
    min_pivot = math.inf
    for u in range(tree.size - 1, 0, -1):
        normalized = P[u] / weight[u]
        min_pivot = min(min_pivot, normalized)
        if not normalized > 0.0:
            unbounded = True
        q = parent[u]
        kappa = coupling[u]
        P[q] -= kappa * kappa / P[u] if P[u] != 0.0 else math.inf
        L[q] -= kappa * L[u] / P[u] if P[u] != 0.0 else 0.0
    min_pivot = min(min_pivot, P[0])

    lambda_min = None
    if tree.size <= eigen_limit:
        lambda_min = float(
            scipy.linalg.eigvalsh(tree.matrix(), subset_by_index=[0, 0])[0]
        )
    return TreeElimination(
        A_root=UNBOUNDED if unbounded else P[0],
        B_root=math.nan if unbounded else L[0],
        lambda_min=lambda_min,
        pivots_positive=not unbounded and P[0] > 0.0,
        min_pivot=min_pivot,
    )
