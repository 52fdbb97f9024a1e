"""Matrix instances used throughout the experiments and tests."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import QuadraticModel


def chord_model(p: float, h: Optional[np.ndarray] = None) -> QuadraticModel:
    """
    The four-node single-chord family, positive definite for |p| < 0.5.

    Standard min-sum converges on it for 0 <= p < 0.39865.
    """
    gamma = np.array(
        [
            [1.0, p, -p, -p],
            [p, 1.0, -p, 0.0],
            [-p, -p, 1.0, -p],
            [-p, 0.0, -p, 1.0],
        ]
    )
    return QuadraticModel(gamma, np.ones(4) if h is None else h)


def random_pd_model() -> QuadraticModel:
    """A randomly generated 4x4 positive definite instance with h = 1."""
    gamma = np.array(
        [
            [45.0, 21.0, 23.0, -42.0],
            [21.0, 83.0, 8.0, -32.0],
            [23.0, 8.0, 14.0, -29.0],
            [-42.0, -32.0, -29.0, 134.0],
        ]
    )
    return QuadraticModel(gamma, np.ones(4))


def variances_only_model() -> QuadraticModel:
    """Min-sum variances converge on this matrix but its means do not."""
    q = 0.39866
    gamma = np.array(
        [
            [1.0, q, -q, -q],
            [q, 1.0, -q, 0.0],
            [-q, -q, 1.0, -q],
            [-q, 0.0, -q, 1.0],
        ]
    )
    return QuadraticModel(gamma, np.ones(4))


def triangle_model(weight: float = 0.6) -> QuadraticModel:
    """Unit diagonal triangle; with 0.6 it is PD but not walk-summable."""
    gamma = np.full((3, 3), weight)
    np.fill_diagonal(gamma, 1.0)
    return QuadraticModel(gamma, np.ones(3))


def triangle_cover_matrix() -> np.ndarray:
    """A 2-cover of ``triangle_model()`` with a negative eigenvalue."""
    g = 0.6
    return np.array(
        [
            [1, 0, g, 0, 0, g],
            [0, 1, 0, g, g, 0],
            [g, 0, 1, 0, g, 0],
            [0, g, 0, 1, 0, g],
            [0, g, g, 0, 1, 0],
            [g, 0, 0, g, 0, 1],
        ],
        dtype=float,
    )


def two_node_model(coupling: float = 0.5) -> QuadraticModel:
    return QuadraticModel(
        np.array([[1.0, coupling], [coupling, 1.0]]), np.ones(2)
    )


def random_model(
    rng: np.random.Generator,
    n: int = 5,
    density: float = 0.7,
    scale: float = 0.4,
    positive_definite: bool = False,
) -> QuadraticModel:
    """
    Random symmetric model with unit-scale positive diagonal.

    Off-diagonal entries are uniform in [-scale, scale] and present with
    probability ``density``. With ``positive_definite`` the diagonal is
    shifted so that the smallest eigenvalue is at least 0.1.
    """
    upper = rng.uniform(-scale, scale, size=(n, n))
    mask = rng.random((n, n)) < density
    upper = np.triu(upper * mask, k=1)
    gamma = upper + upper.T
    np.fill_diagonal(gamma, rng.uniform(0.8, 1.5, size=n))
    if positive_definite:
        lam_min = float(np.linalg.eigvalsh(gamma)[0])
        if lam_min < 0.1:
            gamma = gamma + (0.1 - lam_min) * np.eye(n)
    h = rng.uniform(-1.0, 1.0, size=n)
    return QuadraticModel(gamma, h)
