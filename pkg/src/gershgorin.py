"""
Disc-theorem certificate that every computation tree built with a uniform
reweighting c ≡ r is positive definite.

With node scaling (s/r)^depth the tree's rows fall into three families,
checked for every node i and neighbor p:

    leaf:      Γ_ii > |Γ_ip|/s
    internal:  Γ_ii > |Γ_ip|/s + (s/r)·[((r−1)/r)·|Γ_ip| + Σ_{k∈∂i\\p} |Γ_ki|]
    root:      Γ_ii > (s/r)·Σ_{k∈∂i} |Γ_ki|
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ModelError, ParameterError
from .model import QuadraticModel, edge_set

logger = logging.getLogger(__name__)

DEFAULT_R_MAX = 1024.0


@dataclass(frozen=True)
class GershgorinCertificate:
    r: float
    s: float
    slack: float
    leaf_margin: float
    internal_margin: float
    root_margin: float


def _margins(model: QuadraticModel, r: float, s: float) -> Tuple[float, float, float]:
    gamma = np.abs(model.gamma)
    neighbors = edge_set(model).neighbors
    leaf = internal = root = math.inf
    for i in range(model.n):
        diag = model.gamma[i, i]
        total = float(sum(gamma[k, i] for k in neighbors[i]))
        root = min(root, diag - (s / r) * total)
        for p in neighbors[i]:
            coupling = gamma[i, p]
            leaf = min(leaf, diag - coupling / s)
            rest = total - gamma[p, i]
            internal = min(
                internal,
                diag - coupling / s - (s / r) * (((r - 1.0) / r) * coupling + rest),
            )
    return leaf, internal, root


def gershgorin_certificate(
    model: QuadraticModel, r: float, s: float
) -> Optional[GershgorinCertificate]:
    """Certificate with slack = smallest margin, or None if any family fails."""
    if not r >= 1.0:
        raise ParameterError(f"r must be at least 1, got {r}")
    if not s > 0.0:
        raise ParameterError(f"s must be positive, got {s}")
    if not np.all(model.diagonal > 0.0):
        raise ModelError("Certificate needs a positive diagonal")
    leaf, internal, root = _margins(model, float(r), float(s))
    slack = min(leaf, internal, root)
    if not slack > 0.0:
        logger.debug(
            f"No certificate at r={r:g}, s={s:g} "
            f"(margins {leaf:.4g}, {internal:.4g}, {root:.4g})"
        )
        return None
    return GershgorinCertificate(float(r), float(s), slack, leaf, internal, root)


def leaf_scale(model: QuadraticModel) -> float:
    """s strictly above max |Γ_ip|/Γ_ii; 1 when Γ is diagonally dominant edgewise."""
    ratios = np.abs(model.gamma) / model.diagonal[:, None]
    np.fill_diagonal(ratios, 0.0)
    largest = float(ratios.max()) if ratios.size else 0.0
    return 1.0 if largest < 1.0 else largest + 0.5


def find_uniform_r(
    model: QuadraticModel, r_max: float = DEFAULT_R_MAX
) -> Optional[Tuple[float, float, GershgorinCertificate]]:
    """
    Fix s from the leaf family, then double r from 1 until the internal and
    root families hold or r exceeds ``r_max``.
    """
    if not np.all(model.diagonal > 0.0):
        raise ModelError("Certificate search needs a positive diagonal")
    s = leaf_scale(model)
    r = 1.0
    while r <= r_max:
        certificate = gershgorin_certificate(model, r, s)
        if certificate is not None:
            logger.info(f"Certificate found at r={r:g}, s={s:g}")
            return r, s, certificate
        r *= 2.0
    logger.info(f"No certificate with r <= {r_max:g} (s={s:g})")
    return None
