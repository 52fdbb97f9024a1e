"""
Finite graph covers of a quadratic model.

Cover nodes are laid out fiber by fiber: copy ``a`` of base node ``v`` is
cover node ``v*k + a``. A permutation for edge (i, j), i < j, is stored as an
index array ``perm`` meaning copy ``a`` of i is joined to copy ``perm[a]`` of
j; block (j, i) is the transpose.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from .errors import CoverError, DimensionError, ModelError
from .message_engine import (
    MessageState,
    ReweightedSystem,
    sync_step,
    update_incoming,
)
from .model import Edge, EdgeParameters, QuadraticModel, edge_set, support_graph

logger = logging.getLogger(__name__)

IDENTITY = (0, 1)
SWAP = (1, 0)


@dataclass(frozen=True)
class CoverSpec:
    k: int
    perm: Mapping[Edge, Tuple[int, ...]]


@dataclass(frozen=True)
class CoveredModel:
    """A k-cover of ``base`` together with its covering map ``pi``."""

    base: QuadraticModel
    model: QuadraticModel
    pi: np.ndarray
    k: int

    def graph(self) -> nx.Graph:
        return support_graph(self.model.gamma)

    def copy_of(self, u: int) -> int:
        return u % self.k


def build_cover(model: QuadraticModel, spec: CoverSpec) -> CoveredModel:
    """
    Assemble Γ̃ from Γ_ij·P_ij blocks.

    Args:
        model: Base model
        spec: Fold count and one permutation per undirected edge

    Returns:
        Cover with h̃_u = h_{π(u)}
    """
    k = int(spec.k)
    if k < 1:
        raise CoverError(f"Fold count must be at least 1, got {k}")
    n = model.n
    perms: Dict[Edge, np.ndarray] = {}
    for (i, j), perm in spec.perm.items():
        perm = np.asarray(perm, dtype=int)
        if perm.shape != (k,) or sorted(perm.tolist()) != list(range(k)):
            raise CoverError(f"Block ({i}, {j}) is not a {k}-permutation: {perm}")
        if i > j:
            perm = np.argsort(perm)
            i, j = j, i
        perms[(i, j)] = perm

    edges = edge_set(model).undirected()
    missing = [e for e in edges if e not in perms]
    if missing:
        raise CoverError(f"No permutation given for edges {missing}")

    gamma = np.zeros((n * k, n * k))
    copies = np.arange(k)
    for v in range(n):
        gamma[v * k + copies, v * k + copies] = model.gamma[v, v]
    for i, j in edges:
        perm = perms[(i, j)]
        rows = i * k + copies
        cols = j * k + perm
        gamma[rows, cols] = model.gamma[i, j]
        gamma[cols, rows] = model.gamma[j, i]
    pi = np.repeat(np.arange(n), k)
    cover = CoveredModel(model, QuadraticModel(gamma, model.h[pi]), pi, k)
    logger.debug(f"Built {k}-cover with {n * k} nodes")
    return cover


def _two_cover(model: QuadraticModel, choose) -> CoveredModel:
    spec = CoverSpec(2, {e: choose(e) for e in edge_set(model).undirected()})
    return build_cover(model, spec)


def kronecker_double_cover(model: QuadraticModel) -> CoveredModel:
    """Every edge crosses copies: (i, j) becomes (i₀, j₁) and (i₁, j₀)."""
    return _two_cover(model, lambda e: SWAP)


def adversarial_two_cover(model: QuadraticModel) -> CoveredModel:
    """Identity on negative couplings, swap on positive ones."""
    if not np.all(model.diagonal > 0.0):
        raise ModelError("Adversarial cover needs a positive diagonal")
    gamma = model.gamma
    return _two_cover(model, lambda e: IDENTITY if gamma[e] < 0.0 else SWAP)


def random_two_cover(model: QuadraticModel, seed: Optional[int] = None) -> CoveredModel:
    """Identity or swap per edge with probability ½ each, seeded."""
    rng = np.random.default_rng(seed)
    return _two_cover(model, lambda e: SWAP if rng.random() < 0.5 else IDENTITY)


def lift_vector(x: np.ndarray, cover: CoveredModel) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (cover.base.n,):
        raise DimensionError(
            f"Vector has shape {x.shape}, base model has {cover.base.n} nodes"
        )
    return x[cover.pi]


def project_vector(y: np.ndarray, cover: CoveredModel) -> np.ndarray:
    """Fiber averages."""
    y = np.asarray(y, dtype=float)
    if y.shape != (cover.model.n,):
        raise DimensionError(
            f"Vector has shape {y.shape}, cover has {cover.model.n} nodes"
        )
    return np.bincount(cover.pi, weights=y, minlength=cover.base.n) / cover.k


def validate_cover(cover: CoveredModel) -> Tuple[bool, List[str]]:
    """Check fibers, neighborhood bijections, h replication and symmetry."""
    violations: List[str] = []
    base, model, pi, k = cover.base, cover.model, cover.pi, cover.k
    if pi.shape != (model.n,):
        return False, [f"covering map has shape {pi.shape}, cover has {model.n} nodes"]
    counts = np.bincount(pi, minlength=base.n)
    if counts.shape[0] != base.n or np.any(counts != k):
        violations.append(f"fiber sizes {counts.tolist()} differ from k={k}")
    if not np.array_equal(model.h, base.h[pi]):
        violations.append("h is not replicated along fibers")
    gamma = model.gamma
    if not np.array_equal(gamma, gamma.T):
        violations.append("cover matrix is asymmetric")
    if not np.array_equal(np.diag(gamma), base.diagonal[pi]):
        violations.append("diagonal is not replicated along fibers")

    base_graph = support_graph(base.gamma)
    for u in range(model.n):
        v = int(pi[u])
        images = [int(pi[w]) for w in np.flatnonzero(gamma[u]) if w != u]
        if sorted(images) != sorted(base_graph[v]) or len(set(images)) != len(images):
            violations.append(f"neighborhood not bijective at {u}")
            continue
        for w in np.flatnonzero(gamma[u]):
            if w != u and gamma[u, w] != base.gamma[v, pi[w]]:
                violations.append(f"coupling ({u}, {w}) differs from base")
                break
    return not violations, violations


def cover_from_matrix(
    base: QuadraticModel, gamma: np.ndarray, k: int
) -> CoveredModel:
    """Wrap a fiber-ordered matrix as a candidate cover of ``base``."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (base.n * k, base.n * k):
        raise DimensionError(
            f"Matrix shape {gamma.shape} does not fit a {k}-cover of {base.n} nodes"
        )
    pi = np.repeat(np.arange(base.n), k)
    return CoveredModel(base, QuadraticModel(gamma, base.h[pi]), pi, k)


def lift_parameters(cover: CoveredModel, params: EdgeParameters) -> EdgeParameters:
    """c̃_uw = c_{π(u)π(w)} on every cover edge."""
    pi = cover.pi
    return EdgeParameters(
        {
            (u, w): params[(int(pi[u]), int(pi[w]))]
            for u, w in edge_set(cover.model).undirected()
        }
    )


def cover_system(cover: CoveredModel, params: EdgeParameters) -> ReweightedSystem:
    return ReweightedSystem.build(cover.model, lift_parameters(cover, params))


def edge_map(
    cover: CoveredModel, base: ReweightedSystem, lifted: ReweightedSystem
) -> np.ndarray:
    """Base directed-edge id of every cover directed edge."""
    pi = cover.pi
    return np.array(
        [base.index.index(int(pi[u]), int(pi[w])) for u, w in lifted.index.edges],
        dtype=int,
    )


def lift_state(
    state: MessageState,
    cover: CoveredModel,
    base: ReweightedSystem,
    lifted: ReweightedSystem,
) -> MessageState:
    """Copy each base message onto every cover edge above it."""
    mapping = edge_map(cover, base, lifted)
    return MessageState(
        state.a[mapping], state.b[mapping], state.unbounded[mapping], state.t
    )


def bipartite_half_step(
    state: MessageState,
    cover: CoveredModel,
    lifted: ReweightedSystem,
    copy: int,
) -> MessageState:
    """
    On a Kronecker double cover, update every message into the nodes of
    ``copy``, i.e. every message sent from the other copy.
    """
    nodes = [u for u in range(cover.model.n) if cover.copy_of(u) == copy]
    return update_incoming(state, lifted, nodes)


def _messages_match(
    cover_state: MessageState,
    base_state: MessageState,
    selection: np.ndarray,
    mapping: np.ndarray,
) -> float:
    cover_unb = cover_state.unbounded[selection]
    base_unb = base_state.unbounded[mapping[selection]]
    if not np.array_equal(cover_unb, base_unb):
        return np.inf
    keep = ~cover_unb
    gaps = [0.0]
    for name in ("a", "b"):
        lhs = getattr(cover_state, name)[selection][keep]
        rhs = getattr(base_state, name)[mapping[selection]][keep]
        if lhs.size:
            gaps.append(float(np.max(np.abs(lhs - rhs))))
    return max(gaps)


def kronecker_bridge_check(
    model: QuadraticModel,
    params: EdgeParameters,
    rounds: int = 20,
    tol: float = 1e-12,
) -> Tuple[bool, str]:
    """
    Run the bipartite schedule on the Kronecker double cover and compare,
    after the first half of each round t, messages sent from copy 0 with
    base synchronous m^{2t−1} and messages sent from copy 1 with m^{2t−2}.
    """
    base = ReweightedSystem.build(model, params)
    cover = kronecker_double_cover(model)
    lifted = cover_system(cover, params)
    mapping = edge_map(cover, base, lifted)
    from_copy0 = np.array(
        [cover.copy_of(u) == 0 for u, _ in lifted.index.edges], dtype=bool
    )

    history = [MessageState.zeros(len(base))]
    for _ in range(2 * rounds):
        history.append(sync_step(history[-1], base))

    state = MessageState.zeros(len(lifted))
    for t in range(1, rounds + 1):
        state = bipartite_half_step(state, cover, lifted, copy=1)
        gap = max(
            _messages_match(state, history[2 * t - 1], from_copy0, mapping),
            _messages_match(state, history[2 * t - 2], ~from_copy0, mapping),
        )
        if gap > tol:
            return False, f"round {t}: cover and base messages differ by {gap:.3e}"
        state = bipartite_half_step(state, cover, lifted, copy=0)
    return True, f"{rounds} rounds match"
