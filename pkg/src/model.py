from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx
import numpy as np
import scipy.io
import scipy.sparse

from .errors import DimensionError, ParameterError, ParseError

logger = logging.getLogger(__name__)

FORMATS = ("dense-text", "matrix-market")

Edge = Tuple[int, int]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class QuadraticModel:
    """
    The objective ½xᵀΓx − hᵀx.

    ``gamma`` is stored dense; the factor graph is the off-diagonal nonzero
    pattern. The constructor does not symmetrize (use ``from_raw`` or
    ``symmetrize``) so that raw inputs can still be validated.
    """

    gamma: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        gamma = np.asarray(self.gamma, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
            raise DimensionError(
                f"Coefficient matrix must be square, got shape {gamma.shape}"
            )
        if gamma.shape[0] < 1:
            raise DimensionError("Model dimension must be at least 1")
        if h.ndim != 1 or h.shape[0] != gamma.shape[0]:
            raise DimensionError(
                f"Linear term has shape {h.shape}, expected ({gamma.shape[0]},)"
            )
        object.__setattr__(self, "gamma", _frozen(gamma))
        object.__setattr__(self, "h", _frozen(h))

    @classmethod
    def from_raw(
        cls, raw: np.ndarray, h: Optional[np.ndarray] = None
    ) -> "QuadraticModel":
        """Symmetrize ``raw`` and default ``h`` to the all-ones vector."""
        gamma = symmetrize(raw)
        if h is None:
            h = np.ones(gamma.shape[0])
        return cls(gamma, h)

    @property
    def n(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.gamma)

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.gamma @ x - self.h @ x)


@dataclass(frozen=True)
class DirectedEdgeIndex:
    """
    Enumeration of the 2|E| directed edges i→j.

    Edges are ordered by (source, target); ``incoming[i]`` lists the ids of
    edges k→i sorted by k, so sweeps visit neighbors in index order.
    """

    n: int
    edges: Tuple[Edge, ...]
    reverse: Tuple[int, ...]
    neighbors: Tuple[Tuple[int, ...], ...]
    incoming: Tuple[Tuple[int, ...], ...]
    lookup: Dict[Edge, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.edges)

    def index(self, i: int, j: int) -> int:
        try:
            return self.lookup[(i, j)]
        except KeyError:
            raise KeyError(f"({i}, {j}) is not an edge") from None

    def undirected(self) -> List[Edge]:
        return [(i, j) for i, j in self.edges if i < j]


@dataclass(frozen=True)
class EdgeParameters:
    """Reweighting constants c_ij, stored once per undirected edge (i < j)."""

    c: Mapping[Edge, float]

    def __getitem__(self, edge: Edge) -> float:
        i, j = edge
        return self.c[(i, j) if i < j else (j, i)]

    def directed(self, index: DirectedEdgeIndex) -> np.ndarray:
        """c aligned with ``index.edges``."""
        return np.array([self[e] for e in index.edges], dtype=float)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return ½(A + Aᵀ); the quadratic form xᵀAx is unchanged."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"Cannot symmetrize non-square shape {a.shape}")
    # (a + a.T) is exactly symmetric because float addition commutes
    return 0.5 * (a + a.T)


def edge_set(model: QuadraticModel) -> DirectedEdgeIndex:
    gamma = model.gamma
    n = model.n
    edges: List[Edge] = []
    for i in range(n):
        for j in range(n):
            if i != j and gamma[i, j] != 0.0:
                edges.append((i, j))
    lookup = {e: k for k, e in enumerate(edges)}
    reverse = tuple(lookup[(j, i)] for i, j in edges)
    neighbors = tuple(
        tuple(j for (s, j) in edges if s == i) for i in range(n)
    )
    incoming = tuple(
        tuple(lookup[(k, i)] for k in neighbors[i]) for i in range(n)
    )
    return DirectedEdgeIndex(
        n=n,
        edges=tuple(edges),
        reverse=reverse,
        neighbors=neighbors,
        incoming=incoming,
        lookup=lookup,
    )


def support_graph(matrix: np.ndarray) -> nx.Graph:
    """Undirected graph of the off-diagonal nonzeros, weighted by value."""
    matrix = np.asarray(matrix)
    graph = nx.Graph()
    graph.add_nodes_from(range(matrix.shape[0]))
    rows, cols = np.nonzero(matrix)
    for i, j in zip(rows.tolist(), cols.tolist()):
        if i < j:
            graph.add_edge(i, j, weight=float(matrix[i, j]))
    return graph


def factor_graph(model: QuadraticModel) -> nx.Graph:
    return support_graph(model.gamma)


def make_parameters(
    model: QuadraticModel,
    spec: Union[float, Mapping[Edge, float]],
    index: Optional[DirectedEdgeIndex] = None,
) -> EdgeParameters:
    """
    Build c_ij for every edge of ``model``.

    Args:
        model: The model whose edges need parameters
        spec: A number (uniform c) or a mapping keyed by edge in either
            orientation
        index: Optional precomputed edge index

    Returns:
        Symmetric parameter assignment
    """
    index = index or edge_set(model)
    undirected = index.undirected()
    if isinstance(spec, Mapping):
        c: Dict[Edge, float] = {}
        for (i, j), value in spec.items():
            key = (i, j) if i < j else (j, i)
            value = float(value)
            if key in c and c[key] != value:
                raise ParameterError(
                    f"Conflicting values for edge {key}: {c[key]} and {value}"
                )
            c[key] = value
        missing = [e for e in undirected if e not in c]
        if missing:
            raise ParameterError(f"No parameter given for edges {missing}")
        extra = [e for e in c if e not in set(undirected)]
        if extra:
            logger.warning(f"Ignoring parameters for non-edges {extra}")
        c = {e: c[e] for e in undirected}
    else:
        c = {e: float(spec) for e in undirected}
    zeros = [e for e, value in c.items() if value == 0.0]
    if zeros:
        raise ParameterError(f"Reweighting parameter is zero on edges {zeros}")
    return EdgeParameters(c)


def validate_model(model: QuadraticModel) -> List[str]:
    """Report violated invariants; an empty list means the model is usable."""
    violations: List[str] = []
    gamma = model.gamma
    if not np.array_equal(gamma, gamma.T):
        violations.append("asymmetric")
    for i, value in enumerate(np.diag(gamma)):
        if not value > 0.0:
            violations.append(f"nonpositive diagonal at {i}")
    if not np.all(np.isfinite(gamma)) or not np.all(np.isfinite(model.h)):
        violations.append("non-finite entries")
    return violations


def _infer_format(path: Path) -> str:
    return "matrix-market" if path.suffix.lower() == ".mtx" else "dense-text"


def _read_dense(path: Path) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=float, ndmin=2)
    except ValueError as e:
        raise ParseError(f"Cannot parse dense matrix {path}: {e}") from e


def _read_matrix_market(path: Path) -> np.ndarray:
    try:
        rows, cols, _, fmt, field_, symmetry = scipy.io.mminfo(str(path))
        if fmt != "coordinate":
            raise ParseError(
                f"{path}: expected coordinate Matrix Market, got {fmt}"
            )
        if field_ not in ("real", "integer"):
            raise ParseError(f"{path}: unsupported field '{field_}'")
        if symmetry not in ("symmetric", "general"):
            raise ParseError(f"{path}: unsupported symmetry '{symmetry}'")
        if symmetry == "general":
            logger.warning(
                f"{path} is a general Matrix Market file; it will be symmetrized"
            )
        coo = scipy.sparse.coo_matrix(scipy.io.mmread(str(path)))
    except (ValueError, IndexError) as e:
        raise ParseError(f"Cannot parse Matrix Market file {path}: {e}") from e
    if rows != cols:
        raise DimensionError(f"{path}: matrix is {rows}x{cols}, not square")
    explicit_zero = (coo.row == coo.col) & (coo.data == 0.0)
    if np.any(explicit_zero):
        where = int(coo.row[explicit_zero][0])
        raise ParseError(f"{path}: explicit zero on the diagonal at {where}")
    return coo.toarray()


def _read_vector(path: Path) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=float, ndmin=1)
    except ValueError as e:
        raise ParseError(f"Cannot parse vector file {path}: {e}") from e


def load_vector(path: Union[str, Path]) -> np.ndarray:
    """One value per line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Vector file not found: {path}")
    return _read_vector(path)


def load_model(
    path: Union[str, Path],
    fmt: Optional[str] = None,
    h_path: Optional[Union[str, Path]] = None,
) -> QuadraticModel:
    """
    Load a model from disk.

    Args:
        path: Matrix file
        fmt: 'dense-text' or 'matrix-market'; inferred from the suffix
            ('.mtx' means Matrix Market) when omitted
        h_path: Optional vector file, one value per line; all ones if absent

    Returns:
        Model with a symmetrized coefficient matrix
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Matrix file not found: {path}")
    fmt = fmt or _infer_format(path)
    if fmt not in FORMATS:
        raise ParseError(f"Unknown matrix format '{fmt}'; use one of {FORMATS}")

    raw = _read_dense(path) if fmt == "dense-text" else _read_matrix_market(path)
    if raw.shape[0] != raw.shape[1]:
        raise DimensionError(f"{path}: matrix is {raw.shape}, not square")

    h = None
    if h_path is not None:
        h_path = Path(h_path)
        if not h_path.exists():
            raise FileNotFoundError(f"Vector file not found: {h_path}")
        h = _read_vector(h_path)
        if h.shape[0] != raw.shape[0]:
            raise DimensionError(
                f"{h_path} has {h.shape[0]} entries, matrix has {raw.shape[0]}"
            )
    model = QuadraticModel.from_raw(raw, h)
    logger.info(f"Loaded {model.n}x{model.n} model from {path} ({fmt})")
    return model


def save_model(
    model: QuadraticModel,
    path: Union[str, Path],
    fmt: Optional[str] = None,
    h_path: Optional[Union[str, Path]] = None,
) -> None:
    """Write ``model`` in one of the formats ``load_model`` reads."""
    path = Path(path)
    fmt = fmt or _infer_format(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "dense-text":
        np.savetxt(path, model.gamma, fmt="%.17g")
    elif fmt == "matrix-market":
        scipy.io.mmwrite(
            str(path),
            scipy.sparse.coo_matrix(model.gamma),
            symmetry="symmetric",
            precision=17,
        )
    else:
        raise ParseError(f"Unknown matrix format '{fmt}'; use one of {FORMATS}")
    if h_path is not None:
        np.savetxt(h_path, model.h, fmt="%.17g")
