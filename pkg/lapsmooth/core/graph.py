"""
Kernel-weighted radius neighborhood graphs and their Laplacians.

The weight matrix is W_ij = K(||X_i - X_j|| / r) for i != j, zero on the
diagonal, stored once as an upper triangle and mirrored so that it is
exactly symmetric. The Laplacian L = D - W is never formed densely except
in ``dense_laplacian``, which exists for oracles and small examples.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, List, Mapping, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, Field
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from ..config import GraphOptions
from ..exceptions import InputError
from ..utils.io import write_table_csv
from ..utils.validators import validate_points, validate_positive, validate_vector
from .kernels import KernelSpec

logger = structlog.get_logger(__name__)

# kd-tree candidates are gathered slightly beyond r, then filtered with the
# same distance formula the exhaustive path uses
_QUERY_SLACK = 1e-9


@dataclass(frozen=True)
class PointCloud:
    """
    Design points X_1..X_n as an (n, d) matrix.

    Attributes:
        points: Coordinates, one row per point
        intrinsic_dim: Dimension m of the supporting manifold, if any
        acceptance_rate: Rejection-sampler acceptance rate, when sampled that way
    """

    points: np.ndarray
    intrinsic_dim: Optional[int] = None
    acceptance_rate: Optional[float] = None

    def __post_init__(self):
        array = validate_points(self.points)
        array.setflags(write=False)
        object.__setattr__(self, "points", array)
        if self.intrinsic_dim is not None:
            m = int(self.intrinsic_dim)
            if not 1 <= m <= array.shape[1]:
                raise InputError(
                    f"intrinsic_dim must lie in [1, {array.shape[1]}], got {self.intrinsic_dim}"
                )
            object.__setattr__(self, "intrinsic_dim", m)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def ambient_dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def dim_used(self) -> int:
        """Dimension that drives rates and tuning: m when known, else d."""
        return self.intrinsic_dim if self.intrinsic_dim is not None else self.ambient_dim


def as_point_cloud(points: Union[PointCloud, np.ndarray]) -> PointCloud:
    """Wrap a raw array as a PointCloud; PointCloud instances pass through."""
    if isinstance(points, PointCloud):
        return points
    return PointCloud(points=np.asarray(points, dtype=np.float64))


@dataclass(frozen=True)
class NeighborhoodGraph:
    """
    Sparse weighted graph over the design points.

    Attributes:
        weights: Symmetric CSR weight matrix with zero diagonal
        degrees: Row sums of ``weights``
        radius: Connection radius r
        kernel: Kernel the weights were computed with (None for hand-built graphs)
    """

    weights: sparse.csr_matrix
    degrees: np.ndarray
    radius: float
    kernel: Optional[KernelSpec] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @cached_property
    def upper(self) -> sparse.coo_matrix:
        """Strict upper triangle of W: one entry per edge."""
        return sparse.triu(self.weights, k=1, format="coo")

    @property
    def edge_count(self) -> int:
        return int(self.upper.nnz)

    @cached_property
    def components(self) -> Tuple[int, np.ndarray]:
        """(number of connected components, component label per vertex)."""
        count, labels = csgraph.connected_components(self.weights, directed=False)
        return int(count), labels

    @property
    def connected(self) -> bool:
        return self.components[0] == 1

    @classmethod
    def from_weights(
        cls,
        weights: Any,
        radius: float = 1.0,
        kernel: Optional[KernelSpec] = None,
    ) -> "NeighborhoodGraph":
        """
        Build a graph from an explicit symmetric weight matrix.

        Args:
            weights: Dense or sparse (n, n) nonnegative symmetric matrix
            radius: Radius to record on the graph
            kernel: Optional kernel to record on the graph

        Raises:
            InputError: if the matrix is not square, symmetric and nonnegative
        """
        matrix = sparse.csr_matrix(weights, dtype=np.float64)
        if matrix.shape[0] != matrix.shape[1]:
            raise InputError(f"Weight matrix must be square, got shape {matrix.shape}")
        if matrix.shape[0] < 2:
            raise InputError("A graph needs at least two vertices")
        if matrix.nnz and (np.any(matrix.data < 0) or not np.all(np.isfinite(matrix.data))):
            raise InputError("Weights must be finite and nonnegative")
        if (matrix != matrix.T).nnz:
            raise InputError("Weight matrix must be exactly symmetric")

        matrix = matrix.tolil()
        matrix.setdiag(0.0)
        matrix = matrix.tocsr()
        matrix.eliminate_zeros()
        matrix.sort_indices()
        return cls(
            weights=matrix,
            degrees=np.asarray(matrix.sum(axis=1)).ravel(),
            radius=validate_positive(radius, "radius"),
            kernel=kernel,
        )


class GraphDiagnostics(BaseModel):
    """Summary statistics of a built graph."""

    n: int
    edge_count: int
    max_degree: float
    connected: bool
    components: int
    degree_bound: Optional[float] = None
    degree_bound_holds: Optional[bool] = None
    seminorm_samples: List[Tuple[str, float]] = Field(default_factory=list)


def _candidate_pairs(points: np.ndarray, r: float, method: str, leaf_size: int) -> np.ndarray:
    n = points.shape[0]
    if method == "brute":
        rows, cols = np.triu_indices(n, k=1)
        return np.column_stack([rows, cols])
    tree = cKDTree(points, leafsize=leaf_size)
    pairs = tree.query_pairs(r * (1.0 + _QUERY_SLACK), output_type="ndarray")
    return pairs.reshape(-1, 2).astype(np.int64)


def build_graph(
    points: Union[PointCloud, np.ndarray],
    r: float,
    kernel: KernelSpec,
    method: str = "auto",
    leaf_size: int = 16,
    brute_force_below: int = 256,
    options: Optional[GraphOptions] = None,
) -> NeighborhoodGraph:
    """
    Build the radius neighborhood graph with kernel weights.

    Args:
        points: Design points
        r: Connection radius (> 0)
        kernel: Kernel; its dimension must be the ambient or intrinsic dimension
        method: "kdtree", "brute" or "auto" (brute below ``brute_force_below`` points)
        leaf_size: kd-tree leaf size
        brute_force_below: Point count under which "auto" picks the exhaustive search
        options: Configured graph settings; when given they replace leaf_size and brute_force_below

    Returns:
        The neighborhood graph. Isolated vertices are allowed; check
        ``graph_diagnostics(g).connected``.
    """
    cloud = as_point_cloud(points)
    r = validate_positive(r, "r")
    if options is not None:
        leaf_size, brute_force_below = options.leaf_size, options.brute_force_below
    if kernel.dimension not in (cloud.ambient_dim, cloud.dim_used):
        raise InputError(
            f"Kernel dimension {kernel.dimension} does not match point dimension {cloud.ambient_dim}"
        )
    if method == "auto":
        method = "brute" if cloud.n < brute_force_below else "kdtree"
    if method not in ("kdtree", "brute"):
        raise InputError(f"Unknown graph build method {method!r}")

    X = cloud.points
    pairs = _candidate_pairs(X, r, method, leaf_size)
    if pairs.shape[0]:
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
        dist = np.linalg.norm(X[pairs[:, 0]] - X[pairs[:, 1]], axis=1)
        keep = dist <= r
        pairs, dist = pairs[keep], dist[keep]
        values = kernel(dist / r)
    else:
        values = np.empty(0)

    upper = sparse.coo_matrix(
        (values, (pairs[:, 0], pairs[:, 1])), shape=(cloud.n, cloud.n)
    ).tocsr()
    weights = (upper + upper.T).tocsr()
    weights.sort_indices()
    graph = NeighborhoodGraph(
        weights=weights,
        degrees=np.asarray(weights.sum(axis=1)).ravel(),
        radius=r,
        kernel=kernel,
    )
    logger.debug(
        f"Built neighborhood graph with {graph.edge_count} edges",
        n=cloud.n,
        radius=r,
        method=method,
        edges=graph.edge_count,
    )
    return graph


def laplacian_quadratic_form(g: NeighborhoodGraph, f) -> float:
    """
    fᵀLf = ½ Σ_ij W_ij (f_i - f_j)², summed once per edge.

    The edge terms are added with exact rounding so the result does not
    depend on vertex order.
    """
    f = validate_vector(f, length=g.n, name="f")
    upper = g.upper
    terms = upper.data * (f[upper.row] - f[upper.col]) ** 2
    return math.fsum(terms.tolist())


def apply_laplacian(g: NeighborhoodGraph, f) -> np.ndarray:
    """Compute (D - W) f without forming L."""
    f = validate_vector(f, length=g.n, name="f")
    return g.degrees * f - g.weights @ f


def dense_laplacian(g: NeighborhoodGraph) -> np.ndarray:
    """Dense L = D - W."""
    return np.diag(g.degrees) - g.weights.toarray()


FunctionSample = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def graph_diagnostics(
    g: NeighborhoodGraph,
    p_max: Optional[float] = None,
    functions: Optional[Mapping[str, FunctionSample]] = None,
    points: Optional[Union[PointCloud, np.ndarray]] = None,
) -> GraphDiagnostics:
    """
    Report degree, connectivity and edge statistics of a graph.

    Args:
        g: Graph to inspect
        p_max: Density upper bound; enables the check max degree <= 2 p_max n r^d
        functions: Named vectors (or callables on ``points``) whose fᵀLf is sampled
        points: Design points, needed when ``functions`` holds callables

    Returns:
        GraphDiagnostics
    """
    count, _ = g.components
    max_degree = float(g.degrees.max()) if g.n else 0.0

    degree_bound = None
    holds = None
    if p_max is not None:
        dim = g.kernel.dimension if g.kernel is not None else 1
        degree_bound = 2.0 * float(p_max) * g.n * g.radius ** dim
        holds = max_degree <= degree_bound

    samples: List[Tuple[str, float]] = []
    for name, values in (functions or {}).items():
        if callable(values):
            if points is None:
                raise InputError(f"points are required to evaluate function {name!r}")
            values = values(as_point_cloud(points).points)
        samples.append((name, laplacian_quadratic_form(g, values)))

    return GraphDiagnostics(
        n=g.n,
        edge_count=g.edge_count,
        max_degree=max_degree,
        connected=count == 1,
        components=count,
        degree_bound=degree_bound,
        degree_bound_holds=holds,
        seminorm_samples=samples,
    )


def export_edge_list(g: NeighborhoodGraph, file_path: Union[str, Path]) -> Path:
    """Write the edge list as CSV ``i,j,weight`` with i < j."""
    upper = g.upper
    order = np.lexsort((upper.col, upper.row))
    rows = zip(upper.row[order].tolist(), upper.col[order].tolist(), upper.data[order].tolist())
    return write_table_csv(str(file_path), ["i", "j", "weight"], rows)
