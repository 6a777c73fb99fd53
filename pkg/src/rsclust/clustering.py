"""k-means and the spectral clustering pipeline variants.

Five variants share one skeleton -- build a normalized operator, embed the
nodes with its top-K eigenvectors, cluster the rows:

  SC      tau = 0, rows projected to the unit sphere
  RSC     tau > 0 (default: average degree), rows projected
  RSC_WP  like RSC but clusters the raw eigenvector rows
  T_RSC   like RSC but k-means only on rows with leverage above
          gamma/sqrt(N); remaining nodes join the nearest centroid
  SCP     standard SC on the rank-1-perturbed adjacency A + a 11^T,
          raw rows (no projection)

k-means is Lloyd's algorithm with k-means++ starts; the best inertia over
a fixed number of restarts wins, and everything is deterministic given the
seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sparse_graph import RegLaplacianOp, SparseGraph, reg_laplacian
from .spectral import EigenBasis, row_normalize, top_k_eigen

__all__ = [
    "METHODS",
    "KMeansResult",
    "PipelineConfig",
    "ClusterResult",
    "kmeans",
    "build_operator",
    "cluster_operator",
    "run_pipeline",
    "run_t_rsc",
]

METHODS = ("SC", "RSC", "RSC_WP", "T_RSC", "SCP")

_NORMALIZING = frozenset({"SC", "RSC", "T_RSC"})
_KMEANS_REL_TOL = 1e-6


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for one clustering run.

    tau: explicit value, or "avg" for tau = tau_scale * M/N (M = total
    degree).  SC and SCP force tau = 0; only SCP uses the perturbation,
    which defaults to a = M/N^2.
    """

    method: str
    k: int
    tau: float | str = "avg"
    tau_scale: float = 1.0
    gamma: float = 1.0
    perturb_a: float | None = None
    kmeans_restarts: int = 20
    kmeans_max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if isinstance(self.tau, str):
            if self.tau != "avg":
                raise ValueError('tau must be a number or "avg"')
        elif self.tau < 0.0:
            raise ValueError("tau must be >= 0")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")

    def resolve_tau(self, graph: SparseGraph) -> float:
        if self.method in ("SC", "SCP"):
            return 0.0
        if self.tau == "avg":
            return self.tau_scale * graph.total_degree / graph.n
        return float(self.tau)

    def resolve_perturb(self, graph: SparseGraph) -> float:
        if self.method != "SCP":
            return 0.0
        if self.perturb_a is None:
            return graph.total_degree / graph.n**2
        return float(self.perturb_a)


@dataclass(frozen=True)
class ClusterResult:
    """Labels plus everything needed to audit the run.

    x_star holds the rows that were actually clustered (row-normalized
    except for RSC_WP and SCP).  leverage is the squared row norm of the
    raw eigenvector matrix.  thresholded_set is the index set S for T_RSC,
    None otherwise.  zero_rows flags rows the normalization skipped.
    """

    labels: np.ndarray
    eigenbasis: EigenBasis
    x_star: np.ndarray
    leverage: np.ndarray
    centroids: np.ndarray
    inertia: float
    tau: float
    perturb_a: float
    thresholded_set: np.ndarray | None = None
    zero_rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def _sqdist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _kpp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centroids[c] = points[idx]
        np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1), out=d2)
    return centroids


def _reseed_empty(points, centroids, labels, d2, k):
    """Move each empty centroid onto the point farthest from its assigned
    centroid (deterministic: argmax/argmin take the first extremum)."""
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            return labels, d2
        assigned = d2[np.arange(points.shape[0]), labels].copy()
        for e in empties:
            far = int(assigned.argmax())
            centroids[e] = points[far]
            assigned[far] = -1.0
        d2 = _sqdist(points, centroids)
        labels = d2.argmin(axis=1)
    return labels, d2


def _lloyd(points: np.ndarray, k: int, max_iter: int,
           rng: np.random.Generator) -> KMeansResult:
    n = points.shape[0]
    centroids = _kpp_init(points, k, rng)
    prev_inertia = np.inf
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sqdist(points, centroids)
        labels = d2.argmin(axis=1)
        labels, d2 = _reseed_empty(points, centroids, labels, d2, k)
        inertia = float(d2[np.arange(n), labels].sum())
        assert inertia <= prev_inertia * (1.0 + 1e-9) + 1e-12, \
            "Lloyd inertia increased"
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = points[members].mean(axis=0)
        if prev_inertia - inertia <= _KMEANS_REL_TOL * max(inertia, 1e-300):
            break
        prev_inertia = inertia
    final = float(((points - centroids[labels]) ** 2).sum())
    return KMeansResult(labels, centroids, final)


def kmeans(points: np.ndarray, k: int, restarts: int = 20, max_iter: int = 100,
           seed: int = 0) -> KMeansResult:
    """Best-of-`restarts` k-means++ / Lloyd.  Deterministic given seed;
    ties in inertia keep the earliest restart."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < k:
        raise ValueError("need at least k points")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best: KMeansResult | None = None
    for j in range(restarts):
        result = _lloyd(points, k, max_iter, np.random.default_rng((seed, j)))
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def build_operator(graph: SparseGraph, config: PipelineConfig) -> RegLaplacianOp:
    return reg_laplacian(graph, config.resolve_tau(graph),
                         config.resolve_perturb(graph))


def cluster_operator(op, config: PipelineConfig, tau: float = 0.0,
                     perturb_a: float = 0.0,
                     basis: EigenBasis | None = None) -> ClusterResult:
    """Cluster any symmetric operator (RegLaplacianOp or dense ndarray).

    A precomputed eigenbasis may be passed in so that variants sharing one
    operator (RSC / RSC_WP / T_RSC) do not repeat the eigensolve.
    """
    if basis is None:
        basis = top_k_eigen(op, config.k, seed=config.seed)
    x = basis.vectors
    leverage = (x**2).sum(axis=1)
    x_star, zero_rows = row_normalize(x)

    if config.method == "T_RSC":
        return _assign_thresholded(basis, x_star, leverage, zero_rows,
                                   config, tau, perturb_a)

    points = x_star if config.method in _NORMALIZING else x
    km = kmeans(points, config.k, config.kmeans_restarts,
                config.kmeans_max_iter, config.seed)
    return ClusterResult(km.labels, basis, points, leverage, km.centroids,
                         km.inertia, tau, perturb_a, None, zero_rows)


def _assign_thresholded(basis, x_star, leverage, zero_rows, config,
                        tau, perturb_a) -> ClusterResult:
    n = x_star.shape[0]
    cutoff = config.gamma / np.sqrt(n)
    selected = np.flatnonzero(np.sqrt(leverage) >= cutoff)
    if selected.size < config.k:
        raise ValueError("threshold removed too many nodes")
    km = kmeans(x_star[selected], config.k, config.kmeans_restarts,
                config.kmeans_max_iter, config.seed)
    labels = np.empty(n, dtype=np.int64)
    labels[selected] = km.labels
    rest = np.setdiff1d(np.arange(n), selected, assume_unique=True)
    if rest.size:
        labels[rest] = _sqdist(x_star[rest], km.centroids).argmin(axis=1)
    return ClusterResult(labels, basis, x_star, leverage, km.centroids,
                         km.inertia, tau, perturb_a, selected, zero_rows)


def run_pipeline(graph: SparseGraph, config: PipelineConfig) -> ClusterResult:
    """Full pipeline on a graph: operator, top-K eigenvectors, (optional)
    row projection, k-means.  T_RSC configs route through the thresholded
    assignment."""
    if graph.n == 0:
        raise ValueError("graph is empty")
    if config.k > graph.n:
        raise ValueError("k exceeds node count")
    op = build_operator(graph, config)
    return cluster_operator(op, config, op.tau, op.perturb_a)


def run_t_rsc(graph: SparseGraph, config: PipelineConfig) -> ClusterResult:
    """Thresholded RSC: k-means on the high-leverage rows only, then
    nearest-centroid assignment for everything below the threshold."""
    if config.method != "T_RSC":
        raise ValueError("config.method must be T_RSC")
    return run_pipeline(graph, config)
