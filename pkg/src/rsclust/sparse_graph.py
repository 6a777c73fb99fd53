"""Undirected graphs in CSR form and implicit regularized-Laplacian operators.

The graph is the plain 0/1 adjacency matrix of an undirected, unweighted,
loop-free graph.  The normalized operator

    L_tau = D_tau^{-1/2} (A + a 11^T) D_tau^{-1/2},   D_tau = D + a*n*I + tau*I

is never materialized: matvec runs in O(|E| + n).  With a = 0 this is the
regularized graph Laplacian D_tau^{-1/2} A D_tau^{-1/2}; with tau = 0 and
a > 0 it is the perturbed operator used by the SCP pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseGraph",
    "RegLaplacianOp",
    "IsolatedNodeError",
    "from_edge_list",
    "from_edge_arrays",
    "read_edge_list",
    "reg_laplacian",
    "connected_component_labels",
    "largest_connected_component",
    "subgraph",
]


class IsolatedNodeError(ValueError):
    """Raised when D^{-1/2} is undefined because some node has zero degree.

    Only possible with tau = 0 and no perturbation; regularization exists
    precisely to avoid this.  Callers may drop isolated nodes instead (the
    CLI exposes --drop-isolated).
    """


@dataclass(frozen=True)
class SparseGraph:
    """Symmetric unweighted graph in compressed sparse row form.

    col_indices[row_offsets[i]:row_offsets[i+1]] lists the (sorted)
    neighbors of node i.  No self-loops, no duplicate entries; edge (i,j)
    is stored in both rows.  ``node_names`` maps external ids to indices
    when the graph was ingested from named data.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    node_names: dict | None = None

    @property
    def degrees(self) -> np.ndarray:
        """d_i = number of neighbors of node i."""
        return np.diff(self.row_offsets)

    @property
    def num_edges(self) -> int:
        return int(self.row_offsets[-1]) // 2

    @property
    def total_degree(self) -> int:
        """M = sum_i d_i = 2|E|."""
        return int(self.row_offsets[-1])

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i] : self.row_offsets[i + 1]]

    def edges(self) -> np.ndarray:
        """All edges as an (|E|, 2) array with i < j."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        mask = rows < self.col_indices
        return np.column_stack([rows[mask], self.col_indices[mask]])

    def adjacency(self) -> sp.csr_matrix:
        """Adjacency as a scipy CSR matrix with unit weights."""
        data = np.ones(len(self.col_indices))
        return sp.csr_matrix(
            (data, self.col_indices, self.row_offsets), shape=(self.n, self.n)
        )

    def dense_adjacency(self) -> np.ndarray:
        return self.adjacency().toarray()


def from_edge_arrays(n: int, u: np.ndarray, v: np.ndarray,
                     node_names: dict | None = None) -> SparseGraph:
    """Build a graph on nodes 0..n-1 from parallel endpoint arrays.

    Symmetrizes, drops self-loops, and collapses duplicate edges.  Nodes
    not mentioned in any edge are kept (with degree 0).
    """
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.shape != v.shape:
        raise ValueError("endpoint arrays must have equal length")
    if u.size and (u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= n):
        raise ValueError("node index out of range")
    keep = u != v
    uu = np.concatenate([u[keep], v[keep]])
    vv = np.concatenate([v[keep], u[keep]])
    order = np.lexsort((vv, uu))
    uu, vv = uu[order], vv[order]
    if uu.size:
        new = np.empty(uu.size, dtype=bool)
        new[0] = True
        new[1:] = (uu[1:] != uu[:-1]) | (vv[1:] != vv[:-1])
        uu, vv = uu[new], vv[new]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(uu, minlength=n), out=offsets[1:])
    return SparseGraph(n, offsets, vv, node_names)


def from_edge_list(edges) -> SparseGraph:
    """Build a graph from (id, id) pairs with arbitrary hashable ids.

    Ids are mapped to dense 0-based indices in first-seen order, so the
    result is deterministic for a fixed input sequence.  Duplicate edges
    collapse, self-loops drop, and the (i,j)/(j,i) orientation is
    irrelevant.
    """
    index: dict = {}
    us, vs = [], []
    for a, b in edges:
        ia = index.setdefault(a, len(index))
        ib = index.setdefault(b, len(index))
        us.append(ia)
        vs.append(ib)
    n = len(index)
    return from_edge_arrays(n, np.array(us, dtype=np.int64),
                            np.array(vs, dtype=np.int64), node_names=index or None)


def read_edge_list(path) -> list[tuple[str, str]]:
    """Parse the edge-list text format: one edge per line, two
    whitespace-separated tokens; '#' lines and blank lines ignored."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise ValueError(f"{path}:{lineno}: expected two tokens, got {len(tokens)}")
            pairs.append((tokens[0], tokens[1]))
    return pairs


@dataclass(frozen=True)
class RegLaplacianOp:
    """Implicit symmetric operator D_tau^{-1/2} (A + a 11^T) D_tau^{-1/2}.

    ``scale`` holds (d_i + a*n + tau)^{-1/2}.  The rank-1 term is applied
    analytically, never materialized.  Immutable; matvec is pure.
    """

    graph: SparseGraph
    tau: float
    perturb_a: float
    scale: np.ndarray
    _adj: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {x.shape}")
        sx = self.scale * x
        y = self.scale * (self._adj @ sx)
        if self.perturb_a > 0.0:
            y += self.perturb_a * np.dot(self.scale, x) * self.scale
        return y

    def dense(self) -> np.ndarray:
        """Materialize the operator (small graphs / tests only)."""
        a_per = self.graph.dense_adjacency()
        if self.perturb_a > 0.0:
            a_per = a_per + self.perturb_a
        return self.scale[:, None] * a_per * self.scale[None, :]


def reg_laplacian(graph: SparseGraph, tau: float = 0.0,
                  perturb_a: float = 0.0) -> RegLaplacianOp:
    """Build the regularized (optionally perturbed) Laplacian operator.

    Raises IsolatedNodeError when tau = perturb_a = 0 and the graph has a
    degree-0 node, since D^{-1/2} is undefined there.
    """
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    if perturb_a < 0.0:
        raise ValueError("perturb_a must be >= 0")
    degrees = graph.degrees.astype(float)
    shift = perturb_a * graph.n + tau
    if shift <= 0.0 and degrees.min(initial=np.inf) <= 0.0:
        isolated = np.flatnonzero(graph.degrees == 0)
        raise IsolatedNodeError(
            f"graph has {isolated.size} isolated node(s) and tau=0: "
            "use tau > 0 or drop isolated nodes first"
        )
    scale = 1.0 / np.sqrt(degrees + shift)
    return RegLaplacianOp(graph, float(tau), float(perturb_a), scale, graph.adjacency())


def connected_component_labels(graph: SparseGraph) -> np.ndarray:
    """Component id per node, ids in first-seen (BFS from node 0..n-1) order."""
    labels = np.full(graph.n, -1, dtype=np.int64)
    current = 0
    for start in range(graph.n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = current
        while stack:
            node = stack.pop()
            for nb in graph.neighbors(node):
                if labels[nb] < 0:
                    labels[nb] = current
                    stack.append(int(nb))
        current += 1
    return labels


def subgraph(graph: SparseGraph, nodes: np.ndarray) -> tuple[SparseGraph, np.ndarray]:
    """Induced subgraph on ``nodes`` (ascending order), plus the old-index
    array such that new node k corresponds to old node ``kept[k]``."""
    kept = np.unique(np.asarray(nodes, dtype=np.int64))
    remap = np.full(graph.n, -1, dtype=np.int64)
    remap[kept] = np.arange(kept.size)
    u, v = [], []
    for new_i, old_i in enumerate(kept):
        nbs = graph.neighbors(int(old_i))
        nbs = nbs[remap[nbs] >= 0]
        u.append(np.full(nbs.size, new_i, dtype=np.int64))
        v.append(remap[nbs])
    uu = np.concatenate(u) if u else np.empty(0, dtype=np.int64)
    vv = np.concatenate(v) if v else np.empty(0, dtype=np.int64)
    names = None
    if graph.node_names is not None:
        names = {name: int(remap[idx]) for name, idx in graph.node_names.items()
                 if remap[idx] >= 0}
    return from_edge_arrays(kept.size, uu, vv, node_names=names), kept


def largest_connected_component(graph: SparseGraph) -> tuple[SparseGraph, np.ndarray]:
    """Largest component (ties broken by lowest component id) and the old
    node indices it keeps."""
    labels = connected_component_labels(graph)
    if graph.n == 0:
        return graph, np.empty(0, dtype=np.int64)
    sizes = np.bincount(labels)
    return subgraph(graph, np.flatnonzero(labels == sizes.argmax()))
