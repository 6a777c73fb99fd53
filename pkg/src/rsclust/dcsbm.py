"""Degree-corrected blockmodel: parameters, exact population quantities, sampling.

Parameters are (K, B, z, theta): a positive-definite K x K block matrix B,
0-based memberships z, and positive node weights theta summing to 1 within
each block.  Under that constraint B_st is the expected number of edges
between blocks s and t (twice that within a block), the expected adjacency
is A_pop[i,j] = theta_i * theta_j * B[z_i, z_j], and the regularized
population Laplacian factors through the block structure, which is what the
closed-form eigendecomposition below exploits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse_graph import SparseGraph, from_edge_arrays

__all__ = [
    "DcsbmParams",
    "PopulationModel",
    "PopulationEigen",
    "ThetaTau",
    "population_model",
    "theta_tau",
    "population_laplacian",
    "population_laplacian_factored",
    "population_eigen",
    "population_leverage",
    "sample_graph",
    "count_clamped_pairs",
    "power_law_theta",
    "equal_blocks",
    "calibrate_planted_partition",
    "planted_partition_params",
    "save_params",
    "load_params",
]

BLOCK_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DcsbmParams:
    """Blockmodel parameters; validated on construction.

    z is 0-based (values 0..K-1).  theta must sum to exactly 1 within each
    block, which pins the scale freedom between theta and B.  Edge
    probabilities theta_i*theta_j*B[z_i,z_j] may exceed 1 for heavy-tailed
    theta; the sampler clamps them (see count_clamped_pairs).
    """

    k: int
    block_matrix: np.ndarray
    z: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.block_matrix, dtype=float)
        z = np.asarray(self.z, dtype=np.int64)
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "block_matrix", b)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "theta", theta)
        if b.shape != (self.k, self.k):
            raise ValueError(f"block matrix must be {self.k}x{self.k}")
        if not np.allclose(b, b.T, rtol=0.0, atol=1e-12):
            raise ValueError("block matrix must be symmetric")
        if b.min() < 0.0:
            raise ValueError("block matrix entries must be non-negative")
        if np.linalg.eigvalsh(b).min() <= 0.0:
            raise ValueError("block matrix must be positive definite")
        if z.ndim != 1 or theta.shape != z.shape:
            raise ValueError("z and theta must be 1-d and of equal length")
        if z.min(initial=0) < 0 or z.max(initial=-1) >= self.k:
            raise ValueError("z values must lie in 0..K-1")
        if theta.min(initial=1.0) <= 0.0:
            raise ValueError("theta must be strictly positive")
        sums = np.bincount(z, weights=theta, minlength=self.k)
        if np.abs(sums - 1.0).max() > BLOCK_SUM_TOL:
            raise ValueError("theta must sum to 1 within each block")

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def block_totals(self) -> np.ndarray:
        """W_s = sum_t B_st, the total expected degree of block s."""
        return self.block_matrix.sum(axis=1)


@dataclass(frozen=True)
class PopulationModel:
    """Expected adjacency, expected degrees, and per-block degree totals."""

    a_pop: np.ndarray
    d_pop: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class ThetaTau:
    """Regularization-shrunk node weights theta_i^2 / (theta_i + tau/W_{z_i})."""

    values: np.ndarray
    tau: float


@dataclass(frozen=True)
class PopulationEigen:
    """Exact top-K eigenpairs of the population regularized Laplacian.

    values: the K positive eigenvalues, descending (the remaining N-K are 0).
    vectors: orthonormal N x K; row i is a positive multiple of row z_i of an
    orthogonal K x K matrix, so vectors_normalized has exactly K distinct
    rows, identical within blocks and orthogonal across blocks.
    """

    values: np.ndarray
    vectors: np.ndarray
    vectors_normalized: np.ndarray


def population_model(params: DcsbmParams) -> PopulationModel:
    w = params.block_totals
    if w.min() <= 0.0:
        raise ValueError("every block must have positive total expected degree")
    a_pop = params.theta[:, None] * params.block_matrix[np.ix_(params.z, params.z)] \
        * params.theta[None, :]
    d_pop = params.theta * w[params.z]
    return PopulationModel(a_pop, d_pop, w)


def theta_tau(params: DcsbmParams, tau: float) -> ThetaTau:
    w = params.block_totals
    if w.min() <= 0.0:
        raise ValueError("every block must have positive total expected degree")
    values = params.theta**2 / (params.theta + tau / w[params.z])
    return ThetaTau(values, float(tau))


def population_laplacian(params: DcsbmParams, tau: float) -> np.ndarray:
    """D_tau^{-1/2} A_pop D_tau^{-1/2}, built directly from expectations."""
    model = population_model(params)
    scale = 1.0 / np.sqrt(model.d_pop + tau)
    return scale[:, None] * model.a_pop * scale[None, :]


def population_laplacian_factored(params: DcsbmParams, tau: float) -> np.ndarray:
    """Same operator via the factored form Theta_tau^{1/2} Z B_L Z^T Theta_tau^{1/2}
    with B_L = D_B^{-1/2} B D_B^{-1/2}; agrees with the direct route entrywise."""
    w = params.block_totals
    b_l = params.block_matrix / np.sqrt(np.outer(w, w))
    root = np.sqrt(theta_tau(params, tau).values)
    return root[:, None] * b_l[np.ix_(params.z, params.z)] * root[None, :]


def population_eigen(params: DcsbmParams, tau: float) -> PopulationEigen:
    """Closed-form eigendecomposition of the population regularized Laplacian.

    Reduces to the K x K matrix C = G^{1/2} B_L G^{1/2} where G is the
    diagonal of per-block sums of theta_tau; C shares the K positive
    eigenvalues of the N x N operator, and the eigenvector matrix lifts as
    row i = sqrt(theta_tau_i / G_{z_i}) * U[z_i] with U the eigenvectors
    of C.
    """
    w = params.block_totals
    tt = theta_tau(params, tau).values
    g = np.bincount(params.z, weights=tt, minlength=params.k)
    b_l = params.block_matrix / np.sqrt(np.outer(w, w))
    c = np.sqrt(g)[:, None] * b_l * np.sqrt(g)[None, :]
    lam, u = np.linalg.eigh(c)
    lam, u = lam[::-1], u[:, ::-1]
    if lam[-1] <= 0.0:
        raise ValueError("population Laplacian is not rank K; block matrix "
                         "must be positive definite and theta positive")
    vectors = np.sqrt(tt / g[params.z])[:, None] * u[params.z, :]
    return PopulationEigen(lam, vectors, u[params.z, :])


def population_leverage(params: DcsbmParams, tau: float) -> np.ndarray:
    """Exact leverage scores theta_tau_i / (per-block sum of theta_tau)."""
    tt = theta_tau(params, tau).values
    g = np.bincount(params.z, weights=tt, minlength=params.k)
    return tt / g[params.z]


def count_clamped_pairs(params: DcsbmParams) -> int:
    """Number of unordered pairs whose nominal edge probability exceeds 1."""
    p = params.theta[:, None] * params.block_matrix[np.ix_(params.z, params.z)] \
        * params.theta[None, :]
    return int(np.count_nonzero(np.triu(p, k=1) > 1.0))


def sample_graph(params: DcsbmParams, seed: int) -> SparseGraph:
    """Draw a graph: each unordered pair independently with probability
    min(1, theta_i*theta_j*B[z_i,z_j]); no self-loops."""
    rng = np.random.default_rng(seed)
    p = params.theta[:, None] * params.block_matrix[np.ix_(params.z, params.z)] \
        * params.theta[None, :]
    hit = rng.random(p.shape) < p
    u, v = np.nonzero(np.triu(hit, k=1))
    return from_edge_arrays(params.n, u, v)


def equal_blocks(k: int, size: int) -> np.ndarray:
    """Membership vector with K contiguous blocks of the given size."""
    return np.repeat(np.arange(k, dtype=np.int64), size)


def _pareto_sample(rng: np.random.Generator, n: int, beta: float,
                   x_min: float) -> np.ndarray:
    # density ~ x^(-beta) on [x_min, inf): inverse CDF with u in (0, 1]
    u = 1.0 - rng.random(n)
    return x_min * u ** (-1.0 / (beta - 1.0))


def power_law_theta(n: int, k: int, beta: float, x_min: float = 1.0,
                    seed: int = 0, z: np.ndarray | None = None) -> np.ndarray:
    """Draw power-law node weights and normalize them within each block.

    beta is the density exponent (smaller = heavier tail); must exceed 1.
    Blocks default to K equal contiguous groups of n/K nodes.
    """
    if beta <= 1.0:
        raise ValueError("beta must be > 1")
    if z is None:
        if n % k != 0:
            raise ValueError("n must be divisible by k for equal blocks")
        z = equal_blocks(k, n // k)
    rng = np.random.default_rng(seed)
    x = _pareto_sample(rng, n, beta, x_min)
    sums = np.bincount(z, weights=x, minlength=k)
    return x / sums[z]


def calibrate_planted_partition(k: int, n: int, snr: float,
                                avg_degree: float) -> np.ndarray:
    """Planted-partition block matrix with the requested signal-to-noise
    ratio (expected in-block over out-block edge count) and expected
    average degree.

    Solves b_in = snr*(K-1)*b_out together with
    K*b_in + K*(K-1)*b_out = N*avg_degree.
    """
    if k < 2:
        raise ValueError("need at least two blocks")
    if snr <= 0.0 or avg_degree <= 0.0:
        raise ValueError("snr and avg_degree must be positive")
    b_out = n * avg_degree / (k * (k - 1) * (snr + 1.0))
    b_in = snr * (k - 1) * b_out
    if b_in <= 0.0 or b_out <= 0.0:
        raise ValueError("infeasible calibration")
    return (b_in - b_out) * np.eye(k) + b_out * np.ones((k, k))


def planted_partition_params(k: int, n: int, snr: float, avg_degree: float,
                             theta: np.ndarray | None = None) -> DcsbmParams:
    """DcsbmParams on K equal blocks with a calibrated planted-partition B.

    theta defaults to uniform within blocks (the plain blockmodel); pass
    power_law_theta output for the degree-corrected variant.
    """
    if n % k != 0:
        raise ValueError("n must be divisible by k for equal blocks")
    size = n // k
    z = equal_blocks(k, size)
    if theta is None:
        theta = np.full(n, 1.0 / size)
    return DcsbmParams(k, calibrate_planted_partition(k, n, snr, avg_degree), z, theta)


def save_params(params: DcsbmParams, path) -> None:
    """Write the flat key-value model format (exact float round-trip)."""
    runs = []
    start = 0
    for i in range(1, params.n + 1):
        if i == params.n or params.z[i] != params.z[start]:
            runs.append(f"{params.z[start]}*{i - start}")
            start = i
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"K {params.k}\n")
        fh.write(f"N {params.n}\n")
        fh.write("z " + " ".join(runs) + "\n")
        fh.write("B " + " ".join(repr(x) for x in params.block_matrix.ravel()) + "\n")
        fh.write("theta " + " ".join(repr(x) for x in params.theta) + "\n")


def load_params(path) -> DcsbmParams:
    fields = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            fields[key] = rest
    k = int(fields["K"])
    n = int(fields["N"])
    z = np.concatenate([
        np.full(int(count), int(value), dtype=np.int64)
        for value, count in (tok.split("*") for tok in fields["z"].split())
    ]) if fields["z"] else np.empty(0, dtype=np.int64)
    if z.size != n:
        raise ValueError("run-length encoded z does not match N")
    b = np.array([float(x) for x in fields["B"].split()]).reshape(k, k)
    theta = np.array([float(x) for x in fields["theta"].split()])
    return DcsbmParams(k, b, z, theta)
