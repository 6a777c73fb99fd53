"""Top-K symmetric eigensolver, row normalization, Procrustes alignment.

The solver targets the algebraically largest eigenvalues of a symmetric
operator given only through matvec.  Small problems are solved densely;
larger ones use Lanczos with full reorthogonalization and thick restarts,
so the projected matrix is exactly Q^T A Q and ghost eigenvalues cannot
appear.  Individual eigenvectors of clustered eigenvalues are not
identifiable; downstream comparisons go through subspace distances or
Procrustes alignment, both provided here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenBasis",
    "EigensolverError",
    "top_k_eigen",
    "row_normalize",
    "procrustes_align",
    "aligned_error",
    "subspace_distance",
]

DENSE_CUTOFF = 512
ZERO_ROW_TOL = 1e-12


class EigensolverError(RuntimeError):
    """Lanczos failed to reach the residual tolerance; carries the best
    residual norms seen for the wanted pairs."""

    def __init__(self, message: str, residuals: np.ndarray):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class EigenBasis:
    """K largest-eigenvalue pairs: values descending, columns orthonormal.

    residuals[k] = ||L v_k - lambda_k v_k||_2, recomputed with true matvecs.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray


def _as_matvec(op):
    """Accept an ndarray, or any object with .n and .matvec (RegLaplacianOp)."""
    if isinstance(op, np.ndarray):
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError("dense operator must be a square matrix")
        return op.shape[0], (lambda x: op @ x), op
    return op.n, op.matvec, None


def top_k_eigen(op, k: int, tol: float = 1e-8, max_iter: int = 300,
                seed: int = 0, dense_cutoff: int = DENSE_CUTOFF) -> EigenBasis:
    """Top-K eigenpairs (algebraically largest) of a symmetric operator.

    Dense ndarray input is always solved with a full eigendecomposition;
    implicit operators fall back to the dense path for n <= dense_cutoff
    and otherwise run restarted Lanczos seeded deterministically.
    """
    n, matvec, dense = _as_matvec(op)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if dense is None and n <= dense_cutoff:
        dense = getattr(op, "dense", None)
        dense = dense() if dense is not None else _materialize(matvec, n)
    if dense is not None:
        lam, vec = np.linalg.eigh(dense)
        values, vectors = lam[::-1][:k].copy(), vec[:, ::-1][:, :k].copy()
    else:
        values, vectors = _lanczos_top_k(matvec, n, k, tol, max_iter, seed)
    residuals = _true_residuals(matvec, values, vectors)
    return EigenBasis(values, vectors, residuals)


def _materialize(matvec, n: int) -> np.ndarray:
    cols = [matvec(col) for col in np.eye(n)]
    return np.column_stack(cols)


def _true_residuals(matvec, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.array([
        np.linalg.norm(matvec(vectors[:, i]) - values[i] * vectors[:, i])
        for i in range(values.size)
    ])


def _lanczos_top_k(matvec, n: int, k: int, tol: float, max_restarts: int,
                   seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Thick-restart Lanczos for the k algebraically largest eigenpairs.

    Full reorthogonalization keeps Q orthonormal to machine precision, so
    the projected matrix equals Q^T A Q entrywise and the usual residual
    estimate |beta * S[last, i]| is reliable.
    """
    rng = np.random.default_rng(seed)
    m = min(n, max(4 * k + 20, 60))
    keep = min(max(k + 8, 2 * k), m - 2) if m < n else 0

    q = np.zeros((n, m + 1))
    t = np.zeros((m + 1, m + 1))
    v = rng.standard_normal(n)
    q[:, 0] = v / np.linalg.norm(v)
    start = 0
    best_res = np.full(k, np.inf)

    for _ in range(max_restarts):
        size, beta_last = _expand(matvec, q, t, start, m, rng)
        block = 0.5 * (t[:size, :size] + t[:size, :size].T)
        theta, s = np.linalg.eigh(block)
        theta, s = theta[::-1], s[:, ::-1]
        res_est = np.abs(beta_last * s[size - 1, :])
        best_res = np.minimum(best_res, res_est[:k])
        exhausted = beta_last == 0.0 or size == n
        if np.all(res_est[:k] <= tol) or exhausted:
            vectors = q[:, :size] @ s[:, :k]
            # roundoff in the projected problem can leave vectors slightly
            # non-orthonormal; a QR pass restores it without moving the span
            vectors, r = np.linalg.qr(vectors)
            vectors *= np.sign(np.diag(r))
            values = theta[:k].copy()
            true_res = _true_residuals(matvec, values, vectors)
            if np.all(true_res <= 10 * tol) or exhausted:
                return values, vectors
        # thick restart: keep the leading Ritz vectors plus the residual vector
        kept = q[:, :size] @ s[:, :keep]
        q[:, :keep] = kept
        q[:, keep] = q[:, size]
        t[:, :] = 0.0
        t[:keep, :keep] = np.diag(theta[:keep])
        coupling = beta_last * s[size - 1, :keep]
        t[keep, :keep] = coupling
        t[:keep, keep] = coupling
        start = keep
    raise EigensolverError(
        f"Lanczos did not converge to tol={tol} within {max_restarts} restarts",
        best_res,
    )


def _expand(matvec, q, t, start: int, m: int, rng) -> tuple[int, float]:
    """Grow the Krylov basis from column `start` to `m` columns.

    Returns the basis size actually reached and the final coupling norm
    (0.0 when the whole invariant space was exhausted).
    """
    n = q.shape[0]
    for j in range(start, m):
        w = matvec(q[:, j])
        coeff = q[:, : j + 1].T @ w
        w -= q[:, : j + 1] @ coeff
        corr = q[:, : j + 1].T @ w
        w -= q[:, : j + 1] @ corr
        coeff += corr
        t[: j + 1, j] = coeff
        t[j, : j + 1] = coeff
        beta = np.linalg.norm(w)
        if beta <= 1e-14:
            # invariant subspace: couple nothing and continue in the complement
            if j + 1 >= n:
                return j + 1, 0.0
            w = _fresh_direction(q[:, : j + 1], n, rng)
            if w is None:
                return j + 1, 0.0
            q[:, j + 1] = w
            t[j + 1, j] = t[j, j + 1] = 0.0
        else:
            q[:, j + 1] = w / beta
            t[j + 1, j] = t[j, j + 1] = beta
    return m, float(t[m, m - 1])


def _fresh_direction(basis, n: int, rng) -> np.ndarray | None:
    for _ in range(3):
        w = rng.standard_normal(n)
        w -= basis @ (basis.T @ w)
        w -= basis @ (basis.T @ w)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            return w / norm
    return None


def row_normalize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row to unit Euclidean norm.

    Rows with norm below 1e-12 are left untouched and their indices
    returned as the second element (normalizing them would amplify noise).
    """
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    zero_rows = np.flatnonzero(norms < ZERO_ROW_TOL)
    safe = norms.copy()
    safe[norms < ZERO_ROW_TOL] = 1.0
    return x / safe[:, None], zero_rows


def procrustes_align(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Orthogonal O minimizing ||x @ O.T - y||_F (Schonemann's SVD solution).

    Rank deficiency in y.T @ x is harmless: the SVD fills the null
    directions with an arbitrary orthonormal completion.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("shapes must match for alignment")
    u, _, vt = np.linalg.svd(y.T @ x)
    return u @ vt


def aligned_error(x: np.ndarray, y: np.ndarray) -> float:
    """min over orthogonal O of ||x @ O.T - y||_F."""
    o = procrustes_align(x, y)
    return float(np.linalg.norm(x @ o.T - y))


def subspace_distance(x: np.ndarray, y: np.ndarray) -> float:
    """||x x^T - y y^T||_F without forming the n x n projectors."""
    gxx = x.T @ x
    gyy = y.T @ y
    gxy = x.T @ y
    sq = np.sum(gxx * gxx) + np.sum(gyy * gyy) - 2.0 * np.sum(gxy * gxy)
    return float(np.sqrt(max(sq, 0.0)))
