"""In-repo symmetric eigensolver (cyclic Jacobi) and the singular-value
lower-bound check used by the lp solver's rank-0 shortcut.

The solver runs on A^T A, so it only ever sees d x d matrices; desk-scale
inputs keep d small enough that Jacobi's robustness beats any cleverness.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ContractError, DenseMatrix

OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
RANK_TOL = 1e-9


class ZeroResidualError(Exception):
    """Signal that rank(A) <= k, so the rank-k residual is exactly zero.

    Carries the eigenbasis of A^T A so callers can build the exact
    factorization without re-decomposing.
    """

    def __init__(self, rank, eigvecs):
        self.rank = rank
        self.eigvecs = eigvecs
        super().__init__(f"matrix has rank {rank}; residual is zero")


def jacobi_eigh(S, off_tol=OFFDIAG_TOL, max_sweeps=MAX_SWEEPS):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues descending, eigenvectors as columns).  Sweeps stop
    when the off-diagonal Frobenius mass falls below off_tol relative to the
    matrix scale, with a hard cap of max_sweeps.
    """
    A = np.array(S, dtype=np.float64, copy=True)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, atol=1e-12, rtol=0):
        raise ContractError("jacobi_eigh needs a symmetric square matrix")
    V = np.eye(n)
    scale = max(1.0, float(np.abs(A).max()))
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float((A**2).sum() - (np.diag(A) ** 2).sum())))
        if off <= off_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                h = A[q, q] - A[p, p]
                if apq == 0.0 or abs(apq) < 1e-300 * max(1.0, abs(h)):
                    continue
                theta = h / (2.0 * apq)
                if abs(theta) > 1e8:
                    t = 1.0 / (2.0 * theta)  # asymptotic root; theta^2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J, V <- V J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                v_p, v_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    evals = np.diag(A).copy()
    order = np.argsort(-evals, kind="stable")
    return evals[order], V[:, order]


def singular_values(A: DenseMatrix) -> np.ndarray:
    """All singular values of A, descending, via Jacobi on A^T A."""
    M = A.astype_float()
    gram = M.T @ M
    evals, _ = jacobi_eigh(gram)
    return np.sqrt(np.clip(evals, 0.0, None))


def rank_and_row_basis(A: DenseMatrix, k: int):
    """(numerical rank, top-k right singular vectors) of A.

    The basis columns span the row space; if rank <= k then
    A = (A Vk) Vk^T exactly.
    """
    M = A.astype_float()
    evals, vecs = jacobi_eigh(M.T @ M)
    svals = np.sqrt(np.clip(evals, 0.0, None))
    tol = RANK_TOL * max(1.0, float(svals[0]) if svals.size else 1.0)
    rank = int(np.count_nonzero(svals > tol))
    return rank, vecs[:, :k]


def sigma_lower_bound(A: DenseMatrix, k: int) -> float:
    """sigma_{k+1}(A) for an integer-valued real matrix with rank > k.

    Raises ZeroResidualError when rank(A) <= k, in which case the caller
    should treat the rank-k approximation residual as exactly zero.
    """
    M = A.astype_float()
    if not np.array_equal(M, np.round(M)):
        raise ContractError("sigma_lower_bound expects integer-valued entries")
    if k < 0 or k >= min(A.rows, A.cols):
        raise ContractError(f"k must be in [0, {min(A.rows, A.cols) - 1}]")
    evals, vecs = jacobi_eigh(M.T @ M)
    svals = np.sqrt(np.clip(evals, 0.0, None))
    tol = RANK_TOL * max(1.0, float(svals[0]) if svals.size else 1.0)
    rank = int(np.count_nonzero(svals > tol))
    if rank <= k:
        raise ZeroResidualError(rank, vecs)
    return float(svals[k])


def opt_lower_bound(n: int, d: int, gamma: float, k: int) -> float:
    """(n d gamma^2)^{-k}: the generic lower bound on sigma_{k+1} for
    integer matrices with entries bounded by gamma and rank > k."""
    return float(n * d * gamma * gamma) ** (-k)
