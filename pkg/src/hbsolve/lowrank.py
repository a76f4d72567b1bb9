"""Rank-revealing factorizations: interpolatory decomposition, QR, SVD.

The interpolatory decomposition (ID) of a matrix B picks k rows of B (the
skeleton) and an m x k coefficient matrix U with U[J, :] = I such that

    B ~= U @ B[J, :],    ||B - U B[J, :]||_F <= tol ||B||_F.

It is computed from a column-pivoted Householder QR of B.T.  CPQR alone can
leave coefficient entries slightly above the target bound of 2, so a maxvol
style row-swap refinement kicks in as a fallback whenever that happens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

COEFF_BOUND = 2.0


@dataclass
class InterpolatoryDecomposition:
    """Skeleton row indices J and coefficients U with U[J, :] = I_k."""

    skeleton: np.ndarray  # (k,) row indices into B
    coeffs: np.ndarray    # (m, k), rows at skeleton indices form I_k

    @property
    def rank(self):
        return self.skeleton.shape[0]


def _adaptive_rank(R, tol):
    """Smallest k with ||R[k:, k:]||_F <= tol ||R||_F (column-pivoted R)."""
    m = R.shape[0]
    rows = np.sum(R**2, axis=1)
    # tail[k] = ||R[k:, k:]||_F^2; R is upper triangular so row k contributes
    # only to tails with index <= k
    tail = np.cumsum(rows[::-1])[::-1]
    total = tail[0] if m else 0.0
    if total == 0.0:
        return 0
    cutoff = (tol**2) * total
    k = int(np.searchsorted(-tail, -cutoff))
    return min(k, m)


def _maxvol_refine(C, J, max_sweeps=200):
    """Swap rows into J until all entries of C @ inv(C[J]) are <= 1 + 1e-8.

    C is m x k of full column rank.  Each swap strictly increases
    |det C[J]|, so the loop terminates.
    """
    J = list(J)
    for _ in range(max_sweeps):
        W = np.linalg.solve(C[J].T, C.T).T
        i, j = np.unravel_index(np.argmax(np.abs(W)), W.shape)
        if abs(W[i, j]) <= 1.0 + 1e-8:
            break
        J[j] = i
    return np.asarray(J), W


def id_row(B, tol, rank=None):
    """Row interpolatory decomposition B ~= U @ B[J, :].

    The rank is adaptive unless `rank` pins it (used when matching row and
    column ranks across a pair of factorizations).  Coefficient entries are
    kept within COEFF_BOUND via the maxvol fallback.
    """
    B = np.asarray(B, float)
    if B.size == 0:
        m = B.shape[0]
        return InterpolatoryDecomposition(np.empty(0, int), np.empty((m, 0)))
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = B.shape[0]
    Q, R, piv = scipy.linalg.qr(B.T, pivoting=True, mode="economic")
    kmax = min(B.shape)
    k = _adaptive_rank(R[:kmax], tol) if rank is None else min(int(rank), kmax)
    J = piv[:k]
    U = np.zeros((m, k))
    if k:
        T = scipy.linalg.solve_triangular(R[:k, :k], R[:k, k:])
        U[J] = np.eye(k)
        U[piv[k:]] = T.T
        if np.max(np.abs(U)) > COEFF_BOUND:
            # rare CPQR coefficient overshoot: re-pick the skeleton by maxvol
            C = B @ Q[:, :k]
            J, W = _maxvol_refine(C, J)
            U = W
            U[J] = np.eye(k)
    return InterpolatoryDecomposition(np.asarray(J), U)


def id_col(B, tol, rank=None):
    """Column analogue: B ~= B[:, J] @ V.T with V[J, :] = I_k."""
    return id_row(np.asarray(B, float).T, tol, rank=rank)


def thin_qr(B):
    """Economy QR with Q orthonormal columns."""
    return np.linalg.qr(np.asarray(B, float))


def svd(B):
    """Full-matrices-off SVD, singular values nonincreasing."""
    X, s, Yt = np.linalg.svd(np.asarray(B, float), full_matrices=False)
    return X, s, Yt.T
