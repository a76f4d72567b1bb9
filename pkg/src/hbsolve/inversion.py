"""Exact inversion of block-separable and HBS matrices.

A single-level block-separable matrix A = U Atilde V* + D (block-diagonal
U, V, D) inverts through the variable substitution

    A^-1 = E (Atilde + Dhat)^-1 F* + G

with, per diagonal block,

    Dhat = (V* D^-1 U)^-1
    E    = D^-1 U Dhat
    F*   = Dhat V* D^-1
    G    = D^-1 - D^-1 U Dhat V* D^-1.

Applying the same identity recursively level by level inverts an HBS
matrix in O(N k^2): each parent's reduced diagonal block is assembled
from its children's Dhat factors and the sibling interaction blocks, and
the top-level (Atilde + Dhat) is a small dense matrix inverted directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .hbs import HbsMatrix
from .tree import IndexTree

COND_WARN_THRESHOLD = 1e13


class SingularBlockError(np.linalg.LinAlgError):
    """An intermediate block to invert is singular; message names the block."""


def _inv(M, what):
    """Dense inverse with a singularity error naming the block, plus cond."""
    if M.shape[0] == 0:
        return M.reshape(0, 0).copy(), 1.0
    try:
        out = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularBlockError(f"singular matrix while inverting {what}") from exc
    if not np.all(np.isfinite(out)):
        raise SingularBlockError(f"non-finite inverse of {what}")
    cond = np.linalg.cond(M)
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(f"ill-conditioned {what}: cond = {cond:.3e}", RuntimeWarning)
    return out, float(cond)


def _node_factors(Dt, U, V, what):
    """E, F, G, Dhat of one block from its (reduced) diagonal block Dt."""
    Dtinv, cond_Dt = _inv(Dt, what)
    DiU = Dtinv @ U
    ViDi = V.T @ Dtinv
    Dhat, cond_M = _inv(V.T @ DiU, f"V* D~^-1 U of {what}")
    E = DiU @ Dhat
    F = (Dhat @ ViDi).T
    G = Dtinv - DiU @ Dhat @ ViDi
    return E, F, G, Dhat, {"cond_Dtilde": cond_Dt, "cond_core": cond_M}


# ---------------------------------------------------------------------------
# Single-level block-separable matrices
# ---------------------------------------------------------------------------


@dataclass
class BlockSeparableMatrix:
    """A = U Atilde V* + D with p diagonal blocks; Atilde has zero
    diagonal blocks and couples the blocks' rank-k spaces."""

    D: list      # p blocks, (n_i, n_i)
    U: list      # p blocks, (n_i, k_i)
    V: list      # p blocks, (n_i, k_i)
    core: np.ndarray  # (sum k_i, sum k_i), zero diagonal blocks

    @property
    def block_sizes(self):
        return [d.shape[0] for d in self.D]

    @property
    def ranks(self):
        return [u.shape[1] for u in self.U]

    def to_dense(self):
        from scipy.linalg import block_diag

        U = block_diag(*self.U)
        V = block_diag(*self.V)
        return U @ self.core @ V.T + block_diag(*self.D)


@dataclass
class BlockSeparableInverse:
    E: list
    F: list
    G: list
    Dhat: list
    core_inverse: np.ndarray  # inverse of (Atilde + blockdiag(Dhat))
    telemetry: dict

    def apply(self, v):
        v = np.asarray(v, float)
        sizes = [g.shape[0] for g in self.G]
        splits = np.cumsum(sizes)[:-1]
        parts = np.split(v, splits)
        w = np.concatenate([F.T @ p for F, p in zip(self.F, parts)])
        y = self.core_inverse @ w
        ranks = [e.shape[1] for e in self.E]
        ysplit = np.split(y, np.cumsum(ranks)[:-1])
        return np.concatenate(
            [E @ yi + G @ p for E, G, yi, p in zip(self.E, self.G, ysplit, parts)]
        )


def bs_invert(A: BlockSeparableMatrix) -> BlockSeparableInverse:
    """Invert a single-level block-separable matrix via the substitution
    identity; cost ~ p n^3 + (p k)^3."""
    E, F, G, Dhat = [], [], [], []
    telemetry = {}
    for i, (Di, Ui, Vi) in enumerate(zip(A.D, A.U, A.V)):
        Ei, Fi, Gi, Dhi, tel = _node_factors(Di, Ui, Vi, f"block {i}")
        E.append(Ei)
        F.append(Fi)
        G.append(Gi)
        Dhat.append(Dhi)
        telemetry[i] = tel
    from scipy.linalg import block_diag

    shifted = A.core + block_diag(*Dhat) if Dhat else A.core
    core_inv, cond = _inv(shifted, "shifted core")
    telemetry["core"] = {"cond": cond}
    return BlockSeparableInverse(E, F, G, Dhat, core_inv, telemetry)


# ---------------------------------------------------------------------------
# Recursive HBS inversion
# ---------------------------------------------------------------------------


@dataclass
class HbsInverse:
    """Per-node inverse factors; G[1] is the dense inverse of the root's
    reduced 2x2 block system (or of the whole matrix when levels == 0)."""

    tree: IndexTree
    E: dict
    F: dict
    G: dict
    Dhat: dict
    telemetry: dict = field(default_factory=dict, repr=False)


def hbs_invert(A: HbsMatrix) -> HbsInverse:
    """Recursive inversion, fine to coarse; exact up to rounding."""
    tree = A.tree
    E, F, G, Dhat, telemetry = {}, {}, {}, {}, {}
    if tree.levels == 0:
        G[1], cond = _inv(A.D[1], "node 1 (level 0)")
        telemetry[1] = {"cond_Dtilde": cond}
        return HbsInverse(tree, E, F, G, Dhat, telemetry)

    def reduced_block(tau):
        if tree.is_leaf(tau):
            return A.D[tau]
        s1, s2 = 2 * tau, 2 * tau + 1
        k1, k2 = Dhat[s1].shape[0], Dhat[s2].shape[0]
        Dt = np.empty((k1 + k2, k1 + k2))
        Dt[:k1, :k1] = Dhat[s1]
        Dt[:k1, k1:] = A.B12[tau]
        Dt[k1:, :k1] = A.B21[tau]
        Dt[k1:, k1:] = Dhat[s2]
        return Dt

    for level in range(tree.levels, 0, -1):
        for tau in tree.nodes_at_level(level):
            Dt = reduced_block(tau)
            what = f"node {tau} (level {level})"
            E[tau], F[tau], G[tau], Dhat[tau], telemetry[tau] = _node_factors(
                Dt, A.U[tau], A.V[tau], what
            )
    G[1], cond = _inv(reduced_block(1), "node 1 (level 0)")
    telemetry[1] = {"cond_Dtilde": cond}
    return HbsInverse(tree, E, F, G, Dhat, telemetry)


def apply_inverse(inv: HbsInverse, u):
    """q = A^-1 u from the factored inverse; upward pass through F, dense
    root solve, downward pass through E and G.  Cost O(N k)."""
    u = np.asarray(u, float)
    tree = inv.tree
    if u.shape != (tree.n,):
        raise ValueError(f"expected vector of length {tree.n}, got shape {u.shape}")
    if tree.levels == 0:
        return inv.G[1] @ u

    uhat = {}
    for tau in tree.leaves:
        uhat[tau] = inv.F[tau].T @ u[tree.indices(tau)]
    for level in range(tree.levels - 1, 0, -1):
        for tau in tree.nodes_at_level(level):
            uhat[tau] = inv.F[tau].T @ np.concatenate([uhat[2 * tau], uhat[2 * tau + 1]])

    top = inv.G[1] @ np.concatenate([uhat[2], uhat[3]])
    qhat = {2: top[: uhat[2].shape[0]], 3: top[uhat[2].shape[0] :]}
    for level in range(1, tree.levels):
        for tau in tree.nodes_at_level(level):
            s1, s2 = 2 * tau, 2 * tau + 1
            pair = inv.E[tau] @ qhat[tau] + inv.G[tau] @ np.concatenate([uhat[s1], uhat[s2]])
            qhat[s1] = pair[: uhat[s1].shape[0]]
            qhat[s2] = pair[uhat[s1].shape[0] :]

    q = np.empty(tree.n)
    for tau in tree.leaves:
        idx = tree.indices(tau)
        q[idx] = inv.E[tau] @ qhat[tau] + inv.G[tau] @ u[idx]
    return q


def inverse_transpose(inv: HbsInverse) -> HbsInverse:
    """Factored form of (A^-1)^T: E and F swap roles, G blocks transpose."""
    return HbsInverse(
        tree=inv.tree,
        E={tau: F.copy() for tau, F in inv.F.items()},
        F={tau: E.copy() for tau, E in inv.E.items()},
        G={tau: G.T.copy() for tau, G in inv.G.items()},
        Dhat={tau: D.T.copy() for tau, D in inv.Dhat.items()},
        telemetry=inv.telemetry,
    )


def inverse_to_hbs(inv: HbsInverse) -> HbsMatrix:
    """Reformat the factored inverse into a standard HBS matrix.

    Coarse to fine: each node's G splits into its children's sibling
    interaction blocks plus diagonal corrections, which fold into the
    children's G via G_sigma += E_sigma H F_sigma*.  The leaves' corrected
    G become the D blocks; E and F serve as U and V.
    """
    tree = inv.tree
    if tree.levels == 0:
        return HbsMatrix(tree=tree, D={1: inv.G[1].copy()}, U={}, V={}, B12={}, B21={})

    G = {tau: g.copy() for tau, g in inv.G.items()}
    B12, B21 = {}, {}
    for level in range(0, tree.levels):
        for tau in tree.nodes_at_level(level):
            s1, s2 = 2 * tau, 2 * tau + 1
            k1 = inv.Dhat[s1].shape[0]
            B12[tau] = G[tau][:k1, k1:].copy()
            B21[tau] = G[tau][k1:, :k1].copy()
            G[s1] = G[s1] + inv.E[s1] @ G[tau][:k1, :k1] @ inv.F[s1].T
            G[s2] = G[s2] + inv.E[s2] @ G[tau][k1:, k1:] @ inv.F[s2].T
    return HbsMatrix(
        tree=tree,
        D={tau: G[tau] for tau in tree.leaves},
        U={tau: inv.E[tau].copy() for tau in inv.E},
        V={tau: inv.F[tau].copy() for tau in inv.F},
        B12=B12,
        B21=B21,
    )


def reformat_orthonormal(A: HbsMatrix) -> HbsMatrix:
    """Equivalent HBS matrix with orthonormal U, V and diagonal B blocks.

    Fine to coarse: QR the bases, push the triangular factors into the
    sibling B blocks, diagonalize those by full SVD, and absorb the
    rotations into the parent's bases.  The represented matrix is
    unchanged.
    """
    tree = A.tree
    if tree.levels == 0:
        return HbsMatrix(tree=tree, D={1: A.D[1].copy()}, U={}, V={}, B12={}, B21={})

    D = {tau: d.copy() for tau, d in A.D.items()}
    U = {tau: u.copy() for tau, u in A.U.items()}
    V = {tau: v.copy() for tau, v in A.V.items()}
    B12 = {tau: b.copy() for tau, b in A.B12.items()}
    B21 = {tau: b.copy() for tau, b in A.B21.items()}

    R, S = {}, {}
    for level in range(tree.levels, 0, -1):
        for tau in tree.nodes_at_level(level):
            U[tau], R[tau] = np.linalg.qr(U[tau])
            V[tau], S[tau] = np.linalg.qr(V[tau])
        for parent in tree.nodes_at_level(level - 1):
            s1, s2 = 2 * parent, 2 * parent + 1
            X1, sv12, Y2t = np.linalg.svd(R[s1] @ B12[parent] @ S[s2].T)
            X2, sv21, Y1t = np.linalg.svd(R[s2] @ B21[parent] @ S[s1].T)
            U[s1] = U[s1] @ X1
            U[s2] = U[s2] @ X2
            V[s1] = V[s1] @ Y1t.T
            V[s2] = V[s2] @ Y2t.T
            d12 = np.zeros((X1.shape[1], Y2t.shape[0]))
            np.fill_diagonal(d12, sv12)
            d21 = np.zeros((X2.shape[1], Y1t.shape[0]))
            np.fill_diagonal(d21, sv21)
            B12[parent] = d12
            B21[parent] = d21
            if level > 1:
                r1, r2 = X1.shape[1], X2.shape[1]
                TU = np.zeros((r1 + r2, U[parent].shape[0]))
                TU[:r1, : R[s1].shape[1]] = X1.T @ R[s1]
                TU[r1:, R[s1].shape[1] :] = X2.T @ R[s2]
                TV = np.zeros((r1 + r2, V[parent].shape[0]))
                TV[:r1, : S[s1].shape[1]] = Y1t @ S[s1]
                TV[r1:, S[s1].shape[1] :] = Y2t @ S[s2]
                U[parent] = TU @ U[parent]
                V[parent] = TV @ V[parent]
    return HbsMatrix(tree=tree, D=D, U=U, V=V, B12=B12, B21=B21)
