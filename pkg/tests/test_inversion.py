import numpy as np
import pytest

import hbsolve as hb
from hbsolve.inversion import (
    BlockSeparableMatrix,
    SingularBlockError,
    apply_inverse,
    bs_invert,
    hbs_invert,
    inverse_to_hbs,
    inverse_transpose,
    reformat_orthonormal,
)
from conftest import circle_grid, random_block_separable, random_hbs


def compressed_circle(n_panels, target_leaf=64):
    grid = circle_grid(n_panels, 10)
    A = hb.assemble_dlp(grid)
    tree = hb.build_tree(grid.size, target_leaf)
    Ah, _ = hb.compress_dense(A, tree, hb.CompressionConfig(mode="dense"))
    return grid, A, Ah


# ---------------------------------------------------------------------------
# Single-level block-separable inversion
# ---------------------------------------------------------------------------


def test_bs_invert_decoupled_blocks(rng):
    # zero core: A is block diagonal and the inverse is just D^-1 per block
    D = [rng.standard_normal((5, 5)) + 4 * np.eye(5) for _ in range(3)]
    U = [rng.standard_normal((5, 2)) for _ in range(3)]
    A = BlockSeparableMatrix(D=D, U=U, V=U, core=np.zeros((6, 6)))
    inv = bs_invert(A)
    v = rng.standard_normal(15)
    ref = np.linalg.solve(A.to_dense(), v)
    assert np.allclose(inv.apply(v), ref, atol=1e-12)


def test_bs_invert_matches_dense(rng):
    for _ in range(10):
        A = random_block_separable(rng, p=5, n=7, k=2)
        dense = A.to_dense()
        inv = bs_invert(A)
        v = rng.standard_normal(35)
        ref = np.linalg.solve(dense, v)
        err = np.linalg.norm(inv.apply(v) - ref)
        assert err <= 1e-10 * max(np.linalg.norm(ref), np.linalg.norm(v))


def test_bs_invert_names_singular_block(rng):
    A = random_block_separable(rng, p=3, n=4, k=1)
    A.D[1] = np.zeros((4, 4))
    with pytest.raises(SingularBlockError, match="block 1"):
        bs_invert(A)


def test_ill_conditioned_block_warns(rng):
    A = random_block_separable(rng, p=2, n=4, k=1)
    A.D[0] = np.diag([1.0, 1.0, 1.0, 1e-15])
    with pytest.warns(RuntimeWarning, match="ill-conditioned"):
        bs_invert(A)


def test_bs_invert_spd_reduced_blocks(rng):
    # symmetric positive definite input: the Dhat blocks and the shifted
    # core it produces stay symmetric positive definite
    p, n, k = 4, 6, 2
    import scipy.linalg

    D = []
    U = []
    for _ in range(p):
        M = rng.standard_normal((n, n))
        D.append(M @ M.T + n * np.eye(n))
        U.append(rng.standard_normal((n, k)))
    core = rng.standard_normal((p * k, p * k))
    core = core + core.T
    for i in range(p):
        core[i * k : (i + 1) * k, i * k : (i + 1) * k] = 0.0
    A = BlockSeparableMatrix(D=D, U=U, V=U, core=core)
    dense = A.to_dense()
    shift = (1.0 - np.linalg.eigvalsh(dense).min()) * 1.0
    if shift > 0:
        for i in range(p):
            A.D[i] = A.D[i] + shift * np.eye(n)
    dense = A.to_dense()
    assert np.linalg.eigvalsh(dense).min() > 0
    inv = bs_invert(A)
    for Dh in inv.Dhat:
        assert np.allclose(Dh, Dh.T, atol=1e-10)
        assert np.linalg.eigvalsh(0.5 * (Dh + Dh.T)).min() > 0
    shifted = A.core + scipy.linalg.block_diag(*inv.Dhat)
    assert np.linalg.eigvalsh(0.5 * (shifted + shifted.T)).min() > 0


# ---------------------------------------------------------------------------
# Recursive HBS inversion
# ---------------------------------------------------------------------------


def test_hbs_invert_depth_zero(rng):
    tree = hb.build_tree(6, 10)
    D = rng.standard_normal((6, 6)) + 3 * np.eye(6)
    A = hb.HbsMatrix(tree=tree, D={1: D}, U={}, V={}, B12={}, B21={})
    inv = hbs_invert(A)
    v = rng.standard_normal(6)
    assert np.allclose(apply_inverse(inv, v), np.linalg.solve(D, v), atol=1e-12)


def test_inverse_residual(rng):
    grid, A_dense, Ah = compressed_circle(32)  # N = 320
    inv = hbs_invert(Ah)
    for _ in range(5):
        b = rng.standard_normal(320)
        q = apply_inverse(inv, b)
        assert np.linalg.norm(A_dense @ q - b) <= 1e-8 * np.linalg.norm(b)


def test_inverse_composes_to_identity(rng):
    _, _, Ah = compressed_circle(128)  # N = 1280
    inv = hbs_invert(Ah)
    for _ in range(3):
        q = rng.standard_normal(1280)
        back = apply_inverse(inv, hb.hbs_matvec(Ah, q))
        assert np.linalg.norm(back - q) <= 1e-8 * np.linalg.norm(q)


def test_apply_inverse_dimension_check(rng):
    A = random_hbs(rng)
    inv = hbs_invert(A)
    with pytest.raises(ValueError):
        apply_inverse(inv, np.zeros(7))


def test_hbs_invert_names_singular_node(rng):
    A = random_hbs(rng, n=64, target_leaf=16)
    leaf = next(iter(A.tree.leaves))
    A.D[leaf] = np.zeros_like(A.D[leaf])
    with pytest.raises(SingularBlockError, match=f"node {leaf}"):
        hbs_invert(A)


def test_inverse_transpose(rng):
    _, A_dense, Ah = compressed_circle(32)
    invT = inverse_transpose(hbs_invert(Ah))
    b = rng.standard_normal(320)
    ref = np.linalg.solve(A_dense.T, b)
    assert np.linalg.norm(apply_inverse(invT, b) - ref) <= 1e-8 * np.linalg.norm(b)


# ---------------------------------------------------------------------------
# Reformatting the factored inverse as an HBS matrix
# ---------------------------------------------------------------------------


def test_inverse_to_hbs_matches_apply(rng):
    _, _, Ah = compressed_circle(64)  # N = 640
    inv = hbs_invert(Ah)
    Binv = inverse_to_hbs(inv)
    assert hb.validate(Binv) == []
    for _ in range(5):
        u = rng.standard_normal(640)
        direct = apply_inverse(inv, u)
        via_hbs = hb.hbs_matvec(Binv, u)
        assert np.linalg.norm(via_hbs - direct) <= 1e-12 * np.linalg.norm(direct)


def test_inverse_to_hbs_one_level_by_hand(rng):
    # two leaves: the reformatted inverse must expand to
    # [[G1 + E1 H11 F1*, E1 H12 F2*], [E2 H21 F1*, G2 + E2 H22 F2*]]
    # where H = G[1] is the dense inverse of the reduced system
    _, _, Ah = compressed_circle(16, target_leaf=128)  # N = 160, one level
    assert Ah.tree.levels == 1
    inv = hbs_invert(Ah)
    B = inverse_to_hbs(inv)
    k1 = inv.Dhat[2].shape[0]
    H = inv.G[1]
    top = np.hstack(
        [inv.G[2] + inv.E[2] @ H[:k1, :k1] @ inv.F[2].T,
         inv.E[2] @ H[:k1, k1:] @ inv.F[3].T]
    )
    bot = np.hstack(
        [inv.E[3] @ H[k1:, :k1] @ inv.F[2].T,
         inv.G[3] + inv.E[3] @ H[k1:, k1:] @ inv.F[3].T]
    )
    assert np.allclose(hb.expand_dense(B), np.vstack([top, bot]), atol=1e-13)


def test_inverse_to_hbs_residual(rng):
    _, A_dense, Ah = compressed_circle(32)
    inv = hbs_invert(Ah)
    Binv = inverse_to_hbs(inv)
    R = hb.expand_dense(Binv) @ A_dense - np.eye(320)
    cond = np.linalg.cond(A_dense)
    assert np.linalg.norm(R) <= 100 * np.finfo(float).eps * cond * 320


def test_reformat_orthonormal_postconditions(rng):
    for _ in range(5):
        A = random_hbs(rng)
        Q = reformat_orthonormal(A)
        # same represented matrix
        E0, E1 = hb.expand_dense(A), hb.expand_dense(Q)
        assert np.linalg.norm(E1 - E0) <= 1e-12 * np.linalg.norm(E0)
        # orthonormal bases
        for tau in Q.U:
            assert np.linalg.norm(Q.U[tau].T @ Q.U[tau] - np.eye(Q.U[tau].shape[1])) <= 1e-12
            assert np.linalg.norm(Q.V[tau].T @ Q.V[tau] - np.eye(Q.V[tau].shape[1])) <= 1e-12
        # B blocks rectangular diagonal, nonnegative, nonincreasing
        for store in (Q.B12, Q.B21):
            for B in store.values():
                d = np.diag(B).copy()
                off = B - np.diag(d)[: B.shape[0], : B.shape[1]] if B.shape[0] == B.shape[1] else None
                full = np.zeros_like(B)
                np.fill_diagonal(full, d)
                assert np.array_equal(B, full)
                assert np.all(d >= 0)
                assert np.all(np.diff(d) <= 1e-14)


def test_reformat_orthonormal_depth_zero(rng):
    tree = hb.build_tree(4, 8)
    D = rng.standard_normal((4, 4))
    A = hb.HbsMatrix(tree=tree, D={1: D}, U={}, V={}, B12={}, B21={})
    Q = reformat_orthonormal(A)
    assert np.array_equal(Q.D[1], D)


def test_reformat_of_reformatted_inverse(rng):
    # the full pipeline shape: invert, reformat to HBS, orthonormalize
    _, A_dense, Ah = compressed_circle(32)
    Binv = reformat_orthonormal(inverse_to_hbs(hbs_invert(Ah)))
    assert hb.validate(Binv) == []
    b = rng.standard_normal(320)
    q = hb.hbs_matvec(Binv, b)
    assert np.linalg.norm(A_dense @ q - b) <= 1e-8 * np.linalg.norm(b)
