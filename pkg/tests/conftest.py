"""Shared builders for the test suite."""

import numpy as np
import pytest

import hbsolve as hb


def circle_grid(n_panels=16, nodes=10):
    c = hb.UnitCircle()
    return hb.build_grid(c, hb.decompose(c, n_panels, 0), nodes)


def star_grid(n_panels=80, nodes=10):
    c = hb.SmoothStar()
    return hb.build_grid(c, hb.decompose(c, n_panels, 0), nodes)


def random_hbs(rng, n=256, target_leaf=32, max_rank=6):
    """Random well-formed HBS matrix with heterogeneous ranks."""
    tree = hb.build_tree(n, target_leaf)
    D, U, V, B12, B21 = {}, {}, {}, {}, {}
    ranks = {}
    for tau in tree.leaves:
        m = tree.size_of(tau)
        k = int(rng.integers(1, min(max_rank, m) + 1))
        ranks[tau] = k
        D[tau] = rng.standard_normal((m, m))
        U[tau] = rng.standard_normal((m, k))
        V[tau] = rng.standard_normal((m, k))
    for level in range(tree.levels - 1, 0, -1):
        for tau in tree.nodes_at_level(level):
            rows = ranks[2 * tau] + ranks[2 * tau + 1]
            k = int(rng.integers(1, min(max_rank, rows) + 1))
            ranks[tau] = k
            U[tau] = rng.standard_normal((rows, k))
            V[tau] = rng.standard_normal((rows, k))
    for level in range(0, tree.levels):
        for tau in tree.nodes_at_level(level):
            B12[tau] = rng.standard_normal((ranks[2 * tau], ranks[2 * tau + 1]))
            B21[tau] = rng.standard_normal((ranks[2 * tau + 1], ranks[2 * tau]))
    return hb.HbsMatrix(tree=tree, D=D, U=U, V=V, B12=B12, B21=B21)


def random_block_separable(rng, p=4, n=6, k=2):
    """Random invertible single-level block-separable matrix."""
    from hbsolve.inversion import BlockSeparableMatrix

    D = [rng.standard_normal((n, n)) + 3 * np.eye(n) for _ in range(p)]
    U = [rng.standard_normal((n, k)) for _ in range(p)]
    V = [rng.standard_normal((n, k)) for _ in range(p)]
    core = rng.standard_normal((p * k, p * k))
    for i in range(p):
        core[i * k : (i + 1) * k, i * k : (i + 1) * k] = 0.0
    return BlockSeparableMatrix(D=D, U=U, V=V, core=core)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
