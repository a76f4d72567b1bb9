"""Compressing a boundary-integral matrix to HBS form.

Assembles the double-layer Nystrom matrix on a smooth star, compresses
it two ways -- from the dense matrix, and matrix-free through proxy
circles -- and compares ranks, storage, and matvec accuracy.  The proxy
mode never forms the N x N matrix; it samples only near-field entries
plus a small ring of proxy points per node, which is what makes the
solver O(N) at large sizes.
"""

import time

import numpy as np

import hbsolve as hb

star = hb.SmoothStar()
grid = hb.build_grid(star, hb.decompose(star, 160, 0), 10)
print(f"smooth star, N = {grid.size}")

A = hb.assemble_dlp(grid)
rng = np.random.default_rng(0)
q = rng.standard_normal(grid.size)
ref = A @ q

for mode in ("dense", "proxy"):
    cfg = hb.CompressionConfig(mode=mode, tol=1e-10)
    t0 = time.monotonic()
    Ah, skel = hb.compress(grid, cfg)
    dt = time.monotonic() - t0
    err = np.linalg.norm(hb.hbs_matvec(Ah, q) - ref) / np.linalg.norm(ref)
    stored = Ah.storage_count()
    print(f"\n{mode} mode: compressed in {dt:.2f}s")
    print(f"  matvec relative error  {err:.2e}")
    print(f"  stored entries         {stored} ({stored / grid.size**2:.1%} of dense)")
    print(f"  ranks by level (leaf -> top):")
    for level in range(Ah.tree.levels, 0, -1):
        ks = [Ah.rank_of(t) for t in Ah.tree.nodes_at_level(level)]
        print(f"    level {level}: min {min(ks):3d}  max {max(ks):3d}  "
              f"mean {np.mean(ks):6.1f}")

print("\nThe ranks stay bounded as the tree coarsens -- the signature of a")
print("kernel matrix whose off-diagonal blocks are numerically low rank.")
print("Proxy ranks run slightly above dense ones (the proxy ring spans all")
print("possible harmonic far fields, not just the one this contour produces).")
