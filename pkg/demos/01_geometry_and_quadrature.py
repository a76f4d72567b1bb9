"""Tour of the geometry and quadrature building blocks.

Builds each of the bundled contours, decomposes them into panels (with
corner grading where the contour has corners), lays down composite
Gauss-Legendre nodes, and sanity-checks the discretization against two
exact identities:

  * the quadrature weights sum to the arc length, and
  * the double-layer matrix maps the constant density to 1/2 + 1/2 = 1
    on a closed contour (the jump relation plus the interior Gauss
    identity).
"""

import numpy as np

import hbsolve as hb

contours = [
    ("unit circle", hb.UnitCircle(), 16, 0),
    ("smooth star", hb.SmoothStar(arms=5, amplitude=0.3), 40, 0),
    ("corner star", hb.CornerStar(), 6, 4),
    ("snake", hb.Snake(waves=2), 10, 3),
]

print(f"{'contour':<14}{'panels':>8}{'nodes':>8}{'sum w - length':>18}"
      f"{'max |A@1 - 1|':>16}")
for name, contour, per_unit, corner_levels in contours:
    panels = hb.decompose(contour, per_unit, corner_levels)
    grid = hb.build_grid(contour, panels, 10)

    # arc length from a much finer panelization, as an independent check
    # (panels never straddle a corner, so this converges spectrally)
    fine = hb.build_grid(contour, hb.decompose(contour, 8 * per_unit, 2), 16)
    length = np.sum(fine.weights)

    A = hb.assemble_dlp(grid)
    ones_err = np.max(np.abs(A @ np.ones(grid.size) - 1.0))
    print(f"{name:<14}{panels.count:>8}{grid.size:>8}"
          f"{np.sum(grid.weights) - length:>18.2e}{ones_err:>16.2e}")

print()
print("The smooth contours satisfy both identities to machine precision.")
print("On cornered contours the row-sum identity converges only as fast as")
print("the graded mesh resolves the corners; the next demos push it down.")
print()
print("Corner grading on the corner star (panel lengths approaching t=1):")
c = hb.CornerStar()
panels = hb.decompose(c, 6, 5)
lengths = panels.lengths()
near = np.argsort(np.abs(panels.panels[:, 1] - 1.0))[:6]
for i in sorted(near):
    a, b = panels.panels[i]
    print(f"  panel [{a:.6f}, {b:.6f}]  length {lengths[i]:.2e}")
print("each panel is half the length of its neighbor, so the mesh resolves")
print("the density singularity at the corner geometrically")
