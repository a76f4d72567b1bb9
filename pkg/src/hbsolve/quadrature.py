"""Composite Gauss-Legendre grids and the Laplace double-layer system.

The Nystrom system solved here is the interior Dirichlet boundary integral
equation

    (1/2) q(x) + int_Gamma K(x, x') q(x') dl(x') = f(x),

with the double-layer kernel evaluated using the *inward* unit normal,

    K(x, x') = n_in(x') . (x - x') / (2 pi |x - x'|^2),

so that the operator applied to the constant density equals +1 on a closed
contour and 1/2 I + K is invertible (on the unit circle K is the constant
+1/(4 pi)).  The diagonal entry uses the smooth limit K(x, x) =
kappa(x) / (4 pi) with kappa the signed curvature of the CCW
parameterization.  Interior values of the solution are recovered from the
same kernel: u(z) = sum_j K(z, x_j) w_j q_j for z inside.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .geometry import Contour, PanelDecomposition

COINCIDENT_NODE_TOL = 1e-14


class DegenerateGridError(ValueError):
    """Raised when distinct quadrature nodes (nearly) coincide."""


def gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    if not 1 <= n <= 64:
        raise ValueError(f"gauss_legendre supports 1 <= n <= 64, got {n}")
    return np.polynomial.legendre.leggauss(int(n))


@dataclass
class QuadratureGrid:
    """Nystrom grid: parameter nodes, plane points, outward normals, weights."""

    t: np.ndarray          # (N,) parameter values
    points: np.ndarray     # (N, 2)
    normals: np.ndarray    # (N, 2) outward unit normals
    weights: np.ndarray    # (N,) Gauss weight times curve speed
    panel_of: np.ndarray   # (N,) node -> panel index
    curvature: np.ndarray  # (N,) signed curvature at the nodes

    @property
    def size(self):
        return self.t.shape[0]

    @property
    def panel_count(self):
        return int(self.panel_of[-1]) + 1 if self.size else 0

    @property
    def nodes_per_panel(self):
        return self.size // self.panel_count


def build_grid(contour: Contour, panels: PanelDecomposition, nodes_per_panel: int) -> QuadratureGrid:
    """Composite Gauss-Legendre grid over a panel decomposition.

    Node ordering follows the parameter, so each panel occupies a
    contiguous index block.
    """
    if nodes_per_panel < 2:
        raise ValueError(f"need at least 2 nodes per panel, got {nodes_per_panel}")
    xg, wg = gauss_legendre(nodes_per_panel)
    a = panels.panels[:, 0][:, None]
    b = panels.panels[:, 1][:, None]
    t = (0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]).ravel()
    w_ref = (0.5 * (b - a) * wg[None, :]).ravel()
    return QuadratureGrid(
        t=t,
        points=contour.position(t),
        normals=contour.normal(t),
        weights=w_ref * contour.speed(t),
        panel_of=np.repeat(np.arange(panels.count), nodes_per_panel),
        curvature=contour.curvature(t),
    )


def dlp_kernel_block(grid: QuadratureGrid, rows, cols, check_coincident=True):
    """Kernel values K(x_r, x_c) for index arrays rows/cols (no weights).

    Entries with equal global index get the curvature limit; coincident
    *distinct* nodes raise DegenerateGridError.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    d = grid.points[rows][:, None, :] - grid.points[cols][None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    same = rows[:, None] == cols[None, :]
    if check_coincident and np.any(r2[~same] < COINCIDENT_NODE_TOL**2):
        raise DegenerateGridError(
            f"distinct quadrature nodes closer than {COINCIDENT_NODE_TOL:g}"
        )
    n_in = -grid.normals[cols]
    num = np.einsum("jk,ijk->ij", n_in, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        K = num / (2 * np.pi * r2)
    if np.any(same):
        K[same] = np.broadcast_to(grid.curvature[cols] / (4 * np.pi), K.shape)[same]
    return K


def nystrom_block(grid: QuadratureGrid, rows, cols):
    """Submatrix A(rows, cols) of the Nystrom system (1/2) I + K diag(w)."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    A = dlp_kernel_block(grid, rows, cols) * grid.weights[cols][None, :]
    same = rows[:, None] == cols[None, :]
    A[same] += 0.5
    return A


def assemble_dlp(grid: QuadratureGrid) -> np.ndarray:
    """Dense N x N Nystrom matrix for the double-layer equation."""
    if grid.size == 0:
        raise ValueError("empty grid")
    if grid.panel_count < 2:
        raise ValueError("grid needs at least 2 panels")
    idx = np.arange(grid.size)
    return nystrom_block(grid, idx, idx)


def dense_matvec(grid: QuadratureGrid, q, block_size=1024):
    """A @ q assembled row-block by row-block; never stores the N x N matrix."""
    q = np.asarray(q, float)
    out = np.empty_like(q)
    idx = np.arange(grid.size)
    for start in range(0, grid.size, block_size):
        rows = idx[start : start + block_size]
        out[rows] = nystrom_block(grid, rows, idx) @ q
    return out


def dense_matvec_transpose(grid: QuadratureGrid, q, block_size=1024):
    """A.T @ q assembled column-block by column-block."""
    q = np.asarray(q, float)
    out = np.empty_like(q)
    idx = np.arange(grid.size)
    for start in range(0, grid.size, block_size):
        cols = idx[start : start + block_size]
        out[cols] = nystrom_block(grid, idx, cols).T @ q
    return out


def eval_dlp_potential(grid: QuadratureGrid, density, targets):
    """Double-layer potential at off-curve target points."""
    targets = np.atleast_2d(np.asarray(targets, float))
    d = targets[:, None, :] - grid.points[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    num = np.einsum("jk,ijk->ij", -grid.normals, d)
    K = num / (2 * np.pi * r2)
    return K @ (grid.weights * np.asarray(density, float))


def winding_number(grid: QuadratureGrid, targets):
    """Winding number of the (ordered, closed) node polygon around targets."""
    targets = np.atleast_2d(np.asarray(targets, float))
    v = grid.points[None, :, :] - targets[:, None, :]
    w = np.roll(v, -1, axis=1)
    cross = v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]
    dot = np.einsum("ijk,ijk->ij", v, w)
    return np.sum(np.arctan2(cross, dot), axis=1) / (2 * np.pi)


def interior_probe_points(grid: QuadratureGrid, count=10):
    """Heuristic well-separated interior points for harmonic spot checks.

    Candidates are boundary nodes pulled toward the node centroid and
    nodes offset along the inward normal; candidates outside the domain
    (winding number != 1) or too close to the boundary are dropped, and
    the deepest survivors win.
    """
    pts = grid.points
    c = pts.mean(axis=0)
    scale = np.max(np.linalg.norm(pts - c, axis=1))
    stride = max(1, grid.size // (4 * count))
    seeds = pts[::stride]
    normals = grid.normals[::stride]
    cands = [c + s * (seeds - c) for s in (0.2, 0.4, 0.6)]
    cands += [seeds - d * scale * normals for d in (0.02, 0.05, 0.1)]
    cands = np.concatenate(cands, axis=0)

    inside = np.abs(winding_number(grid, cands) - 1.0) < 1e-6
    cands = cands[inside]
    if cands.shape[0] == 0:
        raise ValueError("no interior probe points found; geometry too thin?")
    dist = np.min(np.linalg.norm(cands[:, None, :] - pts[None, :, :], axis=2), axis=1)
    order = np.argsort(-dist)
    return cands[order[:count]]


def harmonic_trace(grid: QuadratureGrid, source):
    """Boundary values of u(x) = log|x - source| (source outside the domain)."""
    source = np.asarray(source, float)
    return np.log(np.linalg.norm(grid.points - source[None, :], axis=1))


# ---------------------------------------------------------------------------
# File formats: grid CSV and dense binary dumps
# ---------------------------------------------------------------------------

GRID_CSV_FIELDS = ("t", "x", "y", "nx", "ny", "w", "panel")


def save_grid_csv(path, grid: QuadratureGrid):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(GRID_CSV_FIELDS)
        for i in range(grid.size):
            writer.writerow(
                [
                    f"{grid.t[i]:.17g}",
                    f"{grid.points[i, 0]:.17g}",
                    f"{grid.points[i, 1]:.17g}",
                    f"{grid.normals[i, 0]:.17g}",
                    f"{grid.normals[i, 1]:.17g}",
                    f"{grid.weights[i]:.17g}",
                    int(grid.panel_of[i]),
                ]
            )


def _curvature_from_panels(t, points, panel_of):
    """Signed curvature recovered per panel from a polynomial fit in t.

    The Gauss nodes of a panel interpolate the (analytic) coordinate
    functions to near machine precision, so differentiating the fit gives
    an accurate curvature without knowing the underlying contour.
    """
    kappa = np.zeros(len(t))
    for p in np.unique(panel_of):
        sel = np.where(panel_of == p)[0]
        ts = t[sel]
        deg = len(sel) - 1
        cx = np.polynomial.chebyshev.Chebyshev.fit(ts, points[sel, 0], deg)
        cy = np.polynomial.chebyshev.Chebyshev.fit(ts, points[sel, 1], deg)
        dx, dy = cx.deriv()(ts), cy.deriv()(ts)
        ddx, ddy = cx.deriv(2)(ts), cy.deriv(2)(ts)
        kappa[sel] = (dx * ddy - dy * ddx) / np.hypot(dx, dy) ** 3
    return kappa


def load_grid_csv(path) -> QuadratureGrid:
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.ndim == 0:
        data = data.reshape(1)
    t = data["t"]
    points = np.stack([data["x"], data["y"]], axis=-1)
    panel_of = data["panel"].astype(int)
    return QuadratureGrid(
        t=t,
        points=points,
        normals=np.stack([data["nx"], data["ny"]], axis=-1),
        weights=data["w"],
        panel_of=panel_of,
        curvature=_curvature_from_panels(t, points, panel_of),
    )


DMAT_MAGIC = b"DMAT"


def save_dense(path, A):
    """Binary dense dump: 16-byte header (magic, u32 rows, u32 cols, pad)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIII", DMAT_MAGIC, A.shape[0], A.shape[1], 0))
        f.write(A.tobytes())


def load_dense(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, rows, cols, _ = struct.unpack("<4sIII", f.read(16))
        if magic != DMAT_MAGIC:
            raise ValueError(f"not a DMAT file: bad magic {magic!r}")
        data = np.frombuffer(f.read(rows * cols * 8), dtype=np.float64)
    return data.reshape(rows, cols).copy()
