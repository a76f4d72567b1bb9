"""Parametric contours and panel decompositions.

Four contour families are provided: a circle, a smooth star, a star whose
boundary is a chain of circular arcs meeting at corners, and a "snake"
(two parallel sine waves closed off by short vertical segments).  Each
contour is a simple closed curve traversed counterclockwise, exposing
position, first/second derivative, outward unit normal, speed and signed
curvature as vectorized callables of the parameter t in [0, T).

Corners are always panel endpoints, so quadrature nodes (which are
interior to panels) never hit a tangent discontinuity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MIN_PANEL_LENGTH = 1e-12


class Contour:
    """Base class for closed parametric curves.

    Subclasses implement ``position``, ``derivative`` and
    ``second_derivative`` as vectorized functions of the parameter.
    """

    kind: str = "abstract"
    period: float = 0.0
    corner_locations: np.ndarray = np.zeros(0)

    def position(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def second_derivative(self, t):
        raise NotImplementedError

    def speed(self, t):
        d = self.derivative(t)
        return np.hypot(d[..., 0], d[..., 1])

    def normal(self, t):
        """Outward unit normal (the tangent rotated by -90 degrees)."""
        d = self.derivative(t)
        s = np.hypot(d[..., 0], d[..., 1])
        return np.stack([d[..., 1] / s, -d[..., 0] / s], axis=-1)

    def curvature(self, t):
        """Signed curvature; positive where the curve bends like a CCW circle."""
        d = self.derivative(t)
        dd = self.second_derivative(t)
        s = np.hypot(d[..., 0], d[..., 1])
        return (d[..., 0] * dd[..., 1] - d[..., 1] * dd[..., 0]) / s**3

    def sections(self, base_panels_per_unit):
        """Panelling sections as (a, b, panel_count) triples covering [0, T).

        Section endpoints include every corner.  ``base_panels_per_unit`` is
        interpreted per family: total panels for the smooth closed curves,
        panels per arc segment for the corner star, panels per wavelength
        for the snake.
        """
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


class UnitCircle(Contour):
    kind = "unit_circle"

    def __init__(self, radius=1.0):
        if radius <= 0:
            raise ValueError(f"circle radius must be positive, got {radius}")
        self.radius = float(radius)
        self.period = 2 * np.pi
        self.corner_locations = np.zeros(0)

    def position(self, t):
        t = np.asarray(t, float)
        return self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def derivative(self, t):
        t = np.asarray(t, float)
        return self.radius * np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def second_derivative(self, t):
        t = np.asarray(t, float)
        return self.radius * np.stack([-np.cos(t), -np.sin(t)], axis=-1)

    def sections(self, base):
        return [(0.0, self.period, int(base))]

    def params(self):
        return {"radius": self.radius}


class SmoothStar(Contour):
    """Star-shaped smooth curve r(t) = 1 + amplitude*cos(arms*t)."""

    kind = "smooth_star"

    def __init__(self, arms=5, amplitude=0.3):
        arms = int(arms)
        if arms < 1:
            raise ValueError(f"smooth star needs arms >= 1, got {arms}")
        if not 0 < amplitude < 1:
            raise ValueError(f"smooth star amplitude must lie in (0, 1), got {amplitude}")
        self.arms = arms
        self.amplitude = float(amplitude)
        self.period = 2 * np.pi
        self.corner_locations = np.zeros(0)

    def _r(self, t):
        return 1.0 + self.amplitude * np.cos(self.arms * t)

    def position(self, t):
        t = np.asarray(t, float)
        r = self._r(t)
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)

    def derivative(self, t):
        t = np.asarray(t, float)
        r = self._r(t)
        dr = -self.amplitude * self.arms * np.sin(self.arms * t)
        return np.stack(
            [dr * np.cos(t) - r * np.sin(t), dr * np.sin(t) + r * np.cos(t)], axis=-1
        )

    def second_derivative(self, t):
        t = np.asarray(t, float)
        r = self._r(t)
        dr = -self.amplitude * self.arms * np.sin(self.arms * t)
        ddr = -self.amplitude * self.arms**2 * np.cos(self.arms * t)
        return np.stack(
            [
                ddr * np.cos(t) - 2 * dr * np.sin(t) - r * np.cos(t),
                ddr * np.sin(t) + 2 * dr * np.cos(t) - r * np.sin(t),
            ],
            axis=-1,
        )

    def sections(self, base):
        return [(0.0, self.period, int(base))]

    def params(self):
        return {"arms": self.arms, "amplitude": self.amplitude}


class CornerStar(Contour):
    """Closed chain of circular arcs through vertices of alternating radius.

    Vertices sit at equispaced angles, alternating between the two radii;
    each pair of consecutive vertices is joined by a circular arc that
    bulges away from the origin.  The tangent is discontinuous at every
    vertex.  The parameter runs over [0, segments), one unit per arc.
    """

    kind = "corner_star"

    def __init__(self, segments=10, radii=(0.9, 1.1), arc_radius_scale=2.0):
        segments = int(segments)
        if segments < 4 or segments % 2 != 0:
            raise ValueError(f"corner star needs an even segment count >= 4, got {segments}")
        radii = tuple(float(r) for r in radii)
        if len(radii) != 2 or min(radii) <= 0:
            raise ValueError(f"corner star needs two positive radii, got {radii}")
        if arc_radius_scale < 0.6:
            raise ValueError("arc_radius_scale below 0.6 cannot span the chord")
        self.segments = segments
        self.radii = radii
        self.arc_radius_scale = float(arc_radius_scale)
        self.period = float(segments)
        self.corner_locations = np.arange(segments, dtype=float)

        theta = 2 * np.pi * np.arange(segments) / segments
        rad = np.where(np.arange(segments) % 2 == 0, radii[0], radii[1])
        verts = np.stack([rad * np.cos(theta), rad * np.sin(theta)], axis=-1)

        self._centers = np.zeros((segments, 2))
        self._rho = np.zeros(segments)
        self._phi0 = np.zeros(segments)
        self._dphi = np.zeros(segments)
        for j in range(segments):
            p0, p1 = verts[j], verts[(j + 1) % segments]
            chord = np.linalg.norm(p1 - p0)
            rho = self.arc_radius_scale * chord
            mid = 0.5 * (p0 + p1)
            perp = np.array([-(p1 - p0)[1], (p1 - p0)[0]]) / chord
            h = np.sqrt(rho**2 - 0.25 * chord**2)
            # pick the center closer to the origin so the arc bulges outward
            c_a, c_b = mid + h * perp, mid - h * perp
            center = c_a if np.linalg.norm(c_a) < np.linalg.norm(c_b) else c_b
            phi0 = np.arctan2(*(p0 - center)[::-1])
            phi1 = np.arctan2(*(p1 - center)[::-1])
            dphi = (phi1 - phi0 + np.pi) % (2 * np.pi) - np.pi
            if dphi <= 0:
                raise ValueError("corner star arcs must advance counterclockwise")
            self._centers[j] = center
            self._rho[j] = rho
            self._phi0[j] = phi0
            self._dphi[j] = dphi

    def _angles(self, t):
        t = np.asarray(t, float)
        j = np.clip(np.floor(t).astype(int), 0, self.segments - 1)
        phi = self._phi0[j] + (t - j) * self._dphi[j]
        return j, phi

    def position(self, t):
        j, phi = self._angles(t)
        return self._centers[j] + self._rho[j][..., None] * np.stack(
            [np.cos(phi), np.sin(phi)], axis=-1
        )

    def derivative(self, t):
        j, phi = self._angles(t)
        w = self._rho[j] * self._dphi[j]
        return np.stack([-w * np.sin(phi), w * np.cos(phi)], axis=-1)

    def second_derivative(self, t):
        j, phi = self._angles(t)
        w = self._rho[j] * self._dphi[j] ** 2
        return np.stack([-w * np.cos(phi), -w * np.sin(phi)], axis=-1)

    def sections(self, base):
        return [(float(j), float(j + 1), int(base)) for j in range(self.segments)]

    def params(self):
        return {
            "segments": self.segments,
            "radii": list(self.radii),
            "arc_radius_scale": self.arc_radius_scale,
        }


class Snake(Contour):
    """Thin channel between two sine waves, closed by vertical end segments.

    The bottom wave runs left to right, the top wave right to left, with a
    vertical gap between them; the four junctions are corners.  The
    parameter is x-distance along the waves and y-distance along the
    vertical segments.
    """

    kind = "snake"

    def __init__(self, waves=2, amplitude=1.0, gap=0.2):
        waves = int(waves)
        if waves < 1:
            raise ValueError(f"snake needs waves >= 1, got {waves}")
        if amplitude <= 0 or gap <= 0:
            raise ValueError("snake amplitude and gap must be positive")
        self.waves = waves
        self.amplitude = float(amplitude)
        self.gap = float(gap)
        self.span = 2 * np.pi * waves
        self.period = 2 * self.span + 2 * self.gap
        self._breaks = np.array(
            [0.0, self.span, self.span + self.gap, 2 * self.span + self.gap, self.period]
        )
        self.corner_locations = self._breaks[:4].copy()

    def _pieces(self, t):
        t = np.asarray(t, float)
        piece = np.clip(np.searchsorted(self._breaks, t, side="right") - 1, 0, 3)
        return t, piece

    def position(self, t):
        t, piece = self._pieces(t)
        h, a, sp, g = self.gap / 2, self.amplitude, self.span, self.gap
        x = np.empty_like(t)
        y = np.empty_like(t)
        m = piece == 0
        x[m] = t[m]
        y[m] = a * np.sin(t[m]) - h
        m = piece == 1
        x[m] = sp
        y[m] = -h + (t[m] - sp)
        m = piece == 2
        x[m] = sp - (t[m] - sp - g)
        y[m] = a * np.sin(x[m]) + h
        m = piece == 3
        x[m] = 0.0
        y[m] = h - (t[m] - 2 * sp - g)
        return np.stack([x, y], axis=-1)

    def derivative(self, t):
        t, piece = self._pieces(t)
        a, sp, g = self.amplitude, self.span, self.gap
        dx = np.empty_like(t)
        dy = np.empty_like(t)
        m = piece == 0
        dx[m] = 1.0
        dy[m] = a * np.cos(t[m])
        m = piece == 1
        dx[m] = 0.0
        dy[m] = 1.0
        m = piece == 2
        dx[m] = -1.0
        dy[m] = -a * np.cos(sp - (t[m] - sp - g))
        m = piece == 3
        dx[m] = 0.0
        dy[m] = -1.0
        return np.stack([dx, dy], axis=-1)

    def second_derivative(self, t):
        t, piece = self._pieces(t)
        a, sp, g = self.amplitude, self.span, self.gap
        ddx = np.zeros_like(t)
        ddy = np.zeros_like(t)
        m = piece == 0
        ddy[m] = -a * np.sin(t[m])
        m = piece == 2
        ddy[m] = -a * np.sin(sp - (t[m] - sp - g))
        return np.stack([ddx, ddy], axis=-1)

    def sections(self, base):
        # waves get `base` panels per wavelength; verticals get 4 panels each
        b = self._breaks
        n_wave = int(base) * self.waves
        return [
            (b[0], b[1], n_wave),
            (b[1], b[2], 4),
            (b[2], b[3], n_wave),
            (b[3], b[4], 4),
        ]

    def params(self):
        return {"waves": self.waves, "amplitude": self.amplitude, "gap": self.gap}


_KINDS = {
    "unit_circle": UnitCircle,
    "smooth_star": SmoothStar,
    "corner_star": CornerStar,
    "snake": Snake,
}


def make_contour(kind, **params) -> Contour:
    """Construct a contour by kind name; raises ValueError on bad input."""
    key = str(kind).lower().replace("-", "_")
    if key not in _KINDS:
        raise ValueError(f"unknown contour kind {kind!r}; choose from {sorted(_KINDS)}")
    return _KINDS[key](**params)


@dataclass(frozen=True)
class PanelDecomposition:
    """Ordered parameter intervals tiling [0, T), with corner grading."""

    panels: np.ndarray  # (m, 2) interval endpoints
    refinement_levels: int

    @property
    def count(self):
        return self.panels.shape[0]

    def lengths(self):
        return self.panels[:, 1] - self.panels[:, 0]


def _grade_toward(a, b, levels, corner_at_start):
    """Split [a, b] into levels+1 panels whose lengths halve toward the corner."""
    h = b - a
    offsets = h / 2.0 ** np.arange(levels, -1, -1.0)  # h/2^levels ... h/2, h
    if corner_at_start:
        cuts = np.concatenate([[a], a + offsets])
    else:
        cuts = np.concatenate([(b - offsets)[::-1], [b]])
    return np.stack([cuts[:-1], cuts[1:]], axis=-1)


def decompose(contour: Contour, base_panels_per_unit: int, corner_refine_levels: int) -> PanelDecomposition:
    """Panel the contour, dyadically refining toward every corner.

    Each panel adjacent to a corner is replaced by ``corner_refine_levels + 1``
    panels whose lengths halve toward the corner (adjacent length ratio 1/2,
    innermost pair equal).  Smooth contours are panelled near-uniformly.
    """
    if base_panels_per_unit < 1 or corner_refine_levels < 0:
        raise ValueError("panel and refinement counts must be >= 1 and >= 0")
    corners = set(np.round(contour.corner_locations, 12))
    corners |= {np.round(contour.period, 12)} if 0.0 in corners else set()

    pieces = []
    for a, b, count in contour.sections(base_panels_per_unit):
        cuts = np.linspace(a, b, count + 1)
        base = np.stack([cuts[:-1], cuts[1:]], axis=-1)
        start_corner = np.round(a, 12) in corners
        end_corner = np.round(b, 12) in corners
        lv = corner_refine_levels
        if lv > 0 and start_corner and count > 0:
            first, base = base[0], base[1:]
            pieces.append(_grade_toward(first[0], first[1], lv, corner_at_start=True))
        if lv > 0 and end_corner and base.shape[0] > 0:
            last, base = base[-1], base[:-1]
            pieces.append(base)
            pieces.append(_grade_toward(last[0], last[1], lv, corner_at_start=False))
        else:
            pieces.append(base)
    panels = np.concatenate([p for p in pieces if p.size], axis=0)
    order = np.argsort(panels[:, 0])
    panels = panels[order]
    if np.min(panels[:, 1] - panels[:, 0]) < MIN_PANEL_LENGTH:
        raise ValueError(
            f"grading produced a panel shorter than {MIN_PANEL_LENGTH:g} in parameter; "
            "reduce corner_refine_levels"
        )
    return PanelDecomposition(panels=panels, refinement_levels=corner_refine_levels)


def save_geometry_spec(path, contour: Contour, panels_per_unit: int, corner_levels: int):
    spec = {
        "kind": contour.kind,
        "params": contour.params(),
        "panels_per_unit": int(panels_per_unit),
        "corner_levels": int(corner_levels),
    }
    with open(path, "w") as f:
        json.dump(spec, f, indent=2)


def load_geometry_spec(path):
    """Read a geometry spec JSON file -> (contour, panels_per_unit, corner_levels)."""
    with open(path) as f:
        spec = json.load(f)
    for key in ("kind", "params", "panels_per_unit", "corner_levels"):
        if key not in spec:
            raise ValueError(f"geometry spec missing field {key!r}")
    contour = make_contour(spec["kind"], **spec["params"])
    return contour, int(spec["panels_per_unit"]), int(spec["corner_levels"])
