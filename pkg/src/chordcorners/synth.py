"""Synthetic corner-truth fixtures: polygons, stars, rounded rectangles, blobs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FixtureError, ParameterError
from .image import GrayImage

_SUPERSAMPLE = 4
_MARGIN = 2.0


@dataclass(frozen=True, eq=False)
class SynthFixture:
    """A rendered shape with exact analytic corner ground truth."""

    fixture_id: str
    image: GrayImage
    true_corners: np.ndarray  # (N, 2) of (x, y); empty for cornerless shapes
    corner_angles: np.ndarray  # (N,) vertex angle in [0, 180] degrees
    shape_kind: str  # polygon | star | rounded_rect | blob_no_corners
    params: dict = field(default_factory=dict)


def _coverage(inside, size: int) -> np.ndarray:
    """Fraction of each pixel covered by the shape, via subpixel sampling."""
    s = _SUPERSAMPLE
    coords = (np.arange(size * s) + 0.5) / s - 0.5
    xs, ys = np.meshgrid(coords, coords)
    mask = inside(xs, ys)
    return mask.reshape(size, s, size, s).mean(axis=(1, 3))


def _render(inside, size: int, fg: float, bg: float) -> GrayImage:
    cov = _coverage(inside, size)
    return GrayImage(bg + cov * (fg - bg))


def _polygon_inside(vertices: np.ndarray):
    """Even-odd membership test for an arbitrary closed polygon."""
    vx = vertices[:, 0]
    vy = vertices[:, 1]
    nxt = np.roll(np.arange(len(vertices)), -1)

    def inside(xs, ys):
        hit = np.zeros(xs.shape, dtype=bool)
        for i, j in zip(range(len(vertices)), nxt):
            x1, y1, x2, y2 = vx[i], vy[i], vx[j], vy[j]
            if y1 == y2:
                continue
            crosses = (y1 > ys) != (y2 > ys)
            xcut = (x2 - x1) * (ys - y1) / (y2 - y1) + x1
            hit ^= crosses & (xs < xcut)
        return hit

    return inside


def _vertex_angles(vertices: np.ndarray) -> np.ndarray:
    """Angle at each vertex between its two incident edges, in [0, 180] degrees."""
    prev_v = np.roll(vertices, 1, axis=0)
    next_v = np.roll(vertices, -1, axis=0)
    u = prev_v - vertices
    w = next_v - vertices
    dots = (u * w).sum(axis=1)
    norms = np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
    return np.degrees(np.arccos(np.clip(dots / norms, -1.0, 1.0)))


def _check_fits(extent: float, size: int, what: str) -> None:
    if extent > (size - 1) / 2.0 - _MARGIN:
        raise FixtureError(f"{what} does not fit a {size}x{size} canvas (extent {extent:.1f})")


def make_polygon(
    n_vertices: int,
    radius: float,
    rotation: float = 0.0,
    size: int = 256,
    fg: float = 0.85,
    bg: float = 0.1,
    max_chord: int = 30,
    fixture_id: str = "",
) -> SynthFixture:
    """Filled regular polygon; vertices are the ground-truth corners.

    Sides must offer at least 2*max_chord pixels of support.
    """
    if n_vertices < 3:
        raise ParameterError(f"need at least 3 vertices, got {n_vertices}")
    if radius <= 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    side = 2.0 * radius * math.sin(math.pi / n_vertices)
    if side < 2 * max_chord:
        raise FixtureError(
            f"{n_vertices}-gon of radius {radius:g} has {side:.1f}px sides; "
            f"chords of length {max_chord} need {2 * max_chord}px"
        )
    _check_fits(radius, size, f"{n_vertices}-gon of radius {radius:g}")
    center = (size - 1) / 2.0
    angles = rotation + 2.0 * math.pi * np.arange(n_vertices) / n_vertices
    vertices = center + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    img = _render(_polygon_inside(vertices), size, fg, bg)
    interior = 180.0 * (n_vertices - 2) / n_vertices
    return SynthFixture(
        fixture_id or f"poly{n_vertices:02d}",
        img,
        vertices,
        np.full(n_vertices, interior),
        "polygon",
        {"n_vertices": n_vertices, "radius": radius, "rotation": rotation, "size": size},
    )


def make_star(
    n_points: int,
    r_outer: float,
    r_inner: float,
    rotation: float = 0.0,
    size: int = 256,
    fg: float = 0.85,
    bg: float = 0.1,
    max_chord: int = 30,
    fixture_id: str = "",
) -> SynthFixture:
    """Star polygon; all 2*n_points vertices (tips and folds) are true corners."""
    if n_points < 3:
        raise ParameterError(f"need at least 3 star points, got {n_points}")
    if not (r_outer > r_inner > 0):
        raise ParameterError(f"need r_outer > r_inner > 0, got {r_outer}, {r_inner}")
    edge = math.sqrt(
        r_outer**2 + r_inner**2 - 2.0 * r_outer * r_inner * math.cos(math.pi / n_points)
    )
    if 2 * n_points * edge < 2 * max_chord + 2:
        raise FixtureError(f"star perimeter {2 * n_points * edge:.1f}px cannot support chords of {max_chord}")
    _check_fits(r_outer, size, f"star of radius {r_outer:g}")
    center = (size - 1) / 2.0
    k = np.arange(2 * n_points)
    angles = rotation + math.pi * k / n_points
    radii = np.where(k % 2 == 0, r_outer, r_inner)
    vertices = center + radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    img = _render(_polygon_inside(vertices), size, fg, bg)
    return SynthFixture(
        fixture_id or f"star{n_points:02d}",
        img,
        vertices,
        _vertex_angles(vertices),
        "star",
        {
            "n_points": n_points,
            "r_outer": r_outer,
            "r_inner": r_inner,
            "rotation": rotation,
            "size": size,
        },
    )


def make_rounded_rect(
    rect_w: float,
    rect_h: float,
    corner_radius: float,
    rotation: float = 0.0,
    size: int = 256,
    fg: float = 0.85,
    bg: float = 0.1,
    fixture_id: str = "",
) -> SynthFixture:
    """Rectangle with circular corner arcs; ground truth sits at the arc midpoints."""
    if not (0 < corner_radius <= min(rect_w, rect_h) / 2.0):
        raise ParameterError(f"corner radius {corner_radius:g} invalid for {rect_w:g}x{rect_h:g}")
    half_diag = math.hypot(rect_w, rect_h) / 2.0
    _check_fits(half_diag, size, f"rounded rect {rect_w:g}x{rect_h:g}")
    center = (size - 1) / 2.0
    cos_r, sin_r = math.cos(rotation), math.sin(rotation)
    hw = rect_w / 2.0 - corner_radius
    hh = rect_h / 2.0 - corner_radius

    def inside(xs, ys):
        dx = xs - center
        dy = ys - center
        # rotate into the rectangle frame
        rx = cos_r * dx + sin_r * dy
        ry = -sin_r * dx + cos_r * dy
        ox = np.maximum(np.abs(rx) - hw, 0.0)
        oy = np.maximum(np.abs(ry) - hh, 0.0)
        return ox**2 + oy**2 <= corner_radius**2

    img = _render(inside, size, fg, bg)
    diag = corner_radius / math.sqrt(2.0)
    corners = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            local = np.array([sx * (hw + diag), sy * (hh + diag)])
            world = np.array(
                [cos_r * local[0] - sin_r * local[1], sin_r * local[0] + cos_r * local[1]]
            )
            corners.append(center + world)
    corners = np.array(corners)
    return SynthFixture(
        fixture_id or "rrect",
        img,
        corners,
        np.full(4, 90.0),
        "rounded_rect",
        {
            "rect_w": rect_w,
            "rect_h": rect_h,
            "corner_radius": corner_radius,
            "rotation": rotation,
            "size": size,
        },
    )


def make_blob(
    size: int = 256,
    smoothness: float = 8.0,
    seed: int = 0,
    base_radius: float | None = None,
    axis_ratio: float = 1.0,
    harmonics: list[tuple[int, float, float]] | None = None,
    rotation: float = 0.0,
    center: tuple[float, float] | None = None,
    fg: float = 0.85,
    bg: float = 0.1,
    fixture_id: str = "",
) -> SynthFixture:
    """Smooth closed shape with no true corners (negative control).

    The boundary radius is r0 * ellipse(phi) * (1 + sum of cosine harmonics).
    With harmonics=None, low-order harmonics are drawn from the seed with
    amplitudes shrinking as smoothness grows. axis_ratio stretches the base
    circle into an ellipse. Zero harmonics and axis_ratio 1 give a circle.
    An explicit center may place the blob partially out of frame, the way
    smooth regions usually appear in real photographs; the default centered
    placement requires the whole boundary to fit.
    """
    if smoothness <= 0:
        raise ParameterError(f"smoothness must be positive, got {smoothness}")
    if axis_ratio <= 0:
        raise ParameterError(f"axis ratio must be positive, got {axis_ratio}")
    r0 = base_radius if base_radius is not None else size * 0.28
    if harmonics is None:
        rng = np.random.default_rng(seed)
        harmonics = [
            (m, float(rng.uniform(0.2, 1.0) / (smoothness * m)), float(rng.uniform(0, 2 * math.pi)))
            for m in (2, 3, 4)
        ]
    total_amp = sum(abs(a) for _, a, _ in harmonics)
    if total_amp >= 0.95:
        raise ParameterError(f"harmonic amplitudes sum to {total_amp:.2f}; radius would collapse")

    def radial(phi):
        rel = phi - rotation
        r = np.ones_like(rel)
        for m, amp, phase in harmonics:
            r = r + amp * np.cos(m * rel + phase)
        stretch = axis_ratio / np.sqrt(np.cos(rel) ** 2 + (axis_ratio * np.sin(rel)) ** 2)
        return r0 * stretch * r

    phis = np.linspace(0.0, 2.0 * math.pi, 2048, endpoint=False)
    rmax = float(radial(phis).max())
    if center is None:
        _check_fits(rmax, size, "blob")
        cx = cy = (size - 1) / 2.0
    else:
        cx, cy = float(center[0]), float(center[1])

    def inside(xs, ys):
        dx = xs - cx
        dy = ys - cy
        return dx**2 + dy**2 <= radial(np.arctan2(dy, dx)) ** 2

    img = _render(inside, size, fg, bg)
    return SynthFixture(
        fixture_id or "blob",
        img,
        np.zeros((0, 2)),
        np.zeros(0),
        "blob_no_corners",
        {
            "smoothness": smoothness,
            "seed": seed,
            "base_radius": r0,
            "axis_ratio": axis_ratio,
            "harmonics": [list(h) for h in harmonics],
            "rotation": rotation,
            "center": [cx, cy],
            "size": size,
        },
    )


def default_corpus(size: int = 256) -> list[SynthFixture]:
    """The 23-image fixture set: polygons, stars, rounded rectangles, blobs.

    Polygon and star parameters keep every edge long enough for the widest
    chord and every reflex fold either sharp enough to respond strongly or
    obtuse beyond 150 degrees.  Blobs are giant disks centred far outside the
    canvas (geometry scales with ``size``), so the visible boundary is a
    gentle low-curvature arc with no corner anywhere on it.
    """
    s = size / 256.0
    fixtures = [
        make_polygon(3, 70.0, rotation=0.30, size=size, fixture_id="poly03"),
        make_polygon(3, 48.0, rotation=1.85, size=size, fg=0.7, bg=0.15, fixture_id="poly03s"),
        make_polygon(4, 65.0, rotation=0.0, size=size, fixture_id="poly04"),
        make_polygon(4, 85.0, rotation=0.52, size=size, fg=0.9, bg=0.05, fixture_id="poly04r"),
        make_polygon(5, 75.0, rotation=1.10, size=size, fixture_id="poly05"),
        make_polygon(6, 82.0, rotation=0.26, size=size, fg=0.75, bg=0.2, fixture_id="poly06"),
        make_polygon(8, 95.0, rotation=0.10, size=size, fixture_id="poly08"),
        make_polygon(12, 118.0, rotation=0.0, size=size, fixture_id="poly12"),
        make_star(4, 90.0, 49.5, rotation=0.26, size=size, fixture_id="star04"),
        make_star(5, 90.0, 61.0, rotation=1.0, size=size, fg=0.8, bg=0.12, fixture_id="star05"),
        make_star(6, 95.0, 52.0, rotation=0.0, size=size, fixture_id="star06"),
        make_star(6, 105.0, 50.0, rotation=0.44, size=size, fg=0.9, bg=0.08, fixture_id="star06b"),
        make_star(8, 118.0, 70.0, rotation=0.10, size=size, fixture_id="star08"),
        make_star(8, 120.0, 62.0, rotation=0.60, size=size, fixture_id="star08b"),
        make_rounded_rect(140.0, 100.0, 8.0, rotation=0.08, size=size, fixture_id="rrect01"),
        make_rounded_rect(160.0, 90.0, 8.0, rotation=0.35, size=size, fg=0.7, bg=0.18, fixture_id="rrect02"),
        make_rounded_rect(120.0, 120.0, 14.0, rotation=0.79, size=size, fixture_id="rrect03"),
        make_rounded_rect(170.0, 110.0, 8.0, rotation=-0.26, size=size, fixture_id="rrect04"),
        make_rounded_rect(150.0, 80.0, 6.0, rotation=1.22, size=size, fg=0.95, bg=0.05, fixture_id="rrect05"),
        make_blob(size=size, harmonics=[], base_radius=500.0 * s,
                  center=(127.5 * s, -385.0 * s), fixture_id="blob01"),
        make_blob(size=size, harmonics=[(2, 0.012, 0.7)], base_radius=420.0 * s,
                  center=(540.0 * s, 127.5 * s), fg=0.75, bg=0.15, fixture_id="blob02"),
        make_blob(size=size, harmonics=[(3, 0.008, 2.0)], base_radius=640.0 * s,
                  center=(127.5 * s, 700.0 * s), fixture_id="blob03"),
        make_blob(size=size, harmonics=[(2, 0.010, 0.0)], base_radius=380.0 * s,
                  center=(-185.0 * s, 400.0 * s), fg=0.9, bg=0.06, fixture_id="blob04"),
    ]
    assert len(fixtures) == 23
    return fixtures
