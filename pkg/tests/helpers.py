"""Shared test utilities: brute-force accumulation oracle and curve generators."""

from __future__ import annotations

import math

import numpy as np

from chordcorners import Curve


def point_line_distance(p, a, b) -> float:
    """Perpendicular distance from p to the infinite line through a and b."""
    vx, vy = b[0] - a[0], b[1] - a[1]
    return abs(vx * (p[1] - a[1]) - vy * (p[0] - a[0])) / math.hypot(vx, vy)


def oracle_accumulate(pts, span, closed, include_boundary=False):
    """Per-(k, j) reference accumulation, deliberately loop-based.

    The chord spans indices (j, j + span); placements keeping point k strictly
    interior are j in (k - span, k). With include_boundary=True the two
    placements putting k at a chord end are summed as well (they contribute
    exact zeros).
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    acc = np.zeros(n)
    valid = np.zeros(n, dtype=bool)
    if n < 2 * span + 1:
        return acc, valid
    lo, hi = (-span, 1) if include_boundary else (-span + 1, 0)
    for k in range(n):
        if not closed and not (span <= k <= n - 1 - span):
            continue
        total = 0.0
        for j in range(k + lo, k + hi):
            a = pts[j % n]
            b = pts[(j + span) % n]
            total += point_line_distance(pts[k], a, b)
        acc[k] = total
        valid[k] = True
    return acc, valid


def random_curve(rng, curve_id=0, n_min=63, n_max=200) -> Curve:
    """Random open or closed test curve with guaranteed-distinct chord endpoints."""
    closed = bool(rng.integers(0, 2))
    n = int(rng.integers(n_min, n_max + 1))
    if closed:
        theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        r = 40.0 * (
            1.0
            + 0.25 * np.sin(3 * theta + rng.uniform(0, 2 * math.pi))
            + 0.15 * np.cos(5 * theta + rng.uniform(0, 2 * math.pi))
        )
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        pts += rng.uniform(-0.2, 0.2, (n, 2))
    else:
        x = np.cumsum(rng.uniform(0.5, 1.5, n))
        y = np.cumsum(rng.uniform(-1.0, 1.0, n))
        pts = np.stack([x, y], axis=1)
    return Curve(curve_id, pts, closed)


def collinear_curves():
    """A few exactly-collinear curves, including irregular point spacing."""
    xs = np.cumsum(np.concatenate([np.full(40, 1.0), np.full(40, 2.5)]))
    return [
        Curve(0, np.stack([np.arange(80.0), np.full(80, 3.0)], axis=1), False),
        Curve(1, np.stack([np.full(70, -2.0), np.arange(70.0)], axis=1), False),
        Curve(2, np.stack([xs, 0.5 * xs + 7.0], axis=1), False),
    ]
