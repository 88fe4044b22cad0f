"""Edge-chain tracing, junction detection, and curve smoothing."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import EdgeMap, gaussian_kernel

log = logging.getLogger(__name__)

# 8-neighborhood in circular order; (dy, dx).
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
# Tracing preference: direct neighbors before diagonals, fixed scan order.
_STEPS = ((-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True, eq=False)
class Curve:
    """Ordered chain of edge points; (x, y) float coordinates, row < col order kept by tracing."""

    curve_id: int
    points: np.ndarray  # (N, 2) of (x, y)
    closed: bool

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ParameterError(f"curve points must be (N, 2), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class TJunction:
    """Edge pixel where three or more chains meet."""

    position: tuple[int, int]  # (x, y)
    degree: int


def _ring_views(mask: np.ndarray) -> np.ndarray:
    """The 8 neighbor masks of every pixel, stacked in circular order."""
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    return np.stack([padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] for dy, dx in _RING])


def _branch_counts(mask: np.ndarray) -> np.ndarray:
    """Number of connected neighbor arcs around each pixel (adjacent neighbors merge)."""
    ring = _ring_views(mask)
    prev = np.roll(ring, 1, axis=0)
    return (ring & ~prev).sum(axis=0)


def _neighbor_counts(mask: np.ndarray) -> np.ndarray:
    kernel = np.ones((3, 3), dtype=int)
    kernel[1, 1] = 0
    return ndimage.correlate(mask.astype(int), kernel, mode="constant")


def detect_t_junctions(edges: EdgeMap) -> list[TJunction]:
    """Find edge pixels with >= 3 merged neighbor arcs, in scan order."""
    mask = edges.mask
    arcs = _branch_counts(mask)
    junction = mask & (arcs >= 3)
    return [TJunction((int(x), int(y)), int(arcs[y, x])) for y, x in np.argwhere(junction)]


def _bridge_gaps(mask: np.ndarray) -> None:
    """Join chain endpoints separated by a single missing pixel (radius 2, in place)."""
    counts = _neighbor_counts(mask)
    endpoints = mask & (counts == 1)
    for y, x in np.argwhere(endpoints):
        for dy, dx in ((0, 2), (2, 0)):
            qy, qx = y + dy, x + dx
            if qy >= mask.shape[0] or qx >= mask.shape[1]:
                continue
            if endpoints[qy, qx]:
                mask[y + dy // 2, x + dx // 2] = True


def _walk(
    chain: np.ndarray, junction: np.ndarray, visited: np.ndarray, y: int, x: int
) -> list[tuple[int, int]]:
    """Trace a chain from (y, x), marking pixels visited; returns (y, x) path.

    Diagonal steps that cut the corner of a junction pixel are forbidden, so
    arms meeting at a junction stay separate chains instead of leaking into
    each other around the excluded junction pixel.
    """
    path = [(y, x)]
    visited[y, x] = True
    while True:
        cy, cx = path[-1]
        nxt = None
        for dy, dx in _STEPS:
            ny, nx = cy + dy, cx + dx
            if not (0 <= ny < chain.shape[0] and 0 <= nx < chain.shape[1]):
                continue
            if not chain[ny, nx] or visited[ny, nx]:
                continue
            if dy != 0 and dx != 0 and (junction[ny, cx] or junction[cy, nx]):
                continue
            nxt = (ny, nx)
            break
        if nxt is None:
            return path
        visited[nxt] = True
        path.append(nxt)


def _adjacent_junction(
    pixel: tuple[int, int], junction: np.ndarray, exclude: tuple[int, int] | None = None
) -> tuple[int, int] | None:
    y, x = pixel
    for dy, dx in _STEPS:
        ny, nx = y + dy, x + dx
        if 0 <= ny < junction.shape[0] and 0 <= nx < junction.shape[1] and junction[ny, nx]:
            if (ny, nx) != exclude:
                return (ny, nx)
    return None


def extract_curves(edges: EdgeMap, min_curve_length: int) -> list[Curve]:
    """Trace the edge map into ordered point chains.

    Chains split at junction pixels; each incident chain receives a copy of the
    junction pixel as its endpoint. Untraced leftovers are loops and come back
    closed. Chains shorter than min_curve_length are discarded.
    """
    if min_curve_length < 1:
        raise ParameterError(f"min_curve_length must be >= 1, got {min_curve_length}")
    mask = edges.mask.copy()
    _bridge_gaps(mask)
    junction = mask & (_branch_counts(mask) >= 3)
    chain = mask & ~junction
    visited = np.zeros_like(chain)
    raw: list[tuple[list[tuple[int, int]], bool]] = []

    # Open chains start at pixels with at most one chain neighbor.
    counts = _neighbor_counts(chain)
    for y, x in np.argwhere(chain & (counts <= 1)):
        if visited[y, x]:
            continue
        path = _walk(chain, junction, visited, int(y), int(x))
        head = _adjacent_junction(path[0], junction)
        tail = _adjacent_junction(path[-1], junction, exclude=head if len(path) == 1 else None)
        if head is not None:
            path.insert(0, head)
        if tail is not None:
            path.append(tail)
        raw.append((path, False))

    # Everything left over in the chain mask belongs to loops, except pixels
    # that sit next to junctions on junction-to-junction chains already taken.
    for y, x in np.argwhere(chain & ~visited):
        if visited[y, x]:
            continue
        path = _walk(chain, junction, visited, int(y), int(x))
        back = _walk(chain, junction, visited, *path[0])
        if len(back) > 1:  # the scan began mid-chain; stitch the other half on
            path = back[:0:-1] + path
        closed = len(path) > 2 and max(abs(path[0][0] - path[-1][0]), abs(path[0][1] - path[-1][1])) <= 1
        if not closed:
            head = _adjacent_junction(path[0], junction)
            tail = _adjacent_junction(path[-1], junction, exclude=head if len(path) == 1 else None)
            if head is not None:
                path.insert(0, head)
            if tail is not None:
                path.append(tail)
        raw.append((path, closed))

    curves = []
    for path, closed in raw:
        if len(path) < min_curve_length:
            continue
        pts = np.array([(px, py) for py, px in path], dtype=np.float64)
        curves.append(Curve(len(curves), pts, closed))
    return curves


def smooth_curve(curve: Curve, sigma: float) -> Curve:
    """Gaussian-smooth curve coordinates; replicated ends if open, circular if closed.

    Curves too short for the kernel pass through unchanged.
    """
    kernel = gaussian_kernel(sigma)
    n = len(curve)
    if curve.closed:
        if n < kernel.size:
            log.debug("curve %d too short to smooth (%d pts, kernel %d)", curve.curve_id, n, kernel.size)
            return curve
        mode = "wrap"
    else:
        if n <= kernel.size:
            log.debug("curve %d too short to smooth (%d pts, kernel %d)", curve.curve_id, n, kernel.size)
            return curve
        mode = "nearest"
    smoothed = ndimage.convolve1d(curve.points, kernel, axis=0, mode=mode)
    return Curve(curve.curve_id, smoothed, curve.closed)
