"""Chord-distance accumulation, curvature candidates, refinements, and the detector."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .contours import Curve, detect_t_junctions, extract_curves, smooth_curve
from .errors import (
    DegenerateAngleError,
    DegenerateChordError,
    InputError,
    ParameterError,
)
from .image import GrayImage, canny

CPDA_CHORDS = (10, 20, 30)
SCA_CHORD = 15


@dataclass
class OpCounters:
    """Tally of the expensive primitives spent estimating curvature.

    One sqrt per distinct chord placement (the chord norm is computed once and
    reused for every interior point), one distance_eval per point/placement pair.
    """

    sqrt_evals: int = 0
    distance_evals: int = 0

    def merge(self, other: "OpCounters") -> "OpCounters":
        self.sqrt_evals += other.sqrt_evals
        self.distance_evals += other.distance_evals
        return self


@dataclass(frozen=True)
class DetectorParams:
    """Detector configuration: chord set plus the two refinement thresholds."""

    mode: str
    chord_lengths: tuple[int, ...]
    curvature_threshold: float
    angle_threshold: float

    def __post_init__(self):
        if self.mode not in ("cpda", "sca"):
            raise ParameterError(f"unknown detector mode {self.mode!r}")
        chords = tuple(int(c) for c in self.chord_lengths)
        if not chords or any(c < 3 for c in chords):
            raise ParameterError(f"chord lengths must all be >= 3, got {chords}")
        if self.mode == "cpda" and len(chords) != 3:
            raise ParameterError("cpda mode needs exactly three chord lengths")
        if self.mode == "sca" and len(chords) != 1:
            raise ParameterError("sca mode needs exactly one chord length")
        if not (0.0 < self.curvature_threshold < 1.0):
            raise ParameterError(f"curvature threshold must be in (0, 1), got {self.curvature_threshold}")
        if not (90.0 < self.angle_threshold < 180.0):
            raise ParameterError(f"angle threshold must be in (90, 180) degrees, got {self.angle_threshold}")
        object.__setattr__(self, "chord_lengths", chords)

    @classmethod
    def cpda(cls, curvature_threshold: float = 0.2, angle_threshold: float = 157.0) -> "DetectorParams":
        return cls("cpda", CPDA_CHORDS, curvature_threshold, angle_threshold)

    @classmethod
    def sca(
        cls,
        chord: int = SCA_CHORD,
        curvature_threshold: float = 0.067,
        angle_threshold: float = 157.0,
    ) -> "DetectorParams":
        return cls("sca", (chord,), curvature_threshold, angle_threshold)

    @property
    def min_curve_length(self) -> int:
        return 2 * max(self.chord_lengths) + 2


@dataclass
class PipelineConfig:
    """Knobs for the stages around the accumulation core."""

    canny_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.2
    curve_sigma: float = 3.0
    min_curve_length: int | None = None  # None: derived from the chord set
    dedup_radius: float = 3.0
    angle_refinement: str = "iterative"  # or "single_pass"

    def __post_init__(self):
        if self.angle_refinement not in ("iterative", "single_pass"):
            raise ParameterError(f"unknown angle refinement mode {self.angle_refinement!r}")


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """Per-point accumulated chord distances along one curve."""

    curve_id: int
    closed: bool
    valid: np.ndarray  # bool per point; False where the sliding chord lacks support
    accumulated: np.ndarray | None = None
    normalized: np.ndarray | None = None
    combined: np.ndarray | None = None
    cornerless: bool = False

    @property
    def selection_values(self) -> np.ndarray:
        """Values candidates are selected on: combined product, else normalized."""
        if self.combined is not None:
            return self.combined
        if self.normalized is not None:
            return self.normalized
        raise InputError("profile has not been normalized yet")


@dataclass(frozen=True)
class Corner:
    """One detected corner; positions are points of the extracted source curve."""

    x: float
    y: float
    curvature: float
    curve_id: int
    is_t_junction: bool = False


@dataclass(frozen=True, eq=False)
class CornerSet:
    image_id: str
    corners: tuple[Corner, ...]

    def __len__(self) -> int:
        return len(self.corners)

    def positions(self) -> np.ndarray:
        if not self.corners:
            return np.zeros((0, 2))
        return np.array([(c.x, c.y) for c in self.corners])


def chord_point_distance(p, a, b, counters: OpCounters | None = None) -> float:
    """Perpendicular distance from point p to the line through chord (a, b)."""
    px, py = float(p[0]), float(p[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    vx, vy = bx - ax, by - ay
    norm = math.hypot(vx, vy)
    if norm == 0.0:
        raise DegenerateChordError(f"chord endpoints coincide at ({ax}, {ay})")
    if counters is not None:
        counters.sqrt_evals += 1
        counters.distance_evals += 1
    return abs(vx * (py - ay) - vy * (px - ax)) / norm


def accumulate(curve: Curve, chord_length: int, counters: OpCounters | None = None) -> CurvatureProfile:
    """Sum perpendicular distances from each point to its sliding chord.

    The chord of span `chord_length` slides across each point; placements with
    the point at a chord end contribute exactly zero and are skipped. Points
    whose full sliding range does not fit are marked invalid with value 0.
    Chord norms are computed once per placement and shared by all interior
    points, which is what the counters tally.
    """
    span = int(chord_length)
    if span < 2:
        raise ParameterError(f"chord length must be >= 2, got {chord_length}")
    pts = curve.points
    n = len(pts)
    acc = np.zeros(n)
    valid = np.zeros(n, dtype=bool)
    if n < 2 * span + 1:
        return CurvatureProfile(curve.curve_id, curve.closed, valid, accumulated=acc)

    if curve.closed:
        idx = np.arange(n)
        starts = pts
        ends = pts[(idx + span) % n]
        vec = ends - starts
        norms = np.hypot(vec[:, 0], vec[:, 1])
        if np.any(norms == 0.0):
            raise DegenerateChordError("closed curve has coincident chord endpoints")
        for offset in range(1, span):
            j = (idx - offset) % n
            rel = pts - starts[j]
            cross = vec[j, 0] * rel[:, 1] - vec[j, 1] * rel[:, 0]
            acc += np.abs(cross) / norms[j]
        valid[:] = True
        if counters is not None:
            counters.sqrt_evals += n
            counters.distance_evals += n * (span - 1)
        return CurvatureProfile(curve.curve_id, True, valid, accumulated=acc)

    # Open curve: valid points k in [span, n-1-span]; placements j in [1, n-span-2].
    nvalid = n - 2 * span
    target = pts[span : n - span]
    starts = pts[1 : n - span - 1]
    ends = pts[span + 1 : n - 1]
    vec = ends - starts
    norms = np.hypot(vec[:, 0], vec[:, 1])
    if np.any(norms == 0.0):
        raise DegenerateChordError("curve has coincident chord endpoints")
    total = np.zeros(nvalid)
    for offset in range(1, span):
        lo = span - offset - 1  # placement j = k - offset, shifted into the norms array
        sl = slice(lo, lo + nvalid)
        rel = target - starts[sl]
        cross = vec[sl, 0] * rel[:, 1] - vec[sl, 1] * rel[:, 0]
        total += np.abs(cross) / norms[sl]
    acc[span : n - span] = total
    valid[span : n - span] = True
    if counters is not None:
        counters.sqrt_evals += len(starts)
        counters.distance_evals += nvalid * (span - 1)
    return CurvatureProfile(curve.curve_id, False, valid, accumulated=acc)


def normalize_profile(profile: CurvatureProfile) -> CurvatureProfile:
    """Scale accumulated values to [0, 1] by the curve maximum.

    An all-zero profile (straight curve) is flagged cornerless.
    """
    if profile.accumulated is None:
        raise InputError("profile has no accumulated values")
    peak = float(profile.accumulated.max()) if profile.accumulated.size else 0.0
    if peak <= 0.0:
        return replace(profile, normalized=np.zeros_like(profile.accumulated), cornerless=True)
    return replace(profile, normalized=profile.accumulated / peak)


def combine_profiles(profiles) -> CurvatureProfile:
    """Multiply normalized profiles pointwise; valid only where every chord had support."""
    profiles = list(profiles)
    if len(profiles) != 3:
        raise InputError(f"expected three profiles to combine, got {len(profiles)}")
    first = profiles[0]
    if any(p.curve_id != first.curve_id for p in profiles):
        raise InputError("profiles come from different curves")
    if any(p.normalized is None for p in profiles):
        raise InputError("profiles must be normalized before combining")
    if any(p.valid.shape != first.valid.shape for p in profiles):
        raise InputError("profiles have mismatched lengths")
    combined = np.ones_like(first.normalized)
    valid = np.ones_like(first.valid)
    for p in profiles:
        combined = combined * p.normalized
        valid = valid & p.valid
    combined = np.where(valid, combined, 0.0)
    cornerless = any(p.cornerless for p in profiles) or not valid.any()
    return CurvatureProfile(
        first.curve_id, first.closed, valid, combined=combined, cornerless=cornerless
    )


def _runs(values: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of equal adjacent values as (start, end) index pairs, end exclusive."""
    runs = []
    i = 0
    n = len(values)
    while i < n:
        j = i + 1
        while j < n and values[j] == values[i]:
            j += 1
        runs.append((i, j))
        i = j
    return runs


def local_maxima(profile: CurvatureProfile) -> list[int]:
    """Indices of strict local maxima of the selection values over valid points.

    Plateaus report their first index; closed curves wrap around.
    """
    values = profile.selection_values
    if profile.cornerless:
        return []
    valid_idx = np.flatnonzero(profile.valid)
    if valid_idx.size < 3:
        return []
    v = values[valid_idx]

    if not profile.closed:
        out = []
        for start, end in _runs(v):
            if start > 0 and end < len(v) and v[start - 1] < v[start] and v[end] < v[start]:
                out.append(int(valid_idx[start]))
        return out

    # Closed: rotate so index 0 sits at a run boundary, then scan circularly.
    n = len(v)
    boundary = 0
    while boundary < n and v[boundary] == v[boundary - 1]:
        boundary += 1
    if boundary == n:
        return []  # constant profile
    rotated = np.roll(v, -boundary)
    runs = _runs(rotated)
    out = []
    for r, (start, end) in enumerate(runs):
        prev_val = rotated[runs[r - 1][1] - 1]
        next_val = rotated[runs[(r + 1) % len(runs)][0]]
        if prev_val < rotated[start] and next_val < rotated[start]:
            out.append(int(valid_idx[(start + boundary) % n]))
    return sorted(out)


def refine_by_curvature(candidates, profile: CurvatureProfile, threshold: float) -> list[int]:
    """Drop candidates whose selection value falls strictly below the threshold."""
    values = profile.selection_values
    return [k for k in candidates if values[k] >= threshold]


def corner_angle(curve: Curve, candidates, k: int) -> float:
    """Angle at point k between rays to its nearest candidates (or curve ends).

    On a closed curve with no other candidate, points halfway around stand in
    for the missing neighbors. Result in [0, 180] degrees.
    """
    pts = curve.points
    n = len(pts)
    cand = sorted(candidates)
    if k not in cand:
        raise InputError(f"index {k} is not among the candidates")
    pos = cand.index(k)
    if curve.closed:
        if len(cand) > 1:
            prev_i = cand[pos - 1]
            next_i = cand[(pos + 1) % len(cand)]
        else:
            prev_i = (k - n // 2) % n
            next_i = (k + n // 2) % n
    else:
        prev_i = cand[pos - 1] if pos > 0 else 0
        next_i = cand[pos + 1] if pos + 1 < len(cand) else n - 1
    u = pts[prev_i] - pts[k]
    w = pts[next_i] - pts[k]
    nu = math.hypot(u[0], u[1])
    nw = math.hypot(w[0], w[1])
    if nu == 0.0 or nw == 0.0:
        raise DegenerateAngleError(f"neighbor of candidate {k} coincides with it")
    cosang = (u[0] * w[0] + u[1] * w[1]) / (nu * nw)
    return math.degrees(math.acos(min(1.0, max(-1.0, cosang))))


def refine_by_angle(
    candidates,
    curve: Curve,
    profile: CurvatureProfile,
    angle_threshold: float,
    iterative: bool = True,
) -> list[int]:
    """Remove candidates whose neighbor angle exceeds the threshold.

    Iterative mode removes the weakest offender first and recomputes angles,
    so a survivor can be rescued by its neighbor's removal. Single-pass mode
    evaluates all angles once against the original candidate set.
    """
    values = profile.selection_values
    remaining = sorted(candidates)
    if not iterative:
        return [k for k in remaining if corner_angle(curve, remaining, k) <= angle_threshold]
    while remaining:
        offenders = [k for k in remaining if corner_angle(curve, remaining, k) > angle_threshold]
        if not offenders:
            break
        weakest = min(offenders, key=lambda k: (values[k], k))
        remaining.remove(weakest)
    return remaining


def _dedup_junctions(junctions, radius: float):
    kept = []
    ordered = sorted(junctions, key=lambda j: (-j.degree, j.position[1], j.position[0]))
    for j in ordered:
        if all(math.dist(j.position, k.position) > radius for k in kept):
            kept.append(j)
    kept.sort(key=lambda j: (j.position[1], j.position[0]))
    return kept


def detect_corners(
    img: GrayImage,
    params: DetectorParams,
    pipeline: PipelineConfig | None = None,
    image_id: str = "",
    counters: OpCounters | None = None,
) -> tuple[CornerSet, OpCounters]:
    """Run the full pipeline: edges, curves, accumulation, refinement, junction merge."""
    pl = pipeline or PipelineConfig()
    counters = counters if counters is not None else OpCounters()
    edges = canny(img, pl.canny_sigma, pl.canny_low, pl.canny_high)
    min_len = pl.min_curve_length if pl.min_curve_length is not None else params.min_curve_length
    curves = extract_curves(edges, min_len)
    junctions = _dedup_junctions(detect_t_junctions(edges), pl.dedup_radius)

    curve_corners: list[Corner] = []
    for curve in curves:
        smoothed = smooth_curve(curve, pl.curve_sigma)
        profiles = [normalize_profile(accumulate(smoothed, c, counters)) for c in params.chord_lengths]
        if params.mode == "cpda":
            profile = combine_profiles(profiles)
        else:
            profile = replace(profiles[0], combined=profiles[0].normalized)
        if profile.cornerless:
            continue
        cand = local_maxima(profile)
        cand = refine_by_curvature(cand, profile, params.curvature_threshold)
        cand = refine_by_angle(
            cand, smoothed, profile, params.angle_threshold, pl.angle_refinement == "iterative"
        )
        values = profile.selection_values
        for k in cand:
            # smoothing locates the maxima; the reported position is the actual
            # edge point at that index, so corners stay on the image curve
            x, y = curve.points[k]
            curve_corners.append(Corner(float(x), float(y), float(values[k]), curve.curve_id))

    final: list[Corner] = [
        Corner(float(j.position[0]), float(j.position[1]), 1.0, -1, True) for j in junctions
    ]
    for c in curve_corners:
        if all(math.dist((c.x, c.y), j.position) > pl.dedup_radius for j in junctions):
            final.append(c)
    return CornerSet(image_id, tuple(final)), counters
