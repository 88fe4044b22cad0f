"""Grayscale raster type, Gaussian smoothing, Canny edge detection, and PGM I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DimensionError, InputError, ParameterError

# Rec. 601 luminance weights.
_LUMA = (0.299, 0.587, 0.114)

_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])


@dataclass(frozen=True, eq=False)
class GrayImage:
    """2-D grayscale raster with intensities in [0, 1], stored row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise DimensionError(f"expected a nonempty 2-D array, got shape {px.shape}")
        if float(px.min()) < -1e-9 or float(px.max()) > 1.0 + 1e-9:
            raise ParameterError("intensities must lie in [0, 1]")
        px = np.clip(px, 0.0, 1.0)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class EdgeMap:
    """Boolean edge mask aligned with the image it came from."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2 or m.size == 0:
            raise DimensionError(f"expected a nonempty 2-D mask, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    def count(self) -> int:
        return int(self.mask.sum())


def to_grayscale(rgb) -> GrayImage:
    """Collapse a 3-channel raster to luminance, clamped to [0, 1]."""
    if isinstance(rgb, (list, tuple)):
        channels = [np.asarray(c, dtype=np.float64) for c in rgb]
        if len(channels) != 3:
            raise DimensionError(f"expected 3 channels, got {len(channels)}")
        if not (channels[0].shape == channels[1].shape == channels[2].shape):
            raise DimensionError("channel shapes differ")
        stacked = np.stack(channels, axis=-1)
    else:
        stacked = np.asarray(rgb, dtype=np.float64)
    if stacked.ndim != 3 or stacked.shape[-1] != 3:
        raise DimensionError(f"expected an (H, W, 3) raster, got shape {stacked.shape}")
    gray = stacked @ np.array(_LUMA)
    return GrayImage(np.clip(gray, 0.0, 1.0))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled, normalized 1-D Gaussian with half-width ceil(3*sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    taps = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (taps / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_smooth(img: GrayImage, sigma: float) -> GrayImage:
    """Separable Gaussian blur with edge replication at the borders."""
    kernel = gaussian_kernel(sigma)
    out = ndimage.correlate1d(img.pixels, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return GrayImage(np.clip(out, 0.0, 1.0))


def canny(img: GrayImage, sigma: float = 1.4, low: float = 0.1, high: float = 0.2) -> EdgeMap:
    """Four-stage Canny: blur, Sobel gradient, non-maximum suppression, hysteresis.

    Thresholds are fractions of the maximum gradient magnitude. A constant
    image has no gradient anywhere and yields an empty map.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if not (0.0 < low < high <= 1.0):
        raise ParameterError(f"need 0 < low < high <= 1, got low={low} high={high}")
    smoothed = gaussian_smooth(img, sigma).pixels
    gx = ndimage.correlate(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    gmax = float(mag.max())
    if gmax <= 1e-12:  # featureless image; only float noise in the gradient
        return EdgeMap(np.zeros_like(mag, dtype=bool))
    thin = _suppress_nonmaxima(mag, gx, gy)
    weak = thin & (mag >= low * gmax)
    strong = thin & (mag >= high * gmax)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    hit = np.unique(labels[strong])
    hit = hit[hit > 0]
    return EdgeMap(weak & np.isin(labels, hit))


def _suppress_nonmaxima(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep one-pixel ridges of gradient magnitude along the quantized gradient.

    Ties across a symmetric two-pixel peak are broken toward the lower-index
    side (strict > against the back neighbor, >= against the forward one).
    """
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag

    def shifted(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    theta = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.floor_divide(theta + np.pi / 8, np.pi / 4).astype(int) % 4
    # sector 0: horizontal gradient, 1: down-right diagonal, 2: vertical, 3: up-right diagonal
    along = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (-1, 1)}
    keep = np.zeros_like(mag, dtype=bool)
    for s, (dy, dx) in along.items():
        back = shifted(-dy, -dx)
        fwd = shifted(dy, dx)
        keep |= (sector == s) & (mag > back) & (mag >= fwd)
    return keep & (mag > 0)


def read_pgm(path: str | Path) -> GrayImage:
    """Read a binary (P5) 8-bit PGM file."""
    raw = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InputError(f"truncated PGM header in {path}")
        fields.append(raw[start:pos])
    if fields[0] != b"P5":
        raise InputError(f"not a binary PGM (P5) file: {path}")
    width, height, maxval = (int(f) for f in fields[1:4])
    if maxval != 255:
        raise InputError(f"only 8-bit PGM supported, maxval={maxval} in {path}")
    pos += 1  # single whitespace byte after maxval
    if len(raw) - pos < width * height:
        raise InputError(f"PGM pixel data truncated in {path}")
    data = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    return GrayImage(data.reshape(height, width).astype(np.float64) / 255.0)


def write_pgm(img: GrayImage, path: str | Path) -> None:
    """Write a binary (P5) 8-bit PGM file; intensities are quantized here only."""
    data = np.round(img.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def load_image(path: str | Path) -> GrayImage:
    """Load a grayscale image; PGM natively, other raster formats via Pillow."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"no such image file: {p}")
    if p.suffix.lower() == ".pgm":
        return read_pgm(p)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on extras
        raise InputError(f"reading {p.suffix} files requires the 'images' extra (Pillow)") from exc
    with Image.open(p) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    return GrayImage(arr)


def overlay_corners(img: GrayImage, corners, arm: int = 3) -> GrayImage:
    """Mark corner positions with contrasting cross markers."""
    out = img.pixels.copy()
    h, w = out.shape
    for corner in corners:
        cx, cy = int(round(corner[0])), int(round(corner[1]))
        if not (0 <= cx < w and 0 <= cy < h):
            continue
        shade = 1.0 if out[cy, cx] < 0.5 else 0.0
        for d in range(-arm, arm + 1):
            if 0 <= cx + d < w:
                out[cy, cx + d] = shade
            if 0 <= cy + d < h:
                out[cy + d, cx] = shade
    return GrayImage(out)
