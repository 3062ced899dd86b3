"""Mollweide rasterisation of spherical images to grayscale PGM."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from s2wssa.errors import InvalidParameterError
from s2wssa.grid import SphericalImage

BACKGROUND = 255
SQRT2 = np.sqrt(2.0)


def auxiliary_angle(lat, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Solve ``2 psi + sin(2 psi) = pi sin(lat)`` by Newton iteration.

    The poles are handled directly since the derivative vanishes there.
    """
    lat = np.asarray(lat, dtype=float)
    target = np.pi * np.sin(lat)
    psi = lat.copy()
    polar = np.abs(np.abs(lat) - np.pi / 2) < 1e-12
    for _ in range(max_iter):
        g = 2 * psi + np.sin(2 * psi) - target
        dg = 2 + 2 * np.cos(2 * psi)
        step = np.divide(g, dg, out=np.zeros_like(g), where=~polar & (dg > 0))
        psi = psi - step
        if np.max(np.abs(step), initial=0.0) < tol:
            break
    return np.where(polar, lat, psi)


def forward(lat, lon):
    """Sphere -> plane: ``x in [-2 sqrt2, 2 sqrt2]``, ``y in [-sqrt2, sqrt2]``."""
    psi = auxiliary_angle(lat)
    x = 2 * SQRT2 / np.pi * np.asarray(lon, dtype=float) * np.cos(psi)
    y = SQRT2 * np.sin(psi)
    return x, y


def inverse(x, y):
    """Plane -> sphere in closed form; returns ``(lat, lon, inside)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = (x / (2 * SQRT2)) ** 2 + (y / SQRT2) ** 2 <= 1.0
    psi = np.arcsin(np.clip(y / SQRT2, -1.0, 1.0))
    lat = np.arcsin(np.clip((2 * psi + np.sin(2 * psi)) / np.pi, -1.0, 1.0))
    cos_psi = np.cos(psi)
    lon = np.divide(np.pi * x, 2 * SQRT2 * cos_psi, out=np.zeros_like(x), where=cos_psi > 1e-15)
    return lat, lon, inside


@dataclass(frozen=True)
class MollweideRaster:
    width: int
    height: int
    pixels: np.ndarray = field(repr=False)

    def to_pgm(self) -> bytes:
        head = f"P5\n{self.width} {self.height}\n255\n".encode("ascii")
        return head + self.pixels.astype(np.uint8).tobytes()


def _nearest_samples(image: SphericalImage, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    L = image.L
    n = 2 * L - 1
    t = np.rint((theta * n / np.pi - 1.0) / 2.0).astype(int)
    t = np.clip(t, 0, L - 1)
    p = np.rint(np.mod(phi, 2 * np.pi) * n / (2 * np.pi)).astype(int) % n
    return image.values[t, p]


def rasterise(image: SphericalImage, width: int = 256) -> MollweideRaster:
    """Nearest-neighbour Mollweide raster; longitude 0 sits at the centre column.

    The value range maps linearly onto bytes 0..255 (a constant image maps
    to 0).  Pixels outside the ellipse hold the background byte 255.
    """
    if width < 16:
        raise InvalidParameterError(f"raster width must be >= 16, got {width}")
    if width % 2:
        raise InvalidParameterError(f"raster width must be even, got {width}")
    height = width // 2
    cols = (np.arange(width) + 0.5) / width
    rows = (np.arange(height) + 0.5) / height
    x = (2 * cols - 1) * 2 * SQRT2
    y = (1 - 2 * rows) * SQRT2
    X, Y = np.meshgrid(x, y)
    lat, lon, inside = inverse(X, Y)
    vals = _nearest_samples(image, np.pi / 2 - lat, lon)
    lo, hi = float(image.values.min()), float(image.values.max())
    if hi > lo:
        scaled = np.rint(255.0 * (vals - lo) / (hi - lo))
    else:
        scaled = np.zeros_like(vals)
    pixels = np.where(inside, scaled, BACKGROUND).astype(np.uint8)
    return MollweideRaster(width, height, pixels)
