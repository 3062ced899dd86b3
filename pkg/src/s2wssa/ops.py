"""Pixel-level utilities: shrinkage, gradients, noise, k-means and masks."""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from s2wssa.errors import InvalidInputError, InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage

MSK_MAGIC = b"MSK1"


def soft_threshold(v, lam):
    """``sign(v) * max(|v| - lam, 0)``, elementwise for arrays."""
    if np.any(np.asarray(lam) < 0):
        raise InvalidParameterError(f"threshold must be >= 0, got {lam}")
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Gradient
# ---------------------------------------------------------------------------

def gradient_components(f: SphericalImage, units: str = "radian"):
    """Forward differences ``(d_theta f, d_phi f / sin(theta))``.

    ``units="radian"`` divides by the angular step so the result approximates
    the continuous gradient; ``units="step"`` keeps raw per-sample differences.
    The theta difference is one-sided (backward) on the last ring, the phi
    difference wraps around, and the azimuthal term is zero on the pole ring.
    """
    if units not in ("radian", "step"):
        raise InvalidParameterError(f"unknown gradient units {units!r}")
    v = f.values
    grid = f.grid
    dtheta = np.zeros_like(v)
    if grid.n_theta > 1:
        dtheta[:-1] = v[1:] - v[:-1]
        dtheta[-1] = v[-1] - v[-2]
    dphi = np.roll(v, -1, axis=1) - v
    sin_t = np.sin(grid.thetas)
    pole = np.isclose(grid.thetas, np.pi)
    inv_sin = np.divide(1.0, sin_t, out=np.zeros_like(sin_t), where=~pole)
    dphi = dphi * inv_sin[:, None]
    if units == "radian":
        dtheta = dtheta / grid.delta
        dphi = dphi / grid.delta
    return dtheta, dphi


def gradient_magnitude(f: SphericalImage, norm: str = "l2", units: str = "radian") -> SphericalImage:
    """Discrete gradient magnitude ``sqrt(d_theta^2 + d_phi^2 / sin^2 theta)``.

    ``norm="l1"`` returns ``|d_theta| + |d_phi| / sin(theta)`` instead.
    """
    dtheta, dphi = gradient_components(f, units)
    if norm == "l2":
        mag = np.hypot(dtheta, dphi)
    elif norm == "l1":
        mag = np.abs(dtheta) + np.abs(dphi)
    else:
        raise InvalidParameterError(f"unknown gradient norm {norm!r}")
    return f.with_values(mag)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

def noise_sigma(f: SphericalImage, snr_db: float) -> float:
    """``||f||_inf * 10^(-SNR/20)``."""
    return float(np.max(np.abs(f.values))) * 10.0 ** (-snr_db / 20.0)


def add_noise(f: SphericalImage, snr_db: float, seed=None) -> SphericalImage:
    sigma = noise_sigma(f, snr_db)
    rng = np.random.default_rng(seed)
    return f.with_values(f.values + rng.normal(0.0, sigma, size=f.values.shape))


# ---------------------------------------------------------------------------
# Masks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryMask:
    grid: EquiangularGrid
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.size != self.grid.size:
            raise InvalidInputError(
                f"mask has {lab.size} labels, grid L={self.grid.L} needs {self.grid.size}")
        if not np.all((lab == 0) | (lab == 1)):
            raise InvalidInputError("mask labels must be exactly 0 or 1")
        lab = lab.astype(np.uint8).reshape(self.grid.shape)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def L(self) -> int:
        return self.grid.L

    @property
    def flat(self) -> np.ndarray:
        return self.labels.reshape(-1)

    def count(self) -> int:
        return int(self.labels.sum())

    def area_fraction(self) -> float:
        """Solid-angle fraction of the foreground."""
        return float(np.sum(self.labels * self.grid.area_weights) / (4 * np.pi))

    def as_image(self) -> SphericalImage:
        return SphericalImage(self.grid, self.labels.astype(float))

    def to_bytes(self) -> bytes:
        return MSK_MAGIC + struct.pack("<I", self.L) + self.labels.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> BinaryMask:
        if len(data) < 8 or data[:4] != MSK_MAGIC:
            raise InvalidInputError("not an MSK1 file (bad magic)")
        (L,) = struct.unpack("<I", data[4:8])
        if L < 1:
            raise InvalidInputError("MSK1 header carries L = 0")
        grid = EquiangularGrid(L)
        if len(data) != 8 + grid.size:
            raise InvalidInputError(f"MSK1 payload has {len(data) - 8} bytes, expected {grid.size}")
        return cls(grid, np.frombuffer(data, dtype=np.uint8, offset=8))

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> BinaryMask:
        return cls.from_bytes(Path(path).read_bytes())


def dice(a: BinaryMask, b: BinaryMask) -> float:
    """``2 |a & b| / (|a| + |b|)``; 1 when both masks are empty."""
    if a.grid != b.grid:
        raise InvalidInputError(f"mask grids differ (L={a.L} vs L={b.L})")
    sa, sb = a.count(), b.count()
    if sa + sb == 0:
        return 1.0
    return 2.0 * int(np.sum(a.labels & b.labels)) / (sa + sb)


# ---------------------------------------------------------------------------
# K-means baseline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray = field(repr=False)
    centers: np.ndarray
    n_iter: int
    degenerate: bool = False


def _sse(x: np.ndarray, labels: np.ndarray, k: int) -> float:
    return float(sum(np.sum((x[labels == c] - x[labels == c].mean()) ** 2)
                     for c in range(k) if np.any(labels == c)))


def _best_two_split(x: np.ndarray) -> tuple[float, float]:
    """Exact 1-D 2-means: best ``(sse, threshold)`` over all splits of the sorted values."""
    s = np.sort(x)
    n = s.size
    c1 = np.cumsum(s)
    c2 = np.cumsum(s * s)
    i = np.arange(1, n)
    left = c2[:-1] - c1[:-1] ** 2 / i
    right = (c2[-1] - c2[:-1]) - (c1[-1] - c1[:-1]) ** 2 / (n - i)
    cost = np.where(s[1:] > s[:-1], left + right, np.inf)
    best = int(np.argmin(cost))
    return float(cost[best]), float(s[best + 1])


def kmeans_1d(values, k: int = 2, max_iter: int = 100) -> KMeansResult:
    """Lloyd iterations on scalar data, seeded at the ``(2i+1)/(2k)`` quantiles.

    Labels are ordered by centre, so label ``k-1`` is the brightest cluster.
    Constant input is reported as degenerate with every label 0.

    On discrete data Lloyd can stall on a fixed point next to the optimum,
    so for ``k = 2`` the result is compared with the exact best split of the
    sorted values and replaced when that split has a smaller within-cluster
    sum of squares.
    """
    if k < 2:
        raise InvalidParameterError(f"need k >= 2 clusters, got {k}")
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size == 0:
        raise InvalidInputError("k-means needs at least one value")
    if np.ptp(x) == 0:
        return KMeansResult(np.zeros(x.size, dtype=int), np.full(1, x[0]), 0, True)
    centers = np.quantile(x, (2 * np.arange(k) + 1) / (2 * k))
    labels = None
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = x[labels == c]
            if members.size:
                centers[c] = members.mean()
    if k == 2:
        best, cut = _best_two_split(x)
        if best < _sse(x, labels, k) - 1e-12 * max(1.0, best):
            labels = (x >= cut).astype(int)
            centers = np.array([x[labels == 0].mean(), x[labels == 1].mean()])
    order = np.argsort(centers, kind="stable")
    rank = np.empty(k, dtype=int)
    rank[order] = np.arange(k)
    return KMeansResult(rank[labels], centers[order], n_iter)


def kmeans_intensity(f: SphericalImage, k: int = 2, max_iter: int = 100):
    """Cluster pixel intensities.

    For ``k = 2`` returns ``(BinaryMask, degenerate)`` with the brighter
    cluster labelled 1; otherwise returns the integer label image.
    """
    res = kmeans_1d(f.flat, k, max_iter)
    if res.degenerate:
        warnings.warn("k-means on a constant image: single cluster", RuntimeWarning, stacklevel=2)
    if k == 2:
        return BinaryMask(f.grid, res.labels), res.degenerate
    return res.labels.reshape(f.grid.shape)
