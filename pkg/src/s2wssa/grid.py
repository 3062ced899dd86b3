"""Equiangular sampling of the sphere and the image container living on it.

Samples sit at

    theta_t = pi (2t + 1) / (2L - 1),   t = 0 .. L-1
    phi_p   = 2 pi p / (2L - 1),        p = 0 .. 2L-2

so a signal band-limited at ``L`` is held in ``L * (2L - 1)`` real values.
The last ring lies on the south pole.  Images are stored row-major with
theta as the outer axis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from s2wssa.errors import InvalidInputError, InvalidParameterError

SPH_MAGIC = b"SPH1"


@dataclass(frozen=True)
class EquiangularGrid:
    L: int

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or isinstance(self.L, bool):
            raise InvalidParameterError(f"band limit must be an integer, got {self.L!r}")
        if self.L < 1:
            raise InvalidParameterError(f"band limit must be >= 1, got {self.L}")
        object.__setattr__(self, "L", int(self.L))

    @property
    def n_theta(self) -> int:
        return self.L

    @property
    def n_phi(self) -> int:
        return 2 * self.L - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    def theta_of(self, t):
        t = np.asarray(t)
        # ratio first so that t = L-1 gives exactly pi
        return np.pi * ((2 * t + 1) / (2 * self.L - 1))

    def phi_of(self, p):
        p = np.asarray(p)
        return 2 * np.pi * (p / (2 * self.L - 1))

    @cached_property
    def thetas(self) -> np.ndarray:
        out = self.theta_of(np.arange(self.n_theta))
        out.flags.writeable = False
        return out

    @cached_property
    def phis(self) -> np.ndarray:
        out = self.phi_of(np.arange(self.n_phi))
        out.flags.writeable = False
        return out

    @property
    def delta(self) -> float:
        """Angular step, identical in theta and phi."""
        return 2 * np.pi / (2 * self.L - 1)

    @cached_property
    def area_weights(self) -> np.ndarray:
        """Per-sample solid-angle weights (midpoint rule), shape ``(L, 2L-1)``.

        Rings are treated as cells bounded halfway to their neighbours; the
        first cell reaches the north pole and the last one is the cap of
        half-width ``delta / 2`` around the south pole.  The weights sum to
        ``4 pi`` exactly.
        """
        d = self.delta
        edges = np.concatenate(([0.0], self.thetas[:-1] + d / 2, [np.pi]))
        ring = (np.cos(edges[:-1]) - np.cos(edges[1:])) * 2 * np.pi
        w = np.repeat(ring[:, None] / self.n_phi, self.n_phi, axis=1)
        w.flags.writeable = False
        return w

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(theta, phi)`` meshes of shape ``(L, 2L-1)``."""
        return np.meshgrid(self.thetas, self.phis, indexing="ij")

    def unit_vectors(self) -> np.ndarray:
        """Cartesian unit vectors of every sample, shape ``(L, 2L-1, 3)``."""
        theta, phi = self.coordinates()
        st = np.sin(theta)
        return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def build_grid(L: int) -> EquiangularGrid:
    return EquiangularGrid(L)


def pixel_index(t: int, p: int, grid: EquiangularGrid) -> int:
    """Flat row-major index of sample ``(t, p)``."""
    if not (0 <= t < grid.n_theta) or not (0 <= p < grid.n_phi):
        raise InvalidParameterError(
            f"pixel ({t}, {p}) outside grid {grid.n_theta} x {grid.n_phi}")
    return int(t) * grid.n_phi + int(p)


def pixel_coords(k: int, grid: EquiangularGrid) -> tuple[int, int]:
    """Inverse of :func:`pixel_index`."""
    if not 0 <= k < grid.size:
        raise InvalidParameterError(f"flat index {k} outside [0, {grid.size})")
    return divmod(int(k), grid.n_phi)


@dataclass(frozen=True)
class SphericalImage:
    """Real samples on an equiangular grid, held as an ``(L, 2L-1)`` array."""

    grid: EquiangularGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise InvalidInputError("spherical image values must be real")
        v = np.array(v, dtype=np.float64)
        if v.size != self.grid.size:
            raise InvalidInputError(
                f"expected {self.grid.size} samples for L={self.grid.L}, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("spherical image contains non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_array(cls, values, L: int | None = None) -> SphericalImage:
        values = np.asarray(values)
        if L is None:
            if values.ndim != 2:
                raise InvalidInputError("give L explicitly for flat input")
            L = values.shape[0]
        return cls(EquiangularGrid(L), values)

    @classmethod
    def from_function(cls, fn, L: int) -> SphericalImage:
        """Sample ``fn(theta, phi)`` on the grid of band limit ``L``."""
        grid = EquiangularGrid(L)
        theta, phi = grid.coordinates()
        return cls(grid, np.broadcast_to(fn(theta, phi), grid.shape))

    @property
    def L(self) -> int:
        return self.grid.L

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values) -> SphericalImage:
        return SphericalImage(self.grid, values)

    def clamp(self, lo: float = 0.0, hi: float = 1.0) -> SphericalImage:
        return self.with_values(np.clip(self.values, lo, hi))

    def integrate(self) -> float:
        """Midpoint-rule integral over the sphere (see ``area_weights``)."""
        return float(np.sum(self.values * self.grid.area_weights))

    # -- serialisation -----------------------------------------------------

    def to_bytes(self) -> bytes:
        head = SPH_MAGIC + struct.pack("<I", self.L)
        return head + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> SphericalImage:
        if len(data) < 8 or data[:4] != SPH_MAGIC:
            raise InvalidInputError("not an SPH1 file (bad magic)")
        (L,) = struct.unpack("<I", data[4:8])
        if L < 1:
            raise InvalidInputError("SPH1 header carries L = 0")
        n = L * (2 * L - 1)
        if len(data) != 8 + 8 * n:
            raise InvalidInputError(
                f"SPH1 payload has {len(data) - 8} bytes, expected {8 * n}")
        return cls(EquiangularGrid(L), np.frombuffer(data, dtype="<f8", offset=8))

    def to_text(self) -> str:
        lines = [str(self.L)]
        lines += [",".join(repr(float(x)) for x in row) for row in self.values]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SphericalImage:
        rows = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not rows:
            raise InvalidInputError("empty text image")
        try:
            L = int(rows[0])
            values = [[float(x) for x in row.split(",")] for row in rows[1:]]
        except ValueError as exc:
            raise InvalidInputError(f"malformed text image: {exc}") from None
        if L < 1 or len(values) != L or any(len(r) != 2 * L - 1 for r in values):
            raise InvalidInputError("text image shape does not match its header")
        return cls(EquiangularGrid(L), np.array(values))

    def save(self, path) -> None:
        path = Path(path)
        if path.suffix == ".txt":
            path.write_text(self.to_text())
        else:
            path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> SphericalImage:
        path = Path(path)
        if path.suffix == ".txt":
            return cls.from_text(path.read_text())
        return cls.from_bytes(path.read_bytes())
