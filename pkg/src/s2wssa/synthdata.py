"""Synthetic spherical phantoms with exact ground-truth masks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from s2wssa import harmonic as hm
from s2wssa.errors import InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage
from s2wssa.ops import BinaryMask

PHANTOM_KINDS = ("cap", "two_caps", "ridge_network", "checker")

# indicator is sampled this many times finer before projecting onto l < L
OVERSAMPLE = 3


def _unit(theta, phi):
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


@dataclass(frozen=True)
class PhantomSpec:
    """Declarative phantom description.

    ``centers`` are ``(theta, phi)`` pairs in radians (cap centres, or the
    poles of ridge great circles); ``radii`` are cap radii; ``widths`` are
    full angular widths of ridges.  ``shading`` adds a smooth background
    trend ``shading * (1 + cos theta) / 2``.
    """

    kind: str
    centers: tuple = ((0.0, 0.0),)
    radii: tuple = (np.pi / 4,)
    widths: tuple = ()
    foreground: float = 1.0
    background: float = 0.0
    shading: float = 0.0
    cells: tuple = (4, 8)
    smoothing_L: int | None = None
    ridge_levels: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise InvalidParameterError(f"unknown phantom kind {self.kind!r}")
        for name in ("foreground", "background", "shading"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1]")
        for lvl in self.ridge_levels:
            if not 0.0 <= lvl <= 1.0:
                raise InvalidParameterError("ridge levels must lie in [0, 1]")
        if self.kind in ("cap", "two_caps"):
            need = 1 if self.kind == "cap" else 2
            if len(self.centers) < need or len(self.radii) < need:
                raise InvalidParameterError(f"{self.kind} needs {need} centre(s) and radius/radii")
            for r in self.radii[:need]:
                if not 0.0 < r <= np.pi:
                    raise InvalidParameterError(f"cap radius {r} outside (0, pi]")
        if self.kind == "ridge_network":
            if not self.widths or len(self.widths) != len(self.centers):
                raise InvalidParameterError("ridge_network needs one width per great circle")
            for w in self.widths:
                if not 0.0 < w < np.pi:
                    raise InvalidParameterError(f"ridge width {w} outside (0, pi)")
            if self.ridge_levels and len(self.ridge_levels) != len(self.widths):
                raise InvalidParameterError("ridge_levels needs one level per great circle")
        if self.kind == "checker" and (len(self.cells) != 2 or min(self.cells) < 1):
            raise InvalidParameterError("checker needs two positive cell counts")
        if self.smoothing_L is not None and self.smoothing_L < 1:
            raise InvalidParameterError("smoothing band limit must be >= 1")


def _layers(spec: PhantomSpec, grid: EquiangularGrid) -> list[tuple[np.ndarray, float]]:
    """Boolean indicator of each foreground piece with its contrast level."""
    x = np.moveaxis(grid.unit_vectors(), -1, 0)
    theta, phi = grid.coordinates()
    if spec.kind in ("cap", "two_caps"):
        n = 1 if spec.kind == "cap" else 2
        out = []
        for (tc, pc), r in zip(spec.centers[:n], spec.radii[:n]):
            cosang = np.tensordot(_unit(tc, pc), x, axes=1)
            out.append((cosang >= np.cos(r), spec.foreground))
        return out
    if spec.kind == "ridge_network":
        levels = spec.ridge_levels or (spec.foreground,) * len(spec.widths)
        out = []
        for (tc, pc), w, lvl in zip(spec.centers, spec.widths, levels):
            dist = np.abs(np.tensordot(_unit(tc, pc), x, axes=1))
            out.append((dist <= np.sin(w / 2), lvl))
        return out
    a, b = spec.cells
    cell = (np.floor(theta / (np.pi / a)) + np.floor(phi / (2 * np.pi / b))) % 2 == 1
    return [(cell, spec.foreground)]


def _contrast(spec: PhantomSpec, grid: EquiangularGrid) -> np.ndarray:
    img = np.full(grid.shape, spec.background)
    for ind, level in _layers(spec, grid):
        img = np.where(ind, level, img)
    theta, _ = grid.coordinates()
    return img + spec.shading * (1 + np.cos(theta)) / 2


def ground_truth(spec: PhantomSpec, L: int) -> BinaryMask:
    grid = EquiangularGrid(L)
    mask = np.zeros(grid.shape, dtype=bool)
    for ind, _ in _layers(spec, grid):
        mask |= ind
    return BinaryMask(grid, mask.astype(np.uint8))


def make_phantom(spec: PhantomSpec, L: int) -> tuple[SphericalImage, BinaryMask]:
    """Band-limited phantom image (clamped to [0, 1]) and its exact mask.

    The piecewise-constant image is sampled on a finer grid, projected onto
    ``l < min(L, smoothing_L)`` and resynthesised on the grid of band limit ``L``.
    """
    if L < 1:
        raise InvalidParameterError(f"band limit must be >= 1, got {L}")
    L_fine = OVERSAMPLE * L
    fine = SphericalImage(EquiangularGrid(L_fine), _contrast(spec, EquiangularGrid(L_fine)))
    flm = hm.sht_forward(fine)
    L_keep = min(L, spec.smoothing_L or L)
    flm = flm.truncate(L_keep).truncate(L)
    image = hm.sht_inverse(flm).clamp(0.0, 1.0)
    return image, ground_truth(spec, L)


def two_caps_spec(**overrides) -> PhantomSpec:
    """Two caps of different size, the default convergence phantom."""
    base = dict(kind="two_caps", centers=((0.9, 0.5), (2.1, 3.6)), radii=(0.6, 0.45))
    base.update(overrides)
    return PhantomSpec(**base)


def ridge_network_spec(**overrides) -> PhantomSpec:
    """Great-circle ridges, two bright and two faint, on a dark background.

    The faint pair sits well below the midpoint between background and the
    bright ridges, so a single global intensity split tends to lose it.
    """
    base = dict(
        kind="ridge_network",
        centers=((0.4, 0.3), (1.3, 2.0), (2.0, 4.1), (1.0, 5.2)),
        widths=(0.2, 0.16, 0.16, 0.14),
        ridge_levels=(1.0, 1.0, 0.4, 0.35),
        background=0.0,
    )
    base.update(overrides)
    return PhantomSpec(**base)


# -- text config -----------------------------------------------------------

def _pairs(text: str) -> tuple:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            a, b = chunk.split(",")
            out.append((float(a), float(b)))
    return tuple(out)


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def parse_phantom_config(text: str) -> PhantomSpec:
    """Parse ``key = value`` lines into a :class:`PhantomSpec`.

    Keys: ``kind``, ``centers`` (``theta,phi; theta,phi``), ``radii``,
    ``widths``, ``ridge_levels``, ``foreground``, ``background``, ``shading``,
    ``cells`` (``a,b``) and ``smoothing_L``.  ``#`` starts a comment.
    """
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "kind":
                fields[key] = value
            elif key == "centers":
                fields[key] = _pairs(value)
            elif key in ("radii", "widths", "ridge_levels"):
                fields[key] = _floats(value)
            elif key in ("foreground", "background", "shading"):
                fields[key] = float(value)
            elif key == "cells":
                fields[key] = tuple(int(x) for x in value.split(","))
            elif key == "smoothing_L":
                fields[key] = int(value)
            else:
                raise InvalidParameterError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise InvalidParameterError(f"line {lineno}: {exc}") from None
    if "kind" not in fields:
        raise InvalidParameterError("phantom config lacks a kind")
    return PhantomSpec(**fields)
