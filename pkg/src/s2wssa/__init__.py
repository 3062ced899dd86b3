"""Wavelet-based segmentation of band-limited images on the sphere."""

from s2wssa.errors import ContractViolation, InvalidInputError, InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage, build_grid, pixel_index

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "EquiangularGrid",
    "InvalidInputError",
    "InvalidParameterError",
    "SphericalImage",
    "build_grid",
    "pixel_index",
]
