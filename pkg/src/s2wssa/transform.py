"""Scale-discretised wavelet analysis and synthesis on the sphere.

All convolutions are carried out in harmonic space.  For a real image with
coefficients ``f_lm``:

* scaling coefficients: ``(W^Phi)_lm = f_lm Phi_l``, sampled on the sphere;
* axisymmetric scale ``j``: ``(W^j)_lm = f_lm kappa_j(l)``, sampled on the sphere;
* directional scale ``j``: ``W^j_lmn = 8pi^2/(2l+1) f_lm conj(Psi^j_ln)``,
  sampled on the SO(3) grid of azimuthal band limit ``N``.

Synthesis applies the matching adjoint filters, so for any admissible
family ``synthesise(analyse(f)) == f`` up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from s2wssa import harmonic as hm
from s2wssa.errors import InvalidInputError, InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage
from s2wssa.ops import soft_threshold
from s2wssa.tiling import (
    WaveletFamily,
    build_directionality,
    build_family,
    j_max_for,
    kernels_for_scales,
    wavelet_harmonic,
)


@dataclass(frozen=True)
class WaveletCoefficients:
    """Scaling samples ``(L, 2L-1)`` plus one real sample array per scale.

    Axisymmetric scales are ``(L, 2L-1)`` sphere arrays; directional scales
    are ``(L, 2L-1, 2N-1)`` arrays over ``[beta, alpha, gamma]``.
    """

    family: WaveletFamily
    scaling: np.ndarray = field(repr=False)
    scales: tuple = field(repr=False)

    def __post_init__(self):
        fam = self.family
        if len(self.scales) != fam.n_scales:
            raise InvalidInputError(
                f"{len(self.scales)} scale arrays for a family with {fam.n_scales} scales")
        if self.scaling.shape != (fam.L, 2 * fam.L - 1):
            raise InvalidInputError(f"scaling array has shape {self.scaling.shape}")
        want = self.scale_shape(fam)
        for s in self.scales:
            if s.shape != want:
                raise InvalidInputError(f"scale array shape {s.shape} != {want}")

    @staticmethod
    def scale_shape(family: WaveletFamily) -> tuple:
        if family.is_axisymmetric:
            return (family.L, 2 * family.L - 1)
        return hm.So3Grid(family.L, family.N).shape

    def map(self, fn, scaling_too: bool = False) -> WaveletCoefficients:
        sc = fn(self.scaling) if scaling_too else self.scaling
        return WaveletCoefficients(self.family, sc, tuple(fn(s) for s in self.scales))

    def __add__(self, other: WaveletCoefficients) -> WaveletCoefficients:
        return WaveletCoefficients(self.family, self.scaling + other.scaling,
                                   tuple(a + b for a, b in zip(self.scales, other.scales)))

    def __mul__(self, a: float) -> WaveletCoefficients:
        return self.map(lambda x: a * x, scaling_too=True)

    __rmul__ = __mul__

    def max_abs_detail(self) -> float:
        return max((float(np.max(np.abs(s))) for s in self.scales), default=0.0)


def _real(z: np.ndarray, what: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(z.real), initial=0.0)))
    if float(np.max(np.abs(z.imag), initial=0.0)) > 1e-8 * scale:
        raise InvalidInputError(f"{what} has a significant imaginary part; input not real?")
    return np.ascontiguousarray(z.real)


def _flm_of(f: SphericalImage) -> np.ndarray:
    return hm._analyse_dense(f.values.astype(complex), f.L)


def _image_of(dense: np.ndarray, L: int) -> SphericalImage:
    return SphericalImage(EquiangularGrid(L), _real(hm._synthesise_dense(dense, L), "image"))


def _check_family(f_L: int, family: WaveletFamily):
    if family.L != f_L:
        raise InvalidInputError(f"image band limit {f_L} does not match family band limit {family.L}")


def analyse_harmonic(flm: np.ndarray, family: WaveletFamily) -> WaveletCoefficients:
    """Analyse dense coefficients ``flm[l, m + L - 1]``."""
    L = family.L
    if flm.shape != (L, 2 * L - 1):
        raise InvalidInputError(f"coefficient array shape {flm.shape} does not match L={L}")
    scaling = _real(hm._synthesise_dense(flm * family.scaling[:, None], L), "scaling coefficients")
    scales = []
    for j in family.scales:
        if family.is_axisymmetric:
            band = flm * family.kernel(j)[:, None]
            scales.append(_real(hm._synthesise_dense(band, L), f"scale {j}"))
        else:
            psi = wavelet_harmonic(family, j)
            ell = np.arange(L)[:, None, None]
            w = (8 * np.pi ** 2 / (2 * ell + 1)) * flm[:, :, None] * np.conj(psi)[:, None, :]
            samples = hm.so3_inverse(hm.So3Coeffs(L, family.N, w))
            scales.append(_real(samples, f"scale {j}"))
    return WaveletCoefficients(family, scaling, tuple(scales))


def synthesise_harmonic(coeffs: WaveletCoefficients) -> np.ndarray:
    """Dense ``flm`` reconstructed from (possibly modified) coefficients."""
    family = coeffs.family
    L = family.L
    flm = hm._analyse_dense(coeffs.scaling.astype(complex), L) * family.scaling[:, None]
    for j, samples in zip(family.scales, coeffs.scales):
        if family.is_axisymmetric:
            flm += hm._analyse_dense(samples.astype(complex), L) * family.kernel(j)[:, None]
        else:
            w = hm.so3_forward(samples, L, family.N).values
            flm += np.einsum("lmn,ln->lm", w, wavelet_harmonic(family, j))
    return flm


def analyse(f: SphericalImage, family: WaveletFamily) -> WaveletCoefficients:
    _check_family(f.L, family)
    return analyse_harmonic(_flm_of(f), family)


def synthesise(coeffs: WaveletCoefficients, family: WaveletFamily | None = None) -> SphericalImage:
    if family is not None and family is not coeffs.family and \
            family.describe() != coeffs.family.describe():
        raise InvalidInputError("coefficients were produced by a different wavelet family")
    return _image_of(synthesise_harmonic(coeffs), coeffs.family.L)


def harmonic_energies(coeffs: WaveletCoefficients) -> tuple[float, list[float]]:
    """Harmonic-space energy of the scaling part and of each scale.

    For coefficients from :func:`analyse` these add up to ``sum |f_lm|^2``.
    """
    family = coeffs.family
    L = family.L
    e_scal = float(np.sum(np.abs(hm._analyse_dense(coeffs.scaling.astype(complex), L)) ** 2))
    out = []
    for samples in coeffs.scales:
        if family.is_axisymmetric:
            out.append(float(np.sum(np.abs(hm._analyse_dense(samples.astype(complex), L)) ** 2)))
        else:
            w = hm.so3_forward(samples, L, family.N).values
            ell = np.arange(L)[:, None, None]
            out.append(float(np.sum((2 * ell + 1) / (8 * np.pi ** 2) * np.abs(w) ** 2)))
    return e_scal, out


# ---------------------------------------------------------------------------
# Hybrid curvelet / directional transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HybridFamily:
    """Curvelet-like family below ``L_trans`` (top scale dropped) + directional family."""

    L_trans: int
    curvelet: WaveletFamily
    directional: WaveletFamily

    @property
    def L(self) -> int:
        return self.directional.L


def build_hybrid_family(L: int, L_trans: int, B: float = 2.0, J_min: int = 2, N: int = 3) -> HybridFamily:
    """Hybrid family; the curvelet part keeps scales ``J_min .. J_max(L_trans) - 1``.

    When ``L_trans`` is too small to hold any curvelet scale the curvelet part
    reduces to its scaling function (a plain low-pass).
    """
    if not 1 <= L_trans <= L:
        raise InvalidParameterError(f"need 1 <= L_trans <= L, got L_trans={L_trans}, L={L}")
    directional = build_family(L, "directional", B, J_min, N)
    top = j_max_for(L_trans, B) - 1
    kappa, scaling = kernels_for_scales(L_trans, B, J_min, top)
    zeta = build_directionality(L_trans, L_trans, "curvelet")
    curvelet = WaveletFamily("curvelet", L_trans, float(B), J_min, max(top, J_min - 1),
                             L_trans, kappa, scaling, zeta)
    return HybridFamily(L_trans, curvelet, directional)


@dataclass(frozen=True)
class HybridCoefficients:
    L_trans: int
    curvelet: WaveletCoefficients
    directional: WaveletCoefficients
    f_curv: SphericalImage = field(repr=False)

    def map(self, fn) -> HybridCoefficients:
        return HybridCoefficients(self.L_trans, self.curvelet.map(fn),
                                  self.directional.map(fn), self.f_curv)


def _pad(flm_small: np.ndarray, L: int) -> np.ndarray:
    Ls = flm_small.shape[0]
    out = np.zeros((L, 2 * L - 1), dtype=complex)
    out[:Ls, L - Ls: L + Ls - 1] = flm_small
    return out


def _truncate(flm: np.ndarray, Ls: int) -> np.ndarray:
    L = flm.shape[0]
    return flm[:Ls, L - Ls: L + Ls - 1].copy()


def analyse_hybrid(f: SphericalImage, family: HybridFamily) -> HybridCoefficients:
    if family.L != f.L:
        raise InvalidInputError(f"image band limit {f.L} does not match hybrid band limit {family.L}")
    L, Lt = f.L, family.L_trans
    flm = _flm_of(f)
    curv = analyse_harmonic(_truncate(flm, Lt), family.curvelet)
    f_curv = _image_of(_pad(synthesise_harmonic(curv), L), L)
    f_dir = f.with_values(f.values - f_curv.values)
    return HybridCoefficients(Lt, curv, analyse(f_dir, family.directional), f_curv)


def synthesise_hybrid(h: HybridCoefficients) -> SphericalImage:
    """Sum of the curvelet-part and directional-part reconstructions."""
    L = h.directional.family.L
    curv = hm._synthesise_dense(_pad(synthesise_harmonic(h.curvelet), L), L)
    part_dir = synthesise(h.directional)
    return SphericalImage(EquiangularGrid(L), _real(curv, "curvelet part") + part_dir.values)


# ---------------------------------------------------------------------------
# Thresholded round trip
# ---------------------------------------------------------------------------

def threshold_roundtrip(f: SphericalImage, lam: float, family) -> SphericalImage:
    """Analyse, soft-threshold every wavelet coefficient, synthesise.

    Scaling coefficients pass through untouched.
    """
    if lam < 0:
        raise InvalidParameterError(f"threshold must be >= 0, got {lam}")
    shrink = (lambda x: soft_threshold(x, lam)) if lam > 0 else (lambda x: x)
    if isinstance(family, HybridFamily):
        return synthesise_hybrid(analyse_hybrid(f, family).map(shrink))
    return synthesise(analyse(f, family).map(shrink))
