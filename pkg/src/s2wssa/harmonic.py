"""Band-limited harmonic analysis on the sphere and on the rotation group.

Conventions
-----------
* Orthonormal spherical harmonics with the Condon-Shortley phase,
  ``Y_lm(theta, phi) = sqrt((2l+1)/4pi) d^l_{m0}(theta) exp(i m phi)``.
* Wigner ``d^l_{mn}(beta) = <l m| exp(-i beta J_y) |l n>``, so that
  ``d^1_{10}(beta) = -sin(beta)/sqrt(2)``.
* Functions on SO(3) are synthesised as
  ``W(a, b, g) = sum (2l+1)/(8pi^2) W_lmn exp(-i m a) d^l_mn(b) exp(-i n g)``.

Forward transforms are exact for band-limited input.  The azimuthal
integrals are plain DFTs.  For the polar integral the ``L`` equiangular
rings are reflected onto the full circle, which makes the per-order signal a
trigonometric polynomial known at ``2L-1`` equispaced points; it is then
re-evaluated at ``L`` Gauss-Legendre nodes in ``cos(theta)`` where the
product with any ``d^l_mn`` is a polynomial of degree ``<= 2L-2`` and is
integrated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, xlogy

from s2wssa.errors import InvalidInputError, InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage

# Largest Wigner table (in float64 entries) kept in memory; bigger transforms
# regenerate the recursion on every call.
TABLE_CACHE_LIMIT = 12_000_000


# ---------------------------------------------------------------------------
# Wigner d recursion
# ---------------------------------------------------------------------------

def _seed(l0: int, m: np.ndarray, n: np.ndarray, half_cos, half_sin):
    """``d^{l0}_{mn}`` for pairs with ``max(|m|, |n|) == l0``.

    ``half_cos``/``half_sin`` have shape ``(nbeta, 1)``; ``m``/``n`` are 1-D.
    """
    m = np.asarray(m)
    n = np.asarray(n)
    swap = np.abs(n) > np.abs(m)
    # d_mn = (-1)^(n-m) d_nm
    row = np.where(swap, n, m)
    col = np.where(swap, m, n)
    sign = np.where(swap & ((n - m) % 2 == 1), -1.0, 1.0)
    top = row > 0 if l0 > 0 else np.ones_like(row, dtype=bool)
    # d_{l,n}  = (-1)^(l-n) sqrt(C(2l, l+n)) c^(l+n) s^(l-n)
    # d_{-l,n} =            sqrt(C(2l, l-n)) c^(l-n) s^(l+n)
    pc = np.where(top, l0 + col, l0 - col)
    ps = np.where(top, l0 - col, l0 + col)
    sign = sign * np.where(top & ((l0 - col) % 2 == 1), -1.0, 1.0)
    lbin = 0.5 * (gammaln(2 * l0 + 1) - gammaln(pc + 1) - gammaln(ps + 1))
    logv = lbin + xlogy(pc, half_cos) + xlogy(ps, half_sin)
    return sign * np.exp(logv)


def wigner_d_layers(L: int, betas, m_max: int, n_max: int):
    """Yield ``(l, d)`` for ``l = 0 .. L-1``.

    ``d`` has shape ``(len(betas), 2*m_max+1, 2*n_max+1)`` and holds
    ``d^l_{mn}(beta)`` at index ``[b, m + m_max, n + n_max]`` (zero where
    ``l < max(|m|, |n|)``).  Uses the three-term recursion in ``l`` at fixed
    ``(m, n)``, started from the closed form on the boundary ``l = max(|m|,|n|)``
    evaluated in log space.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    m = np.arange(-m_max, m_max + 1)[:, None]
    n = np.arange(-n_max, n_max + 1)[None, :]
    l0 = np.maximum(np.abs(m), np.abs(n))
    mn = (m * n).astype(float)
    m2 = (m * m).astype(float)
    n2 = (n * n).astype(float)
    cosb = np.cos(betas)[:, None, None]
    hc = np.cos(betas / 2)[:, None]
    hs = np.sin(betas / 2)[:, None]
    hc = np.clip(hc, 0.0, None)
    hs = np.clip(hs, 0.0, None)

    shape = (betas.size, 2 * m_max + 1, 2 * n_max + 1)
    prev2 = np.zeros(shape)
    prev = np.zeros(shape)
    for l in range(L):
        cur = np.zeros(shape)
        if l > 0:
            grow = l0 < l
            denom = np.sqrt(np.clip((l * l - m2) * (l * l - n2), 0, None))
            a = np.divide(l * (2 * l - 1), denom, out=np.zeros_like(denom), where=grow)
            b = mn / (l * (l - 1)) if l > 1 else np.zeros_like(mn)
            lm1 = l - 1
            c_num = np.sqrt(np.clip((lm1 * lm1 - m2) * (lm1 * lm1 - n2), 0, None))
            c = c_num / (lm1 * (2 * l - 1)) if lm1 > 0 else np.zeros_like(c_num)
            cur = a * ((cosb - b) * prev - c * prev2)
        ring = np.argwhere(l0 == l)
        if ring.size:
            mi, ni = ring[:, 0], ring[:, 1]
            cur[:, mi, ni] = _seed(l, mi - m_max, ni - n_max, hc, hs)
        yield l, cur
        prev2, prev = prev, cur


def wigner_d(l: int, beta: float) -> np.ndarray:
    """Full ``(2l+1) x (2l+1)`` matrix ``d^l_{mn}(beta)``, rows ``m``, columns ``n``."""
    if l < 0:
        raise InvalidParameterError(f"degree must be >= 0, got {l}")
    if not 0.0 <= beta <= np.pi:
        raise InvalidParameterError(f"beta must lie in [0, pi], got {beta}")
    for ell, d in wigner_d_layers(l + 1, [beta], l, l):
        if ell == l:
            return d[0]
    raise AssertionError("unreachable")


def _table_size(L, nbeta, m_max, n_max):
    return L * nbeta * (2 * m_max + 1) * (2 * n_max + 1)


@lru_cache(maxsize=16)
def _cached_table(L: int, nodes: str, m_max: int, n_max: int) -> np.ndarray:
    betas = _mw_betas(L) if nodes == "mw" else _gl_nodes(L)[0]
    out = np.empty((L, betas.size, 2 * m_max + 1, 2 * n_max + 1))
    for l, d in wigner_d_layers(L, betas, m_max, n_max):
        out[l] = d
    out.flags.writeable = False
    return out


def _layers(L: int, nodes: str, m_max: int, n_max: int):
    """Iterate ``d`` layers on MW or Gauss-Legendre nodes, cached when small."""
    if _table_size(L, L, m_max, n_max) <= TABLE_CACHE_LIMIT:
        table = _cached_table(L, nodes, m_max, n_max)
        return enumerate(table)
    betas = _mw_betas(L) if nodes == "mw" else _gl_nodes(L)[0]
    return wigner_d_layers(L, betas, m_max, n_max)


# ---------------------------------------------------------------------------
# Polar quadrature
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _mw_betas(L: int) -> np.ndarray:
    return EquiangularGrid(L).thetas.copy()


@lru_cache(maxsize=32)
def _gl_nodes(L: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(L)
    return np.arccos(x), w


@lru_cache(maxsize=32)
def _resample(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices taking ring samples to Gauss-Legendre nodes.

    The first handles signals even under ``beta -> -beta``, the second odd
    ones.  Shape ``(L_nodes, L_rings)``.
    """
    M = 2 * L - 1
    k = np.arange(-(L - 1), L)
    bq, _ = _gl_nodes(L)
    bb = _mw_betas(L)
    cq, sq = np.cos(np.outer(bq, k)), np.sin(np.outer(bq, k))
    cb, sb = np.cos(np.outer(k, bb)), np.sin(np.outer(k, bb))
    even = 2.0 / M * cq @ cb
    odd = 2.0 / M * sq @ sb
    # the pole ring is its own mirror image
    even[:, -1] *= 0.5
    odd[:, -1] = 0.0
    return even, odd


def _to_nodes(ring_values: np.ndarray, parity_odd: np.ndarray, L: int) -> np.ndarray:
    """Resample ``(L, ...)`` ring values to GL nodes; parity mask broadcasts over ``...``."""
    even, odd = _resample(L)
    flat = ring_values.reshape(L, -1)
    mask = np.broadcast_to(parity_odd, ring_values.shape[1:]).reshape(-1)
    out = np.empty(flat.shape, dtype=flat.dtype)
    out[:, ~mask] = even @ flat[:, ~mask]
    out[:, mask] = odd @ flat[:, mask]
    return out.reshape(ring_values.shape)


# ---------------------------------------------------------------------------
# Spherical harmonic transform
# ---------------------------------------------------------------------------

def lm_index(l, m):
    return l * l + l + m


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Coefficients ``f_lm`` in the flat triangular layout ``index = l^2 + l + m``."""

    L: int
    values: np.ndarray = field(repr=False)
    reality: bool = False

    def __post_init__(self):
        if self.L < 1:
            raise InvalidParameterError(f"band limit must be >= 1, got {self.L}")
        v = np.array(self.values, dtype=np.complex128).reshape(-1)
        if v.size != self.L * self.L:
            raise InvalidInputError(f"expected {self.L**2} coefficients, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("non-finite harmonic coefficients")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __getitem__(self, lm):
        l, m = lm
        if not (0 <= l < self.L and -l <= m <= l):
            raise InvalidParameterError(f"(l, m) = {lm} outside band limit {self.L}")
        return self.values[lm_index(l, m)]

    def as_matrix(self) -> np.ndarray:
        """Dense ``(L, 2L-1)`` array indexed ``[l, m + L - 1]``, zero outside ``|m| <= l``."""
        return _tri_to_dense(self.values, self.L)

    @classmethod
    def from_matrix(cls, dense: np.ndarray, reality: bool = False) -> HarmonicCoeffs:
        L = dense.shape[0]
        return cls(L, _dense_to_tri(dense, L), reality)

    def truncate(self, L_new: int) -> HarmonicCoeffs:
        if L_new > self.L:
            v = np.zeros(L_new * L_new, dtype=complex)
            v[: self.L ** 2] = self.values
            return HarmonicCoeffs(L_new, v, self.reality)
        return HarmonicCoeffs(L_new, self.values[: L_new * L_new], self.reality)

    def reality_defect(self) -> float:
        """Max of ``|f_{l,-m} - (-1)^m conj(f_lm)|``."""
        d = self.as_matrix()
        L = self.L
        m = np.arange(-(L - 1), L)
        mirrored = ((-1.0) ** np.abs(m)) * np.conj(d[:, ::-1])
        return float(np.max(np.abs(d - mirrored), initial=0.0))


def _tri_to_dense(tri: np.ndarray, L: int) -> np.ndarray:
    dense = np.zeros((L, 2 * L - 1), dtype=complex)
    for l in range(L):
        dense[l, L - 1 - l: L + l] = tri[l * l: (l + 1) * (l + 1)]
    return dense


def _dense_to_tri(dense: np.ndarray, L: int) -> np.ndarray:
    return np.concatenate([dense[l, L - 1 - l: L + l] for l in range(L)])


def _legendre_norm(L: int) -> np.ndarray:
    return np.sqrt((2 * np.arange(L) + 1) / (4 * np.pi))


def _synthesise_dense(dense: np.ndarray, L: int) -> np.ndarray:
    """Evaluate ``sum f_lm Y_lm`` on the grid; returns complex ``(L, 2L-1)``."""
    scaled = dense * _legendre_norm(L)[:, None]
    rings = np.zeros((L, 2 * L - 1), dtype=complex)  # [t, m]
    for l, d in _layers(L, "mw", L - 1, 0):
        rings += d[:, :, 0] * scaled[l][None, :]
    # sum over m of F_m(theta) exp(i m phi)
    M = 2 * L - 1
    shifted = np.roll(rings, -(L - 1), axis=1)
    return np.fft.ifft(shifted, axis=1) * M


def _analyse_dense(samples: np.ndarray, L: int) -> np.ndarray:
    M = 2 * L - 1
    spectra = np.fft.fft(samples, axis=1) / M  # F_m at index m mod M
    rings = np.roll(spectra, L - 1, axis=1)  # [t, m + L - 1]
    m = np.arange(-(L - 1), L)
    nodes = _to_nodes(rings, (m % 2) == 1, L)
    _, w = _gl_nodes(L)
    weighted = nodes * w[:, None]
    dense = np.zeros((L, M), dtype=complex)
    for l, d in _layers(L, "gl", L - 1, 0):
        dense[l] = np.sum(weighted * d[:, :, 0], axis=0)
    dense *= 2 * np.pi * _legendre_norm(L)[:, None]
    keep = np.abs(m)[None, :] <= np.arange(L)[:, None]
    return np.where(keep, dense, 0)


def sht_forward(image: SphericalImage) -> HarmonicCoeffs:
    if not isinstance(image, SphericalImage):
        raise InvalidInputError("sht_forward expects a SphericalImage")
    L = image.L
    dense = _analyse_dense(image.values.astype(complex), L)
    return HarmonicCoeffs(L, _dense_to_tri(dense, L), reality=True)


def sht_inverse(coeffs: HarmonicCoeffs, tol: float = 1e-10) -> SphericalImage:
    L = coeffs.L
    out = _synthesise_dense(coeffs.as_matrix(), L)
    if coeffs.reality:
        scale = max(1.0, float(np.max(np.abs(out.real), initial=0.0)))
        resid = float(np.max(np.abs(out.imag), initial=0.0))
        if resid > tol * scale:
            raise InvalidInputError(
                f"coefficients flagged real synthesise with imaginary residue {resid:.3e}")
    return SphericalImage(EquiangularGrid(L), out.real)


def sht_inverse_complex(coeffs: HarmonicCoeffs) -> np.ndarray:
    """Complex-valued synthesis without the reality check."""
    return _synthesise_dense(coeffs.as_matrix(), coeffs.L)


def band_limit_image(image: SphericalImage, L_target: int) -> SphericalImage:
    """Zero every ``l >= L_target`` and resynthesise on the original grid."""
    if L_target < 1:
        raise InvalidParameterError(f"target band limit must be >= 1, got {L_target}")
    if L_target > image.L:
        raise InvalidParameterError(
            f"target band limit {L_target} exceeds image band limit {image.L}")
    flm = sht_forward(image)
    v = np.array(flm.values)
    v[L_target * L_target:] = 0
    return sht_inverse(HarmonicCoeffs(image.L, v, reality=True))


def resample_image(image: SphericalImage, L_new: int) -> SphericalImage:
    """Transfer to the grid of band limit ``L_new`` (zero-padding or truncating)."""
    return sht_inverse(sht_forward(image).truncate(L_new))


def random_coeffs(L: int, rng: np.random.Generator, reality: bool = True) -> HarmonicCoeffs:
    """Gaussian coefficients; with ``reality`` the symmetry of a real signal is imposed."""
    dense = rng.standard_normal((L, 2 * L - 1)) + 1j * rng.standard_normal((L, 2 * L - 1))
    m = np.arange(-(L - 1), L)
    dense = np.where(np.abs(m)[None, :] <= np.arange(L)[:, None], dense, 0)
    if reality:
        sign = (-1.0) ** np.abs(m)
        neg = m < 0
        dense[:, neg] = (sign * np.conj(dense[:, ::-1]))[:, neg]
        dense[:, L - 1] = dense[:, L - 1].real
    return HarmonicCoeffs.from_matrix(dense, reality=reality)


# ---------------------------------------------------------------------------
# Rotation group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class So3Grid:
    """Euler-angle samples: ``2L-1`` alphas, ``L`` betas, ``2N-1`` gammas.

    Sample arrays are laid out ``[beta, alpha, gamma]``.
    """

    L: int
    N: int

    def __post_init__(self):
        if self.L < 1 or self.N < 1:
            raise InvalidParameterError(f"need L >= 1 and N >= 1, got L={self.L}, N={self.N}")
        if self.N > self.L:
            raise InvalidParameterError(f"azimuthal band limit N={self.N} exceeds L={self.L}")

    @property
    def alphas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(2 * self.L - 1) / (2 * self.L - 1)

    @property
    def betas(self) -> np.ndarray:
        return np.pi * ((2 * np.arange(self.L) + 1) / (2 * self.L - 1))

    @property
    def gammas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(2 * self.N - 1) / (2 * self.N - 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.L, 2 * self.L - 1, 2 * self.N - 1)


@dataclass(frozen=True)
class So3Coeffs:
    """``W_lmn`` stored densely as ``[l, m + L - 1, n + N - 1]``."""

    L: int
    N: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        So3Grid(self.L, self.N)
        v = np.array(self.values, dtype=np.complex128)
        if v.shape != (self.L, 2 * self.L - 1, 2 * self.N - 1):
            raise InvalidInputError(f"So3Coeffs shape {v.shape} does not match L={self.L}, N={self.N}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("non-finite SO(3) coefficients")
        v = np.where(_so3_mask(self.L, self.N), v, 0)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __getitem__(self, lmn):
        l, m, n = lmn
        return self.values[l, m + self.L - 1, n + self.N - 1]


@lru_cache(maxsize=32)
def _so3_mask(L: int, N: int) -> np.ndarray:
    l = np.arange(L)[:, None, None]
    m = np.arange(-(L - 1), L)[None, :, None]
    n = np.arange(-(N - 1), N)[None, None, :]
    return (np.abs(m) <= l) & (np.abs(n) <= l)


def so3_inverse(coeffs: So3Coeffs, grid: So3Grid | None = None) -> np.ndarray:
    """Evaluate the SO(3) function on ``grid``; complex array ``[beta, alpha, gamma]``."""
    L, N = coeffs.L, coeffs.N
    if grid is None:
        grid = So3Grid(L, N)
    if (grid.L, grid.N) != (L, N):
        raise InvalidParameterError(f"grid (L={grid.L}, N={grid.N}) does not match coefficients")
    weight = (2 * np.arange(L) + 1) / (8 * np.pi ** 2)
    scaled = coeffs.values * weight[:, None, None]
    rings = np.zeros((L, 2 * L - 1, 2 * N - 1), dtype=complex)
    for l, d in _layers(L, "mw", L - 1, N - 1):
        rings += d * scaled[l][None]
    # sum_{m,n} G_mn exp(-i m alpha) exp(-i n gamma): forward DFT on both axes
    shifted = np.roll(np.roll(rings, -(L - 1), axis=1), -(N - 1), axis=2)
    return np.fft.fft2(shifted, axes=(1, 2))


def so3_forward(samples: np.ndarray, L: int, N: int) -> So3Coeffs:
    """Exact inverse of :func:`so3_inverse` for band-limited samples."""
    samples = np.asarray(samples)
    grid = So3Grid(L, N)
    if samples.shape != grid.shape:
        raise InvalidInputError(f"samples shape {samples.shape} != grid shape {grid.shape}")
    Ma, Mg = 2 * L - 1, 2 * N - 1
    spectra = np.fft.ifft2(samples.astype(complex), axes=(1, 2))
    rings = np.roll(np.roll(spectra, L - 1, axis=1), N - 1, axis=2)
    m = np.arange(-(L - 1), L)[:, None]
    n = np.arange(-(N - 1), N)[None, :]
    nodes = _to_nodes(rings, ((m - n) % 2) == 1, L)
    _, w = _gl_nodes(L)
    weighted = nodes * w[:, None, None]
    out = np.zeros((L, Ma, Mg), dtype=complex)
    for l, d in _layers(L, "gl", L - 1, N - 1):
        out[l] = np.einsum("bmn,bmn->mn", weighted, d)
    out *= 4 * np.pi ** 2
    return So3Coeffs(L, N, out)
