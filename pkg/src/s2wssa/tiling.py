"""Harmonic tiling for scale-discretised wavelets.

Radial kernels come from the usual smooth bump: with
``s(u) = exp(-1/(1-u^2))`` rescaled onto ``[1/B, 1]``,

    k_B(t) = int_t^1 s_B(x)^2 / x dx  /  int_{1/B}^1 s_B(x)^2 / x dx

    kappa_j(l) = sqrt(k_B(l / B^(j+1)) - k_B(l / B^j))
    Phi(l)     = sqrt(k_B(l / B^J_min))

The sums telescope, so ``Phi^2 + sum_j kappa_j^2 = k_B(l / B^(J_max+1)) = 1``
for every ``l <= B^J_max``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import comb

from s2wssa.errors import InvalidParameterError

KINDS = ("axisymmetric", "directional", "curvelet")


def _bump(u: float) -> float:
    if u <= -1.0 or u >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - u * u))


def _bump_on_scale(x: float, B: float) -> float:
    return _bump(2.0 * B / (B - 1.0) * (x - 1.0 / B) - 1.0)


def _tail_integral(t: float, B: float) -> float:
    lo = max(t, 1.0 / B)
    if lo >= 1.0:
        return 0.0
    val, _ = integrate.quad(lambda x: _bump_on_scale(x, B) ** 2 / x, lo, 1.0,
                            epsabs=1e-16, epsrel=1e-13, limit=200)
    return val


@lru_cache(maxsize=100_000)
def k_B(t: float, B: float) -> float:
    """Smooth decreasing step: 1 for ``t <= 1/B``, 0 for ``t >= 1``."""
    if t <= 1.0 / B:
        return 1.0
    if t >= 1.0:
        return 0.0
    return _tail_integral(t, B) / _tail_integral(1.0 / B, B)


def j_max_for(L: int, B: float) -> int:
    """Smallest ``J`` with ``B^J >= L - 1``."""
    if L < 2:
        return 0
    J = math.ceil(math.log(L - 1) / math.log(B))
    # guard against log round-off on exact powers
    while J > 0 and B ** (J - 1) >= L - 1:
        J -= 1
    while B ** J < L - 1:
        J += 1
    return J


def _k_vec(ells: np.ndarray, scale: float, B: float) -> np.ndarray:
    return np.array([k_B(float(l) / scale, B) for l in ells])


def kernels_for_scales(L: int, B: float, J_min: int, J_max: int):
    """Kernels for an explicit (possibly empty) scale range; no admissibility check."""
    ells = np.arange(L)
    scaling = np.sqrt(_k_vec(ells, B ** J_min, B))
    kappa = np.zeros((max(J_max - J_min + 1, 0), L))
    for i, j in enumerate(range(J_min, J_max + 1)):
        upper = _k_vec(ells, B ** (j + 1), B)
        lower = _k_vec(ells, B ** j, B)
        kappa[i] = np.sqrt(np.clip(upper - lower, 0.0, None))
    return kappa, scaling


def build_kernels(L: int, B: float = 2.0, J_min: int = 0):
    """Return ``(kappa, scaling, J_max)``; ``kappa[j - J_min]`` is scale ``j``."""
    if L < 2:
        raise InvalidParameterError(f"need L >= 2 for a wavelet tiling, got {L}")
    if not B > 1:
        raise InvalidParameterError(f"dilation base must exceed 1, got {B}")
    if J_min < 0:
        raise InvalidParameterError(f"J_min must be >= 0, got {J_min}")
    J_max = j_max_for(L, B)
    if J_min > J_max:
        raise InvalidParameterError(f"J_min={J_min} exceeds J_max={J_max} for L={L}, B={B}")
    kappa, scaling = kernels_for_scales(L, B, J_min, J_max)
    return kappa, scaling, J_max


def build_directionality(L: int, N: int, kind: str) -> np.ndarray:
    """Directionality ``zeta`` as an ``(L, 2N-1)`` array indexed ``[l, m + N - 1]``.

    Curvelet-like families use ``N = L`` so that orders up to ``l`` fit.
    Phases are 1 for even support and ``i`` for odd support, which gives
    ``zeta_{l,-m} = (-1)^m conj(zeta_lm)``.
    """
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown wavelet kind {kind!r}")
    if not 1 <= N <= L:
        raise InvalidParameterError(f"need 1 <= N <= L, got N={N}, L={L}")
    zeta = np.zeros((L, 2 * N - 1), dtype=complex)
    if kind == "axisymmetric":
        zeta[:, N - 1] = 1.0
        return zeta
    for l in range(L):
        p = min(N - 1, l)
        if kind == "directional":
            m = np.arange(-p, p + 1, 2)
            w = comb(p, (p - m) // 2)
        else:
            m = np.array([-p, p]) if p > 0 else np.array([0])
            w = np.ones(m.size)
        amp = np.sqrt(w / w.sum())
        phase = 1.0 if p % 2 == 0 else 1j
        zeta[l, m + N - 1] = amp * phase
    return zeta


@dataclass(frozen=True)
class WaveletFamily:
    kind: str
    L: int
    B: float
    J_min: int
    J_max: int
    N: int
    kappa: np.ndarray = field(repr=False)
    scaling: np.ndarray = field(repr=False)
    zeta: np.ndarray = field(repr=False)

    @property
    def scales(self) -> range:
        return range(self.J_min, self.J_max + 1)

    @property
    def n_scales(self) -> int:
        return self.J_max - self.J_min + 1

    @property
    def is_axisymmetric(self) -> bool:
        return self.kind == "axisymmetric"

    def kernel(self, j: int) -> np.ndarray:
        if j not in self.scales:
            raise InvalidParameterError(f"scale {j} outside [{self.J_min}, {self.J_max}]")
        return self.kappa[j - self.J_min]

    def drop_last_scale(self) -> WaveletFamily:
        """Same family without its top scale (no longer a full tiling)."""
        return replace(self, J_max=self.J_max - 1, kappa=self.kappa[:-1])

    def describe(self) -> dict:
        return {"kind": self.kind, "L": self.L, "B": self.B, "J_min": self.J_min,
                "J_max": self.J_max, "N": self.N}


def build_family(L: int, kind: str = "axisymmetric", B: float = 2.0, J_min: int = 2,
                 N: int | None = None) -> WaveletFamily:
    """Assemble kernels and directionality into a :class:`WaveletFamily`.

    ``N`` defaults to 1 for axisymmetric, 3 for directional and ``L`` for
    curvelet-like families.
    """
    if kind not in KINDS:
        raise InvalidParameterError(f"unknown wavelet kind {kind!r}")
    if N is None:
        N = {"axisymmetric": 1, "directional": min(3, L), "curvelet": L}[kind]
    if kind == "axisymmetric" and N != 1:
        raise InvalidParameterError("axisymmetric families have N = 1")
    kappa, scaling, J_max = build_kernels(L, B, J_min)
    zeta = build_directionality(L, N, kind)
    return WaveletFamily(kind, L, float(B), J_min, J_max, N, kappa, scaling, zeta)


def wavelet_harmonic(family: WaveletFamily, j: int) -> np.ndarray:
    """``Psi^(j)_ln = sqrt((2l+1)/8pi^2) kappa_j(l) zeta_ln`` as ``(L, 2N-1)``."""
    kappa = family.kernel(j)
    ell = np.arange(family.L)
    return (np.sqrt((2 * ell + 1) / (8 * np.pi ** 2)) * kappa)[:, None] * family.zeta


def check_admissibility(family: WaveletFamily, L: int | None = None) -> float:
    """Max deviation of ``Phi^2 + sum_j kappa_j^2`` from 1 over ``l < L``."""
    L = family.L if L is None else min(L, family.L)
    total = family.scaling[:L] ** 2 + np.sum(family.kappa[:, :L] ** 2, axis=0)
    return float(np.max(np.abs(total - 1.0), initial=0.0))


def tiling_csv(family: WaveletFamily) -> str:
    """CSV of ``l, Phi_l, kappa_j(l)...`` for plotting the harmonic tiling."""
    buf = io.StringIO()
    buf.write(",".join(["ell", "phi"] + [f"kappa_{j}" for j in family.scales]) + "\n")
    for l in range(family.L):
        row = [str(l), repr(float(family.scaling[l]))]
        row += [repr(float(k)) for k in family.kappa[:, l]]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
