"""Iterative wavelet-based segmentation of spherical images (WSSA).

One run: denoise with a single thresholded wavelet round trip, seed the
uncertain set with large-gradient pixels, then repeat

    range [a, b] from the uncertain pixels
    -> three-way threshold (0 below a, 1 above b, stretch in between)
    -> stop if binary
    -> uncertain set = pixels strictly inside (0, 1)
    -> thresholded wavelet round trip, applied on the uncertain set only

until no pixel is left uncertain.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from s2wssa.errors import ContractViolation, InvalidParameterError
from s2wssa.grid import SphericalImage
from s2wssa.ops import BinaryMask, gradient_magnitude
from s2wssa.tiling import build_family
from s2wssa.transform import build_hybrid_family, threshold_roundtrip

log = logging.getLogger(__name__)

VARIANTS = ("axisym", "directional", "hybrid")


@dataclass(frozen=True)
class WssaConfig:
    epsilon: float
    lambda_bar: float
    lam: float
    variant: str = "axisym"
    L: int | None = None
    B: float = 2.0
    J_min: int = 2
    N: int = 5
    L_trans: int | None = None
    max_iter: int = 50
    final_threshold_trigger: int = 0
    gradient_norm: str = "l2"
    gradient_units: str = "step"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if self.lambda_bar < 0 or self.lam < 0:
            raise InvalidParameterError("thresholds must be >= 0")
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"unknown wavelet variant {self.variant!r}")
        if self.max_iter < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.final_threshold_trigger < 0:
            raise InvalidParameterError("final_threshold_trigger must be >= 0")
        if self.gradient_norm not in ("l2", "l1"):
            raise InvalidParameterError(f"unknown gradient norm {self.gradient_norm!r}")
        if self.gradient_units not in ("step", "radian"):
            raise InvalidParameterError(f"unknown gradient units {self.gradient_units!r}")

    @classmethod
    def from_sigma(cls, sigma: float, epsilon: float, **kw) -> WssaConfig:
        """Thresholds tied to the noise level: ``lambda_bar = sigma/4``, ``lam = sigma/100``."""
        return cls(epsilon=epsilon, lambda_bar=sigma / 4, lam=sigma / 100, **kw)

    def family_for(self, L: int):
        L = self.L or L
        if self.variant == "axisym":
            return build_family(L, "axisymmetric", self.B, self.J_min)
        if self.variant == "directional":
            return build_family(L, "directional", self.B, self.J_min, min(self.N, L))
        L_trans = self.L_trans if self.L_trans is not None else L // 2
        return build_hybrid_family(L, L_trans, self.B, self.J_min, min(self.N, L))


@dataclass
class IterationRecord:
    iteration: int
    unclassified: int
    a: float | None
    b: float | None
    ms: float


@dataclass
class SegReport:
    mask: BinaryMask
    history: list[IterationRecord]
    converged: bool
    total_time: float
    status: str = "converged"
    denoised: SphericalImage | None = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        """Index of the last recorded iteration."""
        return self.history[-1].iteration if self.history else 0

    def unclassified_counts(self) -> list[int]:
        return [rec.unclassified for rec in self.history]

    def to_csv(self, timing: bool = True) -> str:
        """Iteration table; ``timing=False`` leaves ``ms`` empty for reproducible bytes."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "unclassified", "a", "b", "ms"])
        for rec in self.history:
            w.writerow([rec.iteration, rec.unclassified,
                        "" if rec.a is None else repr(rec.a),
                        "" if rec.b is None else repr(rec.b),
                        f"{rec.ms:.3f}" if timing else ""])
        return buf.getvalue()

    def write_csv(self, path, timing: bool = True) -> None:
        Path(path).write_text(self.to_csv(timing))


# ---------------------------------------------------------------------------
# Individual steps
# ---------------------------------------------------------------------------

def _clamp_input(f: SphericalImage) -> SphericalImage:
    lo, hi = float(f.values.min()), float(f.values.max())
    if lo < 0.0 or hi > 1.0:
        log.warning("input outside [0, 1] (range %.4g..%.4g); clamping", lo, hi)
        return f.clamp(0.0, 1.0)
    return f


def preprocess(f: SphericalImage, lambda_bar: float, family) -> SphericalImage:
    """One thresholded wavelet round trip, clamped to [0, 1]."""
    f = _clamp_input(f)
    return threshold_roundtrip(f, lambda_bar, family).clamp(0.0, 1.0)


def init_boundary_set(f_bar: SphericalImage, epsilon: float, norm: str = "l2",
                      units: str = "step") -> np.ndarray:
    """Flat indices of pixels whose gradient magnitude exceeds ``epsilon``."""
    if not epsilon > 0:
        raise InvalidParameterError(f"epsilon must be > 0, got {epsilon}")
    grad = gradient_magnitude(f_bar, norm=norm, units=units)
    return np.flatnonzero(grad.flat > epsilon)


@dataclass(frozen=True)
class Range:
    a: float
    b: float
    mu: float
    mu_minus: float
    mu_plus: float


def compute_range(f: SphericalImage | np.ndarray, uncertain: np.ndarray) -> Range:
    values = f.flat if isinstance(f, SphericalImage) else np.asarray(f).reshape(-1)
    uncertain = np.asarray(uncertain)
    if uncertain.size == 0:
        raise ContractViolation("compute_range needs a non-empty uncertain set")
    v = values[uncertain]
    mu = float(v.mean())
    mu_minus = float(v[v <= mu].mean())
    mu_plus = float(v[v >= mu].mean())
    a = max((mu + mu_minus) / 2, 0.0)
    b = min((mu + mu_plus) / 2, 1.0)
    return Range(a, b, mu, mu_minus, mu_plus)


def threshold_three_parts(f: SphericalImage, a: float, b: float, uncertain: np.ndarray,
                          mu: float | None = None) -> SphericalImage:
    """0 at or below ``a``, 1 at or above ``b``, linear stretch in between.

    The stretch maps ``[m, M]`` (extremes of the uncertain pixels inside
    ``[a, b]``) onto ``[0, 1]`` and is clamped.  If that interval collapses,
    in-range pixels split at ``mu`` (the uncertain-set mean by default).
    """
    if a > b:
        raise InvalidParameterError(f"need a <= b, got a={a}, b={b}")
    v = f.flat
    uncertain = np.asarray(uncertain, dtype=np.intp)
    inside = v[uncertain]
    inside = inside[(inside >= a) & (inside <= b)]
    low = v <= a
    high = (v >= b) & ~low
    mid = ~low & ~high
    out = np.where(high, 1.0, 0.0)
    M = float(inside.max()) if inside.size else None
    m = float(inside.min()) if inside.size else None
    if M is not None and M > m:
        out[mid] = np.clip((v[mid] - m) / (M - m), 0.0, 1.0)
    else:
        if mu is None:
            mu = float(v[uncertain].mean()) if uncertain.size else (a + b) / 2
        out[mid] = np.where(v[mid] < mu, 0.0, 1.0)
    return f.with_values(out)


def update_uncertain_set(f_half: SphericalImage) -> np.ndarray:
    v = f_half.flat
    return np.flatnonzero((v > 0.0) & (v < 1.0))


def wavelet_iterate(f_half: SphericalImage, uncertain: np.ndarray, lam: float, family) -> SphericalImage:
    """Thresholded round trip written back on the uncertain pixels only."""
    uncertain = np.asarray(uncertain, dtype=np.intp)
    if uncertain.size == 0:
        return f_half
    g = threshold_roundtrip(f_half, lam, family)
    out = f_half.flat.copy()
    out[uncertain] = np.clip(g.flat[uncertain], 0.0, 1.0)
    return f_half.with_values(out)


def final_threshold(f_half: SphericalImage, uncertain: np.ndarray) -> BinaryMask:
    """Label 1 where ``f_half >= mu``, ``mu`` the mean over the uncertain set."""
    uncertain = np.asarray(uncertain, dtype=np.intp)
    if uncertain.size == 0:
        raise ContractViolation("final_threshold needs a non-empty uncertain set")
    mu = float(f_half.flat[uncertain].mean())
    return BinaryMask(f_half.grid, (f_half.values >= mu).astype(np.uint8))


def _binary(f: SphericalImage) -> bool:
    v = f.values
    return bool(np.all((v == 0.0) | (v == 1.0)))


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def run_wssa(f: SphericalImage, config: WssaConfig, family=None, observer=None) -> SegReport:
    """Run the full segmentation.

    ``observer``, if given, is called as ``observer(stage, i, image, uncertain)``
    after each three-way threshold (``"half"``) and wavelet step (``"iterate"``).
    """
    t_start = time.perf_counter()
    if config.L is not None and config.L != f.L:
        raise InvalidParameterError(f"config band limit {config.L} != image band limit {f.L}")
    if _binary(f):
        # already a segmentation; smoothing it first would only blur the labels
        mask = BinaryMask(f.grid, f.values.astype(np.uint8))
        history = [IterationRecord(0, 0, None, None, 1e3 * (time.perf_counter() - t_start))]
        return SegReport(mask, history, True, time.perf_counter() - t_start,
                         status="binary-input", denoised=f)
    if family is None:
        family = config.family_for(f.L)
    f_bar = preprocess(f, config.lambda_bar, family)
    uncertain = init_boundary_set(f_bar, config.epsilon, config.gradient_norm, config.gradient_units)
    history: list[IterationRecord] = []

    if uncertain.size == 0:
        mu = float(f_bar.values.mean())
        # tolerance so that round-off around a flat image does not split it
        mask = BinaryMask(f_bar.grid, (f_bar.values >= mu - 1e-12).astype(np.uint8))
        history.append(IterationRecord(0, 0, None, None, 0.0))
        log.warning("empty initial boundary set; global-mean threshold fallback")
        return SegReport(mask, history, True, time.perf_counter() - t_start,
                         status="degenerate", denoised=f_bar)

    f_i = f_bar
    i = 0
    t_iter = time.perf_counter()
    while True:
        rng = compute_range(f_i, uncertain)
        f_half = threshold_three_parts(f_i, rng.a, rng.b, uncertain, rng.mu)
        if observer is not None:
            observer("half", i, f_half, uncertain)
        next_uncertain = update_uncertain_set(f_half)
        record = IterationRecord(i, int(uncertain.size), rng.a, rng.b,
                                 1e3 * (time.perf_counter() - t_iter))
        history.append(record)
        t_iter = time.perf_counter()
        if next_uncertain.size == 0:
            history.append(IterationRecord(i + 1, 0, None, None, 0.0))
            mask = BinaryMask(f_half.grid, f_half.values.astype(np.uint8))
            return SegReport(mask, history, True, time.perf_counter() - t_start, denoised=f_bar)
        if next_uncertain.size <= config.final_threshold_trigger:
            mask = final_threshold(f_half, next_uncertain)
            history.append(IterationRecord(i + 1, int(next_uncertain.size), None, None,
                                           1e3 * (time.perf_counter() - t_iter)))
            return SegReport(mask, history, True, time.perf_counter() - t_start,
                             status="final-threshold", denoised=f_bar)
        if i + 1 >= config.max_iter:
            mask = final_threshold(f_half, next_uncertain)
            history.append(IterationRecord(i + 1, int(next_uncertain.size), None, None,
                                           1e3 * (time.perf_counter() - t_iter)))
            log.warning("WSSA hit max_iter=%d with %d pixels unclassified",
                        config.max_iter, next_uncertain.size)
            return SegReport(mask, history, False, time.perf_counter() - t_start,
                             status="max-iter", denoised=f_bar)
        f_i = wavelet_iterate(f_half, next_uncertain, config.lam, family)
        record.ms += 1e3 * (time.perf_counter() - t_iter)
        t_iter = time.perf_counter()
        if observer is not None:
            observer("iterate", i, f_i, next_uncertain)
        uncertain = next_uncertain
        i += 1
