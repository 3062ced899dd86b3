import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s2wssa.errors import InvalidInputError, InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage
from s2wssa.ops import (
    BinaryMask,
    add_noise,
    dice,
    gradient_components,
    gradient_magnitude,
    kmeans_1d,
    kmeans_intensity,
    noise_sigma,
    soft_threshold,
)


def image_of(values):
    values = np.asarray(values, dtype=float)
    L = values.shape[0]
    return SphericalImage(EquiangularGrid(L), values)


# -- oracles ---------------------------------------------------------------

def soft_threshold_oracle(v, lam):
    if v > lam:
        return v - lam
    if v < -lam:
        return v + lam
    return 0.0


def two_means_oracle(x):
    """Scan every threshold between distinct sorted values; minimal within-cluster SSE."""
    s = np.sort(np.asarray(x, dtype=float))
    best = np.inf
    for i in range(1, s.size):
        if s[i] == s[i - 1]:
            continue
        lo, hi = s[:i], s[i:]
        best = min(best, np.sum((lo - lo.mean()) ** 2) + np.sum((hi - hi.mean()) ** 2))
    return best


def sse(x, labels):
    return sum(np.sum((x[labels == c] - x[labels == c].mean()) ** 2) for c in np.unique(labels))


# -- soft threshold --------------------------------------------------------

@pytest.mark.parametrize("v, lam, out", [(0.25, 0.1, 0.15), (-0.05, 0.1, 0.0), (-0.3, 0.1, -0.2)])
def test_soft_threshold_examples(v, lam, out):
    assert soft_threshold(v, lam) == pytest.approx(out, abs=1e-15)


def test_soft_threshold_negative_lambda():
    with pytest.raises(InvalidParameterError):
        soft_threshold(1.0, -0.1)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(finite, finite, st.floats(0, 1e3))
def test_soft_threshold_properties(u, v, lam):
    tu, tv = soft_threshold(u, lam), soft_threshold(v, lam)
    assert abs(tu - tv) <= abs(u - v) * (1 + 1e-12) + 1e-9
    assert abs(tv) <= abs(v)
    assert soft_threshold(-v, lam) == -tv


@settings(max_examples=100)
@given(st.lists(finite, min_size=1, max_size=50), st.floats(0, 100))
def test_soft_threshold_matches_scalar_oracle(vals, lam):
    out = soft_threshold(np.array(vals), lam)
    expect = np.array([soft_threshold_oracle(v, lam) for v in vals])
    assert np.max(np.abs(np.atleast_1d(out) - expect)) <= 1e-9


# -- gradient --------------------------------------------------------------

def test_gradient_of_constant_is_exactly_zero():
    img = image_of(np.full((16, 31), 0.37))
    for units in ("radian", "step"):
        for norm in ("l2", "l1"):
            assert np.all(gradient_magnitude(img, norm, units).values == 0)


def test_gradient_of_cos_theta():
    img = SphericalImage.from_function(lambda t, p: np.cos(t), 64)
    g = gradient_magnitude(img).values
    expected = np.abs(np.sin(img.grid.thetas))[:, None]
    assert np.max(np.abs(g[:-2] - expected[:-2])) <= 0.1


def test_phi_only_variation_has_no_theta_term():
    img = SphericalImage.from_function(lambda t, p: np.cos(p) + 0 * t, 8)
    dtheta, dphi = gradient_components(img)
    assert np.all(dtheta == 0)
    assert np.all(dphi[-1] == 0)  # pole ring
    assert np.any(dphi[:-1] != 0)


def test_gradient_forward_differences_by_hand():
    L = 3
    vals = np.arange(15, dtype=float).reshape(3, 5) ** 2
    dtheta, dphi = gradient_components(image_of(vals), units="step")
    thetas = EquiangularGrid(L).thetas
    assert dtheta[0, 1] == vals[1, 1] - vals[0, 1]
    assert dtheta[2, 1] == vals[2, 1] - vals[1, 1]  # last ring is one-sided
    assert dphi[0, 4] == pytest.approx((vals[0, 0] - vals[0, 4]) / np.sin(thetas[0]))
    mag = gradient_magnitude(image_of(vals), "l2", "step").values
    assert mag[1, 2] == pytest.approx(np.hypot(dtheta[1, 2], dphi[1, 2]))
    l1 = gradient_magnitude(image_of(vals), "l1", "step").values
    assert l1[1, 2] == pytest.approx(abs(dtheta[1, 2]) + abs(dphi[1, 2]))
    radian = gradient_magnitude(image_of(vals), "l2", "radian").values
    assert radian[1, 2] == pytest.approx(mag[1, 2] / EquiangularGrid(L).delta)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_gradient_non_negative(L, seed):
    img = image_of(np.random.default_rng(seed).normal(size=(L, 2 * L - 1)))
    assert np.all(gradient_magnitude(img).values >= 0)


def test_gradient_bad_options():
    img = image_of(np.zeros((2, 3)))
    with pytest.raises(InvalidParameterError):
        gradient_magnitude(img, norm="max")
    with pytest.raises(InvalidParameterError):
        gradient_magnitude(img, units="degree")


# -- noise -----------------------------------------------------------------

def test_noise_sigma_at_30db():
    img = image_of(np.ones((4, 7)))
    assert noise_sigma(img, 30) == pytest.approx(10 ** -1.5)
    assert noise_sigma(img, 30) == pytest.approx(0.03162, abs=1e-5)


def test_noise_vanishes_at_high_snr():
    img = image_of(np.random.default_rng(0).random((8, 15)))
    assert np.max(np.abs(add_noise(img, 300, seed=1).values - img.values)) <= 1e-12


def test_noise_is_deterministic_and_calibrated():
    img = image_of(np.ones((300, 599)))
    a, b = add_noise(img, 30, seed=5), add_noise(img, 30, seed=5)
    assert a.to_bytes() == b.to_bytes()
    assert img.values.size >= 1e5
    std = np.std(a.values - img.values)
    assert abs(std / noise_sigma(img, 30) - 1) <= 0.05


# -- masks and dice --------------------------------------------------------

def test_mask_validation_and_io(tmp_path):
    g = EquiangularGrid(3)
    with pytest.raises(InvalidInputError):
        BinaryMask(g, np.full(15, 2))
    with pytest.raises(InvalidInputError):
        BinaryMask(g, np.zeros(14))
    m = BinaryMask(g, np.arange(15) % 2)
    data = m.to_bytes()
    assert data[:4] == b"MSK1" and len(data) == 8 + 15
    assert BinaryMask.from_bytes(data).to_bytes() == data
    m.save(tmp_path / "m.msk")
    assert np.array_equal(BinaryMask.load(tmp_path / "m.msk").labels, m.labels)
    with pytest.raises(InvalidInputError):
        BinaryMask.from_bytes(b"SPH1" + data[4:])
    with pytest.raises(InvalidInputError):
        BinaryMask.from_bytes(data[:-1])


def test_dice_examples():
    g = EquiangularGrid(2)
    a = BinaryMask(g, [1, 1, 0, 0, 0, 0])
    b = BinaryMask(g, [1, 0, 0, 0, 0, 0])
    c = BinaryMask(g, [0, 0, 1, 1, 0, 0])
    empty = BinaryMask(g, np.zeros(6))
    assert dice(a, a) == 1.0
    assert dice(a, c) == 0.0
    assert dice(a, b) == pytest.approx(2 / 3)
    assert dice(empty, empty) == 1.0
    with pytest.raises(InvalidInputError):
        dice(a, BinaryMask(EquiangularGrid(1), [1]))


def test_area_fraction_full_sphere():
    g = EquiangularGrid(8)
    assert BinaryMask(g, np.ones(g.size)).area_fraction() == pytest.approx(1.0)


# -- k-means ---------------------------------------------------------------

def test_kmeans_separated_clusters():
    res = kmeans_1d([0, 0, 0, 1, 1, 1])
    assert list(res.labels) == [0, 0, 0, 1, 1, 1]
    assert list(res.centers) == [0.0, 1.0]


def test_kmeans_constant_image_is_degenerate():
    img = image_of(np.full((4, 7), 0.3))
    with pytest.warns(RuntimeWarning):
        mask, degenerate = kmeans_intensity(img)
    assert degenerate and mask.count() == 0


def test_kmeans_brighter_cluster_is_foreground():
    vals = np.zeros((4, 7))
    vals[:2] = 0.9
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mask, degenerate = kmeans_intensity(image_of(vals))
    assert not degenerate
    assert np.array_equal(mask.labels, (vals > 0.5).astype(np.uint8))


def test_kmeans_bimodal_threshold():
    rng = np.random.default_rng(42)
    x = np.concatenate([rng.normal(0.2, 0.05, 5000), rng.normal(0.8, 0.05, 5000)])
    res = kmeans_1d(x)
    threshold = (x[res.labels == 0].max() + x[res.labels == 1].min()) / 2
    assert abs(threshold - 0.5) <= 0.1
    assert sse(x, res.labels) == pytest.approx(two_means_oracle(x), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=200)
       .filter(lambda v: np.ptp(v) > 0))
def test_kmeans_matches_exhaustive_oracle(vals):
    x = np.array(vals)
    res = kmeans_1d(x)
    assert sse(x, res.labels) == pytest.approx(two_means_oracle(x), abs=1e-9)
    assert res.centers[0] < res.centers[1]


def test_kmeans_multi_cluster_labels():
    vals = np.repeat([0.0, 0.5, 1.0], 5).reshape(3, 5)
    labels = kmeans_intensity(image_of(vals), k=3)
    assert np.array_equal(labels, np.repeat([0, 1, 2], 5).reshape(3, 5))
    with pytest.raises(InvalidParameterError):
        kmeans_1d([0, 1], k=1)
