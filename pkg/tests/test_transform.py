import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s2wssa import harmonic as hm
from s2wssa.errors import InvalidInputError, InvalidParameterError
from s2wssa.grid import EquiangularGrid, SphericalImage
from s2wssa.tiling import build_family, j_max_for
from s2wssa.transform import (
    HybridCoefficients,
    WaveletCoefficients,
    analyse,
    analyse_hybrid,
    build_hybrid_family,
    harmonic_energies,
    synthesise,
    synthesise_hybrid,
    threshold_roundtrip,
)

from conftest import random_image


def rel_err(a: SphericalImage, b: SphericalImage) -> float:
    return float(np.max(np.abs(a.values - b.values)) / np.max(np.abs(b.values)))


FAMILIES = [("axisymmetric", None), ("directional", 3), ("directional", 5), ("curvelet", None)]


@pytest.mark.parametrize("kind, N", FAMILIES)
@pytest.mark.parametrize("L", [8, 16, 32])
def test_round_trip(kind, N, L):
    fam = build_family(L, kind, N=N)
    for seed in range(3):
        f = random_image(L, seed)
        assert rel_err(synthesise(analyse(f, fam)), f) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 20), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_round_trip_property(L, N, seed):
    fam = build_family(L, "directional", N=min(N, L))
    f = random_image(L, seed)
    assert rel_err(synthesise(analyse(f, fam)), f) <= 1e-9


def test_zero_image_gives_zero_coefficients():
    fam = build_family(16, "directional", N=3)
    c = analyse(SphericalImage(EquiangularGrid(16), np.zeros((16, 31))), fam)
    assert np.max(np.abs(c.scaling)) == 0 and c.max_abs_detail() == 0
    assert np.all(synthesise(c).values == 0)


@pytest.mark.parametrize("kind", ["axisymmetric", "directional"])
def test_constant_only_in_scaling(kind):
    fam = build_family(16, kind, J_min=1)
    c = analyse(SphericalImage.from_function(lambda t, p: np.full_like(t, 0.4), 16), fam)
    assert c.max_abs_detail() <= 1e-12
    np.testing.assert_allclose(c.scaling, 0.4, atol=1e-12)


def test_coefficient_shapes_and_realness():
    fam = build_family(8, "directional", N=3)
    c = analyse(random_image(8, 1), fam)
    assert len(c.scales) == fam.J_max - fam.J_min + 1
    assert all(s.shape == (8, 15, 5) and s.dtype == float for s in c.scales)
    assert c.scaling.shape == (8, 15)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(seed, a, b):
    fam = build_family(12, "directional", N=3)
    f, g = random_image(12, seed), random_image(12, seed + 7)
    cf, cg = analyse(f, fam), analyse(g, fam)
    combo = analyse(f.with_values(a * f.values + b * g.values), fam)
    lin = a * cf + b * cg
    assert max(np.max(np.abs(x - y)) for x, y in zip(combo.scales, lin.scales)) <= 1e-10
    out = synthesise(lin)
    expect = a * synthesise(cf).values + b * synthesise(cg).values
    assert np.max(np.abs(out.values - expect)) <= 1e-10


@pytest.mark.parametrize("kind, N", FAMILIES)
def test_energy_split(kind, N):
    L = 16
    fam = build_family(L, kind, N=N)
    f = random_image(L, 11)
    e_f = np.sum(np.abs(hm.sht_forward(f).values) ** 2)
    e_scal, e_scales = harmonic_energies(analyse(f, fam))
    assert e_scal + sum(e_scales) == pytest.approx(e_f, rel=1e-8)


def test_family_mismatch():
    c = analyse(random_image(16, 0), build_family(16, "axisymmetric"))
    with pytest.raises(InvalidInputError):
        synthesise(c, build_family(16, "directional", N=3))
    with pytest.raises(InvalidInputError):
        analyse(random_image(8, 0), build_family(16, "axisymmetric"))


def test_malformed_coefficients():
    fam = build_family(8, "axisymmetric")
    with pytest.raises(InvalidInputError):
        WaveletCoefficients(fam, np.zeros((8, 15)), ())


# -- hybrid ----------------------------------------------------------------

@pytest.mark.parametrize("L, Lt", [(16, 8), (32, 16), (32, 32), (16, 3)])
def test_hybrid_round_trip(L, Lt):
    fam = build_hybrid_family(L, Lt, N=3)
    for seed in range(3):
        f = random_image(L, seed)
        h = analyse_hybrid(f, fam)
        assert rel_err(synthesise_hybrid(h), f) <= 1e-8


def test_hybrid_drops_top_curvelet_scale():
    fam = build_hybrid_family(32, 16)
    assert fam.curvelet.J_max == j_max_for(16, 2) - 1
    assert fam.curvelet.L == 16 and fam.curvelet.N == 16


def test_hybrid_split_is_exact():
    f = random_image(16, 4)
    h = analyse_hybrid(f, build_hybrid_family(16, 8))
    f_dir = synthesise(h.directional)
    assert np.max(np.abs(f_dir.values - (f.values - h.f_curv.values))) <= 1e-9


def test_hybrid_degenerate_transition_is_low_pass():
    L, Lt = 16, 3
    fam = build_hybrid_family(L, Lt)
    assert fam.curvelet.n_scales == 0
    f = random_image(L, 2)
    h = analyse_hybrid(f, fam)
    flm = hm.sht_forward(f).as_matrix()
    phi = fam.curvelet.scaling
    low = np.zeros_like(flm)
    low[:Lt, L - Lt: L + Lt - 1] = flm[:Lt, L - Lt: L + Lt - 1] * (phi ** 2)[:, None]
    expected = hm.sht_inverse(hm.HarmonicCoeffs.from_matrix(low, reality=True))
    assert np.max(np.abs(h.f_curv.values - expected.values)) <= 1e-12


def test_hybrid_low_band_input_has_no_directional_part():
    # below B^(top) the curvelet part (top scale dropped) still tiles exactly
    L, Lt = 32, 16
    fam = build_hybrid_family(L, Lt)
    cutoff = int(2 ** fam.curvelet.J_max)
    flm = hm.random_coeffs(cutoff + 1, np.random.default_rng(9)).truncate(L)
    f = hm.sht_inverse(flm)
    h = analyse_hybrid(f, fam)
    assert h.directional.max_abs_detail() <= 1e-9
    assert np.max(np.abs(h.directional.scaling)) <= 1e-9


def test_hybrid_zero_and_additivity():
    L = 16
    fam = build_hybrid_family(L, 8)
    h = analyse_hybrid(random_image(L, 3), fam)
    zero = HybridCoefficients(h.L_trans, h.curvelet.map(lambda x: 0 * x, True),
                              h.directional.map(lambda x: 0 * x, True),
                              SphericalImage(EquiangularGrid(L), np.zeros((L, 2 * L - 1))))
    assert np.all(synthesise_hybrid(zero).values == 0)
    only_dir = HybridCoefficients(h.L_trans, h.curvelet.map(lambda x: 0 * x, True),
                                  h.directional, h.f_curv)
    only_curv = HybridCoefficients(h.L_trans, h.curvelet,
                                   h.directional.map(lambda x: 0 * x, True), h.f_curv)
    total = synthesise_hybrid(only_dir).values + synthesise_hybrid(only_curv).values
    assert np.max(np.abs(total - synthesise_hybrid(h).values)) <= 1e-12


def test_hybrid_bad_transition():
    with pytest.raises(InvalidParameterError):
        build_hybrid_family(16, 17)
    with pytest.raises(InvalidParameterError):
        build_hybrid_family(16, 0)


# -- thresholded round trip ------------------------------------------------

@pytest.mark.parametrize("family", [build_family(16, "axisymmetric"),
                                    build_family(16, "directional", N=3),
                                    build_hybrid_family(16, 8)])
def test_threshold_zero_is_identity(family):
    f = random_image(16, 8)
    assert rel_err(threshold_roundtrip(f, 0.0, family), f) <= 1e-8


@pytest.mark.parametrize("kind, N", [("axisymmetric", None), ("directional", 3)])
def test_huge_threshold_keeps_only_scaling(kind, N):
    fam = build_family(16, kind, N=N)
    f = random_image(16, 6)
    c = analyse(f, fam)
    lam = c.max_abs_detail() * 1.01
    expected = synthesise(c.map(lambda x: 0 * x))
    assert np.max(np.abs(threshold_roundtrip(f, lam, fam).values - expected.values)) <= 1e-12


@pytest.mark.parametrize("family", [build_family(16, "axisymmetric"),
                                    build_family(16, "directional", N=3)])
def test_threshold_does_not_add_energy(family):
    f = random_image(16, 12)
    g = threshold_roundtrip(f, 0.01, family)
    energy = lambda im: np.sum(np.abs(hm.sht_forward(im).values) ** 2)
    assert energy(g) <= energy(f) * (1 + 1e-10)


def test_negative_threshold_rejected():
    with pytest.raises(InvalidParameterError):
        threshold_roundtrip(random_image(8, 0), -0.1, build_family(8, "axisymmetric"))
