import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from s2wssa.errors import InvalidParameterError
from s2wssa.tiling import (
    build_directionality,
    build_family,
    build_kernels,
    check_admissibility,
    j_max_for,
    k_B,
    tiling_csv,
    wavelet_harmonic,
)

# 30-digit mpmath quadrature of the bump-kernel ratio, frozen
K_ORACLE = [
    (2.0, 0.6, 0.95840037160247068),
    (2.0, 0.75, 0.45255230486403153),
    (2.0, 0.9, 0.026367855855167074),
    (3.0, 0.5, 0.89517435052472923),
    (1.5, 0.8, 0.67273852393023456),
]


@pytest.mark.parametrize("B, t, expected", K_ORACLE)
def test_k_matches_high_precision_oracle(B, t, expected):
    assert k_B(t, B) == pytest.approx(expected, abs=1e-12)


def test_k_limits():
    assert k_B(0.0, 2.0) == 1.0
    assert k_B(0.5, 2.0) == 1.0
    assert k_B(1.0, 2.0) == 0.0
    ts = np.linspace(0.5, 1.0, 41)
    assert np.all(np.diff([k_B(float(t), 2.0) for t in ts]) <= 0)


def test_l512_tiling():
    kappa, phi, J_max = build_kernels(512, 2, 2)
    assert J_max == 9
    assert kappa.shape == (8, 512)
    total = phi ** 2 + np.sum(kappa ** 2, axis=0)
    assert np.max(np.abs(total - 1)) <= 1e-12


@pytest.mark.parametrize("L, B, J", [(2, 2, 0), (3, 2, 1), (5, 2, 2), (9, 2, 3), (10, 2, 4),
                                     (64, 2, 6), (65, 2, 6), (28, 3, 3), (29, 3, 4)])
def test_j_max(L, B, J):
    assert j_max_for(L, B) == J
    assert B ** J >= L - 1 and (J == 0 or B ** (J - 1) < L - 1)


def test_zero_mode_lives_in_scaling():
    kappa, phi, _ = build_kernels(32, 2, 2)
    assert phi[0] == 1.0
    assert np.all(kappa[:, 0] == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 160), st.sampled_from([1.5, 2.0, 3.0]), st.integers(0, 3))
def test_tiling_identity_and_support(L, B, J_min):
    J_max = j_max_for(L, B)
    if J_min > J_max:
        with pytest.raises(InvalidParameterError):
            build_kernels(L, B, J_min)
        return
    kappa, phi, _ = build_kernels(L, B, J_min)
    assert np.all(kappa >= 0) and np.all(phi >= 0)
    assert np.max(np.abs(phi ** 2 + np.sum(kappa ** 2, axis=0) - 1)) <= 1e-12
    ell = np.arange(L)
    for i, j in enumerate(range(J_min, J_max + 1)):
        outside = (ell <= B ** (j - 1)) | (ell >= B ** (j + 1))
        assert np.all(kappa[i][outside] == 0)


def test_bad_kernel_parameters():
    with pytest.raises(InvalidParameterError):
        build_kernels(1, 2, 0)
    with pytest.raises(InvalidParameterError):
        build_kernels(16, 1.0, 0)
    with pytest.raises(InvalidParameterError):
        build_kernels(16, 2, 5)


# -- directionality --------------------------------------------------------

def test_axisymmetric_zeta():
    z = build_directionality(10, 1, "axisymmetric")
    assert z.shape == (10, 1) and np.all(z == 1)


def test_directional_n1_is_axisymmetric():
    np.testing.assert_array_equal(build_directionality(10, 1, "directional"),
                                  build_directionality(10, 1, "axisymmetric"))


def test_directional_n3_binomial_row():
    z = build_directionality(8, 3, "directional")
    for l in range(2, 8):
        sq = np.abs(z[l]) ** 2
        np.testing.assert_allclose(sq, [0.25, 0, 0.5, 0, 0.25], atol=1e-15)


@pytest.mark.parametrize("kind", ["directional", "curvelet"])
@pytest.mark.parametrize("L, N", [(8, 2), (16, 5), (12, 12), (9, 4)])
def test_zeta_constraints(kind, L, N):
    z = build_directionality(L, N, kind)
    n = np.arange(-(N - 1), N)
    for l in range(L):
        assert np.sum(np.abs(z[l]) ** 2) == pytest.approx(1.0, abs=1e-12)
        # support within |n| <= l and reality symmetry, both exact
        assert np.all(z[l][np.abs(n) > l] == 0)
        np.testing.assert_array_equal(z[l][::-1], ((-1.0) ** np.abs(n)) * np.conj(z[l]))


def test_curvelet_support_is_extreme_orders():
    z = build_directionality(10, 10, "curvelet")
    for l in range(1, 10):
        support = np.flatnonzero(z[l]) - 9
        assert sorted(support) == [-l, l]


def test_zeta_bad_n():
    with pytest.raises(InvalidParameterError):
        build_directionality(4, 5, "directional")
    with pytest.raises(InvalidParameterError):
        build_directionality(4, 0, "directional")
    with pytest.raises(InvalidParameterError):
        build_directionality(4, 2, "spiral")


# -- families --------------------------------------------------------------

def test_wavelet_harmonic_factorised_form():
    fam = build_family(16, "directional", N=3)
    for j in fam.scales:
        psi = wavelet_harmonic(fam, j)
        assert psi[0, fam.N - 1] == pytest.approx(
            np.sqrt(1 / (8 * np.pi ** 2)) * fam.kernel(j)[0] * fam.zeta[0, fam.N - 1])
        zero = fam.kernel(j) == 0
        assert np.all(psi[zero] == 0)
    with pytest.raises(InvalidParameterError):
        wavelet_harmonic(fam, fam.J_max + 1)


def test_axisymmetric_wavelet_has_only_n0():
    fam = build_family(16, "axisymmetric")
    assert wavelet_harmonic(fam, fam.J_min).shape == (16, 1)


@pytest.mark.parametrize("kind", ["axisymmetric", "directional", "curvelet"])
@pytest.mark.parametrize("L", [2, 16, 64, 128])
def test_families_admissible(kind, L):
    fam = build_family(L, kind, J_min=0 if L == 2 else 2)
    assert check_admissibility(fam) <= 1e-12


def test_admissibility_detects_missing_scale():
    fam = build_family(64, "axisymmetric")
    broken = fam.drop_last_scale()
    removed = np.max(fam.kappa[-1] ** 2)
    assert check_admissibility(broken) >= removed - 1e-15 > 0


def test_scaling_only_family():
    # the builder rejects J_min > J_max, so assemble a Phi-only family by hand
    fam = build_family(2, "axisymmetric", J_min=0)
    phi_one = type(fam)(fam.kind, 2, fam.B, 0, -1, 1, fam.kappa[:0], np.ones(2), fam.zeta)
    assert check_admissibility(phi_one) == 0.0


def test_family_defaults_and_errors():
    assert build_family(16, "axisymmetric").N == 1
    assert build_family(16, "directional").N == 3
    assert build_family(16, "curvelet").N == 16
    with pytest.raises(InvalidParameterError):
        build_family(16, "axisymmetric", N=3)
    with pytest.raises(InvalidParameterError):
        build_family(16, "wobbly")


def test_tiling_csv():
    fam = build_family(16, "axisymmetric")
    rows = tiling_csv(fam).splitlines()
    assert rows[0] == "ell,phi," + ",".join(f"kappa_{j}" for j in fam.scales)
    assert len(rows) == 17
    vals = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    assert np.max(np.abs(np.sum(vals[:, 1:] ** 2, axis=1) - 1)) <= 1e-12
