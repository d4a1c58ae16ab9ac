import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biofilm_fbp.kinetics import (KineticsError, KineticsSRB, KineticsWG,
                                  ReactorParams, biomass_rhs_srb, biomass_rhs_wg,
                                  diffusion_coeff, monod, rate_coeffs_wg,
                                  saturation_index, substrate_rhs_srb,
                                  substrate_rhs_wg)

pos = st.floats(min_value=1e-3, max_value=50.0)
frac = st.floats(min_value=0.0, max_value=1.0)


def test_monod_values():
    assert monod(0.0, 1.0) == 0.0
    assert monod(2.5, 2.5) == 0.5
    assert monod(3.0, 1.0) == 0.75


@pytest.mark.parametrize("s,K", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_monod_domain(s, K):
    with pytest.raises(KineticsError):
        monod(s, K)


@given(pos, pos, pos)
def test_monod_monotone(s, K, ds):
    assert 0 <= monod(s, K) < 1
    assert monod(s + ds, K) >= monod(s, K)
    assert monod(s, K + ds) <= monod(s, K)


def test_rate_coeffs_substitution():
    p = KineticsWG(mu1=2.0, b1=1.0, K11=1.0, K13=1.0, k1=0.1)
    A, A1, B, A2 = rate_coeffs_wg(1.0, 1.0, 1.0, p)
    assert A == pytest.approx(0.0, abs=1e-15)
    assert A1 == pytest.approx(-0.1)


def test_rate_coeffs_oxygen_starvation():
    p = KineticsWG(k1=0.03, k2=0.07)
    A, A1, B, A2 = rate_coeffs_wg(2.0, 1.0, 0.0, p)
    assert (A, B) == (0.0, 0.0)
    assert A1 == -0.03 and A2 == -0.07


@given(pos, pos, pos, st.floats(0, 1), st.floats(0, 1))
def test_rate_coeffs_identity(S1, S2, S3, k1, k2):
    p = KineticsWG(k1=k1, k2=k2)
    A, A1, B, A2 = rate_coeffs_wg(S1, S2, S3, p)
    assert A1 == A - k1
    assert A2 == B - k2


def test_rate_coeffs_negative_concentration():
    with pytest.raises(KineticsError):
        rate_coeffs_wg(-1.0, 1.0, 1.0, KineticsWG())


def test_biomass_wg_starvation():
    p = KineticsWG(k1=0.1, k2=0.2)
    F = biomass_rhs_wg(0.3, 0.5, 0.2, (0.0, 0.0, 0.0), p)
    assert F == pytest.approx((-0.03, -0.1, 0.13))
    assert sum(F) == pytest.approx(0.0, abs=1e-15)


def test_biomass_wg_no_biomass():
    assert biomass_rhs_wg(0.0, 0.0, 0.0, (1.0, 1.0, 1.0), KineticsWG()) == (0.0, 0.0, 0.0)


@given(frac, frac, frac, pos, pos, pos, st.floats(0, 1), st.floats(0, 1))
def test_conservation_identity(X1, X2, X3, S1, S2, S3, k1, k2):
    p = KineticsWG(k1=k1, k2=k2)
    A, _, B, _ = rate_coeffs_wg(S1, S2, S3, p)
    F = biomass_rhs_wg(X1, X2, X3, (S1, S2, S3), p)
    expected = (A * X1 + B * X2) * (1 - X1 - X2 - X3)
    assert sum(F) == pytest.approx(expected, abs=1e-13)


@given(st.floats(0, 1), st.floats(0, 1), pos, pos, pos)
def test_conservation_on_simplex(a, b, S1, S2, S3):
    X1 = a
    X2 = (1 - a) * b
    X3 = 1 - X1 - X2
    F = biomass_rhs_wg(X1, X2, X3, (S1, S2, S3), KineticsWG(k1=0.05, k2=0.02))
    assert abs(sum(F)) < 1e-14


def test_substrate_wg_zero_cases():
    p = KineticsWG()
    assert substrate_rhs_wg(0.4, 0.6, 1.0, 1.0, 0.0, p) == (0.0, 0.0, 0.0)
    assert substrate_rhs_wg(0.0, 0.0, 1.0, 1.0, 1.0, p) == (0.0, 0.0, 0.0)


def test_substrate_wg_substitution():
    # beta1 = -D1 mu1 / Y1 = -1
    p = KineticsWG(mu1=1.0, Y1=1.0, D1=1.0, K11=1.0, K13=1.0)
    H1, _, _ = substrate_rhs_wg(2.0, 0.0, 1.0, 1.0, 1.0, p)
    assert H1 == pytest.approx(-0.5)


def test_wg_invariants():
    p = KineticsWG()
    assert p.beta1 < 0 and p.beta2 < 0 and p.gamma > 0
    assert p.beta3 < 0
    with pytest.raises(KineticsError):
        KineticsWG(mu1=0.0)
    with pytest.raises(KineticsError):
        KineticsWG(b1=-0.1)
    with pytest.raises(KineticsError):
        ReactorParams(Gamma=(1.0, -1.0, 1.0))


def test_beta5_switch():
    p = KineticsWG(D3=2.0)
    q = KineticsWG(D3=2.0, beta5_with_D3=True)
    assert q.beta5 == pytest.approx(2.0 * p.beta5)


def test_saturation_index():
    assert saturation_index(2.0, 3.0, 6.0) == 1.0
    assert saturation_index(0.0, 7.0, 2.0) == 0.0
    assert saturation_index(1.0, 1.0, 4.0) == 0.25
    with pytest.raises(KineticsError):
        saturation_index(1.0, 1.0, 0.0)


def test_diffusion_coeff():
    assert diffusion_coeff(1.0, 2.0) == 2.0
    assert diffusion_coeff(0.0, 1.0) == pytest.approx(np.exp(-1.0))
    assert diffusion_coeff(0.75, 3.0) == pytest.approx(3.0 * 0.6065306597126334)
    f = np.linspace(0, 1, 50)
    assert np.all(np.diff(diffusion_coeff(f, 1.0)) > 0)
    with pytest.raises(KineticsError):
        diffusion_coeff(1.2, 1.0)


def test_srb_zero_state():
    p = KineticsSRB(k=0.3)
    F = biomass_rhs_srb(np.zeros(5), np.zeros(6), p)
    np.testing.assert_array_equal(F, [0.0, 0.0, 0.0, 0.3, 0.0])


def test_srb_saturated_precipitate_zero():
    p = KineticsSRB(Ksp=0.5)
    S = np.array([0.4, 0.3, 0.2, 0.1, 2.0, 0.25])
    F = biomass_rhs_srb(np.array([0.2, 0.3, 0.1, 0.1, 0.2]), S, p)
    assert F[3] == 0.0


def test_srb_substrate_zero_vector():
    p = KineticsSRB(Ksp=0.5)
    S = np.array([0.4, 0.3, 0.2, 0.1, 2.0, 0.25])
    np.testing.assert_array_equal(substrate_rhs_srb(np.zeros(5), S, p), np.zeros(6))


def test_srb_no_ethanol():
    p = KineticsSRB()
    X = np.array([0.3, 0.4, 0.1, 0.0, 0.2])
    S = np.array([0.0, 0.5, 0.2, 0.1, 1.0, 1.0])
    R = substrate_rhs_srb(X, S, p)
    assert R[0] == 0.0
    XA_only = X.copy()
    XA_only[0] = 0.0
    assert R[1] == substrate_rhs_srb(XA_only, S, p)[1]


@settings(max_examples=200)
@given(st.lists(st.floats(0, 5), min_size=5, max_size=5),
       st.lists(st.floats(0, 5), min_size=6, max_size=6))
def test_srb_sign_audit(X, S):
    p = KineticsSRB()
    X = np.array(X)
    S = np.array(S)
    F = biomass_rhs_srb(X, S, p)
    R = substrate_rhs_srb(X, S, p)
    assert F[2] == p.kE * X[0] + p.kA * X[1]
    assert F[3] >= 0
    assert R[5] <= 0


def test_srb_invariants():
    with pytest.raises(KineticsError):
        KineticsSRB(XPo_bar=1.0)
    with pytest.raises(KineticsError):
        KineticsSRB(YE=1.5)


def test_determinism():
    p = KineticsWG(k1=0.01)
    args = (0.3, 0.2, 0.5, (1.3, 0.7, 4.0), p)
    assert biomass_rhs_wg(*args) == biomass_rhs_wg(*args)


@given(st.floats(0, 1), st.floats(0, 1), pos, pos, pos)
def test_swap_maps_reactions(X1, X2, S1, S2, S3):
    p = KineticsWG(k1=0.01, k2=0.03, K13=0.4, K23=0.7, D1=1.3, D2=0.8)
    q = p.swapped()
    back = q.swapped()
    for name in ("mu1", "K13", "alpha1", "alpha2", "Y1", "D2", "k1"):
        assert getattr(back, name) == pytest.approx(getattr(p, name), rel=1e-14)
    H = substrate_rhs_wg(X1, X2, S1, S2, S3, p)
    Hs = substrate_rhs_wg(X2, X1, S2, S1, S3, q)
    assert Hs == pytest.approx((H[1], H[0], H[2]), rel=1e-12, abs=1e-14)
    F = biomass_rhs_wg(X1, X2, 1 - X1, (S1, S2, S3), p)
    Fs = biomass_rhs_wg(X2, X1, 1 - X1, (S2, S1, S3), q)
    assert Fs == pytest.approx((F[1], F[0], F[2]), rel=1e-12, abs=1e-14)
