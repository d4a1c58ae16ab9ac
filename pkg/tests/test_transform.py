import numpy as np
import pytest

from biofilm_fbp.kinetics import KineticsSRB, KineticsWG
from biofilm_fbp.transform import (SRB, WG, ConfigError, FieldState, Grid,
                                   growth_integrand, map_coordinates,
                                   thickness_rate, velocity_from_integrand,
                                   velocity_profile)


def wg_state(n=11, X=(0.5, 0.5, 0.0), C=(1.0, 1.0, 1.0), y=0.0):
    g = Grid(n)
    Xa = np.array([np.full(n, v) for v in X])
    Ca = np.array([np.full(n, v) for v in C])
    return FieldState(g, 0.0, y, Xa, Ca, Ca[:, -1].copy())


def test_integrand_zero_biomass():
    s = wg_state(X=(0.0, 0.0, 1.0))
    assert np.all(growth_integrand(s, KineticsWG()) == 0.0)


def test_integrand_substitution():
    # A = B = 1 with mu = 2, b = 0, K = 1, S = 1 on the oxygen Monod factor 1/2:
    # A = mu m(S1) m(S3) = 2 * 0.5 * 1 when K13 -> tiny
    p = KineticsWG(mu1=2.0, mu2=2.0, b1=0.0, b2=0.0, K11=1.0, K22=1.0,
                   K13=1e-300, K23=1e-300)
    s = wg_state(C=(1.0, 1.0, 1.0))
    assert growth_integrand(s, p, x_index=3) == pytest.approx(1.0)


def test_integrand_srb_zero():
    p = KineticsSRB()
    n = 5
    X = np.zeros((5, n))
    S = np.zeros((6, n))
    S[4] = 1.0
    S[5] = p.Ksp
    s = FieldState(Grid(n), 0.0, 0.0, X, S, S[:, -1].copy(), SRB, "physical")
    assert np.all(growth_integrand(s, p) == 0.0)


def test_velocity_zero_and_constant():
    x = Grid(21).x
    prof = velocity_from_integrand(np.zeros(21), x)
    assert np.all(prof.V == 0) and np.all(prof.v == 0) and prof.ydot == 0
    prof = velocity_from_integrand(np.full(21, 0.7), x)
    np.testing.assert_allclose(prof.V, 0.7 * x, atol=1e-15)
    np.testing.assert_allclose(prof.v, 0.0, atol=1e-15)
    assert prof.ydot == pytest.approx(0.7)


def test_velocity_quadrature_order():
    errs = []
    for n in (101, 201):
        x = Grid(n).x
        errs.append(abs(velocity_from_integrand(x**2 * 3, x).ydot - 1.0))
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-2)
    x = Grid(101).x
    assert velocity_from_integrand(2 * x, x).ydot == pytest.approx(1.0, abs=1e-4)


def test_velocity_profile_consistency():
    s = wg_state(n=31, X=(0.6, 0.3, 0.1), C=(2.0, 1.0, 3.0), y=0.4)
    prof = velocity_profile(s, KineticsWG())
    assert prof.V[0] == 0.0 and prof.v[0] == 0.0 and prof.v[-1] == 0.0
    assert prof.ydot == prof.V[-1]


def test_map_coordinates():
    L = 2.7
    assert map_coordinates(0.0, L) == 0.0
    assert map_coordinates(L, L) == 1.0
    z = np.linspace(0, L, 17)
    back = map_coordinates(map_coordinates(z, L, "to_x"), L, "to_z")
    np.testing.assert_allclose(back, z, rtol=1e-15, atol=1e-15)
    with pytest.raises(ConfigError):
        map_coordinates(1.0, 0.0)


def test_thickness_rate():
    s = wg_state()
    for V1, lam, expect in [(0.0, None, 0.0), (0.3, None, 0.3), (0.3, 0.1, 0.2)]:
        prof = velocity_from_integrand(np.full(11, V1), s.grid.x)
        assert thickness_rate(s, prof, lam) == pytest.approx(expect)
    s_phys = s.copy(clock="physical")
    prof = velocity_from_integrand(np.full(11, 0.3), s.grid.x)
    assert thickness_rate(s_phys, prof, 0.1) == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        thickness_rate(s, prof, -0.1)


def test_detach_clock_scaling():
    s = wg_state(y=np.log(2.0))
    prof = velocity_from_integrand(np.zeros(11), s.grid.x)
    assert thickness_rate(s, prof, 0.1) == pytest.approx(-0.1 * 8.0)
    assert thickness_rate(s.copy(clock="physical"), prof, 0.1) == pytest.approx(-0.2)


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid(2)
