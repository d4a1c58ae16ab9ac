import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biofilm_fbp.kinetics import KineticsError, KineticsSRB, KineticsWG
from biofilm_fbp.stability import (SteadySRB, Verdict, decay_fit,
                                   dispersion_matrix, dispersion_matrix_srb,
                                   dispersion_sweep, eig6_oracle,
                                   energy_monotonicity, ksp_factor,
                                   linearized_coeffs_wg,
                                   linearized_residual_srb,
                                   linearized_steady_solve_srb,
                                   local_equilibrium_srb, local_jacobian_srb,
                                   match_spectra, quadratic_pair,
                                   saturation_on_hyperbola, srb_coefficients,
                                   stability_verdict)
from biofilm_fbp.transform import Grid

# ---------------------------------------------------------------------------
# decay fits and energy
# ---------------------------------------------------------------------------


def test_decay_fit_exact():
    t = np.linspace(0, 10, 101)
    fit = decay_fit(t, 5 * np.exp(-0.3 * t), window=(0, 10))
    assert fit.K_amp == pytest.approx(5.0, rel=1e-12)
    assert fit.mu_rate == pytest.approx(0.3, rel=1e-12)
    assert fit.r2 == pytest.approx(1.0)


def test_decay_fit_constant():
    t = np.linspace(0, 1, 20)
    fit = decay_fit(t, np.full(20, 2.0))
    assert fit.mu_rate == pytest.approx(0.0, abs=1e-12)
    assert 0 <= fit.r2 <= 1


def test_decay_fit_default_window():
    t = np.linspace(0, 10, 101)
    fit = decay_fit(t, np.exp(-t))
    assert fit.window == (pytest.approx(4.0), 10.0)


def test_decay_fit_rejects_bad_samples():
    t = np.linspace(0, 1, 10)
    with pytest.raises(ValueError):
        decay_fit(t, np.r_[np.ones(9), 0.0])
    with pytest.raises(ValueError):
        decay_fit(t[:4], np.ones(4), window=(0, 1))


def test_energy_monotonicity_reports_increases():
    t = np.linspace(0, 1, 101)
    E = np.exp(-t)
    assert energy_monotonicity(t, E) == []
    E[50] *= 1.1
    bad = energy_monotonicity(t, E)
    assert len(bad) == 1 and bad[0][0] == pytest.approx(t[49])


def test_linearized_coeffs_zero_biomass():
    n = 11
    C = np.ones((3, n))
    out = linearized_coeffs_wg(np.zeros((3, n)), C, 0.3, KineticsWG())
    assert all(not np.any(v) for v in out.values())


def test_linearized_coeffs_substitution():
    p = KineticsWG()
    n = 5
    X = np.vstack([np.full(n, 0.4), np.full(n, 0.3), np.full(n, 0.3)])
    # C1 = C2 = 0: the C1 factor removes Q2, Q1 keeps its oxygen factor
    C = np.vstack([np.zeros(n), np.zeros(n), np.full(n, 2.0)])
    out = linearized_coeffs_wg(X, C, 0.2, p)
    assert not np.any(out["Q2"])
    expect = np.exp(0.2) * p.beta1 * 0.4 / p.K11 * 2.0 / (p.K13 + 2.0)
    np.testing.assert_allclose(out["Q1"], expect, rtol=1e-14)
    # all substrates zero: every printed coefficient carrying C3 vanishes
    out = linearized_coeffs_wg(X, np.zeros((3, n)), 0.2, p)
    assert not np.any(out["Q1"]) and not np.any(out["N1"])


@settings(max_examples=100)
@given(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0.01, 5), st.floats(0.01, 5),
       st.floats(0.01, 60), st.floats(0.01, 0.09))
def test_linearized_sign_audit(X1, X2, C1, C2, C3, alpha1):
    p = KineticsWG(alpha1=alpha1)
    assert p.beta3 < 0
    X = np.array([[X1], [X2], [1 - X1]])
    out = linearized_coeffs_wg(X, np.array([[C1], [C2], [C3]]), 0.5, p)
    assert out["Q1"][0] < 0 and out["N1"][0] < 0
    assert out["M1"][0] < 0 and out["M3_beta3"][0] < 0
    assert out["M3_beta6"][0] > 0
    assert np.sign(out["M3_beta5"][0]) == np.sign(p.beta5)


# ---------------------------------------------------------------------------
# local Jacobian
# ---------------------------------------------------------------------------


def test_local_equilibrium():
    p = KineticsSRB(KO=4.0, Ksp=0.7)
    eq = local_equilibrium_srb(p, 2.0)
    assert eq[2] == 2.0
    assert saturation_on_hyperbola(p, 2.0) == pytest.approx(1.0)
    with pytest.raises(KineticsError):
        local_equilibrium_srb(p, 0.0)


def test_local_rhs_vanishes_at_equilibrium():
    from biofilm_fbp.kinetics import substrate_rhs_srb
    p = KineticsSRB()
    eq = local_equilibrium_srb(p, 1.3)
    X = np.array([0.0, 0.0, 0.2, 0.1, 0.4])
    np.testing.assert_allclose(substrate_rhs_srb(X, eq, p), 0.0, atol=1e-15)


def test_jacobian_j11():
    p = KineticsSRB(muE=1.2, KE=0.6)
    rep = local_jacobian_srb(p, (0.5, 0.2), local_equilibrium_srb(p, 1.0))
    assert rep.J[0, 0] == pytest.approx(-1.0)
    assert rep.J[1, 0] == rep.J[0, 0]


def test_jacobian_degenerate():
    p = KineticsSRB()
    rep = local_jacobian_srb(p, (0.0, 0.0), local_equilibrium_srb(p, 1.0))
    assert not rep.J[:4].any()
    assert not rep.J[:, :4].any()
    assert np.sum(np.abs(rep.xi) < 1e-14) >= 4
    assert rep.verdict == Verdict.NOT_ASYMPTOTICALLY_STABLE


def test_jacobian_random_draws(rng):
    for _ in range(100):
        p = KineticsSRB(
            muE=rng.uniform(0.1, 3), muA=rng.uniform(0.1, 3), KE=rng.uniform(0.1, 2),
            KA=rng.uniform(0.1, 2), KO=rng.uniform(0.1, 2), KI=rng.uniform(0.1, 2),
            KPr=rng.uniform(0.1, 2), YE=rng.uniform(0.05, 0.95),
            YA=rng.uniform(0.05, 0.95), k=rng.uniform(0, 1), Ksp=rng.uniform(0.1, 3),
            alpha=rng.uniform(0, 1))
        eq = local_equilibrium_srb(p, rng.uniform(0.1, 3))
        rep = local_jacobian_srb(p, rng.uniform(0, 2, 2), eq)
        assert rep.gap <= 1e-10 * max(1.0, np.abs(rep.J).max())
        # the An/Cat block has rank one
        assert rep.J[4, 4] * rep.J[5, 5] - rep.J[4, 5] * rep.J[5, 4] == pytest.approx(0.0, abs=1e-12)
        assert rep.verdict != Verdict.HYPERBOLIC_STABLE
        assert rep.J52_sign >= 0


# ---------------------------------------------------------------------------
# dispersion relation
# ---------------------------------------------------------------------------


def test_quadratic_pair():
    eta = sorted(np.real(quadratic_pair(-1, 2, 1, -3)))
    assert eta[0] == pytest.approx(-2 - np.sqrt(3))
    assert eta[1] == pytest.approx(-2 + np.sqrt(3))


def test_oracle_diagonal_and_permutation(rng):
    d = rng.normal(size=6) + 1j * rng.normal(size=6)
    _, gap = match_spectra(d, eig6_oracle(np.diag(d)))
    assert gap < 1e-14
    M = rng.normal(size=(6, 6))
    P = np.eye(6)[rng.permutation(6)]
    _, gap = match_spectra(eig6_oracle(M), eig6_oracle(P @ M @ P.T))
    assert gap < 1e-10


def test_oracle_block_structure(rng):
    for _ in range(100):
        a = np.r_[0.0, rng.uniform(0, 2, 8)]
        M = dispersion_matrix(rng.uniform(0, 5), rng.uniform(0.1, 2, 6),
                              rng.normal(size=6), a)
        closed = np.r_[np.diag(M)[:4], quadratic_pair(M[4, 4], M[4, 5], M[5, 4], M[5, 5])]
        _, gap = match_spectra(closed, eig6_oracle(M))
        assert gap < 1e-10


def test_omega_zero_reaction_jacobian():
    a = np.r_[0.0, np.arange(1, 9) / 10]
    M = dispersion_matrix(0.0, np.ones(6), np.zeros(6), a)
    assert np.all(M.imag == 0)
    assert M[0, 0] == -a[1] and M[5, 4] == -a[6] and M[4, 1] == a[8]


def srb_steady(n=41, **kw):
    return SteadySRB.from_functions(n, kw.get("L", 1.5),
                                    lambda x: 0.3 + 0.1 * x, lambda x: 0.2 + 0 * x,
                                    lambda x: 0.7 + 0.2 * x**2, anchor=kw.get("anchor", 1.0))


def test_diagonal_shift_exact():
    p = KineticsSRB()
    s = srb_steady()
    coeffs = srb_coefficients(s, p)
    Dhat = coeffs[1]
    omegas = np.linspace(0, 10, 50)
    for k in (0, 17, 40):
        base = dispersion_matrix_srb(0.0, k, s, p, coeffs=coeffs).eta
        for w in omegas:
            eta = dispersion_matrix_srb(w, k, s, p, coeffs=coeffs).eta
            shift = eta[:4].real - base[:4].real
            np.testing.assert_allclose(shift, -Dhat[:4, k] * w**2, atol=1e-12, rtol=0)


def test_a6_a7_sign_tracks_ksp(rng):
    s = srb_steady(n=5)
    for _ in range(50):
        p = KineticsSRB(Ksp=rng.uniform(0.1, 3), k=rng.uniform(0.01, 1))
        a, _, _, eq = srb_coefficients(s, p)
        cond = 1 > p.Ksp * eq[4] * eq[5]
        assert (np.all(a[6] > 0) and np.all(a[7] > 0)) == cond


def test_verdict_stable_with_diffusion():
    p = KineticsSRB(Ksp=0.5, D0={k: 3.0 for k in ("E", "A", "O", "C", "An", "Cat")})
    rows = dispersion_sweep(np.linspace(0.5, 5, 10), srb_steady(), p)
    v = stability_verdict(rows, p)
    assert v.stable and v.first_violation is None


def test_verdict_zero_mode_not_stable():
    p = KineticsSRB(Ksp=0.5)
    rows = dispersion_sweep([0.0, 1.0], srb_steady(), p)
    v = stability_verdict(rows, p)
    assert not v.stable
    assert v.first_violation[0] == 0.0 and v.first_violation[2] in (5, 6)


def test_ksp_gate():
    p = KineticsSRB(Ksp=1.5, D0={k: 3.0 for k in ("E", "A", "O", "C", "An", "Cat")})
    rows = dispersion_sweep(np.linspace(0.5, 5, 10), srb_steady(), p)
    v = stability_verdict(rows, p)
    assert not v.stable and not v.ksp_condition and v.first_violation[2] == 0


def test_ksp_sweep_flips_once():
    verdicts = []
    for Ksp in np.linspace(0.5, 1.5, 21):
        p = KineticsSRB(Ksp=Ksp)
        rows = dispersion_sweep(np.linspace(0.5, 5, 5), srb_steady(n=11), p)
        verdicts.append(stability_verdict(rows, p).stable)
    assert sum(a != b for a, b in zip(verdicts, verdicts[1:])) == 1
    assert verdicts[0] and not verdicts[-1]


def test_ksp_factor_on_hyperbola():
    p = KineticsSRB(Ksp=0.8)
    for anchor in (0.3, 1.0, 4.0):
        eq = local_equilibrium_srb(p, anchor)
        assert ksp_factor(p, eq[4], eq[5]) == pytest.approx(1 / 0.8**2 - 1)


# ---------------------------------------------------------------------------
# linearized stationary system
# ---------------------------------------------------------------------------


def test_linearized_chain_constants():
    p = KineticsSRB(k=0.0)
    s = SteadySRB(Grid(21), 1.0, 0.0, 0.0, 0.8)
    S_hat = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    out = linearized_steady_solve_srb(s, p, S_hat)
    np.testing.assert_allclose(out, np.repeat(S_hat[:, None], 21, axis=1), rtol=1e-13)


def test_linearized_chain_cosh():
    p = KineticsSRB(k=0.0)
    errs = []
    for n in (101, 201):
        s = SteadySRB(Grid(n), 1.5, 0.4, 0.0, 1.0)
        a, Dhat, _, _ = srb_coefficients(s, p)
        out = linearized_steady_solve_srb(s, p, np.ones(6))
        m = np.sqrt(a[1, 0] * 1.5**2 / Dhat[0, 0])
        x = s.grid.x
        errs.append(np.max(np.abs(out[0] - np.cosh(m * x) / np.cosh(m))))
    assert errs[0] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_linearized_chain_defect():
    p = KineticsSRB(Ksp=0.6)
    for n in (51, 101):
        s = srb_steady(n=n)
        out = linearized_steady_solve_srb(s, p, np.array([0.3, -0.2, 0.1, 0.4, 0.2, -0.1]))
        assert np.max(np.abs(linearized_residual_srb(s, p, out))) < 1e-8
