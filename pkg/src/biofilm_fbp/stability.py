"""Asymptotic checks: energy decay for the competition model, local and
dispersion spectra for the precipitation model.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import bmat, diags
from scipy.sparse.linalg import spsolve

from .energy import GridMismatchError, energy_E, energy_F  # noqa: F401
from .fd import central_gradient
from .kinetics import (SRB_SUBSTRATES, KineticsError, KineticsSRB, KineticsWG,
                       diffusion_coeff, effective_diffusivity, saturation_index)
from .steady import linear_bvp_solve
from .transform import Grid


class ConsistencyError(ArithmeticError):
    """Closed-form spectrum disagrees with the numerical oracle."""


class Verdict(str, enum.Enum):
    NOT_ASYMPTOTICALLY_STABLE = "NotAsymptoticallyStable"
    HYPERBOLIC_STABLE = "HyperbolicStable"
    UNSTABLE = "Unstable"


# ---------------------------------------------------------------------------
# competition model
# ---------------------------------------------------------------------------


def linearized_coeffs_wg(X_star, C_star, y_star, p: KineticsWG):
    """Coefficients of the linearized substrate system around a steady state.

    ``X_star`` and ``C_star`` are unscaled profiles of shape ``(3, n)`` and
    ``(3, n)``. Returns a dict with ``Q1, Q2, N1, N2, M1, M2, M3`` plus the
    three separate contributions of ``M3`` (``M3_beta3``, ``M3_beta5``,
    ``M3_beta6``).
    """
    X1, X2 = np.asarray(X_star[0], float), np.asarray(X_star[1], float)
    C1, C2, C3 = (np.asarray(c, float) for c in C_star)
    e = np.exp(y_star)
    d11 = p.K11 / (p.K11 + C1) ** 2
    d22 = p.K22 / (p.K22 + C2) ** 2
    d13 = p.K13 / (p.K13 + C3) ** 2
    d23 = p.K23 / (p.K23 + C3) ** 2
    s1 = C1 / (p.K11 + C1)
    s2 = C2 / (p.K22 + C2)
    s13 = C3 / (p.K13 + C3)
    s23 = C3 / (p.K23 + C3)
    out = {
        "Q1": e * p.beta1 * d11 * s13 * X1,
        "Q2": e * p.beta1 * s1 * d13 * X1,
        "N1": e * p.beta2 * d22 * s23 * X2,
        "N2": e * p.beta2 * s2 * d23 * X2,
        "M1": e * p.beta3 * d11 * s23 * X2,
        "M2": e * p.beta5 * d22 * s23 * X2 + e * p.beta6 * s2 * d23 * X2,
        "M3_beta3": e * p.beta3 * d11 * s13 * X1,
        "M3_beta5": e * p.beta5 * s2 * d23 * X2,
        "M3_beta6": e * p.beta6 * s2 * d23 * X2,
    }
    out["M3"] = out["M3_beta3"] + out["M3_beta5"] + out["M3_beta6"]
    return out


@dataclass
class DecayFit:
    K_amp: float
    mu_rate: float
    r2: float
    window: tuple


def decay_fit(t, value, window=None) -> DecayFit:
    """Least-squares line through ``(t, log value)``.

    ``window = (t0, t1)`` defaults to the last 60% of the sampled time span.
    """
    t = np.asarray(t, dtype=float)
    value = np.asarray(value, dtype=float)
    if window is None:
        t0 = t[0] + 0.4 * (t[-1] - t[0])
        window = (t0, t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    ts, vs = t[sel], value[sel]
    if np.any(vs <= 0) or not np.all(np.isfinite(vs)):
        raise ValueError("nonpositive or non-finite samples in the fit window")
    if ts.size < 5:
        raise ValueError("need at least 5 samples in the fit window")
    logv = np.log(vs)
    slope, intercept = np.polyfit(ts, logv, 1)
    resid = logv - (slope * ts + intercept)
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-28 * max(1.0, logv.size) else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(K_amp=float(np.exp(intercept)), mu_rate=float(-slope),
                    r2=min(r2, 1.0), window=(float(window[0]), float(window[1])))


def energy_monotonicity(t, E, skip=0.05, rtol=1e-12):
    """Increases of ``E`` after the first ``skip`` fraction of the run.

    Returns a list of ``(t_k, E_{k+1} - E_k)`` for every increase larger than
    ``rtol`` times the running value; an empty list means non-increasing.
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    start = t[0] + skip * (t[-1] - t[0])
    idx = np.flatnonzero(t >= start)
    bad = []
    for a, b in zip(idx[:-1], idx[1:]):
        if E[b] - E[a] > rtol * max(abs(E[a]), 1e-300):
            bad.append((float(t[a]), float(E[b] - E[a])))
    return bad


# ---------------------------------------------------------------------------
# numeric oracle
# ---------------------------------------------------------------------------


def eig6_oracle(M):
    """Eigenvalues of a small dense matrix by LAPACK's QR algorithm."""
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConsistencyError(f"eigenvalue iteration failed: {exc}") from exc


def match_spectra(a, b):
    """Reorder ``b`` to the nearest pairing with ``a``; returns (b', max gap)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty_like(b)
    out[rows] = b[cols]
    return out, float(np.max(np.abs(a - out))) if a.size else 0.0


def quadratic_pair(m11, m12, m21, m22):
    """Eigenvalues ``1/2 (tr +- sqrt((m11 - m22)^2 + 4 m12 m21))`` of a 2x2 block."""
    tr = 0.5 * (m11 + m22)
    root = 0.5 * np.sqrt(complex((m11 - m22) ** 2 + 4 * m12 * m21))
    return tr + root, tr - root


def _check(closed, M, tol):
    oracle = eig6_oracle(M)
    matched, gap = match_spectra(closed, oracle)
    scale = max(1.0, float(np.max(np.abs(M))))
    if gap > tol * scale:
        raise ConsistencyError(f"closed-form spectrum off by {gap:.3e}")
    return matched, gap


# ---------------------------------------------------------------------------
# precipitation model: local system
# ---------------------------------------------------------------------------


def local_equilibrium_srb(p: KineticsSRB, anchor):
    """``(S_E, S_A, S_O, S_C, S_An, S_Cat) = (0, 0, K_O/2, 0, a, Ksp/a)``."""
    if not anchor > 0:
        raise KineticsError("anchor must be positive")
    return np.array([0.0, 0.0, p.KO / 2.0, 0.0, float(anchor), p.Ksp / anchor])


def ksp_factor(p: KineticsSRB, S_An, S_Cat):
    """Shared factor ``1/(Ksp S_An S_Cat) - 1`` of the precipitation terms."""
    return 1.0 / (p.Ksp * S_An * S_Cat) - 1.0


@dataclass
class JacobianReport:
    equilibrium: np.ndarray
    J: np.ndarray
    xi: np.ndarray
    xi_oracle: np.ndarray
    verdict: Verdict
    J52_sign: int
    gap: float
    printed_delta: float

    def as_lines(self):
        lines = [f"S_{name} = {v:.17e}" for name, v in zip(SRB_SUBSTRATES, self.equilibrium)]
        for i in range(6):
            lines.append(f"xi{i + 1} = {self.xi[i].real:.17e} {self.xi[i].imag:+.17e}j")
        lines += [f"verdict = {self.verdict.value}", f"J52_sign = {self.J52_sign}",
                  f"oracle_gap = {self.gap:.3e}", f"printed_delta = {self.printed_delta:.17e}"]
        return lines


def _classify(eigs, tol):
    re = np.real(eigs)
    if np.any(re > tol):
        return Verdict.UNSTABLE
    if np.any(np.abs(eigs) <= tol) or np.any(re >= -tol):
        return Verdict.NOT_ASYMPTOTICALLY_STABLE
    return Verdict.HYPERBOLIC_STABLE


def local_jacobian_srb(p: KineticsSRB, X_star, eq, tol=1e-10, zero_tol=1e-12):
    """Jacobian of the local kinetics at ``eq`` from the closed-form entries."""
    XE, XA = map(float, X_star)
    eq = np.asarray(eq, dtype=float)
    S_An, S_Cat = eq[4], eq[5]
    q = p.KI / (p.KA * (2 * p.KI + p.KO))
    fac = ksp_factor(p, S_An, S_Cat)
    J = np.zeros((6, 6))
    J[0, 0] = J[1, 0] = -p.muE / p.KE * XE
    J[1, 1] = -p.muA * 8.0 / 3.0 * q * XA
    J[2, 0] = -p.muE * (1 - p.YE) / (6 * p.YE * p.KE) * XE
    J[2, 1] = -4.0 / 3.0 * p.muA * (1 - p.YA) / p.YA * q * XA
    J[3, 1] = -2.0 / 3.0 * p.muA * (1 - p.YA) / p.YA * q * XA
    J[4, 1] = p.alpha * XA / p.KPr
    J[4, 4] = J[5, 4] = -2 * p.k / p.Ksp / S_Cat * fac
    J[4, 5] = J[5, 5] = -2 * p.k / p.Ksp / S_An * fac
    xi5, xi6 = quadratic_pair(J[4, 4], J[4, 5], J[5, 4], J[5, 5])
    xi = np.array([0.0, 0.0, J[0, 0], J[1, 1], xi5, xi6], dtype=complex)
    oracle, gap = _check(xi, J, tol)
    printed_delta = (2 * p.k / p.Ksp * (1 / S_Cat + 1 / S_An)
                     * (1 / (p.Ksp**2 * S_Cat * S_An) - 1))
    return JacobianReport(equilibrium=eq, J=J, xi=xi, xi_oracle=oracle,
                          verdict=_classify(xi, zero_tol),
                          J52_sign=int(np.sign(J[4, 1])), gap=gap,
                          printed_delta=float(printed_delta))


# ---------------------------------------------------------------------------
# precipitation model: spatial linearization
# ---------------------------------------------------------------------------


@dataclass
class SteadySRB:
    """Stationary precipitation-model profiles on the normalized grid.

    ``XE``, ``XA`` are the active biomass densities and ``f_Po`` the
    porosity fraction; the substrates sit at the local equilibrium with
    ``S_An = anchor``.
    """

    grid: Grid
    L_star: float
    XE: np.ndarray
    XA: np.ndarray
    f_Po: np.ndarray
    anchor: float = 1.0

    def __post_init__(self):
        n = self.grid.n
        for name in ("XE", "XA", "f_Po"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,))
            setattr(self, name, np.array(arr))
        if not self.L_star > 0:
            raise ValueError("L_star must be positive")
        if np.any(self.f_Po < 0) or np.any(self.f_Po > 1):
            raise ValueError("porosity fraction must lie in [0, 1]")

    @classmethod
    def from_functions(cls, n, L_star, XE: Callable, XA: Callable,
                       f_Po: Callable, anchor=1.0):
        x = Grid(n).x
        return cls(Grid(n), L_star, XE(x), XA(x), f_Po(x), anchor)


def srb_coefficients(steady: SteadySRB, p: KineticsSRB):
    """``a1..a8`` profiles (index 0 unused) plus ``Dhat`` and ``B``.

    ``B_j = D0_j dD_j/dz`` uses central differences in ``x`` divided by
    ``L*``.
    """
    eq = local_equilibrium_srb(p, steady.anchor)
    S_An, S_Cat = eq[4], eq[5]
    XE, XA = steady.XE, steady.XA
    q = p.KI / (p.KA * (2 * p.KI + p.KO))
    a = np.zeros((9, steady.grid.n))
    a[1] = p.muE / (p.YE * p.KE) * XE
    a[2] = 8 * p.muA * q / 3.0 * XA
    a[3] = a[1] / 6.0 * ((1 - p.YE) if p.a3_with_yield else 1.0)
    a[4] = 4.0 / 3.0 * p.muA * (1 - p.YA) / p.YA * q * XA
    a[5] = 0.75 * a[4]
    fac = ksp_factor(p, S_An, S_Cat)
    a[6] = 2 * p.k / S_Cat * fac
    a[7] = 2 * p.k / S_An * fac
    a[8] = p.alpha * XA / p.KPr
    D0 = p.D0_vector
    Dhat = np.array([effective_diffusivity(steady.f_Po, d) for d in D0])
    Dj = np.array([diffusion_coeff(steady.f_Po, d) for d in D0])
    B = D0[:, None] * central_gradient(Dj, steady.grid.h) / steady.L_star
    return a, Dhat, B, eq


@dataclass
class DispersionRow:
    omega: float
    z: float
    M: np.ndarray
    eta: np.ndarray
    ksp_condition: bool
    re_eta5_neg: bool
    re_eta6_neg: bool
    stable: bool
    gap: float


def dispersion_matrix(omega, Dhat, B, a, printed_m55=False):
    """Complex 6x6 matrix of the Fourier-mode system at one location.

    ``Dhat``, ``B`` are 6-vectors and ``a`` is indexed ``a[1]..a[8]``.
    ``printed_m55`` reproduces the printed ``M55`` entry (carbonate
    diffusivity, no ``-a6``); the default uses the entry implied by the mode
    ansatz for the An equation.
    """
    w = float(omega)
    diag = -Dhat * w**2 + 1j * B * w
    M = np.zeros((6, 6), dtype=complex)
    M[0, 0] = diag[0] - a[1]
    M[1, 0] = -a[1]
    M[1, 1] = diag[1] - a[2]
    M[2, 0] = -a[3]
    M[2, 1] = -a[4]
    M[2, 2] = diag[2]
    M[3, 1] = -a[5]
    M[3, 3] = diag[3]
    M[4, 1] = a[8]
    M[4, 4] = diag[3] if printed_m55 else diag[4] - a[6]
    M[4, 5] = -a[7]
    M[5, 4] = -a[6]
    M[5, 5] = diag[5] - a[7]
    return M


def dispersion_matrix_srb(omega, z_index, steady: SteadySRB, p: KineticsSRB,
                          printed_m55=False, tol=1e-10, coeffs=None,
                          zero_tol=1e-12):
    a_all, Dhat_all, B_all, eq = coeffs if coeffs is not None else srb_coefficients(steady, p)
    a = a_all[:, z_index]
    M = dispersion_matrix(omega, Dhat_all[:, z_index], B_all[:, z_index], a,
                          printed_m55=printed_m55)
    eta5, eta6 = quadratic_pair(M[4, 4], M[4, 5], M[5, 4], M[5, 5])
    eta = np.array([M[0, 0], M[1, 1], M[2, 2], M[3, 3], eta5, eta6])
    _, gap = _check(eta, M, tol)
    ksp = bool(1.0 > p.Ksp * eq[4] * eq[5])
    r5 = bool(eta5.real < -zero_tol)
    r6 = bool(eta6.real < -zero_tol)
    diag_ok = bool(np.all(eta[:4].real <= zero_tol))
    z = steady.grid.x[z_index] * steady.L_star
    return DispersionRow(omega=float(omega), z=float(z), M=M, eta=eta,
                         ksp_condition=ksp, re_eta5_neg=r5, re_eta6_neg=r6,
                         stable=ksp and r5 and r6 and diag_ok, gap=gap)


def dispersion_sweep(omegas, steady: SteadySRB, p: KineticsSRB, z_indices=None,
                     printed_m55=False):
    """Rows ordered by ``omega`` then ``z``."""
    coeffs = srb_coefficients(steady, p)
    z_indices = range(steady.grid.n) if z_indices is None else z_indices
    return [dispersion_matrix_srb(w, k, steady, p, printed_m55=printed_m55,
                                  coeffs=coeffs)
            for w in sorted(omegas) for k in z_indices]


@dataclass
class StabilityVerdict:
    stable: bool
    first_violation: Optional[tuple] = None
    ksp_condition: bool = True


def stability_verdict(rows, p: Optional[KineticsSRB] = None, zero_tol=1e-12):
    """Overall verdict over ``(omega, z)`` rows.

    Stable iff the solubility condition holds and, at every row,
    ``Re eta5 < 0``, ``Re eta6 < 0`` and ``Re eta1..4 <= 0``. The first
    violation is reported as ``(omega, z, mode)`` with ``mode = 0`` for the
    solubility gate.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("empty dispersion grid")
    for r in rows:
        if not r.ksp_condition:
            return StabilityVerdict(False, (r.omega, r.z, 0), False)
    for r in rows:
        for i in range(4):
            if r.eta[i].real > zero_tol:
                return StabilityVerdict(False, (r.omega, r.z, i + 1))
        if not r.re_eta5_neg:
            return StabilityVerdict(False, (r.omega, r.z, 5))
        if not r.re_eta6_neg:
            return StabilityVerdict(False, (r.omega, r.z, 6))
    return StabilityVerdict(True)


def write_dispersion_csv(rows, path):
    header = ("omega,z," + ",".join(f"Re_eta{i}" for i in range(1, 7)) + ","
              + ",".join(f"Im_eta{i}" for i in range(1, 7)) + ",stable")
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            vals = [r.omega, r.z, *r.eta.real, *r.eta.imag]
            fh.write(",".join(f"{v:.17e}" for v in vals) + f",{int(r.stable)}\n")


def linearized_steady_solve_srb(steady: SteadySRB, p: KineticsSRB, S_hat):
    """Perturbation profiles of the linearized stationary substrate system.

    The chain is solved in dependency order: E, then A, then O and C, and
    finally the coupled An/Cat pair as one block system. ``S_hat`` holds the
    six interface values. Returns an array of shape ``(6, n)``.
    """
    S_hat = np.asarray(S_hat, dtype=float)
    a, Dhat, B, _ = srb_coefficients(steady, p)
    L = steady.L_star
    n = steady.grid.n
    D = Dhat / L**2
    Bx = B / L
    out = np.zeros((6, n))
    out[0] = linear_bvp_solve(D[0], Bx[0], a[1], 0.0, S_hat[0], n=n)
    out[1] = linear_bvp_solve(D[1], Bx[1], a[2], -a[1] * out[0], S_hat[1], n=n)
    out[2] = linear_bvp_solve(D[2], Bx[2], 0.0, -a[3] * out[0] - a[4] * out[1], S_hat[2], n=n)
    out[3] = linear_bvp_solve(D[3], Bx[3], 0.0, -a[5] * out[1], S_hat[3], n=n)
    out[4], out[5] = _coupled_pair(D[4], Bx[4], D[5], Bx[5], a[6], a[7],
                                   a[8] * out[1], S_hat[4], S_hat[5], steady.grid.h)
    return out


def _block_operator(D, Bx, h):
    from .fd import assemble_operator

    n = D.shape[0]
    lower, diag, upper = assemble_operator(D, Bx, np.zeros(n), h)
    return diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csr")


def _coupled_pair(D5, B5, D6, B6, a6, a7, f5, phi5, phi6, h):
    n = D5.shape[0]
    interior = np.ones(n)
    interior[-1] = 0.0
    A11 = _block_operator(D5, B5, h) + diags(a6 * interior)
    A12 = diags(a7 * interior)
    A21 = diags(a6 * interior)
    A22 = _block_operator(D6, B6, h) + diags(a7 * interior)
    K = bmat([[A11, A12], [A21, A22]], format="csc")
    rhs = np.concatenate([f5, np.zeros(n)])
    rhs[n - 1] = phi5
    rhs[-1] = phi6
    sol = spsolve(K, rhs)
    if not np.all(np.isfinite(sol)):
        raise ArithmeticError("singular coupled An/Cat system")
    return sol[:n], sol[n:]


def linearized_residual_srb(steady: SteadySRB, p: KineticsSRB, S):
    """Pointwise defect of the linearized system on interior nodes."""
    a, Dhat, B, _ = srb_coefficients(steady, p)
    L = steady.L_star
    h = steady.grid.h
    d2 = np.zeros_like(S)
    d2[:, 1:-1] = (S[:, 2:] - 2 * S[:, 1:-1] + S[:, :-2]) / h**2
    d1 = central_gradient(S, h)
    lhs = -Dhat / L**2 * d2 - B / L * d1
    rhs = np.array([
        -a[1] * S[0],
        -a[1] * S[0] - a[2] * S[1],
        -a[3] * S[0] - a[4] * S[1],
        -a[5] * S[1],
        -a[6] * S[4] - a[7] * S[5] + a[8] * S[1],
        -a[6] * S[4] - a[7] * S[5],
    ])
    return (lhs - rhs)[:, 1:-1]


def saturation_on_hyperbola(p: KineticsSRB, anchor):
    eq = local_equilibrium_srb(p, anchor)
    return saturation_index(eq[4], eq[5], p.Ksp)
