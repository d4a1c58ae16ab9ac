"""Stationary solutions of the competition model on the normalized grid.

The substrate system ``-S'' = L^2 H(X, S)`` (``x`` in ``[0, 1]``,
``S'(0) = 0``, ``S(1) = Phi``) is solved two independent ways:

* coupled upper/lower monotone iteration in the scaled variables
  ``C1 = S1/K11, C2 = S2/K22, C3 = S3/K13``, one tridiagonal solve per
  substrate and sweep;
* damped Picard iteration of the Green's-function integral equation with
  trapezoid quadrature, in the unscaled variables.

On a uniform grid the trapezoid-weighted kernel ``1 - max(x, xi)`` is exactly
the inverse of the ghost-node finite-difference operator, so both routes
converge to the same discrete solution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .fd import assemble_operator, right_slope, solve_tridiagonal
from .kinetics import KineticsWG, ReactorParams, rate_coeffs_wg, substrate_rhs_wg
from .transform import Grid

log = logging.getLogger(__name__)


class SteadyError(RuntimeError):
    pass


class NonConvergenceError(SteadyError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BracketError(SteadyError):
    pass


def _grid_for(arr) -> Grid:
    return Grid(np.asarray(arr).shape[-1])


# ---------------------------------------------------------------------------
# linear kernel
# ---------------------------------------------------------------------------


def linear_bvp_solve(Dcoef, Bcoef, sigma, f, phi_right, n=None):
    """Solve ``-D c'' - B c' + sigma c = f``, ``c'(0) = 0``, ``c(1) = phi``.

    Coefficients may be scalars or arrays on the grid; ``n`` is required when
    all of them are scalars.
    """
    if n is None:
        n = max(np.size(a) for a in (Dcoef, Bcoef, sigma, f))
    D = np.broadcast_to(np.asarray(Dcoef, dtype=float), (n,))
    if np.any(D <= 0):
        raise ValueError("diffusion coefficient must be positive")
    B = np.broadcast_to(np.asarray(Bcoef, dtype=float), (n,))
    s = np.broadcast_to(np.asarray(sigma, dtype=float), (n,))
    if np.any(s < 0):
        raise ValueError("sigma must be nonnegative")
    rhs = np.array(np.broadcast_to(np.asarray(f, dtype=float), (n,)))
    rhs[-1] = phi_right
    h = 1.0 / (n - 1)
    return solve_tridiagonal(*assemble_operator(D, B, s, h), rhs)


# ---------------------------------------------------------------------------
# monotone iteration
# ---------------------------------------------------------------------------


def _sat(c, k=1.0):
    return c / (k + c)


def scaled_reactions(C1, C2, C3, X1, X2, p: KineticsWG):
    """``(m1, m2, m3)`` including their lambda factors."""
    l1, l2, l3, l4, l5, l6 = p.lambdas
    g = p.gamma
    m1 = l1 * _sat(C1) * _sat(C3) * X1
    m2 = l2 * _sat(C2) * _sat(C3, g) * X2
    m3 = (l3 * _sat(C1) * _sat(C3) * X1 - l4 * _sat(C3) * X1
          - l5 * _sat(C2) * _sat(C3, g) * X2 - l6 * _sat(C3, g) * X2)
    return m1, m2, m3


def lipschitz_bounds(X1, X2, p: KineticsWG):
    """Sup of ``|dm_i/dC_j|`` over nonnegative concentrations, per equation."""
    l1, l2, l3, l4, l5, l6 = map(abs, p.lambdas)
    g = p.gamma
    x1 = float(np.max(X1))
    x2 = float(np.max(X2))
    L1 = l1 * x1
    L2 = l2 * x2 * max(1.0, 1.0 / g)
    L3 = max((l3 + l4) * x1 + (l5 + l6) * x2 / g, l3 * x1, l5 * x2)
    return np.array([L1, L2, L3])


@dataclass
class BracketReport:
    upper_max: list = field(default_factory=list)
    upper_min: list = field(default_factory=list)
    lower_max: list = field(default_factory=list)
    lower_min: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    converged: bool = False
    gap: float = np.inf
    sweeps: int = 0
    # largest observed violation of each ordering (<= 0 means none)
    upper_increase: float = -np.inf
    lower_decrease: float = -np.inf
    crossing: float = -np.inf
    upper_certified: bool = True
    multiplicity: Optional[dict] = None


def monotone_elliptic_solve(X, L_star, p: KineticsWG, Phi, tol=1e-10,
                            max_sweeps=20000, rho_c3=None):
    """Coupled upper/lower iteration for the substrate profiles.

    ``X`` holds ``(X1, X2[, X3])`` on the grid and ``Phi`` the interface
    values in unscaled units. Returns ``(S, report)`` with ``S`` the mean of
    the two converged limits, shape ``(3, n)``.
    """
    X = np.asarray(X, dtype=float)
    X1, X2 = X[0], X[1]
    n = X.shape[-1]
    h = 1.0 / (n - 1)
    scales = p.substrate_scales
    Phi = np.asarray(Phi, dtype=float)
    phi_c = Phi / scales
    top3 = phi_c[2] if rho_c3 is None else rho_c3 / scales[2]
    if top3 < phi_c[2]:
        raise ValueError("rho_c3 must be at least Phi3")
    L2 = L_star**2
    Lip = L2 * lipschitz_bounds(X1, X2, p)
    ops = [assemble_operator(np.ones(n), np.zeros(n), np.full(n, Li), h) for Li in Lip]
    upper = np.array([np.full(n, phi_c[0]), np.full(n, phi_c[1]), np.full(n, top3)])
    lower = np.zeros((3, n))
    report = BracketReport()

    m_top = scaled_reactions(upper[0], upper[1], upper[2], X1, X2, p)
    if np.max(m_top[2]) > 0 or np.max(m_top[0]) > 0 or np.max(m_top[1]) > 0:
        report.upper_certified = False

    l1, l2, l3, l4, l5, l6 = p.lambdas
    # cross-variable monotonicity of each reaction term
    inc_m1_c3 = l1 >= 0
    inc_m2_c3 = l2 >= 0
    inc_m3_c1 = l3 >= 0
    inc_m3_c2 = -l5 >= 0

    def pick(flag, up, lo):
        return (up, lo) if flag else (lo, up)

    for k in range(1, max_sweeps + 1):
        c3u, c3l = pick(inc_m1_c3, upper[2], lower[2])
        m1u = scaled_reactions(upper[0], 0.0, c3u, X1, X2, p)[0]
        m1l = scaled_reactions(lower[0], 0.0, c3l, X1, X2, p)[0]
        c3u2, c3l2 = pick(inc_m2_c3, upper[2], lower[2])
        m2u = scaled_reactions(0.0, upper[1], c3u2, X1, X2, p)[1]
        m2l = scaled_reactions(0.0, lower[1], c3l2, X1, X2, p)[1]
        c1u, c1l = pick(inc_m3_c1, upper[0], lower[0])
        c2u, c2l = pick(inc_m3_c2, upper[1], lower[1])
        m3u = scaled_reactions(c1u, c2u, upper[2], X1, X2, p)[2]
        m3l = scaled_reactions(c1l, c2l, lower[2], X1, X2, p)[2]
        m_up = (m1u, m2u, m3u)
        m_lo = (m1l, m2l, m3l)
        new_upper = np.empty_like(upper)
        new_lower = np.empty_like(lower)
        for i in range(3):
            rhs = np.stack([Lip[i] * upper[i] + L2 * m_up[i],
                            Lip[i] * lower[i] + L2 * m_lo[i]], axis=1)
            rhs[-1, :] = phi_c[i]
            sol = solve_tridiagonal(*ops[i], rhs)
            new_upper[i] = sol[:, 0]
            new_lower[i] = sol[:, 1]
        s = scales[:, None]
        report.upper_increase = max(report.upper_increase,
                                    float(np.max((new_upper - upper) * s)))
        report.lower_decrease = max(report.lower_decrease,
                                    float(np.max((lower - new_lower) * s)))
        report.crossing = max(report.crossing,
                              float(np.max((new_lower - new_upper) * s)))
        upper, lower = new_upper, new_lower
        gap = float(np.max(np.abs(upper - lower) * s))
        report.upper_max.append((upper * s).max(axis=1))
        report.upper_min.append((upper * s).min(axis=1))
        report.lower_max.append((lower * s).max(axis=1))
        report.lower_min.append((lower * s).min(axis=1))
        report.gaps.append(gap)
        report.sweeps = k
        report.gap = gap
        if gap < tol:
            report.converged = True
            break
        if k > 200 and gap >= 0.999 * report.gaps[k - 201]:
            break
    if not report.converged:
        raise NonConvergenceError(
            f"monotone iteration stalled with gap {report.gap:.3e}", report)
    S = 0.5 * (upper + lower) * scales[:, None]
    return S, report


# ---------------------------------------------------------------------------
# Green's-function route
# ---------------------------------------------------------------------------


def greens_matrix(n):
    """Trapezoid-weighted kernel of ``-c'' = f``, ``c'(0) = 0``, ``c(1) = 0``."""
    x = np.linspace(0.0, 1.0, n)
    G = 1.0 - np.maximum.outer(x, x)
    w = np.full(n, 1.0 / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return G * w[None, :]


def _h_lipschitz(X1, X2, p: KineticsWG):
    x1 = float(np.max(X1))
    x2 = float(np.max(X2))
    r1 = abs(p.beta1) * x1 * (1 / p.K11 + 1 / p.K13)
    r2 = abs(p.beta2) * x2 * (1 / p.K22 + 1 / p.K23)
    r3 = ((abs(p.beta3) + abs(p.beta4)) * x1 * (1 / p.K11 + 1 / p.K13)
          + (abs(p.beta5) + abs(p.beta6)) * x2 * (1 / p.K22 + 1 / p.K23))
    return max(r1, r2, r3)


def greens_solve(X, L_star, p: KineticsWG, Phi, tol=1e-12, max_iter=100000):
    """Damped Picard iteration of ``S = Phi + L^2 int G(x, xi) H(S(xi)) dxi``."""
    X = np.asarray(X, dtype=float)
    X1, X2 = X[0], X[1]
    n = X.shape[-1]
    W = greens_matrix(n)
    Phi = np.asarray(Phi, dtype=float)
    L2 = L_star**2
    K = L2 * _h_lipschitz(X1, X2, p) * 0.5
    omega = 1.0 / (1.0 + K)
    S = np.repeat(Phi[:, None], n, axis=1).astype(float)
    prev_step = None
    for it in range(max_iter):
        H = np.array(substrate_rhs_wg(X1, X2, *np.maximum(S, 0.0), p))
        T = Phi[:, None] + L2 * H @ W.T
        step_ = omega * (T - S)
        S = S + step_
        size = float(np.max(np.abs(step_)))
        if size < tol * omega:
            return S
        if prev_step is not None and size > 2.0 * prev_step and size > 1e3 * tol:
            raise NonConvergenceError(
                "Picard iterate diverging; the instance may have several "
                "solutions (check multiplicity_check)")
        prev_step = size if prev_step is None else min(prev_step, size)
    raise NonConvergenceError("Picard iteration did not converge")


# ---------------------------------------------------------------------------
# biomass profiles
# ---------------------------------------------------------------------------


def boundary_fractions(A, A1, B, A2):
    """Endpoint values of ``(X1, X2)`` where the velocity vanishes.

    The pair ``X1 = h1(X2), X2 = h2(X1)`` has a singular matrix. When the two
    lines coincide (``A1 == A2`` up to rounding) the minimum-norm point is
    returned; otherwise the species with the larger net rate excludes the
    other. Unacceptable values (outside ``[0, 1]``) fall back to zero.
    """
    M = np.array([[1.0, B / A], [A / B, 1.0]])
    rhs = np.array([A1 / A, A2 / B])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if np.linalg.norm(M @ sol - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs)):
        cand = sol
    elif A1 >= A2:
        cand = np.array([A1 / A, 0.0])
    else:
        cand = np.array([0.0, A2 / B])
    if np.any(cand < -1e-12) or cand.sum() > 1 + 1e-12:
        return np.zeros(2)
    return np.clip(cand, 0.0, 1.0)


def _profile_pass(S, L_star, p, eps, anchor, tol, max_iter):
    n = S.shape[-1]
    x = np.linspace(0.0, 1.0, n)
    A, A1, B, A2 = rate_coeffs_wg(S[0], S[1], S[2], p)
    if np.all(A1 <= 0) and np.all(A2 <= 0):
        return np.zeros(n), np.zeros(n), np.zeros(n)
    end = 0 if anchor == "left" else -1
    if A[end] == 0 or B[end] == 0:
        raise SteadyError("boundary system undefined (A or B vanishes)")
    x0 = boundary_fractions(A[end], A1[end], B[end], A2[end])
    X1 = np.full(n, x0[0])
    X2 = np.full(n, x0[1])
    inside = (x >= eps - 1e-14) & (x <= 1 - eps + 1e-14)
    for _ in range(max_iter):
        U = L_star * cumulative_trapezoid(A * X1 + B * X2, x, initial=0.0)
        safe = np.where(inside & (np.abs(U) > 1e-300), U, np.inf)
        F1 = -A * X1**2 + A1 * X1 - B * X1 * X2
        F2 = -B * X2**2 + A2 * X2 - A * X1 * X2
        g1 = L_star * F1 / safe
        g2 = L_star * F2 / safe
        if anchor == "left":
            N1 = x0[0] + cumulative_trapezoid(g1, x, initial=0.0)
            N2 = x0[1] + cumulative_trapezoid(g2, x, initial=0.0)
        else:
            N1 = x0[0] - cumulative_trapezoid(g1[::-1], -x[::-1], initial=0.0)[::-1]
            N2 = x0[1] - cumulative_trapezoid(g2[::-1], -x[::-1], initial=0.0)[::-1]
        N1 = np.clip(N1, 0.0, 1.0)
        N2 = np.clip(N2, 0.0, 1.0 - N1)
        change = max(np.max(np.abs(N1 - X1)), np.max(np.abs(N2 - X2)))
        X1, X2 = N1, N2
        if change < tol:
            U = L_star * cumulative_trapezoid(A * X1 + B * X2, x, initial=0.0)
            return X1, X2, U
    raise NonConvergenceError("biomass Picard iteration did not converge")


def biomass_profile_solve(S, L_star, p: KineticsWG, eps=None, anchor="right",
                          richardson=True, tol=1e-12, max_iter=500):
    """Stationary ``(X1, X2, u)`` for given substrate profiles ``S``.

    ``u`` is returned as a function of the normalized coordinate. The
    characteristic direction decides which endpoint carries the boundary
    fractions: ``anchor="auto"`` picks the inflow end from the sign of the
    growth integral. The default anchors at the interface, where the
    competitive winner is fixed; the substratum end is ambiguous whenever
    the net growth rate changes sign inside the film.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[-1]
    h = 1.0 / (n - 1)
    if anchor == "auto":
        x = np.linspace(0.0, 1.0, n)
        A, _, B, _ = rate_coeffs_wg(S[0], S[1], S[2], p)
        A1 = A - p.k1
        A2 = B - p.k2
        top = boundary_fractions(A[-1], A1[-1], B[-1], A2[-1]) if A[-1] and B[-1] else np.zeros(2)
        U = cumulative_trapezoid(A * top[0] + B * top[1], x, initial=0.0)
        anchor = "right" if np.mean(U[1:-1]) < 0 else "left"
    eps = 2 * h if eps is None else eps
    X1, X2, U = _profile_pass(S, L_star, p, eps, anchor, tol, max_iter)
    if richardson:
        X1c, X2c, Uc = _profile_pass(S, L_star, p, 2 * eps, anchor, tol, max_iter)
        X1 = np.clip(2 * X1 - X1c, 0.0, 1.0)
        X2 = np.clip(2 * X2 - X2c, 0.0, 1.0 - X1)
        x = np.linspace(0.0, 1.0, n)
        A, _, B, _ = rate_coeffs_wg(S[0], S[1], S[2], p)
        U = L_star * cumulative_trapezoid(A * X1 + B * X2, x, initial=0.0)
    return X1, X2, U


def biomass_ode_residual(X1, X2, U, S, L_star, p: KineticsWG):
    """Pointwise defect of ``u dX/dz = F(X)`` (interior nodes, central FD)."""
    n = X1.shape[0]
    h = 1.0 / (n - 1)
    A, A1, B, A2 = rate_coeffs_wg(S[0], S[1], S[2], p)
    F1 = -A * X1**2 + A1 * X1 - B * X1 * X2
    F2 = -B * X2**2 + A2 * X2 - A * X1 * X2
    d1 = np.gradient(X1, h) / L_star
    d2 = np.gradient(X2, h) / L_star
    return U * d1 - F1, U * d2 - F2


# ---------------------------------------------------------------------------
# thickness
# ---------------------------------------------------------------------------


@dataclass
class SteadyState:
    grid: Grid
    L_star: float
    X_star: np.ndarray
    C_star: np.ndarray
    u_star: np.ndarray
    Phi_star: np.ndarray
    residuals: dict
    report: Optional[BracketReport] = None
    trace: list = field(default_factory=list)
    multiplicity: Optional[dict] = None

    @property
    def y_star(self):
        return float(np.log(self.L_star))

    @property
    def V_star(self):
        """Normalized-domain velocity ``V = L u``."""
        return self.L_star * self.u_star


def bulk_balance(S, L_star, reactor: ReactorParams):
    """Interface values solving the stationary bulk balance for given ``S``."""
    h = 1.0 / (S.shape[-1] - 1)
    slope = right_slope(S, h) / L_star
    return np.asarray(reactor.Gamma, dtype=float) - reactor.A_surface / reactor.Q_flow * slope


@dataclass
class _Inner:
    S: np.ndarray
    X: np.ndarray
    U: np.ndarray
    Phi: np.ndarray
    report: BracketReport
    phi_iters: int


def solve_at_thickness(L, p: KineticsWG, reactor: ReactorParams, n, tol=1e-10,
                       Phi0=None, X0=None, max_outer=50, damping=1.0,
                       eps=None, anchor="right"):
    """Coupled substrate/biomass/bulk stationary solve at fixed thickness.

    The bulk balance is iterated with relaxation ``damping``; the relaxation
    halves (down to 1/8) whenever the fixed-point residual grows.
    """
    Phi = np.asarray(reactor.Gamma, dtype=float) if Phi0 is None else np.array(Phi0)
    if X0 is None:
        X = np.zeros((3, n))
        X[0] = 1.0
    else:
        X = np.array(X0, dtype=float)
    total_phi = 0
    # the interface slope amplifies substrate errors by 1/h
    sub_tol = max(tol / (n - 1), 1e-13 * max(1.0, float(np.max(Phi))))
    phi_tol = max(tol, 4.0 * sub_tol * (n - 1) * reactor.A_surface / (reactor.Q_flow * L))
    before = None
    for _ in range(max_outer):
        w = damping
        last = np.inf
        for _ in range(500):
            S, rep = monotone_elliptic_solve(X, L, p, Phi, tol=sub_tol)
            target = bulk_balance(S, L, reactor)
            res = float(np.max(np.abs(target - Phi)))
            total_phi += 1
            if res < phi_tol:
                break
            if res > last and w > 0.125:
                w *= 0.5
            last = res
            Phi = (1 - w) * Phi + w * target
        else:
            raise NonConvergenceError("bulk balance fixed point did not converge")
        X1, X2, U = biomass_profile_solve(S, L, p, eps=eps, anchor=anchor)
        newX = np.array([X1, X2, 1.0 - X1 - X2])
        change = np.max(np.abs(newX - X))
        if change >= tol and before is not None and np.max(np.abs(newX - before)) < tol:
            raise NonConvergenceError(
                f"interface winner alternates between species at L={L:.6g}; "
                "a coexistence steady state is not resolved by this solver")
        before, X = X, newX
        if change < tol:
            return _Inner(S, X, U, Phi, rep, total_phi)
        S, rep = monotone_elliptic_solve(X, L, p, Phi, tol=sub_tol)
    raise NonConvergenceError("substrate/biomass coupling did not converge")


def steady_thickness_find(p: KineticsWG, reactor: ReactorParams, bracket, n=201,
                          tol=1e-10, inner_tol=1e-10, max_iter=200, eps=None,
                          method="bisect"):
    """Root of the interface velocity ``u(L)`` inside ``bracket``.

    ``method="bisect"`` halves the bracket until its width is below
    ``tol * L``; ``"brent"`` uses Brent's method with the same stopping
    width and needs far fewer coupled solves. Returns a
    :class:`SteadyState`.
    """
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < L_lo < L_hi")
    trace = []
    cache = {}
    warm = {}

    def residual(L):
        inner = solve_at_thickness(L, p, reactor, n, tol=inner_tol,
                                   Phi0=warm.get("Phi"), X0=warm.get("X"),
                                   eps=eps)
        warm["Phi"] = inner.Phi
        warm["X"] = inner.X
        r = float(inner.U[-1])
        trace.append((L, r))
        cache[L] = inner
        return r

    r_lo = residual(lo)
    r_hi = residual(hi)
    if r_lo == 0 or r_hi == 0:
        L = lo if r_lo == 0 else hi
        return _assemble(L, cache[L], p, n, trace)
    if np.sign(r_lo) == np.sign(r_hi):
        raise BracketError(
            f"no steady thickness in bracket [{lo}, {hi}]: u has one sign "
            f"({r_lo:.3e}, {r_hi:.3e})")
    if method == "brent":
        L = brentq(residual, lo, hi, xtol=tol * lo, rtol=4 * np.finfo(float).eps,
                   maxiter=max_iter)
        if L not in cache:
            residual(L)
    elif method == "bisect":
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            r_mid = residual(mid)
            if r_mid == 0:
                lo = hi = mid
                break
            if np.sign(r_mid) == np.sign(r_lo):
                lo, r_lo = mid, r_mid
            else:
                hi, r_hi = mid, r_mid
            if hi - lo <= tol * mid:
                break
        L = min((lo, hi), key=lambda v: abs(dict(trace)[v]))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _assemble(L, cache[L], p, n, trace)


def _assemble(L, inner: _Inner, p, n, trace) -> SteadyState:
    grid = Grid(n)
    S, X, U = inner.S, inner.X, inner.U
    h = grid.h
    H = np.array(substrate_rhs_wg(X[0], X[1], *np.maximum(S, 0.0), p))
    lap = np.zeros_like(S)
    lap[:, 1:-1] = (S[:, 2:] - 2 * S[:, 1:-1] + S[:, :-2]) / h**2
    lap[:, 0] = 2 * (S[:, 1] - S[:, 0]) / h**2
    sub_res = np.max(np.abs((-lap - L**2 * H)[:, :-1]))
    r1, r2 = biomass_ode_residual(X[0], X[1], U, S, L, p)
    interior = slice(2, n - 2)
    residuals = {
        "substrate": float(sub_res),
        "biomass": float(max(np.max(np.abs(r1[interior])), np.max(np.abs(r2[interior])))),
        "u_interface": float(abs(U[-1])),
        "bracket_gap": float(inner.report.gap),
    }
    mult = multiplicity_check(S, X, L, p)
    inner.report.multiplicity = mult
    return SteadyState(grid=grid, L_star=L, X_star=X, C_star=S, u_star=U / L,
                       Phi_star=inner.Phi, residuals=residuals,
                       report=inner.report, trace=list(trace), multiplicity=mult)


# ---------------------------------------------------------------------------
# multiplicity and the zero-Dirichlet branch
# ---------------------------------------------------------------------------


def multiplicity_check(S, X, L_star, p: KineticsWG):
    """Pointwise uniqueness test for the oxygen equation.

    Uses ``lambda0 = (pi / (2 L*))^2`` and the weights
    ``theta1 = (c1 - l4/l3) X1``, ``theta2 = (l5/l3 c1 - l6/l3) X2`` with
    ``c1 = C1/(1 + C1)``. Only meaningful when ``l3 > 0``; otherwise the
    oxygen reaction is monotone and the solution is unique.
    """
    S = np.asarray(S, dtype=float)
    X = np.asarray(X, dtype=float)
    l1, l2, l3, l4, l5, l6 = p.lambdas
    g = p.gamma
    lam0 = (np.pi / (2.0 * L_star)) ** 2
    out = {"lambda0": lam0, "lambda3": l3, "gamma": g, "applicable": l3 > 0}
    if l3 <= 0:
        out.update(holds=True, unique=True, first_violation=None)
        return out
    c1 = _sat(S[0] / p.K11)
    theta1 = (c1 - l4 / l3) * X[0]
    theta2 = (l5 / l3 * c1 - l6 / l3) * X[1]
    denom = theta1 * g - theta2
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(denom != 0, lam0 * g / denom, np.nan)
    holds_pt = (denom != 0) & (l3 <= bound)
    d = theta2 - theta1
    Gam = ((g + 1) * lam0 - l3 * d) ** 2 - 4 * lam0 * (lam0 * g - l3 * d)
    root = np.sqrt(np.maximum(Gam, 0.0))
    delta1 = -((g + 1) * lam0 - l3 * (theta1 - theta2)) - root
    delta2 = -((g + 1) * lam0 - l3 * d) + root
    # discriminant of the quadratic the conditions are derived from
    disc = ((g + 1) * lam0 - l3 * (theta1 - theta2)) ** 2 \
        - 4 * lam0 * (lam0 * g - l3 * denom)
    bad = np.flatnonzero(~holds_pt)
    out.update(
        theta1=theta1, theta2=theta2, bound=bound, holds_pointwise=holds_pt,
        holds=bool(np.all(holds_pt)), unique=bool(np.all(holds_pt)),
        first_violation=int(bad[0]) if bad.size else None,
        Gamma=Gam, delta1=delta1, delta2=delta2, discriminant=disc,
    )
    return out


def multiplicity_scalar(lam0, l3, theta1, theta2, gamma):
    """Scalar version returning ``(condition_holds, Gamma)``."""
    denom = theta1 * gamma - theta2
    holds = denom != 0 and l3 <= lam0 * gamma / denom
    d = theta2 - theta1
    Gam = ((gamma + 1) * lam0 - l3 * d) ** 2 - 4 * lam0 * (lam0 * gamma - l3 * d)
    return bool(holds), float(Gam)


def zero_dirichlet_branch(X, p: KineticsWG):
    """Branch with ``C1 = C2 = 0`` and linear oxygen coefficient.

    Returns the coefficient ``a = l6 X1 + l5 X2`` of ``C3'' = a C3`` and the
    sign test ``gamma l5 X1 <= l6 X2`` together with the first failing node.
    """
    X = np.asarray(X, dtype=float)
    l1, l2, l3, l4, l5, l6 = p.lambdas
    ok = p.gamma * l5 * X[0] <= l6 * X[1]
    bad = np.flatnonzero(~ok)
    return {
        "C1": np.zeros(X.shape[-1]),
        "C2": np.zeros(X.shape[-1]),
        "a": l6 * X[0] + l5 * X[1],
        "admissible": ok,
        "all_admissible": bool(np.all(ok)),
        "first_violation": int(bad[0]) if bad.size else None,
    }


def write_steady(state: SteadyState, csv_path, report_path=None):
    """Profiles as ``x,X1,X2,X3,u,C1,C2,C3`` plus a ``key = value`` report."""
    x = state.grid.x
    data = np.column_stack([x, state.X_star.T, state.u_star, state.C_star.T])
    np.savetxt(csv_path, data, delimiter=",", fmt="%.17e",
               header="x,X1,X2,X3,u,C1,C2,C3", comments="")
    if report_path is not None:
        lines = [f"L_star = {state.L_star:.17e}", f"y_star = {state.y_star:.17e}"]
        lines += [f"Phi{i + 1} = {v:.17e}" for i, v in enumerate(state.Phi_star)]
        lines += [f"residual_{k} = {v:.17e}" for k, v in state.residuals.items()]
        if state.report is not None:
            lines.append(f"sweeps = {state.report.sweeps}")
            lines.append(f"upper_certified = {state.report.upper_certified}")
        if state.multiplicity is not None:
            lines.append(f"multiplicity_applicable = {state.multiplicity['applicable']}")
            lines.append(f"unique = {state.multiplicity['unique']}")
        with open(report_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
