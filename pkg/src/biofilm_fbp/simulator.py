"""IMEX time integration of the fixed-domain free-boundary problems.

One step is: velocity profile, explicit upwind advection plus explicit
reaction for the biomass, backward-Euler diffusion/advection with explicit
reaction for the substrates (one tridiagonal solve per substrate), explicit
Euler for ``y = log L``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .energy import energy_E, energy_F
from .fd import assemble_operator, right_slope, solve_tridiagonal
from .kinetics import (KineticsSRB, KineticsWG, ReactorParams, biomass_rhs_srb,
                       biomass_rhs_wg, effective_diffusivity, substrate_rhs_srb,
                       substrate_rhs_wg)
from .transform import (SRB, WG, ConfigError, FieldState, VelocityProfile,
                        growth_rate_bound, thickness_rate, velocity_profile)

log = logging.getLogger(__name__)

MAX_HALVINGS = 20
RENORM_TOL = 1e-12


class CFLError(RuntimeError):
    pass


class NumericalAbort(RuntimeError):
    pass


@dataclass
class TimeStepConfig:
    dt: float = 2e-3
    t_end: float = 10.0
    cfl_max: float = 0.9
    snapshot_every: int = 100
    clamp_negative: bool = True
    detach: Optional[float] = None
    L_floor: float = 1e-8

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not 0 < self.cfl_max <= 1:
            raise ConfigError("cfl_max must lie in (0, 1]")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1")
        if self.detach is not None and self.detach < 0:
            raise ConfigError("detach must be nonnegative")


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=lambda: {
        k: [] for k in ("t", "L", "ydot", "mass_err", "E", "F", "clamps", "bound")})
    aborted: bool = False
    reason: str = ""
    renormalizations: int = 0

    def series(self, key):
        return np.asarray(self.diagnostics[key], dtype=float)


# ---------------------------------------------------------------------------
# substeps
# ---------------------------------------------------------------------------


def _upwind_derivative(X, v, h):
    back = np.zeros_like(X)
    fwd = np.zeros_like(X)
    back[..., 1:] = (X[..., 1:] - X[..., :-1]) / h
    fwd[..., :-1] = (X[..., 1:] - X[..., :-1]) / h
    return np.where(v > 0, back, fwd)


def biomass_reaction(state: FieldState, p):
    """Biomass source in the state's clock, divergence term included."""
    X = np.maximum(state.X, 0.0)
    C = np.maximum(state.C, 0.0)
    if state.model == WG:
        F = np.array(biomass_rhs_wg(X[0], X[1], X[2], C, p))
        return np.exp(2.0 * state.y) * F
    F = biomass_rhs_srb(X, C, p)
    div = np.sum(F / p.rho_vector[:, None], axis=0)
    return F - X * div


def check_cfl(profile: VelocityProfile, dt, h, cfl_max):
    return float(np.max(np.abs(profile.v))) * dt / h <= cfl_max


def hyperbolic_step(state: FieldState, profile: VelocityProfile, dt, p,
                    cfl_max=1.0):
    """Upwind advection by ``v`` plus explicit reaction; returns new ``X``."""
    h = state.grid.h
    if not check_cfl(profile, dt, h, cfl_max):
        raise CFLError("Courant number exceeds cfl_max")
    adv = _upwind_derivative(state.X, profile.v, h)
    return state.X - dt * profile.v * adv + dt * biomass_reaction(state, p)


def _bulk_update(state: FieldState, dt, p: KineticsWG, reactor: ReactorParams):
    """Linearly implicit Euler for the interface values in the rescaled clock."""
    if reactor is None:
        return state.Phi.copy()
    D = np.array([p.D1, p.D2, p.D3])
    a = reactor.A_surface / (D * reactor.V_bulk)
    kappa = reactor.Q_flow / (D * reactor.V_bulk)
    scale = np.exp(2.0 * state.y) * dt
    flux = right_slope(state.C, state.grid.h) / state.L
    gamma = np.asarray(reactor.Gamma, dtype=float)
    return (state.Phi + scale * (kappa * gamma - a * flux)) / (1.0 + scale * kappa)


def substrate_reaction_wg(state: FieldState, p: KineticsWG):
    X = np.maximum(state.X, 0.0)
    C = np.maximum(state.C, 0.0)
    H = np.array(substrate_rhs_wg(X[0], X[1], C[0], C[1], C[2], p))
    return np.exp(2.0 * state.y) * H


def parabolic_step(state: FieldState, profile: VelocityProfile, dt, p,
                   reactor: Optional[ReactorParams] = None):
    """Backward-Euler substrate update; returns ``(C, Phi)``."""
    grid = state.grid
    x = grid.x
    Phi = _bulk_update(state, dt, p, reactor)
    R = substrate_reaction_wg(state, p)
    ones = np.ones(grid.n)
    lower, diag, upper = assemble_operator(ones, profile.ydot * x,
                                           ones / dt, grid.h)
    rhs = state.C / dt + R
    rhs[:, -1] = Phi
    C = solve_tridiagonal(lower, diag, upper, rhs.T).T
    return C, Phi


def assemble_conservative(Dnode, b, sigma, h):
    """Diagonals of ``-(D c')' - b c' + sigma c`` with face-averaged ``D``."""
    Dface = 0.5 * (Dnode[1:] + Dnode[:-1])
    n = Dnode.shape[0]
    lower = np.zeros(n)
    diag = np.ones(n)
    upper = np.zeros(n)
    lower[1:-1] = -Dface[:-1] / h**2 + b[1:-1] / (2 * h)
    upper[1:-1] = -Dface[1:] / h**2 - b[1:-1] / (2 * h)
    diag[1:-1] = (Dface[1:] + Dface[:-1]) / h**2 + sigma[1:-1]
    diag[0] = 2 * Dface[0] / h**2 + sigma[0]
    upper[0] = -2 * Dface[0] / h**2
    return lower, diag, upper


def porosity_fraction(state: FieldState, p: KineticsSRB):
    f = state.X[4] / p.rho["Po"]
    if np.any(f < 0) or np.any(f > 1):
        log.warning("porosity fraction left [0, 1]; clamped")
    return np.clip(f, 0.0, 1.0)


def srb_diffusivities(state: FieldState, p: KineticsSRB):
    f = porosity_fraction(state, p)
    return np.array([effective_diffusivity(f, d0) for d0 in p.D0_vector])


def srb_field_update(state: FieldState, dt, p: KineticsSRB, cfg=None,
                     source: Optional[Callable] = None, react=True):
    """One split step of the precipitation model in physical time.

    ``source(x, t)`` adds an extra explicit forcing to every substrate
    (shape ``(6, n)``); ``react=False`` switches the kinetics off, which the
    manufactured-solution checks use.
    """
    cfg = cfg or TimeStepConfig(dt=dt)
    grid = state.grid
    x = grid.x
    profile = velocity_profile(state, p) if react else VelocityProfile(
        np.zeros(grid.n), np.zeros(grid.n), 0.0)
    if not check_cfl(profile, dt, grid.h, cfg.cfl_max):
        raise CFLError("Courant number exceeds cfl_max")
    if react:
        X = hyperbolic_step(state, profile, dt, p, cfg.cfl_max)
        R = substrate_rhs_srb(np.maximum(state.X, 0.0), np.maximum(state.C, 0.0), p)
    else:
        X = state.X.copy()
        R = np.zeros_like(state.C)
    if source is not None:
        R = R + source(x, state.t)
    Dhat = srb_diffusivities(state, p) / state.L**2
    b = profile.ydot * x
    C = np.empty_like(state.C)
    sigma = np.full(grid.n, 1.0 / dt)
    for j in range(state.C.shape[0]):
        lower, diag, upper = assemble_conservative(Dhat[j], b, sigma, grid.h)
        rhs = state.C[j] / dt + R[j]
        rhs[-1] = state.Phi[j]
        C[j] = solve_tridiagonal(lower, diag, upper, rhs)
    ydot = thickness_rate(state, profile, cfg.detach)
    new = state.copy(X=X, C=C, y=state.y + dt * ydot, t=state.t + dt)
    clamps = _clamp(new, cfg.clamp_negative)
    return new, profile, clamps


def _clamp(state: FieldState, enabled=True):
    if not enabled:
        return 0
    count = int(np.sum(state.X < 0) + np.sum(state.C < 0))
    if count:
        np.maximum(state.X, 0.0, out=state.X)
        np.maximum(state.C, 0.0, out=state.C)
    return count


def _renormalize(state: FieldState):
    total = state.X.sum(axis=0)
    live = total > 0
    if np.any(np.abs(total[live] - 1.0) > RENORM_TOL):
        state.X[:, live] /= total[live]
        log.debug("renormalized biomass fractions at t=%g", state.t)
        return True
    return False


@dataclass
class StepResult:
    state: FieldState
    profile: VelocityProfile
    dt: float
    clamps: int
    renormalized: bool


def step(state: FieldState, cfg: TimeStepConfig, p, reactor=None, dt=None):
    """Advance one accepted step, halving ``dt`` on CFL violation."""
    dt = cfg.dt if dt is None else dt
    profile = velocity_profile(state, p)
    if not np.all(np.isfinite(profile.v)):
        raise NumericalAbort(f"non-finite velocity at t={state.t:.6g}")
    for _ in range(MAX_HALVINGS + 1):
        if check_cfl(profile, dt, state.grid.h, cfg.cfl_max):
            break
        dt *= 0.5
    else:
        raise CFLError("CFL condition unmet after 20 halvings")
    if state.model == SRB:
        new, profile, clamps = srb_field_update(state, dt, p, cfg)
        return StepResult(new, profile, dt, clamps, False)
    X = hyperbolic_step(state, profile, dt, p, cfg.cfl_max)
    C, Phi = parabolic_step(state, profile, dt, p, reactor)
    ydot = thickness_rate(state, profile, cfg.detach)
    new = state.copy(X=X, C=C, Phi=Phi, y=state.y + dt * ydot, t=state.t + dt)
    clamps = _clamp(new, cfg.clamp_negative)
    renorm = _renormalize(new)
    return StepResult(new, profile, dt, clamps, renorm)


def _record(traj: Trajectory, state, profile, clamps, p, steady):
    d = traj.diagnostics
    d["t"].append(state.t)
    d["L"].append(state.L)
    d["ydot"].append(profile.ydot)
    d["clamps"].append(clamps)
    if state.model == WG:
        d["mass_err"].append(float(np.max(np.abs(state.X.sum(axis=0) - 1.0))))
        d["bound"].append(growth_rate_bound(state, p))
    else:
        d["mass_err"].append(float("nan"))
        d["bound"].append(float("nan"))
    if steady is not None:
        C_star = steady.C_star
        d["E"].append(energy_E(state.C, C_star, state.grid.x))
        d["F"].append(energy_F(state.C, C_star, state.grid.x))
    else:
        d["E"].append(float("nan"))
        d["F"].append(float("nan"))


def simulate(init: FieldState, cfg: TimeStepConfig, p, reactor=None,
             steady=None) -> Trajectory:
    """Integrate from ``init`` to ``cfg.t_end``.

    Diagnostics row ``k`` describes the state at ``times``-aligned time
    ``t_k`` together with the velocity profile evaluated there. Runs stop
    early (flagged) on NaN or when ``L`` drops below ``cfg.L_floor``.
    """
    traj = Trajectory()
    state = init.copy()
    traj.times.append(state.t)
    traj.snapshots.append(state.copy())
    n_steps = 0
    eps = 1e-12 * max(1.0, cfg.t_end)
    while state.t < cfg.t_end - eps:
        dt = min(cfg.dt, cfg.t_end - state.t)
        try:
            res = step(state, cfg, p, reactor, dt=dt)
        except NumericalAbort as exc:
            traj.aborted = True
            traj.reason = str(exc)
            log.error(traj.reason)
            break
        _record(traj, state, res.profile, res.clamps, p, steady)
        new = res.state
        if not (np.all(np.isfinite(new.X)) and np.all(np.isfinite(new.C))
                and np.isfinite(new.y)):
            traj.aborted = True
            traj.reason = f"non-finite values at t={new.t:.6g}"
            log.error(traj.reason)
            break
        state = new
        traj.renormalizations += int(res.renormalized)
        n_steps += 1
        if n_steps % cfg.snapshot_every == 0:
            traj.times.append(state.t)
            traj.snapshots.append(state.copy())
        if state.L < cfg.L_floor:
            traj.aborted = True
            traj.reason = f"thickness below floor at t={state.t:.6g}"
            break
    if traj.times[-1] < state.t:
        traj.times.append(state.t)
        traj.snapshots.append(state.copy())
    final_profile = velocity_profile(state, p)
    _record(traj, state, final_profile, 0, p, steady)
    return traj
