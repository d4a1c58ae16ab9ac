"""Fixed-domain change of variables ``x = z / L(t)``, ``y = log L``.

Case 1 states evolve in the rescaled clock ``t* = int dt / L^2``; case 2
states evolve in physical time with diffusion divided by ``L^2``. In both
cases ``V(x) = int_0^x g`` with ``g`` the growth integrand, the relative
advection speed is ``v = V - x V(1)`` and ``dy/dclock = V(1)`` when there is
no detachment.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .kinetics import (KineticsSRB, KineticsWG, biomass_rhs_srb,
                       rate_coeffs_wg)

WG = "WG"
SRB = "SRB"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError("grid needs at least 3 nodes")

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)


@dataclass
class FieldState:
    """Snapshot of one model on the normalized grid.

    ``X`` has one row per biomass species, ``C`` one row per substrate and
    ``Phi`` holds the bulk/interface value of each substrate.
    """

    grid: Grid
    t: float
    y: float
    X: np.ndarray
    C: np.ndarray
    Phi: np.ndarray
    model: str = WG
    clock: str = "rescaled"

    @property
    def L(self) -> float:
        return float(np.exp(self.y))

    def copy(self, **changes) -> "FieldState":
        new = replace(self, X=self.X.copy(), C=self.C.copy(), Phi=self.Phi.copy())
        for key, value in changes.items():
            setattr(new, key, value)
        return new


@dataclass
class VelocityProfile:
    V: np.ndarray
    v: np.ndarray
    ydot: float


def growth_integrand(state: FieldState, p, x_index=None):
    """Integrand of the velocity equation on the normalized grid.

    Case 1 returns ``e^{2y} (A X1 + B X2)``; case 2 returns
    ``sum_i F_i / rho_i``.
    """
    if state.model == WG:
        C = np.maximum(state.C, 0.0)
        A, _, B, _ = rate_coeffs_wg(C[0], C[1], C[2], p)
        g = np.exp(2.0 * state.y) * (A * state.X[0] + B * state.X[1])
    else:
        F = biomass_rhs_srb(np.maximum(state.X, 0.0), np.maximum(state.C, 0.0), p)
        g = np.sum(F / p.rho_vector[:, None], axis=0)
    g = np.broadcast_to(g, (state.grid.n,)).astype(float)
    return g if x_index is None else g[x_index]


def velocity_from_integrand(g: np.ndarray, x: np.ndarray) -> VelocityProfile:
    V = cumulative_trapezoid(g, x, initial=0.0)
    v = V - x * V[-1]
    v[0] = 0.0
    v[-1] = 0.0
    return VelocityProfile(V=V, v=v, ydot=float(V[-1]))


def velocity_profile(state: FieldState, p) -> VelocityProfile:
    return velocity_from_integrand(growth_integrand(state, p), state.grid.x)


def map_coordinates(value, L, direction="to_x"):
    """``z -> x = z/L`` (``to_x``) or ``x -> z = x L`` (``to_z``)."""
    if not L > 0:
        raise ConfigError("thickness must be positive")
    if direction == "to_x":
        return value / L
    if direction == "to_z":
        return value * L
    raise ConfigError(f"unknown direction {direction!r}")


def thickness_rate(state: FieldState, profile: VelocityProfile, detach=None):
    """Rate of change of ``y = log L`` in the state's own clock.

    With detachment ``dL/dt = u(L) - lam L^2``; dividing by ``L`` gives
    ``V(1) - lam e^y`` in physical time, and the extra ``L^2`` of the rescaled
    clock turns this into ``V(1) - lam e^{3y}``.
    """
    if detach is None:
        return profile.ydot
    if detach < 0:
        raise ConfigError("detachment coefficient must be nonnegative")
    power = 3.0 if state.clock == "rescaled" else 1.0
    return profile.ydot - detach * np.exp(power * state.y)


def growth_rate_bound(state: FieldState, p: KineticsWG) -> float:
    """Upper bound ``e^{2y} max(mu1, mu2) int (X1 + X2)`` on ``|ydot|``."""
    mass = np.trapezoid(state.X[0] + state.X[1], state.grid.x)
    return float(np.exp(2.0 * state.y) * max(p.mu1, p.mu2) * mass)
