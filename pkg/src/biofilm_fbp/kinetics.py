"""Reaction terms and constitutive laws for the two biofilm models.

Case 1 (``WG``) is the heterotroph/autotroph competition model written in the
diffusivity-scaled substrate variables ``S_i = D_i * S_hat_i``; total biomass
density is normalized to one so volume fractions and concentrations coincide.
Case 2 (``SRB``) is the simplified sulfate-reducing-bacteria precipitation
model with species ordered ``(E, A, I, Pr, Po)`` and substrates ordered
``(E, A, O, C, An, Cat)``.

All functions are pure and accept scalars or numpy arrays (broadcasting).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SRB_SPECIES = ("E", "A", "I", "Pr", "Po")
SRB_SUBSTRATES = ("E", "A", "O", "C", "An", "Cat")


class KineticsError(ValueError):
    """Raised on a domain violation (negative concentration, bad parameter)."""


def _check_nonneg(name, value):
    if np.any(np.asarray(value) < 0):
        raise KineticsError(f"{name} must be nonnegative")


def monod(s, K):
    """Saturating Monod factor ``s / (K + s)``."""
    if np.any(np.asarray(K) <= 0):
        raise KineticsError("half-saturation constant must be positive")
    _check_nonneg("concentration", s)
    return s / (K + s)


# ---------------------------------------------------------------------------
# Case 1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KineticsWG:
    """Parameter set of the competition model.

    Half-saturation constants are the rescaled ``K*_ij = D_i K_ij``. The
    substrate coefficients ``beta*`` and the elliptic-form coefficients
    ``lambda*``/``gamma`` are derived, not stored.
    """

    # reference instance: species 1 wins, steady thickness ~2.17 and a real
    # dominant relaxation mode (biomass kinetics slower than diffusion)
    mu1: float = 0.2
    mu2: float = 0.16
    K11: float = 1.0
    K13: float = 0.5
    K22: float = 1.0
    K23: float = 0.5
    b1: float = 0.08
    b2: float = 0.04
    k1: float = 0.0
    k2: float = 0.0
    D1: float = 1.0
    D2: float = 1.0
    D3: float = 1.0
    Y1: float = 0.1
    Y2: float = 0.08
    alpha1: float = 0.04
    alpha2: float = 0.12
    # beta5 is printed without the D3 factor that beta4/beta6 carry
    beta5_with_D3: bool = False

    def __post_init__(self):
        positive = ("mu1", "mu2", "K11", "K13", "K22", "K23", "D1", "D2", "D3",
                    "Y1", "Y2")
        for name in positive:
            if not getattr(self, name) > 0:
                raise KineticsError(f"{name} must be positive")
        for name in ("b1", "b2", "k1", "k2", "alpha1", "alpha2"):
            if not getattr(self, name) >= 0:
                raise KineticsError(f"{name} must be nonnegative")

    @property
    def beta1(self):
        return -self.D1 * self.mu1 / self.Y1

    @property
    def beta2(self):
        return -self.D2 * self.mu2 / self.Y2

    @property
    def beta3(self):
        return self.D3 * self.mu1 * (self.alpha1 - self.Y1) / self.Y1

    @property
    def beta4(self):
        return self.D3 * self.b1

    @property
    def beta5(self):
        scale = self.D3 if self.beta5_with_D3 else 1.0
        return scale * self.mu2 * (self.alpha2 - self.Y2) / self.Y2

    @property
    def beta6(self):
        return self.D3 * self.b2

    # coefficients of the elliptic system in C1 = S1/K11, C2 = S2/K22, C3 = S3/K13
    @property
    def gamma(self):
        return self.K23 / self.K13

    @cached_property
    def lambdas(self):
        """``(lambda1, ..., lambda6)``."""
        return (self.beta1 / self.K11, self.beta2 / self.K22,
                self.beta3 / self.K13, self.beta4 / self.K13,
                self.beta5 / self.K13, self.beta6 / self.K13)

    @property
    def substrate_scales(self):
        """Factors mapping scaled concentrations ``C`` back to ``S``."""
        return np.array([self.K11, self.K22, self.K13])

    def swapped(self):
        """Exchange the roles of species 1 and 2 (and substrates 1 and 2).

        The oxygen growth terms enter with opposite signs (``+beta3`` for
        species 1, ``-beta5`` for species 2), so each conversion factor is
        reflected about its yield, ``alpha -> 2 Y - alpha``, to keep the
        oxygen demand of every species unchanged.
        """
        return KineticsWG(mu1=self.mu2, mu2=self.mu1, K11=self.K22, K13=self.K23,
                          K22=self.K11, K23=self.K13, b1=self.b2, b2=self.b1,
                          k1=self.k2, k2=self.k1, D1=self.D2, D2=self.D1, D3=self.D3,
                          Y1=self.Y2, Y2=self.Y1, alpha1=2 * self.Y2 - self.alpha2,
                          alpha2=2 * self.Y1 - self.alpha1,
                          beta5_with_D3=self.beta5_with_D3)


@dataclass(frozen=True)
class ReactorParams:
    A_surface: float = 0.1
    V_bulk: float = 1.0
    Q_flow: float = 1.0
    Gamma: tuple = (2.0, 1.0, 50.0)

    def __post_init__(self):
        for name in ("A_surface", "V_bulk", "Q_flow"):
            if not getattr(self, name) > 0:
                raise KineticsError(f"{name} must be positive")
        if any(g <= 0 for g in self.Gamma):
            raise KineticsError("Gamma must be positive")


def rate_coeffs_wg(S1, S2, S3, p: KineticsWG):
    """Net specific growth rates ``(A, A1, B, A2)``."""
    m3a = monod(S3, p.K13)
    m3b = monod(S3, p.K23)
    A = p.mu1 * monod(S1, p.K11) * m3a - p.b1 * m3a
    B = p.mu2 * monod(S2, p.K22) * m3b - p.b2 * m3b
    return A, A - p.k1, B, B - p.k2


def biomass_rhs_wg(X1, X2, X3, S, p: KineticsWG):
    """Biomass reaction terms with the velocity divergence folded in.

    ``S`` is the triple ``(S1, S2, S3)``.
    """
    _check_nonneg("biomass", X1)
    _check_nonneg("biomass", X2)
    _check_nonneg("biomass", X3)
    A, A1, B, A2 = rate_coeffs_wg(S[0], S[1], S[2], p)
    F1 = -A * X1**2 + A1 * X1 - B * X1 * X2
    F2 = -B * X2**2 + A2 * X2 - A * X1 * X2
    F3 = -A * X1 * X3 - B * X2 * X3 + p.k1 * X1 + p.k2 * X2
    return F1, F2, F3


def substrate_rhs_wg(X1, X2, S1, S2, S3, p: KineticsWG):
    _check_nonneg("biomass", X1)
    _check_nonneg("biomass", X2)
    m11 = monod(S1, p.K11)
    m13 = monod(S3, p.K13)
    m22 = monod(S2, p.K22)
    m23 = monod(S3, p.K23)
    H1 = p.beta1 * m11 * m13 * X1
    H2 = p.beta2 * m22 * m23 * X2
    H3 = (p.beta3 * m11 * m13 * X1 - p.beta4 * m13 * X1
          - p.beta5 * m22 * m23 * X2 - p.beta6 * m23 * X2)
    return H1, H2, H3


# ---------------------------------------------------------------------------
# Case 2
# ---------------------------------------------------------------------------


def _default_D0():
    return {"E": 1.0, "A": 1.0, "O": 1.0, "C": 1.0, "An": 1.0, "Cat": 1.0}


def _default_rho():
    return {"E": 1.0, "A": 1.0, "I": 1.0, "Pr": 1.0, "Po": 1.0}


@dataclass(frozen=True)
class KineticsSRB:
    muE: float = 1.2
    muA: float = 0.8
    KE: float = 0.6
    KA: float = 0.5
    KO: float = 0.4
    KI: float = 0.3
    KPr: float = 0.5
    kE: float = 0.05
    kA: float = 0.05
    YE: float = 0.4
    YA: float = 0.3
    YAC: float = 0.2
    k: float = 0.1
    Ksp: float = 0.5
    alpha: float = 0.1
    XPo_bar: float = 0.3
    D0: dict = field(default_factory=_default_D0)
    rho: dict = field(default_factory=_default_rho)
    # a3 is printed as a1/6; the Jacobian entry J31 carries an extra (1 - YE)
    a3_with_yield: bool = False

    def __post_init__(self):
        for name in ("muE", "muA", "KE", "KA", "KO", "KI", "KPr", "Ksp"):
            if not getattr(self, name) > 0:
                raise KineticsError(f"{name} must be positive")
        for name in ("kE", "kA", "k", "alpha"):
            if not getattr(self, name) >= 0:
                raise KineticsError(f"{name} must be nonnegative")
        for name in ("YE", "YA", "YAC", "XPo_bar"):
            if not 0 < getattr(self, name) < 1:
                raise KineticsError(f"{name} must lie in (0, 1)")
        if set(self.D0) != set(SRB_SUBSTRATES) or min(self.D0.values()) <= 0:
            raise KineticsError("D0 needs a positive entry per substrate")
        if set(self.rho) != set(SRB_SPECIES) or min(self.rho.values()) <= 0:
            raise KineticsError("rho needs a positive entry per species")

    @property
    def D0_vector(self):
        return np.array([self.D0[s] for s in SRB_SUBSTRATES])

    @property
    def rho_vector(self):
        return np.array([self.rho[s] for s in SRB_SPECIES])


def saturation_index(S_An, S_Cat, Ksp):
    if not Ksp > 0:
        raise KineticsError("Ksp must be positive")
    return S_An * S_Cat / Ksp


def _acetate_uptake(S, p: KineticsSRB):
    SA, SO = S[1], S[2]
    inhib = p.KI / (p.KI + SO)
    return monod(SA, p.KA) * inhib * (SO / (SO + p.KO) + 1.0)


def biomass_rhs_srb(X, S, p: KineticsSRB):
    """Raw right-hand sides of the five biomass/solid equations."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    _check_nonneg("biomass", X)
    _check_nonneg("concentration", S)
    XE, XA, _, XPr, _ = X
    sat = saturation_index(S[4], S[5], p.Ksp)
    out = np.empty_like(X * 1.0 + S[0] * 0.0)
    out[0] = p.muE * monod(S[0], p.KE) * XE - p.kE * XE
    out[1] = p.muA * _acetate_uptake(S, p) * XA - p.kA * XA
    out[2] = p.kE * XE + p.kA * XA
    out[3] = p.k * (sat - 1.0) ** 2
    out[4] = p.XPo_bar / (1.0 - p.XPo_bar) * (XE + XA) - XPr
    return out


def substrate_rhs_srb(X, S, p: KineticsSRB):
    """Reaction parts of the six substrate equations."""
    X = np.asarray(X, dtype=float)
    S = np.asarray(S, dtype=float)
    _check_nonneg("biomass", X)
    _check_nonneg("concentration", S)
    XE, XA = X[0], X[1]
    SE, SA, SO = S[0], S[1], S[2]
    mE = monod(SE, p.KE)
    inhib = p.KI / (p.KI + SO)
    precip = p.k * (saturation_index(S[4], S[5], p.Ksp) - 1.0) ** 2
    out = np.empty_like(S * 1.0 + X[0] * 0.0)
    out[0] = -p.muE / p.YE * mE * XE
    out[1] = (-2.0 * (1.0 - p.YE) / (3.0 * p.YE) * p.muE * mE * XE
              - p.muA * _acetate_uptake(S, p) * XA)
    out[2] = (-p.muE * (1.0 - p.YE) / (6.0 * p.YE) * mE * XE
              - p.muA * (1.0 - p.YA) / (2.0 * p.YA) * monod(SA, p.KA)
              * monod(SO, p.KO) * inhib * XA)
    out[3] = p.muA * (1.0 - p.YAC) / p.YAC * monod(SA, p.KA) * inhib * XA
    out[4] = -precip + p.alpha * monod(SA, p.KPr) * XA
    out[5] = -precip
    return out


def diffusion_coeff(f_Po, D0):
    """Porosity-throttled diffusivity ``D0 * exp(-sqrt(1 - f_Po))``."""
    f = np.asarray(f_Po, dtype=float)
    if np.any(f < 0) or np.any(f > 1):
        raise KineticsError("porosity fraction must lie in [0, 1]")
    return D0 * np.exp(-np.sqrt(1.0 - f))


def effective_diffusivity(f_Po, D0):
    """Diffusivity multiplying the substrate Laplacian: ``D0 * D(f_Po)``.

    The constitutive law already carries ``D0``, so the product holds ``D0**2``.
    """
    return D0 * diffusion_coeff(f_Po, D0)
