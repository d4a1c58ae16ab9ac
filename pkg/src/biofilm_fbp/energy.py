"""Quadratic energy functionals of the substrate perturbation."""
from __future__ import annotations

import numpy as np

from .fd import central_gradient


class GridMismatchError(ValueError):
    pass


def _deviation(C, C_star, x):
    C = np.atleast_2d(C)
    C_star = np.atleast_2d(C_star)
    if C.shape != C_star.shape or C.shape[-1] != x.shape[0]:
        raise GridMismatchError(f"shape {C.shape} vs steady {C_star.shape}")
    return C - C_star


def energy_E(C, C_star, x):
    """``1/2 int_0^1 sum_j (C_j - C*_j)^2 dx`` by the trapezoid rule."""
    d = _deviation(C, C_star, x)
    return 0.5 * float(np.sum(np.trapezoid(d**2, x, axis=-1)))


def energy_F(C, C_star, x):
    """``1/2 int_0^1 sum_j (d/dx (C_j - C*_j))^2 dx``."""
    d = _deviation(C, C_star, x)
    g = central_gradient(d, x[1] - x[0])
    return 0.5 * float(np.sum(np.trapezoid(g**2, x, axis=-1)))
