"""Finite-difference kernels on the uniform normalized grid."""
from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, solve_banded


class TridiagonalError(ArithmeticError):
    pass


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve a tridiagonal system given its three diagonals.

    ``lower[i]`` multiplies ``u[i-1]`` in row ``i`` (``lower[0]`` unused) and
    ``upper[i]`` multiplies ``u[i+1]`` (``upper[-1]`` unused). ``rhs`` may be
    2-D with one column per right-hand side.
    """
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    if not np.all(np.isfinite(ab)):
        raise TridiagonalError("non-finite matrix entry")
    try:
        return solve_banded((1, 1), ab, rhs, check_finite=False)
    except LinAlgError as exc:
        raise TridiagonalError(f"zero pivot in tridiagonal solve: {exc}") from exc


def assemble_operator(D, B, sigma, h):
    """Diagonals of ``-D c'' - B c' + sigma c`` with ``c'(0) = 0``, ``c(1)`` pinned.

    Central differences in the interior, ghost node ``c[-1] = c[1]`` at the
    left end, identity row at the right end.
    """
    n = D.shape[0]
    lower = -D / h**2 + B / (2 * h)
    diag = 2 * D / h**2 + sigma
    upper = -D / h**2 - B / (2 * h)
    # ghost node folds the left neighbour into the right one; the B term vanishes
    upper = upper.copy()
    upper[0] = -2 * D[0] / h**2
    lower = lower.copy()
    lower[0] = 0.0
    lower[-1] = 0.0
    diag = diag.copy()
    diag[-1] = 1.0
    return lower, diag, upper


def right_slope(c, h):
    """Second-order one-sided ``dc/dx`` at ``x = 1``."""
    return (3.0 * c[..., -1] - 4.0 * c[..., -2] + c[..., -3]) / (2.0 * h)


def central_gradient(c, h):
    """Second-order ``dc/dx`` with one-sided stencils at both ends."""
    return np.gradient(c, h, edge_order=2, axis=-1)
