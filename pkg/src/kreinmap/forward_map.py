"""The forward map: accelerant to off-diagonal Dirac potential.

The potential is read off the t = 0 trace of the Krein kernels of h and of
its reflection. The folded kernel and the lower factor built from
half-argument reads are the bridge to the inverse direction; both are
assembled purely from exact sample reads (the lower factor solves the Krein
equation on the refined 2N grid so that (x +/- t)/2 is always a node).
"""

from __future__ import annotations

import numpy as np

from .errors import NotAccelerantError
from .factorization import is_accelerant, solve_krein
from .fields import (
    Accelerant,
    Kernel2D,
    Potential,
    reflect,
    structural_constants,
)

__all__ = ["theta", "folded_kernel", "block_krein_kernel", "folded_lower_factor"]


def theta(h: Accelerant, tol: float = 1e-8) -> Potential:
    """Forward map: q_plus = i r_h(x, 0), q_minus = -i r_reflected(x, 0).

    Rejects inputs that fail the accelerant sweep. The same potential is
    assembled a second time through the block-kernel route
    Q = R_H(x,0) B J; the two must agree to round-off.
    """
    test = is_accelerant(h, tol=tol)
    if not test.accepted:
        raise NotAccelerantError(test.worst_alpha, float(test.margins.min()))
    r_direct = solve_krein(h)
    r_reflected = solve_krein(reflect(h))
    q_plus = 1j * r_direct.values[:, 0]
    q_minus = -1j * r_reflected.values[:, 0]

    sc = structural_constants(h.r)
    m = h.grid.N + 1
    rh0 = np.zeros((m, 2 * h.r, 2 * h.r), dtype=np.complex128)
    rh0[:, : h.r, : h.r] = r_direct.values[:, 0]
    rh0[:, h.r :, h.r :] = r_reflected.values[:, 0]
    q_cross = rh0 @ (sc.B @ sc.J)
    direct = np.zeros_like(q_cross)
    direct[:, : h.r, h.r :] = q_plus
    direct[:, h.r :, : h.r] = q_minus
    agreement = np.max(np.abs(q_cross - direct))
    if agreement > 1e-12:
        raise AssertionError(f"assembly routes disagree by {agreement:.3e}")

    return Potential(h.r, h.grid, q_plus, q_minus)


def folded_kernel(h: Accelerant) -> Kernel2D:
    """2r x 2r kernel whose blocks read h at (x-t)/2, (x+t)/2 and their
    negatives, with an overall factor 1/2. All four reads are exact sample
    indices on the half-step grid."""
    N, r = h.grid.N, h.r
    m = N + 1
    i, j = np.indices((m, m))
    c = 2 * N
    vals = np.zeros((m, m, 2 * r, 2 * r), dtype=np.complex128)
    vals[:, :, :r, :r] = h.values[c + (i - j)]
    vals[:, :, :r, r:] = h.values[c + (i + j)]
    vals[:, :, r:, :r] = h.values[c - (i + j)]
    vals[:, :, r:, r:] = h.values[c - (i - j)]
    return Kernel2D(2 * r, h.grid, "full", 0.5 * vals)


def block_krein_kernel(h: Accelerant) -> Kernel2D:
    """diag(r_h, r_reflected) as one lower 2r x 2r kernel."""
    r_direct = solve_krein(h)
    r_reflected = solve_krein(reflect(h))
    m = h.grid.N + 1
    vals = np.zeros((m, m, 2 * h.r, 2 * h.r), dtype=np.complex128)
    vals[:, :, : h.r, : h.r] = r_direct.values
    vals[:, :, h.r :, h.r :] = r_reflected.values
    return Kernel2D(2 * h.r, h.grid, "lower", vals)


def folded_lower_factor(h: Accelerant) -> Kernel2D:
    """Lower kernel L(x,t) combining half-argument reads of the Krein kernels.

    L(x,t) = (1/2) { R(x, (x+t)/2) + R(x, (x-t)/2) B } with R the block
    Krein kernel. Both second arguments live on the half-step grid, so the
    Krein equation is solved on the 2N refinement and read back exactly.
    """
    N, r = h.grid.N, h.r
    refined = h.grid.refined()
    r_direct = solve_krein(h, refined).values
    r_reflected = solve_krein(reflect(h), refined).values

    m = N + 1
    i, j = np.indices((m, m))
    lower = j <= i
    plus = np.where(lower, i + j, 0)
    minus = np.where(lower, i - j, 0)
    rows = 2 * i
    vals = np.zeros((m, m, 2 * r, 2 * r), dtype=np.complex128)
    vals[:, :, :r, :r] = r_direct[rows, plus]
    vals[:, :, :r, r:] = r_direct[rows, minus]
    vals[:, :, r:, :r] = r_reflected[rows, minus]
    vals[:, :, r:, r:] = r_reflected[rows, plus]
    vals[~lower] = 0.0
    return Kernel2D(2 * r, h.grid, "lower", 0.5 * vals)
