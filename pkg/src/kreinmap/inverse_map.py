"""The inverse map: potential to accelerant through the resolvent product.

The chain is: transformation kernels (a Picard iteration on the coupled
shifted-argument system), the transmutation kernel assembled from exact
half-argument reads on the refined grid, its Volterra resolvent, the product
kernel, and finally the extraction of the accelerant along characteristic
lines.

Two discretization conventions deserve a note because they are easy to get
wrong.  First, the Volterra resolvent is solved by forward substitution with
per-interval trapezoid weights rather than read off the inverted operator
matrix, whose weight pattern is O(1/N) wrong along the column edge.  Second,
the product kernel has a jump across the grid diagonal whenever the
potential is not in the image of the forward map; the stored grid holds the
two-sided average there, and the one-sided parts are available separately for
consumers that differentiate up to the diagonal.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, FieldFormatError, SingularSystemError
from .fields import (
    Accelerant,
    DiagnosticReport,
    Kernel2D,
    Potential,
    potential_adjoint,
    structural_constants,
)
from .quadops import adjoint_op, compose, op_from_kernel

__all__ = [
    "transformation_kernels",
    "transmutation_kernel",
    "resolvent_volterra",
    "ProductParts",
    "resolvent_product_parts",
    "assemble_product",
    "resolvent_product_kernel",
    "trace_extract",
    "characteristic_extract",
    "upsilon",
]


def _sweep_integral(jq, p, step, low, cols, diag):
    """T[i,j] = trapezoid over s in [x_j, x_i] of JQ(s) P(s, s - x_j).

    The shifted read P(s, s - x_j) is the gather p[s, s - j]; all offsets are
    exact node indices, which is the whole point of the grid design.
    """
    g = p[diag[:, None], cols]
    g[~low] = 0.0
    a = np.einsum("sab,sjbc->sjac", jq, g)
    c = np.cumsum(a, axis=0)
    t = step * (c - c[diag, diag][None] + 0.5 * a[diag, diag][None] - 0.5 * a)
    t[~low] = 0.0
    return t


def transformation_kernels(
    q: Potential, tol: float = 1e-12, max_iter: int = 60
) -> tuple[Kernel2D, Kernel2D]:
    """Solve the coupled system for the kernels of the solution representation.

    P_plus(x,t) = int_t^x JQ(s) P_minus(s, s-t) ds
    P_minus(x,t) = int_t^x JQ(s) P_plus(s, s-t) ds + JQ(t)

    Picard iteration from (0, JQ(t)), alternating the two equations. The
    factorial decay of the iterated kernels makes convergence fast for any
    potential of moderate size; it is monitored, never assumed.  P_plus
    commutes with J and P_minus anticommutes, exactly, because every update
    preserves the block structure; the check at the end is a tripwire.
    """
    sc = structural_constants(q.r)
    m = q.grid.N + 1
    jq = sc.J @ q.full()
    step = q.grid.step
    i_idx, j_idx = np.indices((m, m))
    low = j_idx <= i_idx
    cols = np.where(low, i_idx - j_idx, 0)
    diag = np.arange(m)

    source = np.where(low[..., None, None], np.broadcast_to(jq[None], (m, m) + jq.shape[1:]), 0.0)
    plus = np.zeros_like(source)
    minus = source.copy()
    change = np.inf
    for _ in range(max_iter):
        new_plus = _sweep_integral(jq, minus, step, low, cols, diag)
        new_minus = source + _sweep_integral(jq, new_plus, step, low, cols, diag)
        change = max(
            float(np.max(np.abs(new_plus - plus))),
            float(np.max(np.abs(new_minus - minus))),
        )
        plus, minus = new_plus, new_minus
        if change <= tol:
            break
    else:
        raise ConvergenceError(change, max_iter)

    sym = max(
        float(np.max(np.abs(plus @ sc.J - sc.J @ plus))),
        float(np.max(np.abs(minus @ sc.J + sc.J @ minus))),
    )
    if sym > 1e-8:
        raise AssertionError(f"block symmetry violated by {sym:.3e}")
    n = 2 * q.r
    return (
        Kernel2D(n, q.grid, "lower", plus),
        Kernel2D(n, q.grid, "lower", minus),
    )


def _midpoint_fill(samples: np.ndarray) -> np.ndarray:
    # cubic interpolation onto the refined grid; a linear fill leaves an
    # O(h^2) sawtooth at the odd nodes, invisible to centered differences but
    # amplified to O(h) by the one-sided stencils along the kernel edges
    f = samples
    out = np.empty((2 * (len(f) - 1) + 1,) + f.shape[1:], dtype=np.complex128)
    out[::2] = f
    out[3:-2:2] = (-f[:-3] + 9.0 * f[1:-2] + 9.0 * f[2:-1] - f[3:]) / 16.0
    out[1] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    out[-2] = (f[-4] - 5.0 * f[-3] + 15.0 * f[-2] + 5.0 * f[-1]) / 16.0
    return out


def transmutation_kernel(q: Potential, tol: float = 1e-12, max_iter: int = 60) -> Kernel2D:
    """Lower kernel K with phi(x) = phi0(x) + int_0^x K(x,s) phi0(s) ds.

    K(x,t) = (1/2){P+(x,(x-t)/2) + P+(x,(x+t)/2)B + P-(x,(x-t)/2)B + P-(x,(x+t)/2)}

    The transformation kernels are solved on the refined grid so that every
    half-argument is an exact node read.
    """
    fine = Potential(
        q.r, q.grid.refined(), _midpoint_fill(q.q_plus), _midpoint_fill(q.q_minus)
    )
    p_plus, p_minus = transformation_kernels(fine, tol, max_iter)
    sc = structural_constants(q.r)
    m = q.grid.N + 1
    i, j = np.indices((m, m))
    low = j <= i
    rows = 2 * i
    near = np.where(low, i - j, 0)
    far = np.where(low, i + j, 0)
    pp, pm = p_plus.values, p_minus.values
    vals = 0.5 * (
        pp[rows, near] + pp[rows, far] @ sc.B + pm[rows, near] @ sc.B + pm[rows, far]
    )
    vals[~low] = 0.0
    return Kernel2D(2 * q.r, q.grid, "lower", vals)


def resolvent_volterra(kernel: Kernel2D) -> Kernel2D:
    """Kernel of (I + K)^-1 - I for a triangular K.

    Solves L(x,t) = -K(x,t) - int_t^x K(x,s) L(s,t) ds by forward
    substitution with the trapezoid rule on [t, x], all columns of a row at
    once. Unfolding the inverted operator matrix instead would leave an
    O(1/N) kernel error along the column edge (its weight pattern cannot
    express the half weight at s = t), which is invisible to integral norms
    but fatal to finite-difference identity checks.
    """
    if kernel.support not in ("lower", "upper"):
        raise FieldFormatError("resolvent extraction requires triangular support")
    if kernel.support == "upper":
        flipped = Kernel2D(
            kernel.n,
            kernel.grid,
            "lower",
            np.ascontiguousarray(kernel.values.transpose(1, 0, 3, 2)),
        )
        out = resolvent_volterra(flipped)
        return Kernel2D(
            kernel.n,
            kernel.grid,
            "upper",
            np.ascontiguousarray(out.values.transpose(1, 0, 3, 2)),
        )
    N, n = kernel.grid.N, kernel.n
    step = kernel.grid.step
    K = kernel.values
    L = np.zeros_like(K)
    eye = np.eye(n, dtype=np.complex128)
    L[0, 0] = -K[0, 0]
    for i in range(1, N + 1):
        L[i, i] = -K[i, i]
        # full-weight sum over s < i, then take back the half weight at s = t
        body = step * np.einsum("sab,sjbc->jac", K[i, :i], L[:i, :i])
        body -= 0.5 * step * np.einsum("jab,jbc->jac", K[i, :i], L[np.arange(i), np.arange(i)])
        rhs = -K[i, :i] - body
        try:
            L[i, :i] = np.linalg.solve(eye + 0.5 * step * K[i, i], rhs)
        except np.linalg.LinAlgError:
            raise SingularSystemError(i / N, "volterra forward substitution")
    return Kernel2D(kernel.n, kernel.grid, "lower", L)


class ProductParts(NamedTuple):
    """One-sided ingredients of the product kernel on a shared grid.

    lower   resolvent of the transmutation kernel, lower support
    upper   adjoint-side term, upper support: upper(x,t) = lower*(t,x)^H
    cross   the integral term int_0^min(x,t) L(x,s) L*(t,s)^H ds, full grid
    """

    lower: Kernel2D
    upper: Kernel2D
    cross: np.ndarray


def resolvent_product_parts(
    q: Potential, tol: float = 1e-12, max_iter: int = 60
) -> ProductParts:
    l_low = resolvent_volterra(transmutation_kernel(q, tol, max_iter))
    l_star = resolvent_volterra(transmutation_kernel(potential_adjoint(q), tol, max_iter))
    upper_vals = np.conj(l_star.values.transpose(1, 0, 3, 2))
    upper = Kernel2D(l_low.n, q.grid, "upper", upper_vals)

    # The composed operator read reproduces the trapezoid rule on [0, min(x,t)]
    # exactly, except on the grid diagonal where the two triangular reads hit
    # their endpoint together and leave a quarter-weight deficit; patch it.
    prod = compose(op_from_kernel(l_low), adjoint_op(op_from_kernel(l_star)))
    cross = prod.blocks() / q.grid.weights[None, :, None, None]
    d = np.arange(1, q.grid.N)
    cross[d, d] += 0.25 * q.grid.step * (l_low.values[d, d] @ upper_vals[d, d])
    return ProductParts(l_low, upper, cross)


def assemble_product(parts: ProductParts) -> Kernel2D:
    """Merge one-sided product parts into the full-grid kernel.

    Below the diagonal F = L + cross, above it F = L~ + cross.  On the
    diagonal the two one-sided limits differ unless the potential lies in the
    image of the forward map; the grid stores their average.
    """
    grid = parts.lower.grid
    m = grid.N + 1
    i, j = np.indices((m, m))
    vals = parts.cross.copy()
    below = j < i
    above = j > i
    vals[below] += parts.lower.values[below]
    vals[above] += parts.upper.values[above]
    d = np.arange(m)
    vals[d, d] += 0.5 * (parts.lower.values[d, d] + parts.upper.values[d, d])
    return Kernel2D(parts.lower.n, grid, "full", vals)


def resolvent_product_kernel(
    q: Potential, tol: float = 1e-12, max_iter: int = 60
) -> Kernel2D:
    """Full-grid product kernel F with I + F = (I + L)(I + L~)."""
    return assemble_product(resolvent_product_parts(q, tol, max_iter))


def _half_r(f: Kernel2D) -> int:
    if f.n % 2:
        raise FieldFormatError("extraction requires an even block dimension")
    return f.n // 2


def trace_extract(f: Kernel2D) -> Accelerant:
    """Piecewise boundary trace of F at second argument 1, times two.

    The factor two compensates the 1/2 carried by the folded kernel; without
    it the extraction returns half the accelerant.  See the README note.
    """
    r = _half_r(f)
    N = f.grid.N
    v = f.values
    h = np.empty((4 * N + 1, r, r), dtype=np.complex128)
    k = np.arange(N + 1)
    h[: N + 1] = 2.0 * v[N - k, N, r:, :r]
    h[N + 1 : 2 * N + 1] = 2.0 * v[np.arange(1, N + 1), N, :r, :r]
    h[2 * N + 1 : 3 * N + 1] = 2.0 * v[np.arange(N - 1, -1, -1), N, r:, r:]
    h[3 * N + 1 :] = 2.0 * v[np.arange(1, N + 1), N, :r, r:]
    return Accelerant(r, f.grid, h)


def characteristic_extract(f: Kernel2D) -> Accelerant:
    """Average of all grid samples on each characteristic line, times two.

    Each half-step point of the accelerant is seen by O(N) entries of the
    kernel (diagonal blocks along x - t = const, off-diagonal along
    x + t = const); equal-weight averaging of exact reads makes this both an
    exact inverse of the folded kernel and the noise-robust default.
    """
    r = _half_r(f)
    N = f.grid.N
    m = N + 1
    i, j = np.indices((m, m))
    diff = (i - j).ravel()
    summ = (i + j).ravel()
    v = f.values
    acc = np.zeros((4 * N + 1, r, r), dtype=np.complex128)
    cnt = np.zeros(4 * N + 1, dtype=np.int64)

    def gather(block, idx):
        np.add.at(acc, idx, block)
        np.add.at(cnt, idx, 1)

    gather(v[:, :, :r, :r].reshape(-1, r, r), 2 * N + diff)
    gather(v[:, :, r:, r:].reshape(-1, r, r), 2 * N - diff)
    sel = summ > 0
    gather(v[:, :, :r, r:].reshape(-1, r, r)[sel], 2 * N + summ[sel])
    gather(v[:, :, r:, :r].reshape(-1, r, r)[sel], 2 * N - summ[sel])
    return Accelerant(r, f.grid, 2.0 * acc / cnt[:, None, None])


def upsilon(
    q: Potential, tol: float = 1e-12, max_iter: int = 60
) -> tuple[Accelerant, DiagnosticReport]:
    """Inverse map.  Returns the accelerant and a consistency report.

    The characteristic-line extraction is the result; the literal boundary
    trace is computed as well and the spread between the two is recorded,
    since on a grid they differ by the discretization error of the product
    kernel.
    """
    f = resolvent_product_kernel(q, tol, max_iter)
    robust = characteristic_extract(f)
    literal = trace_extract(f)
    report = DiagnosticReport()
    report.add(
        "extraction_spread",
        float(np.max(np.abs(robust.values - literal.values))),
        np.inf,
    )
    report.metadata.update({"N": q.grid.N, "r": q.r, "extraction": "characteristic"})
    return robust, report
