"""Inverse map: transformation kernels, Volterra resolvent, extraction."""

import numpy as np
import pytest

from conftest import const_accelerant, gauss_accelerant, random_accelerant, ratio_ok
from kreinmap import (
    GridSpec,
    Kernel2D,
    Potential,
    SingularSystemError,
    characteristic_extract,
    field_norm,
    folded_kernel,
    folded_lower_factor,
    resolvent_product_kernel,
    resolvent_volterra,
    structural_constants,
    theta,
    trace_extract,
    transformation_kernels,
    transmutation_kernel,
    upsilon,
)


def _zero_potential(n_cells: int, r: int = 1) -> Potential:
    z = np.zeros((n_cells + 1, r, r), dtype=np.complex128)
    return Potential(r, GridSpec(n_cells), z, z)


def _random_potential(seed: int, n_cells: int = 8, r: int = 1, scale: float = 0.4) -> Potential:
    rng = np.random.default_rng(seed)
    m = n_cells + 1
    draw = lambda: scale * (rng.standard_normal((m, r, r)) + 1j * rng.standard_normal((m, r, r)))
    return Potential(r, GridSpec(n_cells), draw(), draw())


def test_transformation_kernels_vanish_for_zero_potential():
    p_plus, p_minus = transformation_kernels(_zero_potential(8))
    assert np.all(p_plus.values == 0)
    assert np.all(p_minus.values == 0)


def test_transformation_kernels_block_symmetry():
    q = _random_potential(1)
    sc = structural_constants(1)
    p_plus, p_minus = transformation_kernels(q)
    assert np.max(np.abs(p_plus.values @ sc.J - sc.J @ p_plus.values)) < 1e-12
    assert np.max(np.abs(p_minus.values @ sc.J + sc.J @ p_minus.values)) < 1e-12


def test_transformation_kernels_against_dense_solve():
    """Stack the coupled equations into one linear system, loops and all."""
    q = _random_potential(2)
    n_cells = q.grid.N
    m = n_cells + 1
    n = 2 * q.r
    step = q.grid.step
    sc = structural_constants(q.r)
    jq = sc.J @ q.full()

    pairs = [(i, j) for i in range(m) for j in range(i + 1)]
    where = {pair: t for t, pair in enumerate(pairs)}
    t_count = len(pairs)

    def slot(kind, pair, row):
        return (kind * t_count + where[pair]) * n + row

    dim = 2 * t_count * n
    a = np.zeros((dim, dim), dtype=np.complex128)
    for kind in (0, 1):  # 0: plus equation, 1: minus equation
        for (i, j) in pairs:
            for row in range(n):
                e = slot(kind, (i, j), row)
                a[e, e] += 1.0
                if i == j:
                    continue
                for s in range(j, i + 1):
                    w = step * (0.5 if s in (i, j) else 1.0)
                    for rp in range(n):
                        a[e, slot(1 - kind, (s, s - j), rp)] -= w * jq[s, row, rp]

    plus_ref, minus_ref = transformation_kernels(q)
    for col in range(n):
        b = np.zeros(dim, dtype=np.complex128)
        for (i, j) in pairs:
            for row in range(n):
                b[slot(1, (i, j), row)] = jq[j, row, col]
        x = np.linalg.solve(a, b)
        for (i, j) in pairs:
            for row in range(n):
                assert abs(x[slot(0, (i, j), row)] - plus_ref.values[i, j, row, col]) < 1e-10
                assert abs(x[slot(1, (i, j), row)] - minus_ref.values[i, j, row, col]) < 1e-10


def test_transmutation_kernel_zero_potential():
    k = transmutation_kernel(_zero_potential(8))
    assert np.all(k.values == 0)


def test_transmutation_matches_folded_factor():
    # the two sides of the inverse problem meet here: K built from Q alone,
    # L built from h alone, for Q = theta(h)
    h = const_accelerant(0.5, 100)
    k = transmutation_kernel(theta(h))
    lf = folded_lower_factor(h)
    assert np.max(np.abs(k.values - lf.values)) < 5e-3


def _lower_random(seed: int, n_cells: int, n: int = 1, scale: float = 0.5) -> Kernel2D:
    rng = np.random.default_rng(seed)
    m = n_cells + 1
    vals = scale * (rng.standard_normal((m, m, n, n)) + 1j * rng.standard_normal((m, m, n, n)))
    i, j = np.indices((m, m))
    vals[j > i] = 0.0
    return Kernel2D(n, GridSpec(n_cells), "lower", vals)


def test_resolvent_volterra_satisfies_row_equations():
    # L(x,t) + K(x,t) + int_t^x K(x,s) L(s,t) ds = 0 with the same
    # per-interval trapezoid the solver uses, restated with plain loops
    k = _lower_random(3, 16)
    l = resolvent_volterra(k)
    step = k.grid.step
    kv, lv = k.values[:, :, 0, 0], l.values[:, :, 0, 0]
    worst = 0.0
    for i in range(17):
        for j in range(i + 1):
            acc = 0.0 + 0.0j
            if i > j:
                for s in range(j, i + 1):
                    w = step * (0.5 if s in (i, j) else 1.0)
                    acc += w * kv[i, s] * lv[s, j]
            worst = max(worst, abs(kv[i, j] + lv[i, j] + acc))
    assert worst < 1e-13


def test_resolvent_constant_closed_form():
    kappa = 0.5
    n_cells = 200
    g = GridSpec(n_cells)
    m = n_cells + 1
    i, j = np.indices((m, m))
    vals = np.where(j <= i, kappa + 0.0j, 0.0)[:, :, None, None]
    l = resolvent_volterra(Kernel2D(1, g, "lower", vals))
    x = g.nodes
    exact = np.where(j <= i, -kappa * np.exp(-kappa * (x[:, None] - x[None, :])), 0.0)
    err = np.max(np.abs(l.values[:, :, 0, 0] - exact))
    assert err <= 2e-3


def test_resolvent_closed_form_second_order():
    def run(n_cells):
        kappa = 0.5
        g = GridSpec(n_cells)
        m = n_cells + 1
        i, j = np.indices((m, m))
        vals = np.where(j <= i, kappa + 0.0j, 0.0)[:, :, None, None]
        l = resolvent_volterra(Kernel2D(1, g, "lower", vals))
        x = g.nodes
        exact = np.where(j <= i, -kappa * np.exp(-kappa * (x[:, None] - x[None, :])), 0.0)
        return float(np.max(np.abs(l.values[:, :, 0, 0] - exact)))

    assert ratio_ok(run(50), run(100))


def test_resolvent_rejects_singular_diagonal():
    n_cells = 8
    g = GridSpec(n_cells)
    m = n_cells + 1
    vals = np.zeros((m, m, 1, 1), dtype=np.complex128)
    # 1 + (step/2) K(x_i, x_i) = 0 wrecks the forward substitution
    vals[np.arange(m), np.arange(m)] = -2.0 * n_cells
    with pytest.raises(SingularSystemError):
        resolvent_volterra(Kernel2D(1, g, "lower", vals))


def test_product_kernel_zero_potential():
    f = resolvent_product_kernel(_zero_potential(8))
    assert np.all(f.values == 0)


def test_characteristic_extract_inverts_folding():
    for seed in (0, 1, 2):
        h = random_accelerant(seed, r=2, n_cells=32)
        back = characteristic_extract(folded_kernel(h))
        assert np.max(np.abs(back.values - h.values)) < 1e-12, f"seed {seed}"


def test_trace_extract_reads_boundary_exactly():
    h = random_accelerant(4, r=2, n_cells=16)
    back = trace_extract(folded_kernel(h))
    assert np.array_equal(back.values, h.values)


def test_characteristic_extract_dilutes_single_entry_noise():
    h = random_accelerant(5, r=1, n_cells=16)
    f = folded_kernel(h)
    vals = f.values.copy()
    eps = 1e-3
    vals[5, 3, 0, 0] += eps  # interior entry, off the boundary column
    noisy = Kernel2D(f.n, f.grid, "full", vals)
    robust = characteristic_extract(noisy)
    literal = trace_extract(noisy)
    assert np.array_equal(literal.values, h.values)  # boundary column untouched
    err = np.max(np.abs(robust.values - h.values))
    assert 0 < err < 2 * eps / 10  # the line through (5,3) holds >= 10 samples


def test_upsilon_zero_potential():
    h, report = upsilon(_zero_potential(8))
    assert np.all(h.values == 0)
    assert report["extraction_spread"].residual == 0.0


def test_upsilon_inverts_theta_smooth():
    h = gauss_accelerant(0.3, 50)
    back, report = upsilon(theta(h))
    rel = field_norm(
        type(h)(h.r, h.grid, back.values - h.values), 1.0
    ) / field_norm(h, 1.0)
    assert rel < 5e-4
    assert report["extraction_spread"].residual < 1e-2
