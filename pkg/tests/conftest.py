"""Shared builders and the convergence-ratio rule used across the suite."""

import numpy as np
import pytest

from kreinmap import Accelerant, GridSpec, Potential


def ratio_ok(err_coarse: float, err_fine: float, factor: float = 3.0, floor: float = 1e-11) -> bool:
    """Doubling-the-grid improvement test with a round-off floor.

    Identities that the discretization satisfies exactly sit at machine
    noise on every grid; their ratios are meaningless and both errors
    below the floor counts as a pass.
    """
    if err_coarse < floor and err_fine < floor:
        return True
    return err_coarse / max(err_fine, 1e-300) >= factor


def const_accelerant(c: complex, n_cells: int, r: int = 1) -> Accelerant:
    grid = GridSpec(n_cells)
    vals = np.zeros((4 * n_cells + 1, r, r), dtype=np.complex128)
    vals[:] = c * np.eye(r)
    return Accelerant(r, grid, vals)


def gauss_accelerant(amp: float, n_cells: int) -> Accelerant:
    grid = GridSpec(n_cells)
    x = -1.0 + np.arange(4 * n_cells + 1) / (2 * n_cells)
    return Accelerant(1, grid, (amp * np.exp(-(x**2)))[:, None, None].astype(complex))


def linear_potential(n_cells: int) -> Potential:
    grid = GridSpec(n_cells)
    x = grid.nodes
    qp = (0.3 * (1.0 + x))[:, None, None].astype(complex)
    qm = np.full((n_cells + 1, 1, 1), 0.2, dtype=np.complex128)
    return Potential(1, grid, qp, qm)


def random_accelerant(seed: int, r: int = 2, n_cells: int = 32, scale: float = 0.3) -> Accelerant:
    """Complex Gaussian samples, non-hermitian on purpose."""
    rng = np.random.default_rng(seed)
    m = 4 * n_cells + 1
    vals = scale * (rng.standard_normal((m, r, r)) + 1j * rng.standard_normal((m, r, r)))
    return Accelerant(r, GridSpec(n_cells), vals)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
