"""Sampled field types for the accelerant / Dirac-potential maps.

Everything downstream works on uniform grids. Kernels and potentials live on
the N-cell grid of [0,1]; accelerants are matrix functions on [-1,1] sampled
with step 1/(2N), i.e. 4N+1 samples. That step is chosen so that every
argument combination the kernel constructions use, x - t (step 1/N) and
(x +/- t)/2 (step 1/(2N)), lands exactly on a stored sample. No kernel read
ever interpolates.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache

import numpy as np

from .errors import FieldFormatError

__all__ = [
    "GridSpec",
    "Accelerant",
    "Potential",
    "Kernel2D",
    "StructuralConstants",
    "structural_constants",
    "DiagnosticReport",
    "ReportEntry",
    "reflect",
    "block_embed",
    "potential_adjoint",
    "assemble_potential",
    "decimate_accelerant",
    "decimate_potential",
]

SUPPORTS = ("lower", "upper", "full")


def _as_complex(values, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.complex128)
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise FieldFormatError(f"{name}: non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid x_i = i/N on [0,1] with trapezoid quadrature weights."""

    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 8 or self.N % 2:
            raise FieldFormatError(f"grid size must be an even integer >= 8, got {self.N}")

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.N + 1) / self.N
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        # composite trapezoid on [0,1]: half weight at both endpoints
        w = np.full(self.N + 1, 1.0 / self.N)
        w[0] = w[-1] = 0.5 / self.N
        w.setflags(write=False)
        return w

    @property
    def step(self) -> float:
        return 1.0 / self.N

    def refined(self) -> "GridSpec":
        return GridSpec(2 * self.N)


@dataclass(frozen=True)
class Accelerant:
    """Matrix function h on [-1,1], sampled at -1 + k/(2N) for k = 0..4N.

    values[k] is the r x r matrix h(-1 + k/(2N)). The index of h(u) for a
    representable u is 2N + round(2N*u); all callers use exact integer
    arithmetic to form that index.
    """

    r: int
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = _as_complex(self.values, "accelerant values")
        expected = (4 * self.grid.N + 1, self.r, self.r)
        if vals.shape != expected:
            raise FieldFormatError(
                f"accelerant values shape {vals.shape}, expected {expected}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def center(self) -> int:
        """Index of h(0)."""
        return 2 * self.grid.N

    def points(self) -> np.ndarray:
        return -1.0 + np.arange(4 * self.grid.N + 1) / (2 * self.grid.N)


@dataclass(frozen=True)
class Potential:
    """Off-diagonal Dirac potential on [0,1], stored as the two nonzero blocks.

    The full matrix at a node is [[0, q_plus], [q_minus, 0]], which
    anticommutes with J by construction.
    """

    r: int
    grid: GridSpec
    q_plus: np.ndarray
    q_minus: np.ndarray

    def __post_init__(self):
        expected = (self.grid.N + 1, self.r, self.r)
        for name in ("q_plus", "q_minus"):
            vals = _as_complex(getattr(self, name), name)
            if vals.shape != expected:
                raise FieldFormatError(f"{name} shape {vals.shape}, expected {expected}")
            object.__setattr__(self, name, vals)

    def full(self) -> np.ndarray:
        """Node values as (N+1, 2r, 2r) matrices."""
        n = self.grid.N + 1
        q = np.zeros((n, 2 * self.r, 2 * self.r), dtype=np.complex128)
        q[:, : self.r, self.r:] = self.q_plus
        q[:, self.r:, : self.r] = self.q_minus
        return q


@dataclass(frozen=True)
class Kernel2D:
    """Matrix kernel sampled on the node grid of [0,1]^2.

    values[i, j] is the n x n block K(x_i, x_j). Entries outside the declared
    support are zero; the diagonal belongs to both triangles.
    """

    n: int
    grid: GridSpec
    support: str
    values: np.ndarray

    def __post_init__(self):
        if self.support not in SUPPORTS:
            raise FieldFormatError(f"unknown support {self.support!r}")
        vals = _as_complex(self.values, "kernel values")
        m = self.grid.N + 1
        if vals.shape != (m, m, self.n, self.n):
            raise FieldFormatError(
                f"kernel values shape {vals.shape}, expected {(m, m, self.n, self.n)}"
            )
        i, j = np.indices((m, m))
        if self.support == "lower" and np.any(vals[j > i] != 0):
            raise FieldFormatError("nonzero entries above the diagonal in a lower kernel")
        if self.support == "upper" and np.any(vals[j < i] != 0):
            raise FieldFormatError("nonzero entries below the diagonal in an upper kernel")
        object.__setattr__(self, "values", vals)


def zero_kernel(n: int, grid: GridSpec, support: str = "full") -> Kernel2D:
    m = grid.N + 1
    return Kernel2D(n, grid, support, np.zeros((m, m, n, n), dtype=np.complex128))


@dataclass(frozen=True)
class StructuralConstants:
    """The fixed matrices of the 2r x 2r block calculus.

    J = diag(-i I, i I), B swaps the two block rows, a_col = (I; I) is the
    initial value of the distinguished solution, a_row = (I, -I) enters the
    boundary contractions ((I + B) a_row^H = 0).
    """

    r: int
    J: np.ndarray
    B: np.ndarray
    a_col: np.ndarray
    a_row: np.ndarray


@lru_cache(maxsize=None)
def structural_constants(r: int) -> StructuralConstants:
    if r < 1:
        raise FieldFormatError(f"block dimension must be >= 1, got {r}")
    eye = np.eye(r, dtype=np.complex128)
    zero = np.zeros((r, r), dtype=np.complex128)
    J = np.block([[-1j * eye, zero], [zero, 1j * eye]])
    B = np.block([[zero, eye], [eye, zero]])
    a_col = np.vstack([eye, eye])
    a_row = np.hstack([eye, -eye])
    for arr in (J, B, a_col, a_row):
        arr.setflags(write=False)
    return StructuralConstants(r, J, B, a_col, a_row)


@dataclass
class ReportEntry:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)


@dataclass
class DiagnosticReport:
    """Accumulates named residuals with tolerances plus free-form metadata."""

    entries: list = dc_field(default_factory=list)
    metadata: dict = dc_field(default_factory=dict)

    def add(self, name: str, residual: float, tol: float) -> ReportEntry:
        entry = ReportEntry(name, float(residual), float(tol))
        self.entries.append(entry)
        return entry

    def __getitem__(self, name: str) -> ReportEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def failures(self) -> list:
        return [entry.name for entry in self.entries if not entry.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "entries": [
                {
                    "name": e.name,
                    "residual": e.residual,
                    "tol": e.tol,
                    "passed": e.passed,
                }
                for e in self.entries
            ],
            "metadata": self.metadata,
        }


def reflect(h: Accelerant) -> Accelerant:
    """The reflected accelerant x -> h(-x): an exact index reversal."""
    return Accelerant(h.r, h.grid, h.values[::-1].copy())


def block_embed(h: Accelerant) -> Accelerant:
    """diag(h, h(-.)) as a 2r x 2r accelerant on the same sample grid."""
    m = h.values.shape[0]
    out = np.zeros((m, 2 * h.r, 2 * h.r), dtype=np.complex128)
    out[:, : h.r, : h.r] = h.values
    out[:, h.r:, h.r:] = h.values[::-1]
    return Accelerant(2 * h.r, h.grid, out)


def potential_adjoint(q: Potential) -> Potential:
    """Pointwise conjugate transpose: swaps and conjugates the two blocks."""
    conj_t = lambda a: np.conj(np.transpose(a, (0, 2, 1)))
    return Potential(q.r, q.grid, conj_t(q.q_minus), conj_t(q.q_plus))


def assemble_potential(top_right, bottom_left) -> Potential:
    """Build a Potential from node sequences of the two off-diagonal blocks."""
    qp = np.asarray(top_right, dtype=np.complex128)
    qm = np.asarray(bottom_left, dtype=np.complex128)
    if qp.ndim == 1:
        qp = qp[:, None, None]
    if qm.ndim == 1:
        qm = qm[:, None, None]
    if qp.shape != qm.shape:
        raise FieldFormatError(
            f"block sequences disagree: {qp.shape} vs {qm.shape}"
        )
    if qp.ndim != 3 or qp.shape[1] != qp.shape[2]:
        raise FieldFormatError(f"expected (N+1, r, r) blocks, got {qp.shape}")
    grid = GridSpec(qp.shape[0] - 1)
    return Potential(qp.shape[1], grid, qp, qm)


def decimate_accelerant(h: Accelerant, n_target: int) -> Accelerant:
    """Exact restriction to a coarser nested grid (stride read, no smoothing)."""
    if h.grid.N % n_target:
        raise FieldFormatError(
            f"grid {h.grid.N} is not nested over target {n_target}"
        )
    stride = h.grid.N // n_target
    return Accelerant(h.r, GridSpec(n_target), h.values[::stride].copy())


def decimate_potential(q: Potential, n_target: int) -> Potential:
    if q.grid.N % n_target:
        raise FieldFormatError(
            f"grid {q.grid.N} is not nested over target {n_target}"
        )
    stride = q.grid.N // n_target
    return Potential(
        q.r, GridSpec(n_target), q.q_plus[::stride].copy(), q.q_minus[::stride].copy()
    )
