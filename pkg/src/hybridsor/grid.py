"""Finite-difference discretization of the steady heat (Laplace) equation.

A square plate of side ``L`` is covered by ``(n+2) x (m+2)`` cell centres
spaced ``h = L / (n + 1)`` apart. The outer ring carries Dirichlet data; the
``n * m`` interior points are the unknowns. Interior point ``(i, j)`` sits at
``x = i*h``, ``y = j*h`` with ``1 <= i <= n`` (x direction) and
``1 <= j <= m`` (y direction).

Applying the 5-point stencil at every interior point gives ``A u + b_c = 0``.
This module stores the system as ``A u = b`` with ``b = -b_c``.
"""

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .errors import InvalidArgumentError

__all__ = [
    "Numbering",
    "BoundaryConditions",
    "Grid2D",
    "LinearSystem",
    "build_grid",
    "index_of",
    "point_of",
    "assemble_system",
    "discrete_laplacian",
    "analytic_reference",
    "plate_boundary_conditions",
    "constant_boundary_conditions",
    "heat_system",
]


class Numbering(str, enum.Enum):
    """Ordering of interior points into the unknown vector.

    ``ROW_MAJOR`` walks each grid row left to right. ``BOUSTROPHEDON``
    ("snake") reverses direction on every second row.
    """

    ROW_MAJOR = "row-major"
    BOUSTROPHEDON = "boustrophedon"


@dataclass(frozen=True)
class BoundaryConditions:
    """Dirichlet temperatures on the four edges of the plate.

    ``bottom`` and ``top`` are functions of ``x``; ``left`` and ``right`` are
    functions of ``y``. Each must accept any coordinate in ``[0, L]``.
    """

    bottom: Callable[[float], float]
    top: Callable[[float], float]
    left: Callable[[float], float]
    right: Callable[[float], float]


def constant_boundary_conditions(bottom=0.0, top=0.0, left=0.0, right=0.0):
    """Edges held at fixed temperatures."""
    return BoundaryConditions(
        bottom=lambda x: float(bottom),
        top=lambda x: float(top),
        left=lambda y: float(left),
        right=lambda y: float(right),
    )


def plate_boundary_conditions(side_length=1.0):
    """Cold left/bottom edges, linear 0-100 degC ramps on right/top edges."""
    L = float(side_length)
    return BoundaryConditions(
        bottom=lambda x: 0.0,
        left=lambda y: 0.0,
        right=lambda y: 100.0 * y / L,
        top=lambda x: 100.0 * x / L,
    )


@dataclass(frozen=True)
class Grid2D:
    """Uniform cell-centred grid over the plate.

    Attributes
    ----------
    n_interior : int
        Interior points per grid row (x direction).
    m_interior : int
        Interior points per grid column (y direction).
    side_length : float
        Plate side ``L``; the grid spacing is ``L / (n_interior + 1)``.
    bc : BoundaryConditions
    numbering : Numbering
    """

    n_interior: int
    m_interior: int
    side_length: float
    bc: BoundaryConditions
    numbering: Numbering = Numbering.ROW_MAJOR

    @property
    def h(self):
        return self.side_length / (self.n_interior + 1)

    @property
    def size(self):
        """Number of interior points (unknowns)."""
        return self.n_interior * self.m_interior

    @cached_property
    def points(self):
        """``(size, 2)`` integer array; row ``k`` holds ``point_of(k)``."""
        out = np.empty((self.size, 2), dtype=int)
        for j in range(1, self.m_interior + 1):
            for i in range(1, self.n_interior + 1):
                out[index_of(self, i, j)] = (i, j)
        return out

    def coordinates(self):
        """Physical ``(x, y)`` of every unknown, in solver order."""
        pts = self.points
        return pts[:, 0] * self.h, pts[:, 1] * self.h

    def to_array(self, solution):
        """Scatter a solution vector into an ``(n+2, m+2)`` array indexed
        ``[i, j]``, boundary ring included. Corners are NaN (never used by
        the stencil)."""
        solution = np.asarray(solution, dtype=float)
        if solution.shape != (self.size,):
            raise InvalidArgumentError(
                f"solution has shape {solution.shape}, expected ({self.size},)")
        n, m, h = self.n_interior, self.m_interior, self.h
        u = np.full((n + 2, m + 2), np.nan)
        pts = self.points
        u[pts[:, 0], pts[:, 1]] = solution
        for i in range(1, n + 1):
            u[i, 0] = self.bc.bottom(i * h)
            u[i, m + 1] = self.bc.top(i * h)
        for j in range(1, m + 1):
            u[0, j] = self.bc.left(j * h)
            u[n + 1, j] = self.bc.right(j * h)
        return u


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Square system ``A x = b`` with dense storage.

    ``reference_solution`` is optional and only used by the
    reference-error stopping rule.
    """

    A: np.ndarray
    b: np.ndarray
    reference_solution: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidArgumentError(f"A must be square and non-empty, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise InvalidArgumentError(f"b has length {b.size}, expected {A.shape[0]}")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.reference_solution is not None:
            ref = np.array(self.reference_solution, dtype=float).reshape(-1)
            if ref.shape != b.shape:
                raise InvalidArgumentError("reference_solution length does not match b")
            ref.setflags(write=False)
            object.__setattr__(self, "reference_solution", ref)

    @property
    def dimension(self):
        return self.A.shape[0]

    @cached_property
    def csr(self):
        """Sparse copy of ``A`` for matvecs inside iteration loops."""
        return sparse.csr_matrix(self.A)

    def residual(self, x):
        return self.b - self.csr @ np.asarray(x, dtype=float)

    def with_reference(self, reference_solution):
        return LinearSystem(self.A, self.b, reference_solution)


def build_grid(n_interior, m_interior, side_length, bc, numbering=Numbering.ROW_MAJOR):
    """Construct a :class:`Grid2D` after checking its dimensions.

    >>> g = build_grid(9, 9, 1.0, plate_boundary_conditions())
    >>> g.size, round(g.h, 12)
    (81, 0.1)
    """
    if int(n_interior) != n_interior or int(m_interior) != m_interior:
        raise InvalidArgumentError("interior point counts must be integers")
    if n_interior < 1 or m_interior < 1:
        raise InvalidArgumentError(
            f"interior point counts must be >= 1, got ({n_interior}, {m_interior})")
    if not side_length > 0 or not np.isfinite(side_length):
        raise InvalidArgumentError(f"side_length must be positive, got {side_length}")
    return Grid2D(int(n_interior), int(m_interior), float(side_length), bc,
                  Numbering(numbering))


def index_of(grid, i, j):
    """0-based unknown index of interior point ``(i, j)``."""
    n, m = grid.n_interior, grid.m_interior
    if not (1 <= i <= n and 1 <= j <= m):
        raise InvalidArgumentError(f"({i}, {j}) is not an interior point of a {n}x{m} grid")
    row = j - 1
    if grid.numbering is Numbering.BOUSTROPHEDON and row % 2 == 1:
        return row * n + (n - i)
    return row * n + (i - 1)


def point_of(grid, index):
    """Inverse of :func:`index_of`."""
    n = grid.n_interior
    if not (0 <= index < grid.size):
        raise InvalidArgumentError(f"index {index} outside [0, {grid.size})")
    row, col = divmod(int(index), n)
    if grid.numbering is Numbering.BOUSTROPHEDON and row % 2 == 1:
        col = n - 1 - col
    return col + 1, row + 1


def assemble_system(grid, exact=None):
    """Assemble the 5-point Laplace system of ``grid``.

    Row ``k`` gets ``-4`` on the diagonal and ``+1`` for every interior
    neighbour; each boundary neighbour moves its temperature to the
    right-hand side. The ``1/h**2`` factor cancels because the equation is
    homogeneous.

    Parameters
    ----------
    grid : Grid2D
    exact : callable, optional
        ``exact(x, y)``; when given, its values at the interior points are
        attached as ``reference_solution``.
    """
    n, m, h = grid.n_interior, grid.m_interior, grid.h
    N = grid.size
    A = np.zeros((N, N))
    bc_sum = np.zeros(N)
    for j in range(1, m + 1):
        for i in range(1, n + 1):
            k = index_of(grid, i, j)
            A[k, k] = -4.0
            for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ii, jj = i + di, j + dj
                if 1 <= ii <= n and 1 <= jj <= m:
                    A[k, index_of(grid, ii, jj)] = 1.0
                elif ii == 0:
                    bc_sum[k] += grid.bc.left(jj * h)
                elif ii == n + 1:
                    bc_sum[k] += grid.bc.right(jj * h)
                elif jj == 0:
                    bc_sum[k] += grid.bc.bottom(ii * h)
                else:
                    bc_sum[k] += grid.bc.top(ii * h)
    reference = None
    if exact is not None:
        x, y = grid.coordinates()
        reference = np.array([exact(xx, yy) for xx, yy in zip(x, y)], dtype=float)
    return LinearSystem(A, -bc_sum, reference)


def discrete_laplacian(values, i, j, h):
    """5-point Laplacian of a grid function at ``(i, j)``.

    ``values`` is indexed ``values[i, j]`` (see :meth:`Grid2D.to_array`).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise InvalidArgumentError("values must be a 2-D grid function")
    nx, ny = values.shape
    if not (1 <= i <= nx - 2 and 1 <= j <= ny - 2):
        raise InvalidArgumentError(f"stencil at ({i}, {j}) leaves the {nx}x{ny} grid function")
    stencil = np.array([values[i + 1, j], values[i - 1, j], values[i, j + 1],
                        values[i, j - 1], values[i, j]])
    if not np.all(np.isfinite(stencil)):
        raise InvalidArgumentError(f"missing stencil value around ({i}, {j})")
    return (stencil[0] + stencil[1] + stencil[2] + stencil[3] - 4.0 * stencil[4]) / h**2


def analytic_reference(x, y, side_length=1.0):
    """Harmonic function ``100 x y / L**2`` matching the plate's edges."""
    return 100.0 * x * y / side_length**2


def heat_system(n_interior=9, side_length=1.0, numbering=Numbering.ROW_MAJOR):
    """The square-plate benchmark: grid plus assembled system with the
    analytic solution attached as reference."""
    grid = build_grid(n_interior, n_interior, side_length,
                      plate_boundary_conditions(side_length), numbering)
    system = assemble_system(
        grid, exact=lambda x, y: analytic_reference(x, y, side_length))
    return grid, system
