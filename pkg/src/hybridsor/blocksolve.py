"""Block successive over-relaxation with a pluggable per-block backend.

Partition ``A`` into ``N_b x N_b`` equal blocks ``A_ij`` and split it as
``A = D + L + U`` (block diagonal, strictly lower, strictly upper). Block SOR
writes ``A = E - F`` with ``E = D/omega + L`` and ``F = (1/omega - 1) D - U``
and iterates ``E x^(k+1) = F x^(k) + b``. Multiplying block row ``i`` by
``omega`` and moving the already-updated lower blocks to the right gives the
recurrence each sweep actually performs::

    A_ii z_i = omega * (b_i - sum_{j<i} A_ij x_j^(k+1) - sum_{j>i} A_ij x_j^(k))
               + (1 - omega) * A_ii x_i^(k)
    x_i^(k+1) = z_i

so every block step is one ``m x m`` solve with the original diagonal block,
which is what a backend (direct LU, annealer, remote sampler) receives. With
``omega = 1`` this is block Gauss-Seidel. The matching iteration matrix is
``H_SOR = (D + omega L)^-1 [(1 - omega) D - omega U]``.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigs

from .errors import (
    CapacityError,
    DivergenceError,
    HybridSorError,
    InvalidArgumentError,
    NumericalFailureError,
    SingularBlockError,
    SweepError,
)

__all__ = [
    "BlockPartition",
    "BlockSplitting",
    "StoppingMode",
    "SorConfig",
    "SolveReport",
    "ConvergenceCheck",
    "partition",
    "split_dlu",
    "jacobi_spectral_radius",
    "optimal_omega",
    "sor_iteration_matrix",
    "check_convergence",
    "block_sor_sweep",
    "solve",
    "relative_error",
]

SINGULAR_PIVOT_RTOL = 1e-14
DIVERGENCE_THRESHOLD = 1e9
CONVERGENCE_GUARD = 1e-12
MAX_EXPLICIT_DIMENSION = 2000


@dataclass(frozen=True)
class BlockPartition:
    """Equal contiguous blocks covering ``[0, N)``."""

    block_count: int
    block_size: int

    @property
    def dimension(self):
        return self.block_count * self.block_size

    @property
    def boundaries(self):
        m = self.block_size
        return [(i * m, (i + 1) * m) for i in range(self.block_count)]

    def slice(self, i):
        m = self.block_size
        return slice(i * m, (i + 1) * m)


def partition(system, block_count):
    """Split ``system`` into ``block_count`` equal blocks.

    Raises
    ------
    InvalidArgumentError
        If ``block_count`` does not divide the system dimension.
    """
    N = system.dimension
    if int(block_count) != block_count or block_count < 1:
        raise InvalidArgumentError(f"block_count must be a positive integer, got {block_count}")
    block_count = int(block_count)
    if N % block_count:
        raise InvalidArgumentError(
            f"block_count {block_count} does not divide N = {N}; ragged blocks are unsupported")
    return BlockPartition(block_count, N // block_count)


class BlockSplitting:
    """``A = D + L + U`` at block level, with factored diagonal blocks.

    Construction LU-factors every ``A_ii`` and raises
    :class:`SingularBlockError` if one is singular. Zero off-diagonal blocks
    are skipped during sweeps.
    """

    def __init__(self, system, partition):
        if partition.dimension != system.dimension:
            raise InvalidArgumentError(
                f"partition covers {partition.dimension} unknowns, system has {system.dimension}")
        self.system = system
        self.partition = partition
        A = system.A
        nb = partition.block_count
        self._lu = []
        for i in range(nb):
            block = A[partition.slice(i), partition.slice(i)]
            self._lu.append(_factor(block, block_index=i))
        # nonzero coupling blocks per block row: [(j, A_ij), ...]
        self._coupling = []
        for i in range(nb):
            row = []
            for j in range(nb):
                if j != i:
                    blk = A[partition.slice(i), partition.slice(j)]
                    if np.any(blk):
                        row.append((j, blk))
            self._coupling.append(row)

    @property
    def block_count(self):
        return self.partition.block_count

    def block(self, i, j):
        s = self.partition
        return self.system.A[s.slice(i), s.slice(j)]

    def D_block(self, i, j):
        return self.block(i, j) if i == j else np.zeros((self.partition.block_size,) * 2)

    def L_block(self, i, j):
        return self.block(i, j) if i > j else np.zeros((self.partition.block_size,) * 2)

    def U_block(self, i, j):
        return self.block(i, j) if i < j else np.zeros((self.partition.block_size,) * 2)

    def D(self):
        return self._assemble(lambda i, j: i == j)

    def L(self):
        return self._assemble(lambda i, j: i > j)

    def U(self):
        return self._assemble(lambda i, j: i < j)

    def E(self, omega):
        return self.D() / omega + self.L()

    def F(self, omega):
        return (1.0 / omega - 1.0) * self.D() - self.U()

    def _assemble(self, keep):
        out = np.zeros_like(self.system.A)
        s = self.partition
        for i in range(s.block_count):
            for j in range(s.block_count):
                if keep(i, j):
                    out[s.slice(i), s.slice(j)] = self.block(i, j)
        return out

    def coupling(self, i):
        """Nonzero off-diagonal blocks of block row ``i`` as ``(j, A_ij)``."""
        return self._coupling[i]

    def solve_diagonal(self, i, rhs):
        return sla.lu_solve(self._lu[i], rhs)

    def apply_jacobi(self, v):
        """``H_J v = -D^-1 (L + U) v`` via block solves."""
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        s = self.partition
        for i in range(s.block_count):
            acc = np.zeros((s.block_size,) + v.shape[1:])
            for j, blk in self._coupling[i]:
                acc += blk @ v[s.slice(j)]
            out[s.slice(i)] = -self.solve_diagonal(i, acc)
        return out

    def forward_solve(self, rhs, omega):
        """Solve ``(D + omega L) y = rhs`` by block forward substitution.

        ``rhs`` may be a vector or an ``N x k`` matrix.
        """
        rhs = np.asarray(rhs, dtype=float)
        y = np.empty_like(rhs)
        s = self.partition
        for i in range(s.block_count):
            acc = rhs[s.slice(i)].copy()
            for j, blk in self._coupling[i]:
                if j < i:
                    acc -= omega * (blk @ y[s.slice(j)])
            y[s.slice(i)] = self.solve_diagonal(i, acc)
        return y

    def apply_sor(self, v, omega):
        """``H_SOR(omega) v`` without forming the matrix."""
        v = np.asarray(v, dtype=float)
        s = self.partition
        t = np.empty_like(v)
        for i in range(s.block_count):
            acc = (1.0 - omega) * (self.block(i, i) @ v[s.slice(i)])
            for j, blk in self._coupling[i]:
                if j > i:
                    acc -= omega * (blk @ v[s.slice(j)])
            t[s.slice(i)] = acc
        return self.forward_solve(t, omega)


def _factor(block, block_index=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        try:
            lu, piv = sla.lu_factor(block, check_finite=True)
        except ValueError as exc:
            raise SingularBlockError(f"block {block_index}: {exc}", block_index) from exc
    scale = max(np.abs(block).sum(axis=1).max(), np.finfo(float).tiny)
    if np.min(np.abs(np.diag(lu))) <= SINGULAR_PIVOT_RTOL * scale:
        where = "" if block_index is None else f" {block_index}"
        raise SingularBlockError(f"diagonal block{where} is singular", block_index)
    return lu, piv


def split_dlu(system, partition):
    """Block ``D/L/U`` splitting of ``system`` (see :class:`BlockSplitting`)."""
    return BlockSplitting(system, partition)


def jacobi_spectral_radius(splitting, tol=1e-10, max_power_iters=10000, seed=0):
    """Spectral radius of the block Jacobi matrix ``-D^-1 (L + U)``.

    Power iteration on ``H_J**2`` starting from the normalised all-ones
    vector. Squaring makes the usual ``+/- rho`` eigenvalue pair of
    consistently ordered matrices a single dominant eigenvalue. If the first
    start does not converge, one restart from a seeded random vector is
    tried; if that also fails (nearly tied dominant eigenvalues) the
    radius comes from an eigen-solve of the same block operator, dense up
    to N = 2000 and ARPACK above.

    Raises
    ------
    NumericalFailureError
        If the fallback eigen-solve fails too; the best power-iteration
        estimate is attached.
    """
    N = splitting.system.dimension
    starts = [lambda: np.ones(N), lambda: np.random.default_rng(seed).standard_normal(N)]
    budget = max(1, max_power_iters // len(starts))
    best = None
    for make_start in starts:
        v = make_start()
        v /= np.linalg.norm(v)
        est = None
        for _ in range(budget):
            w = splitting.apply_jacobi(splitting.apply_jacobi(v))
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            lam2 = float(v @ w)
            est = math.sqrt(abs(lam2))
            # stop on the eigen-residual, not on stagnation of the estimate,
            # so nearly tied eigenvalues cannot end the loop early
            if np.linalg.norm(w - lam2 * v) <= tol * max(abs(lam2), 1e-300):
                return est
            v = w / nw
        best = est if best is None else max(best, est)
    # nearly tied dominant eigenvalues: fall back to an eigen-solve of the same operator
    return _operator_spectral_radius(splitting.apply_jacobi, N, best)


def _operator_spectral_radius(matvec, N, estimate=None):
    try:
        if N <= MAX_EXPLICIT_DIMENSION:
            H = np.column_stack([matvec(e) for e in np.eye(N)])
            return float(np.max(np.abs(sla.eigvals(H))))
        op = LinearOperator((N, N), matvec=matvec, dtype=float)
        vals = eigs(op, k=1, which="LM", return_eigenvectors=False, maxiter=20 * N)
        return float(np.max(np.abs(vals)))
    except (ArpackNoConvergence, ArpackError, sla.LinAlgError) as exc:
        raise NumericalFailureError(
            "spectral radius did not converge", estimate=estimate) from exc


def optimal_omega(rho_jacobi):
    """Over-relaxation factor ``2 / (1 + sqrt(1 - rho**2))``.

    >>> optimal_omega(0.0)
    1.0
    """
    if not (0.0 <= rho_jacobi < 1.0):
        raise InvalidArgumentError(
            f"optimal omega needs 0 <= rho_jacobi < 1, got {rho_jacobi}")
    return 2.0 / (1.0 + math.sqrt(1.0 - rho_jacobi * rho_jacobi))


def _check_omega(omega):
    if not (0.0 < omega < 2.0):
        raise InvalidArgumentError(f"omega must lie in (0, 2), got {omega}")


def sor_iteration_matrix(splitting, omega):
    """Explicit ``H_SOR(omega) = (D + omega L)^-1 [(1 - omega) D - omega U]``.

    Diagnostic only; limited to N <= 2000.
    """
    _check_omega(omega)
    N = splitting.system.dimension
    if N > MAX_EXPLICIT_DIMENSION:
        raise CapacityError(
            f"explicit iteration matrix limited to N <= {MAX_EXPLICIT_DIMENSION}, got {N}")
    rhs = (1.0 - omega) * splitting.D() - omega * splitting.U()
    return splitting.forward_solve(rhs, omega)


@dataclass(frozen=True)
class ConvergenceCheck:
    spectral_radius: float
    converges: bool


def sor_spectral_radius(splitting, omega):
    """``rho(H_SOR(omega))``: dense eigenvalues up to N = 2000, ARPACK above."""
    _check_omega(omega)
    N = splitting.system.dimension
    try:
        if N <= MAX_EXPLICIT_DIMENSION:
            vals = sla.eigvals(sor_iteration_matrix(splitting, omega))
            return float(np.max(np.abs(vals)))
        op = LinearOperator((N, N), matvec=lambda v: splitting.apply_sor(v, omega), dtype=float)
        vals = eigs(op, k=1, which="LM", return_eigenvectors=False, maxiter=20 * N)
        return float(np.max(np.abs(vals)))
    except ArpackNoConvergence as exc:
        vals = np.asarray(exc.eigenvalues)
        est = float(np.max(np.abs(vals))) if vals.size else None
        raise NumericalFailureError("eigenvalue iteration did not converge", estimate=est) from exc
    except (sla.LinAlgError, ArpackError) as exc:
        raise NumericalFailureError(f"eigenvalue computation failed: {exc}") from exc


def check_convergence(splitting, omega):
    """Whether block SOR at ``omega`` converges from every start.

    ``converges`` is ``rho(H_SOR) < 1 - 1e-12``.
    """
    rho = sor_spectral_radius(splitting, omega)
    return ConvergenceCheck(rho, rho < 1.0 - CONVERGENCE_GUARD)


def block_sor_sweep(splitting, omega, x_current, b, backend):
    """One block SOR sweep; returns ``x^(k+1)`` (input left untouched).

    Blocks are visited in ascending order and each block update is handed to
    ``backend.solve_block(A_ii, rhs)``.
    """
    _check_omega(omega)
    x = np.array(x_current, dtype=float)
    b = np.asarray(b, dtype=float)
    N = splitting.system.dimension
    if x.shape != (N,) or b.shape != (N,):
        raise InvalidArgumentError(f"x and b must have length {N}")
    s = splitting.partition
    for i in range(s.block_count):
        si = s.slice(i)
        Aii = splitting.block(i, i)
        coupling = b[si].copy()
        for j, blk in splitting.coupling(i):
            coupling -= blk @ x[s.slice(j)]
        rhs = omega * coupling + (1.0 - omega) * (Aii @ x[si])
        try:
            z = np.asarray(backend.solve_block(Aii, rhs), dtype=float)
        except HybridSorError as exc:
            raise SweepError(f"backend failed on block {i}: {exc}", i, diagnostic=exc) from exc
        if z.shape != rhs.shape:
            raise SweepError(f"backend returned shape {z.shape} for block {i}", i)
        x[si] = z
    return x


class StoppingMode(str, enum.Enum):
    REFERENCE_ERROR = "reference"
    RESIDUAL_NORM = "residual"


@dataclass(frozen=True)
class SorConfig:
    """Block SOR run settings.

    ``stop_early=False`` runs all ``max_iterations`` sweeps even after the
    tolerance is met (used for plateau studies).
    """

    omega: float = 1.0
    max_iterations: int = 100
    tolerance: float = 1e-8
    stopping_mode: StoppingMode = StoppingMode.RESIDUAL_NORM
    stop_early: bool = True

    def __post_init__(self):
        _check_omega(self.omega)
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InvalidArgumentError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise InvalidArgumentError(f"tolerance must be > 0, got {self.tolerance}")
        object.__setattr__(self, "stopping_mode", StoppingMode(self.stopping_mode))


@dataclass
class SolveReport:
    solution: np.ndarray
    error_trace: List[float] = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False
    backend_calls: int = 0
    omega_used: float = 1.0

    def first_crossing(self, tolerance):
        """1-based iteration at which the trace first reaches ``tolerance``."""
        for k, e in enumerate(self.error_trace, start=1):
            if e <= tolerance:
                return k
        return None


def relative_error(x_approx, x_ref):
    """Euclidean ``||x_approx - x_ref|| / ||x_ref||``."""
    x_approx = np.asarray(x_approx, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    if x_approx.shape != x_ref.shape:
        raise InvalidArgumentError("vectors must have equal length")
    denom = np.linalg.norm(x_ref)
    if denom == 0.0:
        raise InvalidArgumentError("reference vector has zero norm")
    return float(np.linalg.norm(x_approx - x_ref) / denom)


def solve(system, partition, config, backend, x0=None, splitting=None):
    """Run block SOR from ``x0`` (zero by default) until the stopping rule.

    In ``REFERENCE_ERROR`` mode the error is measured against
    ``system.reference_solution``; in ``RESIDUAL_NORM`` mode it is
    ``||A x - b|| / ||b||`` (plain ``||A x - b||`` when ``b = 0``).

    Raises
    ------
    InvalidArgumentError
        Reference mode without a reference solution.
    DivergenceError
        Error above 1e9 or not finite; the partial report is attached.
    SweepError
        A backend failed on some block.
    """
    mode = config.stopping_mode
    ref = system.reference_solution
    if mode is StoppingMode.REFERENCE_ERROR:
        if ref is None:
            raise InvalidArgumentError("reference-error stopping needs a reference_solution")
        if np.linalg.norm(ref) == 0.0:
            raise InvalidArgumentError("reference solution has zero norm")
    if splitting is None:
        splitting = split_dlu(system, partition)
    b = system.b
    bnorm = np.linalg.norm(b)

    def error(x):
        if mode is StoppingMode.REFERENCE_ERROR:
            return relative_error(x, ref)
        r = np.linalg.norm(system.residual(x))
        return float(r / bnorm) if bnorm > 0 else float(r)

    x = np.zeros(system.dimension) if x0 is None else np.array(x0, dtype=float)
    calls_before = _calls(backend)
    report = SolveReport(solution=x, omega_used=float(config.omega))
    for _ in range(config.max_iterations):
        x = block_sor_sweep(splitting, config.omega, x, b, backend)
        e = error(x)
        report.error_trace.append(e)
        report.iterations_used += 1
        report.solution = x
        report.backend_calls = _calls(backend) - calls_before
        if not math.isfinite(e) or e > DIVERGENCE_THRESHOLD:
            report.converged = False
            raise DivergenceError(
                f"block SOR diverged at iteration {report.iterations_used} (error {e:.3g})",
                report=report)
        if config.stop_early and e <= config.tolerance:
            break
    report.converged = bool(report.error_trace and report.error_trace[-1] <= config.tolerance)
    return report


def _calls(backend):
    return int(getattr(backend, "calls", 0))
