"""QUBO encoding of small linear systems.

Each unknown is written in fixed point with ``R`` bits::

    x_i = c_i * sum_{r=1..R} q_{i,r} 2**-r - d_i

and ``||A x - b||**2`` is expanded into a quadratic form over the binary
``q``. Bits are stored variable-major: flat index ``i*R + (r-1)`` holds
``q_{i,r}``, most significant bit first.

With ``P`` the ``m x mR`` matrix mapping bits to ``x + d`` and ``M = A P``::

    ||A x - b||**2 = q^T (M^T M) q - 2 q^T M^T (A d + b) + ||A d + b||**2

Because ``q**2 = q`` the diagonal of ``M^T M`` is folded into the linear
coefficients; the remaining couplings are kept in strictly upper-triangular
form with doubled (symmetric-pair) weight. ``energy(q) + offset`` then equals
the squared residual exactly, up to rounding.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapacityError, InvalidArgumentError

__all__ = [
    "FixedPointEncoding",
    "QuboProblem",
    "default_encoding",
    "decode",
    "encode_linear_system",
    "unfolded_coefficients",
    "energy",
    "brute_force_minimize",
    "BRUTE_FORCE_LIMIT",
]

BRUTE_FORCE_LIMIT = 24


@dataclass(frozen=True, eq=False)
class FixedPointEncoding:
    """Scale ``c`` and offset ``d`` per variable, ``R`` bits each."""

    bits_per_variable: int
    scale: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        R = self.bits_per_variable
        if int(R) != R or R < 1:
            raise InvalidArgumentError(f"bits_per_variable must be >= 1, got {R}")
        c = np.array(self.scale, dtype=float).reshape(-1)
        d = np.array(self.offset, dtype=float).reshape(-1)
        if c.shape != d.shape:
            raise InvalidArgumentError("scale and offset must have equal length")
        if not np.all(c > 0):
            raise InvalidArgumentError("every scale c[i] must be > 0")
        c.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "bits_per_variable", int(R))
        object.__setattr__(self, "scale", c)
        object.__setattr__(self, "offset", d)

    @classmethod
    def uniform(cls, m, R, scale, offset):
        return cls(R, np.full(m, float(scale)), np.full(m, float(offset)))

    @property
    def variable_count(self):
        return self.scale.size

    @property
    def bit_count(self):
        return self.scale.size * self.bits_per_variable

    @property
    def weights(self):
        """``2**-r`` for r = 1..R."""
        return 2.0 ** -np.arange(1, self.bits_per_variable + 1)

    @property
    def lower(self):
        return -self.offset

    @property
    def upper(self):
        return self.scale * (1.0 - 2.0 ** -self.bits_per_variable) - self.offset

    @property
    def resolution(self):
        """Spacing of representable values per variable."""
        return self.scale * 2.0 ** -self.bits_per_variable

    def bit_matrix(self):
        """``m x mR`` matrix ``P`` with ``x = P q - d``."""
        m, R = self.variable_count, self.bits_per_variable
        P = np.zeros((m, m * R))
        w = self.weights
        for i in range(m):
            P[i, i * R:(i + 1) * R] = self.scale[i] * w
        return P


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """Minimise ``linear @ q + q @ quadratic @ q`` over binary ``q``.

    ``quadratic`` is strictly upper triangular. ``offset`` is the constant
    dropped from the objective; ``encoding`` (optional) decodes solutions.
    """

    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0
    encoding: Optional[FixedPointEncoding] = None

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float).reshape(-1)
        n = lin.size
        quad = np.array(self.quadratic, dtype=float)
        if quad.shape != (n, n):
            raise InvalidArgumentError(f"quadratic must be {n}x{n}, got {quad.shape}")
        if np.any(np.tril(quad)):
            raise InvalidArgumentError("quadratic must be strictly upper triangular")
        if self.encoding is not None and self.encoding.bit_count != n:
            raise InvalidArgumentError("encoding bit count does not match variable count")
        lin.setflags(write=False)
        quad.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def variable_count(self):
        return self.linear.size

    def coupling(self):
        """Symmetric coupling ``J = Q + Q^T`` (zero diagonal)."""
        return self.quadratic + self.quadratic.T


def default_encoding(system, R):
    """Symmetric power-of-two window around zero.

    ``W`` is the smallest power of two ``>= 2 max_i |b_i / A_ii|`` (at least
    1); then ``c = 2W`` and ``d = W`` so values span ``[-W, W (1 - 2**(1-R)))``.
    """
    if int(R) != R or R < 1:
        raise InvalidArgumentError(f"R must be >= 1, got {R}")
    diag = np.diag(system.A)
    if np.any(diag == 0):
        raise InvalidArgumentError("default encoding needs a nonzero diagonal")
    need = 2.0 * float(np.max(np.abs(system.b / diag)))
    W = 1.0
    while W < need:
        W *= 2.0
    m = system.dimension
    return FixedPointEncoding.uniform(m, int(R), 2.0 * W, W)


def decode(bits, enc):
    """Real vector represented by a variable-major bitstring."""
    q = np.asarray(bits)
    if q.ndim != 1 or q.size != enc.bit_count:
        raise InvalidArgumentError(f"expected {enc.bit_count} bits, got {q.size}")
    frac = q.reshape(enc.variable_count, enc.bits_per_variable) @ enc.weights
    return enc.scale * frac - enc.offset


def encode_linear_system(system, enc):
    """Build the QUBO whose energy plus offset is ``||A decode(q) - b||**2``."""
    if enc.variable_count != system.dimension:
        raise InvalidArgumentError(
            f"encoding has {enc.variable_count} variables, system has {system.dimension}")
    A, b = system.A, system.b
    M = A @ enc.bit_matrix()
    shifted = A @ enc.offset + b
    Q = M.T @ M
    linear = -2.0 * (M.T @ shifted) + np.diag(Q)
    quadratic = 2.0 * np.triu(Q, k=1)
    offset = float(shifted @ shifted)
    return QuboProblem(linear, quadratic, offset, enc)


def unfolded_coefficients(system, enc):
    """Unfolded coefficients ``alpha[i, r]`` and ``beta[i, r, j, s]``.

    ``alpha = -2**(1-r) (sum_jk A_ki A_kj c_i d_j + sum_j A_ji c_i b_j)`` and
    ``beta = 2**-(r+s) sum_k A_ki A_kj c_i c_j``, summed over all ``(i,r,j,s)``
    pairs (both orders, diagonal included). Kept as an independent route to
    cross-check :func:`encode_linear_system`.
    """
    A, b = system.A, system.b
    c, d = enc.scale, enc.offset
    R = enc.bits_per_variable
    m = system.dimension
    AtA = A.T @ A
    r = np.arange(1, R + 1)
    alpha = np.empty((m, R))
    for i in range(m):
        total = sum(AtA[i, j] * c[i] * d[j] for j in range(m))
        total += sum(A[j, i] * c[i] * b[j] for j in range(m))
        alpha[i] = -(2.0 ** (1 - r)) * total
    beta = np.empty((m, R, m, R))
    for i in range(m):
        for j in range(m):
            beta[i, :, j, :] = np.outer(2.0 ** -r, 2.0 ** -r) * AtA[i, j] * c[i] * c[j]
    return alpha, beta


def energy(problem, bits):
    """``linear @ q + q @ quadratic @ q``."""
    q = np.asarray(bits, dtype=float)
    if q.ndim != 1 or q.size != problem.variable_count:
        raise InvalidArgumentError(
            f"expected {problem.variable_count} bits, got {q.size}")
    return float(problem.linear @ q + q @ problem.quadratic @ q)


def all_bitstrings(n, start=0, stop=None):
    """Rows ``start..stop-1`` of the lexicographic enumeration of ``{0,1}^n``."""
    stop = 2**n if stop is None else stop
    k = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((k[:, None] >> shifts) & 1).astype(np.uint8)


@dataclass(frozen=True)
class MinimizeResult:
    bits: np.ndarray
    energy: float


def brute_force_minimize(problem, chunk=1 << 16):
    """Exhaustive minimum; ties go to the lexicographically smallest bitstring.

    Raises
    ------
    CapacityError
        More than 24 binary variables.
    """
    n = problem.variable_count
    if n > BRUTE_FORCE_LIMIT:
        raise CapacityError(f"brute force limited to {BRUTE_FORCE_LIMIT} variables, got {n}")
    if n == 0:
        return MinimizeResult(np.zeros(0, dtype=np.uint8), 0.0)
    scale = float(np.abs(problem.linear).sum() + np.abs(problem.quadratic).sum())
    tie = 1e-12 * max(scale, 1.0)
    best_e, best_bits = np.inf, None
    total = 2**n
    for start in range(0, total, chunk):
        B = all_bitstrings(n, start, min(start + chunk, total)).astype(float)
        E = B @ problem.linear + np.einsum("ij,ij->i", B @ problem.quadratic, B)
        k = int(np.argmin(E))
        # first index within tie tolerance of this chunk's minimum
        k = int(np.flatnonzero(E <= E[k] + tie)[0])
        if E[k] < best_e - tie:
            best_e, best_bits = float(E[k]), B[k].astype(np.uint8)
    return MinimizeResult(best_bits, best_e)
