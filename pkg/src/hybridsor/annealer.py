"""Per-block backends for block SOR.

Three implementations of :class:`BlockBackend`:

* :class:`DirectBackend`: dense LU with partial pivoting (classical baseline);
* :class:`AnnealBackend`: encodes the block as a QUBO and minimises it with
  a local simulated-annealing sampler;
* :class:`RemoteBackend`: ships the QUBO to a sampling service over HTTP
  (see :mod:`hybridsor.remote`).

Sampler defaults (500 sweeps, 25 reads, beta 0.1 -> 10) are local choices;
no annealing parameters are taken from hardware runs.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Protocol, runtime_checkable

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .blocksolve import _factor
from .errors import InvalidArgumentError, NumericalFailureError, SingularBlockError
from .grid import LinearSystem
from .qubo import FixedPointEncoding, decode, default_encoding, encode_linear_system, energy

__all__ = [
    "BlockBackend",
    "AnnealConfig",
    "Sample",
    "SampleSet",
    "direct_solve",
    "simulated_anneal",
    "anneal_block_solve",
    "energy_scales",
    "DirectBackend",
    "AnnealBackend",
    "RemoteBackend",
]

UINT64_MASK = (1 << 64) - 1


@runtime_checkable
class BlockBackend(Protocol):
    """Anything that solves ``A_block z = rhs`` for block SOR.

    ``calls`` counts solves; :meth:`diagnostics` reports backend statistics.
    """

    calls: int

    def solve_block(self, A_block, rhs): ...

    def diagnostics(self): ...


def direct_solve(A_block, rhs):
    """Dense LU solve of one block.

    Raises
    ------
    SingularBlockError
        If a pivot falls below ``1e-14 * ||A||_inf``.
    """
    A_block = np.asarray(A_block, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if A_block.ndim != 2 or A_block.shape[0] != A_block.shape[1]:
        raise InvalidArgumentError(f"block must be square, got {A_block.shape}")
    if rhs.shape != (A_block.shape[0],):
        raise InvalidArgumentError("rhs length does not match block")
    return _lu_solve_checked(_factor(A_block), A_block, rhs)


def _lu_solve_checked(lu, A_block, rhs):
    z = sla.lu_solve(lu, rhs)
    res = np.abs(A_block @ z - rhs).max()
    bound = 1e-10 * (np.abs(A_block).sum(axis=1).max() * np.abs(z).max() + np.abs(rhs).max())
    if res > bound:
        raise NumericalFailureError(f"direct solve residual {res:.3g} exceeds {bound:.3g}")
    return z


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated-annealing settings.

    ``beta_initial`` and ``beta_final`` are dimensionless: they are divided by
    the problem's largest and smallest energy scales (see
    :func:`energy_scales`), so the same defaults work whatever the units of
    the encoded system. ``sweeps = 0`` returns the random initial states.
    """

    sweeps: int = 500
    reads: int = 25
    beta_initial: float = 0.1
    beta_final: float = 10.0
    seed: int = 0
    bits: int = 7
    encoding_override: Optional[FixedPointEncoding] = None

    def __post_init__(self):
        if int(self.sweeps) != self.sweeps or self.sweeps < 0:
            raise InvalidArgumentError(f"sweeps must be >= 0, got {self.sweeps}")
        if int(self.reads) != self.reads or self.reads < 1:
            raise InvalidArgumentError(f"reads must be >= 1, got {self.reads}")
        if not (0.0 < self.beta_initial < self.beta_final):
            raise InvalidArgumentError(
                f"need 0 < beta_initial < beta_final, got {self.beta_initial}, {self.beta_final}")
        if int(self.bits) != self.bits or self.bits < 1:
            raise InvalidArgumentError(f"bits must be >= 1, got {self.bits}")
        if int(self.seed) != self.seed or not (-(1 << 63) <= self.seed <= UINT64_MASK):
            raise InvalidArgumentError(f"seed must be a 64-bit integer, got {self.seed}")


@dataclass(frozen=True, eq=False)
class Sample:
    bits: np.ndarray
    energy: float
    count: int

    def bitstring(self):
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(eq=False)
class SampleSet:
    """Distinct samples sorted by ascending energy (ties by bitstring)."""

    samples: List[Sample] = field(default_factory=list)

    @classmethod
    def from_states(cls, problem, states):
        tally = {}
        for s in states:
            key = bytes(np.asarray(s, dtype=np.uint8))
            tally[key] = tally.get(key, 0) + 1
        samples = []
        for key, count in tally.items():
            bits = np.frombuffer(key, dtype=np.uint8).copy()
            samples.append(Sample(bits, energy(problem, bits), count))
        return cls.sorted(samples)

    @classmethod
    def sorted(cls, samples):
        return cls(sorted(samples, key=lambda s: (s.energy, bytes(s.bits))))

    @property
    def first(self):
        return self.samples[0]

    @property
    def total_count(self):
        return sum(s.count for s in self.samples)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def same_as(self, other):
        return len(self) == len(other) and all(
            np.array_equal(a.bits, b.bits) and a.energy == b.energy and a.count == b.count
            for a, b in zip(self, other))


def energy_scales(problem):
    """``(hot, cold)`` energy scales of a QUBO.

    ``hot`` bounds the largest single-flip energy change; ``cold`` is the
    smallest nonzero coefficient magnitude (ignoring values below ``1e-12``
    of the largest). Both fall back to 1 for an all-zero problem.
    """
    J = np.abs(problem.coupling())
    lin = np.abs(problem.linear)
    hot = float((lin + J.sum(axis=1)).max()) if lin.size else 0.0
    coefs = np.concatenate([lin, np.abs(problem.quadratic[np.triu_indices(lin.size, 1)])])
    big = coefs.max() if coefs.size else 0.0
    if big == 0.0:
        return 1.0, 1.0
    nonzero = coefs[coefs > 1e-12 * big]
    return max(hot, big), float(nonzero.min())


def beta_schedule(problem, config):
    hot, cold = energy_scales(problem)
    b0 = config.beta_initial / hot
    b1 = max(config.beta_final / cold, b0)
    return np.geomspace(b0, b1, config.sweeps) if config.sweeps else np.zeros(0)


def _read_streams(seed, read_index, n, sweeps):
    rng = np.random.default_rng([int(seed) & UINT64_MASK, read_index])
    state = rng.integers(0, 2, size=n, dtype=np.uint8)
    order = rng.permuted(np.broadcast_to(np.arange(n, dtype=np.int64), (sweeps, n)), axis=1)
    uniforms = rng.random((sweeps, n))
    return state, order, uniforms


def simulated_anneal(problem, config=AnnealConfig(), return_tracked=False):
    """Sample low-energy bitstrings of ``problem``.

    Every read starts from a random state and runs ``config.sweeps`` sweeps of
    single-bit Metropolis moves in a fresh random order per sweep, with beta
    rising geometrically. Read ``r`` draws from its own generator seeded by
    ``(config.seed, r)``, so results do not depend on execution order.

    With ``return_tracked=True`` also returns the incrementally tracked final
    energy of every read (for consistency checks).
    """
    n = problem.variable_count
    linear = np.ascontiguousarray(problem.linear)
    J = np.ascontiguousarray(problem.coupling())
    betas = beta_schedule(problem, config)
    states, tracked = [], []
    for r in range(config.reads):
        state, order, uniforms = _read_streams(config.seed, r, n, config.sweeps)
        e = _kernels.anneal_read(linear, J, state, betas, order, uniforms)
        states.append(state)
        tracked.append(e)
    result = SampleSet.from_states(problem, states)
    if return_tracked:
        return result, states, np.array(tracked)
    return result


@dataclass(frozen=True)
class BlockSolveInfo:
    solution: np.ndarray
    energy: float
    variable_count: int
    encoding: FixedPointEncoding
    samples_drawn: int


def anneal_block_solve(A_block, rhs, config=AnnealConfig(), sampler=None):
    """Solve ``A_block z = rhs`` approximately through a QUBO.

    The block is encoded with ``config.bits`` bits per unknown (the default
    window unless ``config.encoding_override`` is set), sampled, and the
    lowest-energy bitstring decoded. ``sampler(problem, config)`` replaces
    the local annealer when given.

    Returns a :class:`BlockSolveInfo`.
    """
    system = LinearSystem(A_block, rhs)
    enc = config.encoding_override
    if enc is None:
        enc = default_encoding(system, config.bits)
    elif enc.variable_count != system.dimension:
        raise InvalidArgumentError("encoding_override does not match block size")
    problem = encode_linear_system(system, enc)
    samples = (sampler or simulated_anneal)(problem, config)
    best = samples.first
    return BlockSolveInfo(decode(best.bits, enc), best.energy, problem.variable_count,
                          enc, samples.total_count)


class DirectBackend:
    """Exact per-block solves; LU factors are cached per distinct block."""

    def __init__(self):
        self.calls = 0
        self._cache = {}

    def solve_block(self, A_block, rhs):
        A_block = np.asarray(A_block, dtype=float)
        key = (A_block.shape, A_block.tobytes())
        lu = self._cache.get(key)
        if lu is None:
            lu = _factor(A_block)
            self._cache[key] = lu
        self.calls += 1
        return _lu_solve_checked(lu, A_block, np.asarray(rhs, dtype=float))

    def diagnostics(self):
        return {"calls": self.calls, "last_energy": None, "samples": 0}


class AnnealBackend:
    """QUBO + sampler per block.

    Call ``k`` of this backend samples with a seed derived from
    ``(config.seed, k)``, so a fresh backend replays bit-for-bit.
    """

    def __init__(self, config=AnnealConfig(), sampler=None):
        self.config = config
        self.sampler = sampler
        self.calls = 0
        self.samples = 0
        self.last_energy = None
        self.last_variable_count = None
        self.last_encoding = None
        self.variable_counts = set()

    def _call_seed(self):
        ss = np.random.SeedSequence([int(self.config.seed) & UINT64_MASK, self.calls])
        return int(ss.generate_state(1, dtype=np.uint64)[0])

    def solve_block(self, A_block, rhs):
        A_block = np.asarray(A_block, dtype=float)
        if np.linalg.matrix_rank(A_block) < A_block.shape[0]:
            raise SingularBlockError("block handed to the annealer is singular")
        cfg = replace(self.config, seed=self._call_seed())
        info = anneal_block_solve(A_block, rhs, cfg, sampler=self.sampler)
        self.calls += 1
        self.samples += info.samples_drawn
        self.last_energy = info.energy
        self.last_variable_count = info.variable_count
        self.last_encoding = info.encoding
        self.variable_counts.add(info.variable_count)
        return info.solution

    def diagnostics(self):
        return {"calls": self.calls, "last_energy": self.last_energy,
                "samples": self.samples, "variables": self.last_variable_count}


class RemoteBackend(AnnealBackend):
    """:class:`AnnealBackend` whose sampler is a remote HTTP service."""

    def __init__(self, endpoint, config=AnnealConfig(), timeout=30.0):
        from .remote import remote_sample

        self.endpoint = endpoint
        self.timeout = timeout
        super().__init__(
            config, sampler=lambda problem, cfg: remote_sample(endpoint, problem, cfg, timeout))
