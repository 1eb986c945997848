"""Hybrid block SOR solver for the 2-D Laplace equation.

The finite-difference system is solved by block successive over-relaxation;
each block subsystem goes to a pluggable backend: an exact LU solve, a
QUBO encoding minimised by simulated annealing, or a remote sampler.
"""

from .annealer import (
    AnnealBackend,
    AnnealConfig,
    DirectBackend,
    RemoteBackend,
    SampleSet,
    anneal_block_solve,
    direct_solve,
    simulated_anneal,
)
from .blocksolve import (
    SorConfig,
    SolveReport,
    StoppingMode,
    block_sor_sweep,
    check_convergence,
    jacobi_spectral_radius,
    optimal_omega,
    partition,
    relative_error,
    solve,
    sor_iteration_matrix,
    split_dlu,
)
from .errors import *  # noqa: F401,F403
from .grid import (
    BoundaryConditions,
    Grid2D,
    LinearSystem,
    Numbering,
    analytic_reference,
    assemble_system,
    build_grid,
    discrete_laplacian,
    heat_system,
    index_of,
    plate_boundary_conditions,
    point_of,
)
from .qubo import (
    FixedPointEncoding,
    QuboProblem,
    brute_force_minimize,
    decode,
    default_encoding,
    encode_linear_system,
    energy,
)

__version__ = "0.1.0"
