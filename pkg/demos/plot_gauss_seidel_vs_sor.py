"""
Gauss-Seidel against optimal SOR
================================

Error traces of block Gauss-Seidel (omega = 1) and block SOR at the optimal
omega, first with exact block solves and then with annealed QUBO block
solves at several bit widths. Takes about a minute.
"""

from hybridsor import AnnealBackend, AnnealConfig, DirectBackend, SorConfig, heat_system
from hybridsor import partition, solve, split_dlu
from hybridsor.blocksolve import jacobi_spectral_radius, optimal_omega

grid, system = heat_system(9)
splitting = split_dlu(system, partition(system, 9))
omega = optimal_omega(jacobi_spectral_radius(splitting))


def trace(w, backend, iterations=12):
    cfg = SorConfig(w, iterations, 0.08, "reference", stop_early=False)
    return solve(system, splitting.partition, cfg, backend, splitting=splitting)


# %%
# Exact block solves: SOR crosses the 0.08 line in about half the sweeps.

for label, w in (("GS ", 1.0), ("SOR", omega)):
    rep = trace(w, DirectBackend())
    print(label, "crossing", rep.first_crossing(0.08), " ".join(f"{e:.3f}" for e in rep.error_trace))

# %%
# Annealed block solves: fewer bits leave a higher error floor.

for R in (3, 5, 7):
    rep = trace(omega, AnnealBackend(AnnealConfig(bits=R, seed=0)))
    print(f"SOR R={R}", " ".join(f"{e:.3f}" for e in rep.error_trace))
