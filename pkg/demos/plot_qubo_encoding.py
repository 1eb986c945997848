"""
Linear systems as QUBOs
=======================

Each unknown gets ``R`` bits, ``x_i = c_i sum_r q_{i,r} 2**-r - d_i``, and
the squared residual becomes a quadratic form over binary variables. The
brute-force minimiser doubles as a correctness oracle for the sampler.
"""

import numpy as np

from hybridsor import LinearSystem
from hybridsor.annealer import AnnealConfig, simulated_anneal
from hybridsor.qubo import (
    brute_force_minimize,
    decode,
    default_encoding,
    encode_linear_system,
    energy,
)

A = np.array([[4.0, -1.0], [-1.0, 3.0]])
b = np.array([3.0, 1.5])
system = LinearSystem(A, b)
print("exact solution:", np.linalg.solve(A, b))

# %%
# The default window is a symmetric power of two around zero.

for R in (2, 4, 6):
    enc = default_encoding(system, R)
    problem = encode_linear_system(system, enc)
    best = brute_force_minimize(problem)
    x = decode(best.bits, enc)
    print(f"R={R}: {problem.variable_count:2d} bits, window [{enc.lower[0]:g}, "
          f"{enc.upper[0]:g}], best x = {x}, residual^2 = {best.energy + problem.offset:.3g}")

# %%
# Energy plus offset is the squared residual for every bitstring.

enc = default_encoding(system, 3)
problem = encode_linear_system(system, enc)
q = np.random.default_rng(0).integers(0, 2, problem.variable_count)
r = A @ decode(q, enc) - b
print(f"energy + offset = {energy(problem, q) + problem.offset:.12g},  |Ax-b|^2 = {r @ r:.12g}")

# %%
# Simulated annealing finds the same ground state.

samples = simulated_anneal(problem, AnnealConfig(seed=1))
print("annealer best:", samples.first.bitstring(), " brute force:",
      "".join(map(str, brute_force_minimize(problem).bits)))
