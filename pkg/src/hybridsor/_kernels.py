"""Jitted inner loop of the simulated-annealing sampler.

All randomness is drawn by the caller and passed in, so the kernel is a pure
function of its arguments and reproducible regardless of numba's own RNG.
"""

import math

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def anneal_read(linear, coupling, state, betas, order, uniforms):
    """Single-flip Metropolis over a geometric beta schedule.

    ``state`` (uint8) is updated in place. ``coupling`` is the symmetric
    zero-diagonal matrix ``Q + Q^T``. The local field
    ``linear + coupling @ state`` is kept up to date after every accepted
    flip, so each proposal costs O(1) and each acceptance O(n).

    Returns the incrementally tracked energy of the final state.
    """
    n = linear.shape[0]
    field = linear.copy()
    for k in range(n):
        if state[k]:
            for l in range(n):
                field[l] += coupling[l, k]
    e = 0.0
    for k in range(n):
        if state[k]:
            e += 0.5 * (linear[k] + field[k])

    for t in range(betas.shape[0]):
        beta = betas[t]
        for p in range(n):
            k = order[t, p]
            if state[k]:
                delta = -field[k]
            else:
                delta = field[k]
            if delta <= 0.0 or uniforms[t, p] < math.exp(-beta * delta):
                sign = -1.0 if state[k] else 1.0
                state[k] = 1 - state[k]
                e += delta
                for l in range(n):
                    field[l] += sign * coupling[l, k]
    return e


def warmup():
    """Compile the kernel on a trivial problem."""
    anneal_read(np.zeros(1), np.zeros((1, 1)), np.zeros(1, dtype=np.uint8),
                np.ones(1), np.zeros((1, 1), dtype=np.int64), np.zeros((1, 1)))
