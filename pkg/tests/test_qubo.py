import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridsor.errors import CapacityError, InvalidArgumentError
from hybridsor.grid import LinearSystem
from hybridsor.qubo import (
    FixedPointEncoding,
    QuboProblem,
    brute_force_minimize,
    decode,
    default_encoding,
    encode_linear_system,
    energy,
    unfolded_coefficients,
)


def dd_system(seed, m):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (m, m))
    A += np.diag(np.abs(A).sum(axis=1) + rng.uniform(0.5, 2, m))
    return LinearSystem(A, rng.uniform(-2, 2, m))


def bitstrings(n):
    return [np.array(q, dtype=np.uint8) for q in itertools.product((0, 1), repeat=n)]


def residual2(system, x):
    r = system.A @ x - system.b
    return float(r @ r)


# ------------------------------------------------------------------ decode

def test_decode_examples():
    assert decode([1, 0, 1], FixedPointEncoding.uniform(1, 3, 1.0, 0.0))[0] == 0.625
    enc = FixedPointEncoding(3, [1.0, 2.0, 3.0], [0.5, -1.0, 7.0])
    np.testing.assert_array_equal(decode(np.zeros(enc.bit_count), enc), [-0.5, 1.0, -7.0])
    assert decode([1, 1], FixedPointEncoding.uniform(1, 2, 4.0, 2.0))[0] == 1.0


def test_decode_is_variable_major():
    enc = FixedPointEncoding.uniform(2, 2, 1.0, 0.0)
    np.testing.assert_array_equal(decode([1, 0, 0, 1], enc), [0.5, 0.25])


def test_decode_length_mismatch():
    with pytest.raises(InvalidArgumentError):
        decode([1, 0], FixedPointEncoding.uniform(1, 3, 1.0, 0.0))


@given(st.integers(1, 3), st.integers(1, 5), st.floats(0.1, 100), st.floats(-50, 50),
       st.data())
def test_decode_bounds(m, R, c, d, data):
    enc = FixedPointEncoding.uniform(m, R, c, d)
    q = np.array(data.draw(st.lists(st.integers(0, 1), min_size=m * R, max_size=m * R)))
    x = decode(q, enc)
    assert np.all(x >= enc.lower - 1e-12) and np.all(x <= enc.upper + 1e-12)


def test_encoding_validation():
    with pytest.raises(InvalidArgumentError):
        FixedPointEncoding(0, [1.0], [0.0])
    with pytest.raises(InvalidArgumentError):
        FixedPointEncoding(2, [0.0], [0.0])
    with pytest.raises(InvalidArgumentError):
        FixedPointEncoding(2, [1.0, 1.0], [0.0])


# --------------------------------------------------------- default window

def test_default_encoding_scalar():
    enc = default_encoding(LinearSystem([[2.0]], [1.0]), 1)
    assert (enc.scale[0], enc.offset[0]) == (2.0, 1.0)
    values = sorted(decode(np.array(q), enc)[0] for q in ([0], [1]))
    assert values == [-1.0, 0.0]


def test_default_encoding_zero_rhs_floor():
    enc = default_encoding(LinearSystem(np.eye(3), np.zeros(3)), 4)
    np.testing.assert_array_equal(enc.offset, 1.0)
    np.testing.assert_array_equal(enc.scale, 2.0)


def test_default_encoding_zero_diagonal():
    with pytest.raises(InvalidArgumentError):
        default_encoding(LinearSystem([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0]), 2)


def _window_oracle(A, rhs):
    need = 2 * max(abs(rhs[i] / A[i, i]) for i in range(len(rhs)))
    W = 1
    while W < need:
        W *= 2
    return W


def test_default_encoding_heat_blocks(heat, heat_splitting):
    _, s = heat
    xs = np.linalg.solve(s.A, s.b)
    C = heat_splitting.D_block(0, 0)
    windows = set()
    for i in range(9):
        lo, hi = i * 9, (i + 1) * 9
        rhs = s.b[lo:hi] - s.A[lo:hi] @ xs + C @ xs[lo:hi]      # block rhs at the fixed point
        W = default_encoding(LinearSystem(C, rhs), 7).offset[0]
        assert W == _window_oracle(C, rhs)
        windows.add(W)
    # block right-hand sides at the fixed point stay below 64 * 4 in magnitude
    assert max(windows) == 128.0


def test_default_encoding_contains_heat_block_solutions(heat, heat_splitting):
    _, s = heat
    xs = np.linalg.solve(s.A, s.b)
    C = heat_splitting.D_block(0, 0)
    for i in range(9):
        lo, hi = i * 9, (i + 1) * 9
        rhs = s.b[lo:hi] - s.A[lo:hi] @ xs + C @ xs[lo:hi]
        enc = default_encoding(LinearSystem(C, rhs), 7)
        z = xs[lo:hi]
        assert np.all(z >= enc.lower) and np.all(z <= enc.upper)


# ---------------------------------------------------------------- encoding

def test_scalar_worked_example():
    s = LinearSystem([[2.0]], [1.0])
    enc = FixedPointEncoding.uniform(1, 1, 1.0, 0.0)
    alpha, beta = unfolded_coefficients(s, enc)
    assert alpha[0, 0] == -2.0 and beta[0, 0, 0, 0] == 1.0
    p = encode_linear_system(s, enc)
    assert p.linear[0] == -1.0 and p.offset == 1.0
    assert energy(p, [1]) == -1.0 and energy(p, [1]) + p.offset == 0.0
    assert energy(p, [0]) == 0.0


def test_homogeneous_system():
    s = LinearSystem(np.array([[3.0, 1.0], [1.0, 3.0]]), np.zeros(2))
    p = encode_linear_system(s, FixedPointEncoding.uniform(2, 3, 1.0, 0.0))
    alpha, _ = unfolded_coefficients(s, FixedPointEncoding.uniform(2, 3, 1.0, 0.0))
    assert not alpha.any()
    res = brute_force_minimize(p)
    assert not res.bits.any() and res.energy == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_folded_coefficients_match_unfolded_formulas(seed, m, R):
    s = dd_system(seed, m)
    rng = np.random.default_rng(seed + 1)
    enc = FixedPointEncoding(R, rng.uniform(0.5, 4, m), rng.uniform(-2, 2, m))
    p = encode_linear_system(s, enc)
    alpha, beta = unfolded_coefficients(s, enc)
    n = m * R
    B = beta.reshape(n, n)
    # alpha is the unfolded linear part; the diagonal of beta folds in via q^2 = q
    np.testing.assert_allclose(p.linear, alpha.reshape(n) + np.diag(B), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(p.quadratic, np.triu(B + B.T, 1), rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(1, 1), (1, 4), (2, 2), (2, 4), (3, 2), (4, 4)]))
def test_energy_residual_identity(seed, shape):
    m, R = shape
    s = dd_system(seed, m)
    rng = np.random.default_rng(seed + 7)
    enc = FixedPointEncoding(R, rng.uniform(0.5, 6, m), rng.uniform(-3, 3, m))
    p = encode_linear_system(s, enc)
    for q in bitstrings(m * R):
        true = residual2(s, decode(q, enc))
        assert energy(p, q) + p.offset == pytest.approx(true, rel=1e-10, abs=1e-10 * p.offset)


def test_energy_examples():
    p = QuboProblem([1.5, -2.0, 0.5], np.triu(np.full((3, 3), 3.0), 1))
    assert energy(p, [0, 0, 0]) == 0.0
    assert energy(p, [0, 1, 0]) == -2.0
    assert energy(p, [1, 1, 0]) == 1.5 - 2.0 + 3.0
    with pytest.raises(InvalidArgumentError):
        energy(p, [1, 0])


def test_quadratic_must_be_strict_upper():
    with pytest.raises(InvalidArgumentError):
        QuboProblem([0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])


# -------------------------------------------------------------- brute force

def test_brute_force_scalar():
    s = LinearSystem([[2.0]], [1.0])
    res = brute_force_minimize(encode_linear_system(s, FixedPointEncoding.uniform(1, 1, 1.0, 0.0)))
    assert res.bits.tolist() == [1] and res.energy == -1.0


def test_brute_force_tie_break_lexicographic():
    p = QuboProblem([-1.0, -1.0], [[0.0, 1.0], [0.0, 0.0]])
    assert brute_force_minimize(p).bits.tolist() == [0, 1]


def test_brute_force_capacity():
    with pytest.raises(CapacityError):
        brute_force_minimize(QuboProblem(np.zeros(25), np.zeros((25, 25))))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_brute_force_double_enumeration(seed):
    s = dd_system(seed, 2)
    enc = default_encoding(s, 3)
    res = brute_force_minimize(encode_linear_system(s, enc))
    best = min(residual2(s, decode(q, enc)) for q in bitstrings(6))
    assert residual2(s, decode(res.bits, enc)) == pytest.approx(best, rel=1e-10, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_monotone_refinement(seed):
    s = dd_system(seed, 2)
    c, d = 4.0, 2.0
    best = []
    for R in (1, 2, 3):
        enc = FixedPointEncoding.uniform(2, R, c, d)
        best.append(min(residual2(s, decode(q, enc)) for q in bitstrings(2 * R)))
    assert best[0] >= best[1] - 1e-12 and best[1] >= best[2] - 1e-12
