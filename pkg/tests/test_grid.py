import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridsor.errors import InvalidArgumentError
from hybridsor.grid import (
    LinearSystem,
    Numbering,
    analytic_reference,
    assemble_system,
    build_grid,
    constant_boundary_conditions,
    discrete_laplacian,
    index_of,
    plate_boundary_conditions,
    point_of,
)


def test_build_grid_plate_size():
    g = build_grid(9, 9, 1.0, plate_boundary_conditions())
    assert g.size == 81
    assert g.h == pytest.approx(0.1)


def test_build_grid_single_point():
    g = build_grid(1, 1, 1.0, constant_boundary_conditions())
    assert g.size == 1 and g.h == 0.5
    assert index_of(g, 1, 1) == 0


@pytest.mark.parametrize("args", [(0, 3, 1.0), (3, 0, 1.0), (3, 3, 0.0), (3, 3, -1.0)])
def test_build_grid_rejects_bad_dimensions(args):
    with pytest.raises(InvalidArgumentError):
        build_grid(*args, constant_boundary_conditions())


def test_row_major_vertical_offset_is_n():
    g = build_grid(9, 9, 1.0, plate_boundary_conditions())
    for j in range(1, 9):
        for i in range(1, 10):
            assert index_of(g, i, j + 1) - index_of(g, i, j) == 9


def test_point_12_neighbours():
    # 1-based labels as in the plate figure
    g = build_grid(9, 9, 1.0, plate_boundary_conditions())
    i, j = point_of(g, 12 - 1)
    neighbours = sorted(index_of(g, i + di, j + dj) + 1
                        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)))
    assert neighbours == [3, 11, 13, 21]


def test_boustrophedon_reverses_alternate_rows():
    g = build_grid(4, 3, 1.0, constant_boundary_conditions(), Numbering.BOUSTROPHEDON)
    assert [index_of(g, i, 1) for i in range(1, 5)] == [0, 1, 2, 3]
    assert [index_of(g, i, 2) for i in range(1, 5)] == [7, 6, 5, 4]
    assert [index_of(g, i, 3) for i in range(1, 5)] == [8, 9, 10, 11]


@pytest.mark.parametrize("ij", [(0, 1), (1, 0), (4, 1), (1, 4)])
def test_index_of_out_of_range(ij):
    g = build_grid(3, 3, 1.0, constant_boundary_conditions())
    with pytest.raises(InvalidArgumentError):
        index_of(g, *ij)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.sampled_from(list(Numbering)))
def test_numbering_round_trip(n, m, numbering):
    g = build_grid(n, m, 1.0, constant_boundary_conditions(), numbering)
    seen = set()
    for j in range(1, m + 1):
        for i in range(1, n + 1):
            k = index_of(g, i, j)
            assert 0 <= k < n * m
            assert point_of(g, k) == (i, j)
            seen.add(k)
    assert len(seen) == n * m


def test_assemble_2x2_zero_boundaries():
    g = build_grid(2, 2, 1.0, constant_boundary_conditions())
    s = assemble_system(g)
    expected = np.array([[-4, 1, 1, 0], [1, -4, 0, 1], [1, 0, -4, 1], [0, 1, 1, -4]], float)
    np.testing.assert_array_equal(s.A, expected)
    np.testing.assert_array_equal(s.b, 0.0)


def test_assemble_single_point_all_ten():
    g = build_grid(1, 1, 1.0, constant_boundary_conditions(10, 10, 10, 10))
    s = assemble_system(g)
    np.testing.assert_array_equal(s.A, [[-4.0]])
    np.testing.assert_array_equal(s.b, [-40.0])
    assert np.linalg.solve(s.A, s.b)[0] == pytest.approx(10.0)


def test_heat_matrix_has_c_and_identity_blocks(heat):
    _, s = heat
    C = -4 * np.eye(9) + np.eye(9, k=1) + np.eye(9, k=-1)
    for bi in range(9):
        for bj in range(9):
            blk = s.A[9 * bi:9 * bi + 9, 9 * bj:9 * bj + 9]
            if bi == bj:
                np.testing.assert_array_equal(blk, C)
            elif abs(bi - bj) == 1:
                np.testing.assert_array_equal(blk, np.eye(9))
            else:
                assert not blk.any()


@pytest.mark.parametrize("numbering", list(Numbering))
def test_assembled_matrix_structure(numbering):
    g = build_grid(5, 4, 2.0, plate_boundary_conditions(2.0), numbering)
    A = assemble_system(g).A
    np.testing.assert_array_equal(A, A.T)
    np.testing.assert_array_equal(np.diag(A), -4.0)
    off = A - np.diag(np.diag(A))
    assert set(np.unique(off)) <= {0.0, 1.0}
    assert (off.sum(axis=1) <= 4).all()
    # weak dominance everywhere, strict in boundary-adjacent rows
    assert (np.abs(np.diag(A)) >= np.abs(off).sum(axis=1)).all()
    assert (np.abs(np.diag(A)) > np.abs(off).sum(axis=1)).any()
    assert np.linalg.matrix_rank(A) == A.shape[0]


def test_numberings_agree_up_to_permutation():
    bc = plate_boundary_conditions()
    out = {}
    for numbering in Numbering:
        g = build_grid(6, 6, 1.0, bc, numbering)
        s = assemble_system(g)
        u = np.linalg.solve(s.A, s.b)
        out[numbering] = g.to_array(u)
    np.testing.assert_allclose(out[Numbering.ROW_MAJOR], out[Numbering.BOUSTROPHEDON],
                               atol=1e-12, equal_nan=True)


@settings(max_examples=30, deadline=None)
@given(st.tuples(*[st.floats(-50, 50) for _ in range(4)]), st.integers(1, 7),
       st.sampled_from(list(Numbering)))
def test_bilinear_functions_solve_discrete_system_exactly(coef, n, numbering):
    a, b, c, d = coef
    L = 1.7
    u = lambda x, y: a + b * x + c * y + d * x * y
    from hybridsor.grid import BoundaryConditions

    bc = BoundaryConditions(bottom=lambda x: u(x, 0.0), top=lambda x: u(x, L),
                            left=lambda y: u(0.0, y), right=lambda y: u(L, y))
    g = build_grid(n, n, L, bc, numbering)
    s = assemble_system(g, exact=u)
    scale = 1.0 + abs(a) + abs(b) * L + abs(c) * L + abs(d) * L * L
    np.testing.assert_allclose(s.A @ s.reference_solution, s.b, atol=1e-11 * scale)


def test_zero_boundaries_give_zero_rhs():
    g = build_grid(7, 5, 3.0, constant_boundary_conditions())
    assert not assemble_system(g).b.any()


def test_plate_system_solution_is_analytic(heat):
    _, s = heat
    np.testing.assert_allclose(np.linalg.solve(s.A, s.b), s.reference_solution, atol=1e-10)


def test_laplacian_of_bilinear_is_zero():
    h = 0.25
    x = np.arange(6)[:, None] * h
    y = np.arange(5)[None, :] * h
    u = 3 * x * y + 0 * x
    for i in range(1, 5):
        for j in range(1, 4):
            assert discrete_laplacian(u, i, j, h) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("h", [0.1, 0.5, 1.0, 2.0])
def test_laplacian_of_x_squared_is_two(h):
    x = np.arange(5)[:, None] * h
    u = np.broadcast_to(x**2, (5, 5))
    assert discrete_laplacian(u, 2, 2, h) == pytest.approx(2.0, rel=1e-12)


def test_laplacian_point_12_matches_stencil(heat):
    g, _ = heat
    rng = np.random.default_rng(3)
    vals = rng.normal(size=81)
    u = g.to_array(vals)
    i, j = point_of(g, 11)
    lab = lambda k: vals[k - 1]
    expected = (lab(3) + lab(11) + lab(13) + lab(21) - 4 * lab(12)) / g.h**2
    assert discrete_laplacian(u, i, j, g.h) == pytest.approx(expected)


def test_laplacian_missing_value():
    u = np.zeros((4, 4))
    u[2, 1] = np.nan
    with pytest.raises(InvalidArgumentError):
        discrete_laplacian(u, 1, 1, 0.1)
    with pytest.raises(InvalidArgumentError):
        discrete_laplacian(u, 0, 1, 0.1)


def test_analytic_reference_values():
    L = 2.0
    assert analytic_reference(0.0, 1.3, L) == 0.0
    assert analytic_reference(L, L, L) == pytest.approx(100.0)
    assert analytic_reference(L / 2, L / 2, L) == pytest.approx(25.0)


def test_linear_system_validation():
    with pytest.raises(InvalidArgumentError):
        LinearSystem(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(InvalidArgumentError):
        LinearSystem(np.eye(2), np.zeros(3))
    s = LinearSystem(np.eye(2), [1, 2])
    assert s.A.flags.writeable is False
