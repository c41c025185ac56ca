from fractions import Fraction

import numpy as np
import pytest
import sympy

from config import get_rng, random_rational
from errors import ConjugationError, DimensionMismatchError
from exact_linalg import (
    COMPLEX,
    REAL,
    Flat,
    Lattice,
    Subspace,
    flat_intersect,
    flat_intersect_bruteforce,
    galois_saturate,
    hnf,
    integer_kernel,
    is_lambda_defined,
    kernel,
    lambda_saturate,
    lattice_points_basis,
    orth_complement,
    realify,
    subspace_ops,
)


def unimodular(U) -> bool:
    return abs(sympy.Matrix(U.tolist()).det()) == 1


def random_lattice(n: int, complex_ambient: bool = False) -> Lattice:
    rng = get_rng()
    while True:
        rows = rng.integers(-3, 4, size=(n, n))
        if round(abs(np.linalg.det(rows))) >= 1:
            return Lattice(rows.tolist(), complex_ambient=complex_ambient)


def random_vectors(field, n: int, k: int):
    return [[field.element([random_rational(5) for _ in range(field.degree)]) for _ in range(n)] for _ in range(k)]


def random_subspace(field, n: int, k: int) -> Subspace:
    """Real span in R^n for real fields, C-span in C^(n/2) otherwise."""
    if field.is_real:
        return Subspace(n, random_vectors(field, n, k))
    return Subspace.from_complex(random_vectors(field, n // 2, k), n // 2)


# ----------------------------------------------------------------------------
# hnf


def test_hnf_identity():
    H, U = hnf(np.eye(3, dtype=int))
    assert (H == np.eye(3, dtype=object)).all()
    assert (U == np.eye(3, dtype=object)).all()


def test_hnf_keeps_determinant():
    M = np.array([[2, 1], [0, 1]], dtype=object)
    H, U = hnf(M)
    assert (H == M @ U).all()
    assert H[0, 1] == 0
    assert abs(H[0, 0] * H[1, 1]) == 2
    assert H[0, 0] > 0 and H[1, 1] > 0
    assert 0 <= H[1, 0] < H[1, 1]
    assert unimodular(U)


def test_hnf_zero_matrix():
    H, U = hnf(np.zeros((2, 3), dtype=int))
    assert (H == 0).all()
    assert (U == np.eye(3, dtype=object)).all()


def test_hnf_random_matrices_are_reduced():
    rng = get_rng()
    for _ in range(40):
        M = rng.integers(-6, 7, size=(3, 4)).astype(object)
        H, U = hnf(M)
        assert (H == M @ U).all()
        assert unimodular(U)
        assert all(H[i, j] == 0 for i in range(3) for j in range(i + 1, 4))


def test_integer_kernel():
    K = integer_kernel([[1, 1, 0]])
    assert K.shape == (3, 2)
    assert all(K[0, j] + K[1, j] == 0 for j in range(2))


# ----------------------------------------------------------------------------
# saturation


def test_saturate_rational_line():
    H = Subspace(2, [[1, 1]])
    assert lambda_saturate(H, Lattice.standard(2)) == H


def test_saturate_sqrt2_line(q_sqrt2):
    H = Subspace(2, [[q_sqrt2.one, q_sqrt2.gen]])
    assert lambda_saturate(H, Lattice.standard(2)).dim == 2


def test_saturate_complex_axis():
    H = Subspace.from_complex([[1, 0, 0]], 3)
    saturated = lambda_saturate(H, Lattice.gaussian(3))
    assert saturated == H
    assert saturated.mode == COMPLEX


def test_saturate_gaussian_line_is_already_defined(qi):
    H = Subspace.from_complex([[qi.one, qi.gen]], 2)
    saturated = lambda_saturate(H, Lattice.gaussian(2))
    assert saturated.contains(H)
    assert saturated == H


@pytest.mark.parametrize("field_name", ["qq", "qi", "q_sqrt2", "q_omega"])
def test_saturation_properties(field_name, request):
    field = request.getfixturevalue(field_name)
    n = 3 if field.is_real else 4
    for case in range(200):
        lattice = random_lattice(n, complex_ambient=not field.is_real)
        H = random_subspace(field, n, case % 3)
        sat = lambda_saturate(H, lattice)
        assert sat.contains(H)
        assert is_lambda_defined(sat, lattice)
        assert lambda_saturate(sat, lattice) == sat
        assert galois_saturate(H, lattice) == sat
        bigger = H.sum(random_subspace(field, n, 1))
        assert lambda_saturate(bigger, lattice).contains(sat)
        if is_lambda_defined(H, lattice):
            assert sat == H


def test_realify_over_cube_roots_of_unity(q_omega):
    v = realify([q_omega.one, q_omega.gen])
    assert v[:3] == (1, 0, Fraction(-1, 2))
    assert v[3] * v[3] == Fraction(3, 4)
    assert Subspace.from_complex([[1, 0], [0, q_omega.gen]], 2) == Subspace.full(4, COMPLEX)
    line = Subspace.from_complex([[q_omega.one, q_omega.gen]], 2)
    assert line.dim == 2 and line.mode == COMPLEX
    assert lambda_saturate(line, Lattice.gaussian(2)) == Subspace.full(4, COMPLEX)


def test_lattice_points_basis_in_lattice():
    lattice = Lattice([[2, 1], [0, 1]])
    V = lambda_saturate(Subspace(2, [[1, 1]]), lattice)
    B = lattice_points_basis(V, lattice)
    assert B.shape == (2, 1)
    vector = lattice.from_coords([int(x) for x in B[:, 0]])
    assert V.contains_vector(vector)


def test_saturate_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        lambda_saturate(Subspace(3, [[1, 0, 0]]), Lattice.standard(2))


# ----------------------------------------------------------------------------
# subspaces


def test_subspace_ops_complex_axes():
    first = Subspace.from_complex([[1, 0]], 2)
    second = Subspace.from_complex([[0, 1]], 2)
    assert subspace_ops(first, second, "intersect").dim == 0
    assert subspace_ops(first, second, "sum") == Subspace.full(4, COMPLEX)
    assert subspace_ops(Subspace.full(4, COMPLEX), first, "contains")
    assert not subspace_ops(first, second, "equals")


def test_orth_complement_axis():
    axis = Subspace.from_complex([[1, 0, 0]], 3)
    assert orth_complement(axis) == Subspace.from_complex([[0, 1, 0], [0, 0, 1]], 3)


def test_orth_complement_of_zero():
    zero = Subspace.zero(4, COMPLEX)
    assert orth_complement(zero) == Subspace.full(4)


def test_orth_complement_hermitian(qi):
    line = Subspace.from_complex([[qi.one, qi.gen]], 2)
    complement = orth_complement(line)
    assert complement.dim == 2
    assert complement.mode == COMPLEX
    assert complement.contains_vector(realify([qi.one, -qi.gen]))
    assert complement.contains_vector(realify([qi.gen, qi.one]))


def test_coordinate_projector_needs_complex_mode():
    real_line = Subspace(4, [[1, 0, 0, 0]], REAL, complex_ambient=True)
    with pytest.raises(ConjugationError):
        real_line.coordinate_projector()


def test_coordinate_projector_axis():
    P = Subspace.from_complex([[1, 0]], 2).coordinate_projector()
    assert P[0][0] == 0 and P[1][1] == 1 and P[0][1] == 0


def test_kernel_of_rank_one():
    basis = kernel([[1, 2, 3]], 3)
    assert len(basis) == 2
    for v in basis:
        assert v[0] + 2 * v[1] + 3 * v[2] == 0


# ----------------------------------------------------------------------------
# flats


def test_flat_intersect_axes():
    first = Flat((0, 0, 0, 0), Subspace.from_complex([[1, 0]], 2))
    second = Flat((0, 0, 0, 0), Subspace.from_complex([[0, 1]], 2))
    meet = flat_intersect(first, second)
    assert meet is not None
    assert meet.dim == 0
    assert meet.contains_point((0, 0, 0, 0))


def test_parallel_lines_do_not_meet():
    first = Flat((0, 0), Subspace(2, [[1, 1]]))
    second = Flat((1, 0), Subspace(2, [[1, 1]]))
    assert flat_intersect(first, second) is None
    assert flat_intersect_bruteforce(first, second) is None


def test_flat_intersect_with_itself():
    flat = Flat((1, 2, 3), Subspace(3, [[1, 0, 1]]))
    assert flat_intersect(flat, flat) == flat


def test_flat_equality_ignores_base_choice():
    assert Flat((0, 0), Subspace(2, [[1, 1]])) == Flat((2, 2), Subspace(2, [[1, 1]]))


def test_flat_intersect_matches_bruteforce():
    for case in range(80):
        n = 3
        first = Flat(tuple(random_rational(4) for _ in range(n)),
                     Subspace(n, [[random_rational(3) for _ in range(n)] for _ in range(case % 3)]))
        second = Flat(tuple(random_rational(4) for _ in range(n)),
                      Subspace(n, [[random_rational(3) for _ in range(n)] for _ in range((case // 3) % 3)]))
        fast = flat_intersect(first, second)
        slow = flat_intersect_bruteforce(first, second)
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert fast == slow


def test_lattice_coordinates_round_trip():
    lattice = Lattice([[2, 1], [0, 1]])
    point = (Fraction(3, 2), Fraction(-1, 3))
    assert tuple(x.to_fraction() for x in lattice.from_coords(lattice.to_coords(point))) == point
