import itertools
from fractions import Fraction

import pytest

from asymptotics import (
    flat_decompose,
    flat_of_branch,
    is_bounded,
    minimality_witness,
    mu_stab_member,
    within_mu,
)
from config import get_rng, random_rational
from errors import ContainmentError, MathPreconditionError, ParameterDependenceError
from exact_linalg import COMPLEX, REAL, Flat, Subspace, flat_intersect, realify
from numberfield import RATIONALS
from parameters import KPoly, ParameterSystem
from puiseux import PuiseuxBranch, PuiseuxScalar, newton_puiseux_at_infinity, standard_part

TU = ("t", "u")


def z(q, c=1):
    return PuiseuxScalar.monomial(c, q)


def axis(k: int, m: int) -> Subspace:
    return Subspace.from_complex([[1 if j == k else 0 for j in range(m)]], m)


def random_branch(rng, n: int, lowest: int = -3, field=RATIONALS) -> PuiseuxBranch:
    coords = []
    for _ in range(n):
        exponents = rng.integers(lowest, 3, size=2)
        terms = {int(q): field.element([random_rational(4) for _ in range(field.degree)]) for q in exponents}
        coords.append(PuiseuxScalar(terms))
    return PuiseuxBranch(coords)


def hyperbola_family() -> PuiseuxBranch:
    domain = ParameterSystem(TU, (KPoly.from_expr("t*u - 1", TU),))
    t, u = KPoly.from_expr("t", TU), KPoly.from_expr("u", TU)
    return PuiseuxBranch([
        PuiseuxScalar({-1: t}, params=domain),
        PuiseuxScalar({0: t, 1: -1}, params=domain),
        PuiseuxScalar({0: u}, params=domain),
    ])


# ----------------------------------------------------------------------------
# flat_of_branch / is_bounded


def test_hyperbola_branch_flat():
    A = flat_of_branch(PuiseuxBranch([z(-1), z(1)]))
    assert A.flat == Flat((0, 0, 0, 0), axis(0, 2))
    assert A.dim == 2


def test_parabola_branch_flat_is_everything():
    A = flat_of_branch(PuiseuxBranch([z(-1), z(-2)]))
    assert A.flat.direction == Subspace.full(4, COMPLEX)
    assert A.exponents == [-2, -1]


def test_parametric_family_flat():
    alpha = hyperbola_family()
    A = flat_of_branch(alpha)
    assert A.is_parametric()
    assert A.dim == 2
    for point in alpha.params.sample_points(5):
        expected = Flat(realify([0, point["t"], point["u"]]), axis(0, 3))
        assert A.at(point) == expected


def test_bounded_branch_flat_is_its_standard_part():
    alpha = PuiseuxBranch([PuiseuxScalar({0: 3, 1: 1}), PuiseuxScalar.constant(5)])
    A = flat_of_branch(alpha)
    assert A.dim == 0
    assert A.flat == Flat(realify([3, 5]), Subspace.zero(4, COMPLEX))
    assert is_bounded(alpha)


def test_real_mode_flat():
    A = flat_of_branch(PuiseuxBranch([z(-1), z(1)]), REAL)
    assert A.flat == Flat((0, 0), Subspace(2, [[1, 0]]))


@pytest.mark.parametrize("text", ["y**3 - x", "y**3 - x**2 - 1", "y**5 - x**2 - 1"])
def test_flats_of_branches_with_roots_of_unity(text):
    branches = newton_puiseux_at_infinity(KPoly.from_expr(text, ("x", "y")), 3)
    assert any(not alpha.field.is_real for alpha in branches)
    for alpha in branches:
        A = flat_of_branch(alpha)
        assert A.flat.direction == Subspace.full(4, COMPLEX)
        assert within_mu(alpha, A.flat)
        for k in range(len(A.generators)):
            _, q = minimality_witness(alpha, A, [k])
            assert q < 0
            assert not within_mu(alpha, Flat(A.flat.base, A.direction_at(indices=[k])))


def test_is_bounded_examples():
    assert not is_bounded(PuiseuxBranch([z(-1), z(1)]))
    free = ParameterSystem(("t",))
    alpha = PuiseuxBranch([PuiseuxScalar({0: KPoly.from_expr("t", ("t",))}, params=free), z(1)])
    assert is_bounded(alpha)


def test_uncertifiable_leading_coefficient():
    domain = ParameterSystem(TU, (KPoly.from_expr("t*u - 1", TU),))
    alpha = PuiseuxBranch([PuiseuxScalar({-1: KPoly.from_expr("t - 1", TU), 0: 1}, params=domain)])
    with pytest.raises(ParameterDependenceError):
        flat_of_branch(alpha)


def test_bounded_iff_zero_dimensional():
    rng = get_rng()
    for _ in range(60):
        alpha = random_branch(rng, 2, lowest=-1)
        A = flat_of_branch(alpha)
        assert is_bounded(alpha) == (A.dim == 0)
        if A.dim == 0:
            st = [standard_part(c).constant_value() for c in alpha.coords]
            assert A.flat.contains_point(realify(st))


def test_translation_equivariance():
    rng = get_rng()
    for _ in range(40):
        alpha = random_branch(rng, 3)
        c = [random_rational(6) for _ in range(3)]
        moved = flat_of_branch(alpha.translate(c)).flat
        assert moved == flat_of_branch(alpha).flat.translate(realify(c))


# ----------------------------------------------------------------------------
# the functional criterion


@pytest.mark.parametrize("field_name,mode", [
    ("qq", COMPLEX),
    ("q_sqrt2", COMPLEX),
    ("qq", REAL),
    ("q_sqrt2", REAL),
])
def test_branch_is_near_its_flat_and_not_near_smaller_ones(field_name, mode, request):
    field = request.getfixturevalue(field_name)
    rng = get_rng()
    branches, proper = set(), 0
    while len(branches) < 200:
        alpha = random_branch(rng, 3, field=field)
        if alpha in branches:
            continue
        branches.add(alpha)
        A = flat_of_branch(alpha, mode)
        assert within_mu(alpha, A.flat)
        assert all(q < 0 for q in A.exponents)
        for size in range(len(A.generators)):
            for subset in itertools.combinations(range(len(A.generators)), size):
                smaller = Flat(A.flat.base, A.direction_at(indices=subset))
                witness = minimality_witness(alpha, A, subset)
                if witness is None:
                    assert smaller == A.flat
                    continue
                functional, q = witness
                assert q < 0
                assert all(sum(a * b for a, b in zip(functional, v)) == 0 for v in smaller.direction.basis)
                assert not within_mu(alpha, smaller)
                proper += 1
    assert proper >= 200


def test_minimality_witness_rejects_full_subset():
    alpha = PuiseuxBranch([z(-1), z(-2)])
    with pytest.raises(MathPreconditionError):
        minimality_witness(alpha, flat_of_branch(alpha), [0, 1])


def test_near_two_flats_means_near_their_intersection():
    alpha = PuiseuxBranch([z(-1), z(1), PuiseuxScalar({0: 2, 2: 1})])
    base = realify([0, 0, 2])
    first = Flat(base, axis(0, 3).sum(axis(1, 3)))
    second = Flat(base, axis(0, 3).sum(axis(2, 3)))
    assert within_mu(alpha, first) and within_mu(alpha, second)
    meet = flat_intersect(first, second)
    assert meet == flat_of_branch(alpha).flat
    assert within_mu(alpha, meet)
    assert not within_mu(alpha, Flat(base, axis(1, 3)))


# ----------------------------------------------------------------------------
# flat_decompose


def test_decompose_hyperbola_branch():
    alpha = PuiseuxBranch([z(-1), z(1)])
    alpha_1, decomposition = flat_decompose(alpha, axis(0, 2))
    assert alpha_1 == PuiseuxBranch([PuiseuxScalar.zero(), z(1)])
    assert decomposition.projected.dim == 0
    assert decomposition.flat == flat_of_branch(alpha).flat


def test_decompose_parabola_branch():
    alpha = PuiseuxBranch([z(-1), z(-2)])
    alpha_1, decomposition = flat_decompose(alpha, axis(0, 2))
    assert alpha_1 == PuiseuxBranch([PuiseuxScalar.zero(), z(-2)])
    assert decomposition.projected.flat.direction == axis(1, 2)
    assert decomposition.flat.direction == Subspace.full(4, COMPLEX)


def test_decompose_along_zero_is_identity():
    alpha = PuiseuxBranch([z(-1), z(1)])
    alpha_1, decomposition = flat_decompose(alpha, Subspace.zero(4, COMPLEX))
    assert alpha_1 == alpha
    assert decomposition.flat == flat_of_branch(alpha).flat


def test_decompose_needs_containment():
    with pytest.raises(ContainmentError):
        flat_decompose(PuiseuxBranch([z(-1), z(1)]), axis(1, 2))


# ----------------------------------------------------------------------------
# mu_stab_member

PARABOLA = [KPoly.from_expr("y - x**2", ("x", "y"))]


def test_vertical_shift_of_parabola_lifts():
    alpha = PuiseuxBranch([z(-1), z(-2)])
    result = mu_stab_member([0, 1], alpha, PARABOLA, 4)
    assert result["status"] == "yes"
    x = result["witness"].coords[0]
    assert x.coefficient(-1) == 1
    assert x.coefficient(1) == Fraction(1, 2)
    A = flat_of_branch(alpha).flat
    assert A.translate(realify([0, 1])) == A


def test_horizontal_shift_of_parabola_is_obstructed():
    result = mu_stab_member([1, 0], PuiseuxBranch([z(-1), z(-2)]), PARABOLA, 4)
    assert result["status"] == "no"
    assert result["exponent"] == -1
    assert result["coefficient"] == 2
    assert result["equation"] == 0


def test_zero_shift_is_always_stable():
    result = mu_stab_member([0, 0], PuiseuxBranch([z(-1), z(-2)]), PARABOLA, 4)
    assert result["status"] == "yes"


def test_shift_leaving_the_flat_direction():
    hyperbola = [KPoly.from_expr("x*y - 1", ("x", "y"))]
    result = mu_stab_member([0, 1], PuiseuxBranch([z(-1), z(1)]), hyperbola, 4)
    assert result["status"] == "no"


def test_branch_must_lie_on_the_system():
    with pytest.raises(MathPreconditionError):
        mu_stab_member([0, 1], PuiseuxBranch([z(-1), z(-3)]), PARABOLA, 4)
