from fractions import Fraction

import pytest

from config import get_rng, random_rational
from errors import (
    IncompatibleParametersError,
    MathPreconditionError,
    NotSquarefreeError,
    ParameterDependenceError,
    UnboundedError,
    UncertifiedValuationError,
)
from parameters import KPoly, ParameterSystem
from puiseux import (
    INF,
    PuiseuxBranch,
    PuiseuxScalar,
    accepted_on,
    is_squarefree,
    newton_puiseux_at_infinity,
    residual_valuation,
    series_arith,
    series_inverse,
    standard_part,
    valuation,
)

XY = ("x", "y")
TU = ("t", "u")


def z(q, c=1):
    return PuiseuxScalar.monomial(c, q)


def curve(text: str) -> KPoly:
    return KPoly.from_expr(text, XY)


def tu_domain() -> ParameterSystem:
    return ParameterSystem(TU, (KPoly.from_expr("t*u - 1", TU),))


def random_series(rng) -> PuiseuxScalar:
    terms = {int(q): random_rational(5) for q in rng.integers(-2, 4, size=3)}
    truncation = None if rng.random() < 0.3 else Fraction(4)
    return PuiseuxScalar(terms, truncation=truncation)


# ----------------------------------------------------------------------------
# arithmetic


def test_sum_of_monomials():
    total = series_arith(z(-1), z(1), "+")
    assert total.exponents == [-1, 1]
    assert total.is_exact


def test_product_cancels_poles():
    assert series_arith(z(-1), z(1), "*") == PuiseuxScalar.constant(1)


def test_product_truncation_is_conservative():
    geometric = PuiseuxScalar({0: 1, 1: 1, 2: 1}, truncation=2)
    product = series_arith(PuiseuxScalar({0: 1, 1: -1}), geometric, "*")
    assert product == PuiseuxScalar({0: 1}, truncation=2)


def test_arith_is_commutative_and_associative():
    rng = get_rng()
    for _ in range(100):
        a, b, c = random_series(rng), random_series(rng), random_series(rng)
        assert a + b == b + a
        assert a * b == b * a
        left, right = (a * b) * c, a * (b * c)
        bounds = [t for t in (left.truncation, right.truncation) if t is not None]
        if bounds:
            left, right = left.truncate(min(bounds)), right.truncate(min(bounds))
        assert left == right


def test_inverse_of_one_minus_z():
    inverse = series_inverse(PuiseuxScalar({0: 1, 1: -1}), 3)
    assert inverse == PuiseuxScalar({0: 1, 1: 1, 2: 1, 3: 1}, truncation=3)
    assert inverse * PuiseuxScalar({0: 1, 1: -1}) == PuiseuxScalar({0: 1}, truncation=3)


def test_inverse_of_monomial_is_exact():
    assert series_inverse(z(-2, 4), 5) == z(2, Fraction(1, 4))


def test_mixed_parameter_systems_are_rejected():
    a = PuiseuxScalar({0: KPoly.from_expr("t", TU)}, params=tu_domain())
    b = PuiseuxScalar({0: KPoly.from_expr("s", ("s",))}, params=ParameterSystem(("s",)))
    with pytest.raises(IncompatibleParametersError):
        a + b


def test_unknown_operation():
    with pytest.raises(ValueError):
        series_arith(z(0), z(0), "/")


# ----------------------------------------------------------------------------
# valuation and standard part


def test_valuation_examples():
    assert valuation(z(-2) + z(1)) == -2
    assert valuation(PuiseuxScalar.zero()) == INF


def test_parametric_valuation_on_hyperbola_domain():
    domain = tu_domain()
    assert valuation(PuiseuxScalar({-1: KPoly.from_expr("t", TU)}, params=domain)) == -1


def test_valuation_depending_on_parameters():
    domain = tu_domain()
    a = PuiseuxScalar({-1: KPoly.from_expr("t + 1", TU), 0: 1}, params=domain)
    with pytest.raises(ParameterDependenceError):
        valuation(a)


def test_leading_term_vanishing_on_domain_is_skipped():
    domain = tu_domain()
    a = PuiseuxScalar({-1: KPoly.from_expr("t*u - 1", TU), 2: KPoly.from_expr("u", TU)}, params=domain)
    assert valuation(a) == 2


def test_cannot_certify_zero():
    with pytest.raises(UncertifiedValuationError):
        valuation(PuiseuxScalar({}, truncation=2))


def test_standard_part_examples():
    assert standard_part(PuiseuxScalar({0: 3, 1: 1})) == 3
    assert standard_part(z(1)) == 0
    moving = PuiseuxScalar({0: KPoly.from_expr("t", TU), 1: -1}, params=tu_domain())
    assert standard_part(moving) == KPoly.from_expr("t", TU)


def test_standard_part_of_unbounded_series():
    with pytest.raises(UnboundedError):
        standard_part(z(-1) + z(0, 2))


def test_standard_part_is_additive():
    rng = get_rng()
    for _ in range(50):
        a = PuiseuxScalar({int(q): random_rational(5) for q in rng.integers(0, 3, size=2)}, truncation=3)
        b = PuiseuxScalar({int(q): random_rational(5) for q in rng.integers(0, 3, size=2)})
        assert standard_part(a + b) == standard_part(a) + standard_part(b)


# ----------------------------------------------------------------------------
# residuals


def test_exact_hyperbola_residual():
    assert residual_valuation([curve("x*y - 1")], PuiseuxBranch([z(-1), z(1)])) == [INF]


def test_parametric_family_lies_on_surface():
    domain = tu_domain()
    t, u = KPoly.from_expr("t", TU), KPoly.from_expr("u", TU)
    branch = PuiseuxBranch([
        PuiseuxScalar({-1: t}, params=domain),
        PuiseuxScalar({0: t, 1: -1}, params=domain),
        PuiseuxScalar({0: u}, params=domain),
    ])
    surface = KPoly.from_expr("x*(1 - y*w) - 1", ("x", "y", "w"))
    assert residual_valuation([surface], branch) == [INF]


def test_perturbed_branch_accepted_at_order():
    perturbed = PuiseuxBranch([z(-1), (z(-2) + z(5)).truncate(4)])
    assert residual_valuation([curve("y - x**2")], perturbed) == [5]
    assert accepted_on([curve("y - x**2")], perturbed, 4)
    assert not accepted_on([curve("y - x**2")], PuiseuxBranch([z(-1), z(-2) + z(3)]), 4)


# ----------------------------------------------------------------------------
# Newton-Puiseux at infinity


def test_hyperbola_branches():
    branches = newton_puiseux_at_infinity(curve("x*y - 1"), 4)
    assert PuiseuxBranch([z(-1), z(1)]) in branches
    assert PuiseuxBranch([z(1), z(-1)]) in branches
    assert len(branches) == 2


def test_parabola_branch():
    assert newton_puiseux_at_infinity(curve("y - x**2"), 4) == [PuiseuxBranch([z(-1), z(-2)])]


def test_square_root_branches_are_ramified():
    branches = newton_puiseux_at_infinity(curve("y**2 - x"), 4)
    assert len(branches) == 2
    assert all(b.ramification == 2 for b in branches)
    assert PuiseuxBranch([z(-1), z(Fraction(-1, 2))]) in branches
    assert PuiseuxBranch([z(-1), z(Fraction(-1, 2), -1)]) in branches


@pytest.mark.parametrize("text", [
    "x*y - 1",
    "y - x**2",
    "y**2 - x",
    "x*y + y - 1",
    "y**2 - x**3",
    "y**3 - x",
    "y**3 - x**2 - 1",
    "y**5 - x**2 - 1",
    "y**2 - x**2 - 1",
    "x**2*y - 1",
    "y**2 + x*y + 1",
    "x + y",
])
def test_branches_lie_on_curve(text):
    f = curve(text)
    for branch in newton_puiseux_at_infinity(f, 4):
        assert residual_valuation([f], branch)[0] > 4


@pytest.mark.parametrize("text,degree", [
    ("y**2 - x", 2),
    ("y**3 - x", 3),
    ("y**5 - x**2 - 1", 5),
    ("y**2 - x**2 - 1", 2),
    ("y**2 + x*y + 1", 2),
    ("y - x**2", 1),
])
def test_branch_count_for_monic_curves(text, degree):
    branches = newton_puiseux_at_infinity(curve(text), 3)
    over_infinity = [b for b in branches if b.coords[0] == z(-1)]
    assert len(over_infinity) == degree


def test_vertical_asymptote_branch():
    branches = newton_puiseux_at_infinity(curve("x**2*y - 1"), 3)
    assert PuiseuxBranch([z(1), z(-2)]) in branches
    assert PuiseuxBranch([z(-1), z(2)]) in branches


def test_squarefree_check():
    assert is_squarefree(curve("x*y - 1"))
    assert not is_squarefree(curve("(y - x)**2"))
    with pytest.raises(NotSquarefreeError):
        newton_puiseux_at_infinity(curve("(y - x)**2"), 2)


def test_negative_order_rejected():
    with pytest.raises(MathPreconditionError):
        newton_puiseux_at_infinity(curve("x*y - 1"), -1)
