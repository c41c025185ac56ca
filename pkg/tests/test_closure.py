import pytest

from asymptotics import flat_of_branch
from closure import (
    FlatFamily,
    TranslateSet,
    assemble_closure,
    clause_checks,
    family_span,
    torus_description,
    translate_set,
)
from errors import ContainmentError, EmptyFamilyError
from exact_linalg import COMPLEX, REAL, Lattice, Subspace
from parameters import KPoly
from puiseux import PuiseuxBranch, PuiseuxScalar
from serialization import Bundle, load_json
from tests.conftest import fixture_path

TU = ("t", "u")


def z(q, c=1):
    return PuiseuxScalar.monomial(c, q)


def axes(*ks, m=3) -> Subspace:
    return Subspace.from_complex([[1 if j == k else 0 for j in range(m)] for k in ks], m)


def families_of(branch_lists, mode=COMPLEX):
    return [FlatFamily([flat_of_branch(b, mode) for b in family], label=f"family-{k}")
            for k, family in enumerate(branch_lists)]


@pytest.fixture
def surface():
    bundle = Bundle.from_dict(load_json(fixture_path("surface_x1yz.json")))
    return bundle, families_of(bundle.families)


@pytest.fixture
def surface_closure(surface):
    bundle, families = surface
    return assemble_closure(families, bundle.lattice, bundle.variety)


# ----------------------------------------------------------------------------
# family_span / translate_set


def test_singleton_family_spans():
    first, second = families_of([[PuiseuxBranch([z(-1), z(1)])], [PuiseuxBranch([z(1), z(-1)])]])
    assert family_span(first) == axes(0, m=2)
    assert family_span(second) == axes(1, m=2)


def test_parametric_family_span_and_translates(surface):
    _, families = surface
    moving = families[3]
    V = family_span(moving)
    assert V == axes(0)
    C = translate_set(moving, V)
    assert C.is_parametric()
    (point,) = C.points
    assert point[0] == 0
    assert point[1] == KPoly.from_expr("t", TU)
    assert point[2] == KPoly.from_expr("u", TU)
    assert C.dimension() == 1


def test_plane_family_translates_to_origin(surface):
    _, families = surface
    C = translate_set(families[0], family_span(families[0]))
    assert C.is_finite()
    assert C.at() == [(0, 0, 0)]


def test_translate_already_in_complement():
    (family,) = families_of([[PuiseuxBranch([z(-1), PuiseuxScalar.zero(), PuiseuxScalar.constant(5)])]])
    C = translate_set(family, axes(0))
    assert C.at() == [(0, 0, 5)]


def test_translate_set_needs_directions_inside_v():
    (family,) = families_of([[PuiseuxBranch([z(-1), z(-2)])]])
    with pytest.raises(ContainmentError):
        translate_set(family, axes(0, m=2))


def test_empty_family():
    with pytest.raises(EmptyFamilyError):
        FlatFamily([])


def test_translate_points_are_deduplicated():
    C = TranslateSet([(KPoly.constant(1),), (KPoly.constant(1),)])
    assert len(C.points) == 1


# ----------------------------------------------------------------------------
# assemble_closure


def test_surface_components(surface_closure):
    desc = surface_closure
    assert len(desc.components) == 4
    planes = [axes(1, 2), axes(0, 2), axes(0, 1)]
    for comp, plane in zip(desc.components[:3], planes):
        assert comp.V == plane
        assert comp.V_lambda == plane
        assert comp.C.is_finite()
        assert comp.C.at() == [(0, 0, 0)]
        assert comp.maximal
    moving = desc.components[3]
    assert moving.V == axes(0)
    assert moving.V_lambda == axes(0)
    assert moving.C.is_parametric()
    assert not moving.maximal
    assert len(desc.maximal_components) == 3


def test_hyperbola_components():
    branches = [[PuiseuxBranch([z(-1), z(1)])], [PuiseuxBranch([z(1), z(-1)])]]
    desc = assemble_closure(families_of(branches), Lattice.gaussian(2))
    assert [c.V for c in desc.components] == [axes(0, m=2), axes(1, m=2)]
    assert all(c.maximal and c.C.at() == [(0, 0)] for c in desc.components)


def test_bounded_branches_only():
    bounded = [[PuiseuxBranch([PuiseuxScalar({0: 1, 1: 1}), PuiseuxScalar.constant(2)])]]
    desc = assemble_closure(families_of(bounded), Lattice.gaussian(2))
    assert desc.components == []
    assert desc.bounded_flats == 1


def test_duplicate_families_merge():
    branch = PuiseuxBranch([z(-1), z(1)])
    desc = assemble_closure(families_of([[branch], [branch]]), Lattice.gaussian(2))
    assert len(desc.components) == 1
    assert desc.components[0].families == ["family-0", "family-1"]


# ----------------------------------------------------------------------------
# clause checks


def test_surface_clauses_hold(surface_closure):
    report = clause_checks(surface_closure, 2)
    assert report["status"] == "pass"
    findings = report["components"]
    assert findings[3]["dim_C"] == 1
    assert findings[3]["clause_ii"] is None
    assert all(f["finite"] for f in findings[:3])


def test_hyperbola_clauses_hold():
    branches = [[PuiseuxBranch([z(-1), z(1)])], [PuiseuxBranch([z(1), z(-1)])]]
    report = clause_checks(assemble_closure(families_of(branches), Lattice.gaussian(2)), 1)
    assert report["status"] == "pass"
    assert all(f["dim_C"] == 0 for f in report["components"])


def test_translate_curve_as_large_as_x_is_flagged(surface_closure):
    report = clause_checks(surface_closure, 1)
    assert report["status"] == "fail"
    assert {"i"} == {v["clause"] for v in report["violations"]}


def test_maximal_infinite_translate_is_flagged(surface):
    bundle, families = surface
    desc = assemble_closure([families[3]], bundle.lattice)
    report = clause_checks(desc, 2)
    assert report["status"] == "fail"
    assert [v["clause"] for v in report["violations"]] == ["ii"]


# ----------------------------------------------------------------------------
# torus side


def test_surface_torus_description(surface_closure):
    torus = torus_description(surface_closure)
    dims = [entry["subtorus_dim"] for entry in torus["components"]]
    assert dims == [4, 4, 4, 2]
    assert all(entry["closed_subtorus"] for entry in torus["components"])
    assert torus["components"][0]["folded_translates"] == [["0/1"] * 6]
    assert "translate_curve" in torus["components"][3]
    assert len(torus["components"][3]["lattice_basis"]) == 2


def test_rational_line_is_closed_subtorus():
    (family,) = families_of([[PuiseuxBranch([z(-1), z(-1)])]], REAL)
    torus = torus_description(assemble_closure([family], Lattice.standard(2)))
    (entry,) = torus["components"]
    assert entry["subtorus_dim"] == 1
    assert entry["closed_subtorus"]
    assert entry["lattice_basis"] in ([[1, 1]], [[-1, -1]])


def test_irrational_line_fills_the_torus(q_sqrt2):
    branch = PuiseuxBranch([z(-1), PuiseuxScalar({-1: KPoly.constant(q_sqrt2.gen)})])
    (family,) = families_of([[branch]], REAL)
    torus = torus_description(assemble_closure([family], Lattice.standard(2)))
    (entry,) = torus["components"]
    assert entry["subtorus_dim"] == 2
    assert not entry["closed_subtorus"]
