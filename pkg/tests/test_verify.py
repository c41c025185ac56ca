import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from asymptotics import flat_of_branch
from closure import ClosureComponent, ClosureDescription, FlatFamily, TranslateSet, assemble_closure
from config import random_rational
from errors import SamplerError
from exact_linalg import COMPLEX, REAL, Lattice, Subspace, as_vector
from parameters import KPoly
from puiseux import PuiseuxBranch, PuiseuxScalar
from serialization import Bundle, load_json
from tests.conftest import fixture_path
from verify import (
    VerificationReport,
    _nearest,
    attraction_test,
    density_test,
    fold,
    line_slice_samples,
    torus_distance,
    write_point_cloud,
)


def z(q, c=1):
    return PuiseuxScalar.monomial(c, q)


HYPERBOLA_BRANCHES = [PuiseuxBranch([z(-1), z(1)]), PuiseuxBranch([z(1), z(-1)])]


def closure_of(branches, lattice, mode=COMPLEX) -> ClosureDescription:
    families = [FlatFamily([flat_of_branch(b, mode)], label=f"family-{k}") for k, b in enumerate(branches)]
    return assemble_closure(families, lattice)


def real_axis_component() -> ClosureComponent:
    V = Subspace(2, [[1, 0]])
    return ClosureComponent(TranslateSet([(0, 0)], mode=REAL), V, V)


@pytest.fixture
def surface():
    bundle = Bundle.from_dict(load_json(fixture_path("surface_x1yz.json")))
    branches = [family[0] for family in bundle.families]
    families = [FlatFamily([flat_of_branch(b)], label=f"family-{k}") for k, b in enumerate(branches)]
    return branches, assemble_closure(families, bundle.lattice, bundle.variety)


# ----------------------------------------------------------------------------
# fold


def test_fold_standard_lattice():
    p = fold((2.5, -0.25), Lattice.standard(2))
    assert p.is_exact()
    assert [c.lo for c in p.coords] == [Fraction(1, 2), Fraction(3, 4)]


def test_fold_scaled_basis():
    p = fold((3, 0), Lattice([[2, 0], [0, 1]]))
    assert [c.lo for c in p.coords] == [Fraction(1, 2), 0]


def test_fold_gaussian_entries_is_exact(qi):
    p = fold([qi.element([Fraction(5, 2), Fraction(-1, 3)])], Lattice.gaussian(1))
    assert p.is_exact()
    assert [c.lo for c in p.coords] == [Fraction(1, 2), Fraction(2, 3)]


def test_fold_irrational_entry(q_sqrt2):
    p = fold([q_sqrt2.gen, q_sqrt2.zero], Lattice.standard(2))
    assert not p.is_exact()
    assert p.width < Fraction(1, 10 ** 12)
    assert p.mid[0] == pytest.approx(math.sqrt(2) - 1)


def test_fold_is_lattice_periodic():
    lattice = Lattice([[2, 1], [0, 3]])
    for _ in range(50):
        x = as_vector([random_rational(20) for _ in range(2)])
        shift = lattice.from_coords([int(random_rational(5)) for _ in range(2)])
        moved = tuple(a + b for a, b in zip(x, shift))
        assert fold(moved, lattice) == fold(x, lattice)


# ----------------------------------------------------------------------------
# torus_distance


def test_distance_to_real_axis():
    lattice = Lattice.standard(2)
    d = torus_distance(fold((0.5, 0.5), lattice), real_axis_component(), lattice)
    assert d.contains(Fraction(1, 2))
    assert float(d.hi) < 0.5 + 1e-9


def test_distance_to_own_component_is_zero():
    lattice = Lattice.standard(2)
    d = torus_distance(fold((7.25, 3), lattice), real_axis_component(), lattice)
    assert d.lo == 0
    assert float(d.hi) < 1e-9


def test_hyperbola_sample_is_close_to_its_axis():
    lattice = Lattice.gaussian(2)
    desc = closure_of(HYPERBOLA_BRANCHES, lattice)
    d = torus_distance(fold([1000 + 0j, 0.001 + 0j], lattice), desc.components[0], lattice)
    assert float(d.hi) <= 1.1e-3


# ----------------------------------------------------------------------------
# attraction


@pytest.mark.slow
def test_hyperbola_attraction_passes():
    desc = closure_of(HYPERBOLA_BRANCHES, Lattice.gaussian(2))
    report = attraction_test(HYPERBOLA_BRANCHES, desc, radii=[1e2, 1e3, 1e4], tol=0.05, samples=8)
    assert report.passed
    assert report.samples == 2 * 3 * 8
    assert report.max_distance < 0.02


@pytest.mark.slow
def test_surface_attraction_passes(surface):
    branches, desc = surface
    report = attraction_test(branches, desc, radii=[1e3, 1e4], tol=0.05, samples=6)
    assert report.passed
    assert set(report.components) <= {"C0", "C1", "C2", "C3"}


@pytest.mark.slow
def test_missing_plane_is_detected(surface):
    branches, desc = surface
    without_first = ClosureDescription(desc.lattice, desc.components[1:], desc.mode, desc.n)
    report = attraction_test([branches[0]], without_first, radii=[1e3, 1e4], tol=0.05, samples=6)
    assert not report.passed
    for failure in report.failures:
        x_re, x_im = failure["point"][:2]
        assert min(x_re, 1 - x_re) < 1e-3
        assert min(x_im, 1 - x_im) < 1e-3


def test_empty_prediction_fails():
    lattice = Lattice.gaussian(2)
    empty = ClosureDescription(lattice, [], COMPLEX, 2)
    report = attraction_test(HYPERBOLA_BRANCHES, empty, radii=[1e3], tol=0.05, samples=4)
    assert not report.passed
    assert report.to_dict()["components"]["none"]["max_distance"] == "inf"


def test_whole_space_prediction_passes():
    lattice = Lattice.gaussian(2)
    everything = Subspace.full(4, COMPLEX)
    component = ClosureComponent(TranslateSet([(0, 0)]), everything, everything, maximal=True)
    report = attraction_test(HYPERBOLA_BRANCHES, ClosureDescription(lattice, [component], COMPLEX, 2),
                             radii=[1e3], tol=0.05, samples=4)
    assert report.passed


def test_bounded_branches_cannot_be_attracted():
    lattice = Lattice.gaussian(2)
    bounded = PuiseuxBranch([PuiseuxScalar.constant(1), z(1)])
    with pytest.raises(SamplerError):
        attraction_test([bounded], ClosureDescription(lattice, [], COMPLEX, 2), radii=[1e3])


def test_line_slices_land_on_the_curve():
    f = KPoly.from_expr("x*y - 1", ("x", "y"))
    points = line_slice_samples(f, 100.0, 5)
    assert points.shape == (5, 4)
    values = (points[:, 0] + 1j * points[:, 1]) * (points[:, 2] + 1j * points[:, 3])
    assert np.allclose(values, 1, atol=1e-6)
    assert (np.linalg.norm(points, axis=1) >= 50).all()


# ----------------------------------------------------------------------------
# density


def test_irrational_line_is_dense_in_the_torus(q_sqrt2):
    V = Subspace(2, [[q_sqrt2.one, q_sqrt2.gen]])
    report = density_test(V, Lattice.standard(2), eps=0.05)
    assert report.passed
    assert report.discrepancy["subtorus_dim"] == 2
    assert report.discrepancy["max_gap"] <= 0.05


def test_rational_line_stays_on_its_subtorus():
    V = Subspace(2, [[1, 1]])
    report = density_test(V, Lattice.standard(2), eps=0.05, queries=[(0.5, 0.0)])
    assert report.passed
    assert report.discrepancy["saturation_dim"] == 1
    assert report.discrepancy["query_distances"][0] > 0.2


def test_complex_axis_fills_a_two_torus():
    V = Subspace.from_complex([[1, 0, 0]], 3)
    report = density_test(V, Lattice.gaussian(3), eps=0.05)
    assert report.passed
    assert report.discrepancy["subtorus_dim"] == 2
    assert report.discrepancy["max_offset"] < 1e-9


# ----------------------------------------------------------------------------
# reports


def sample_report(seed: int) -> VerificationReport:
    report = VerificationReport("attraction", 0.05)
    rng = np.random.default_rng(seed)
    for k in range(4):
        report.add(rng.uniform(size=2), f"C{k % 2}", float(rng.uniform(0, 0.1)), 10.0 ** (2 + k % 2), True,
                   f"branch-{seed}")
    return report


def test_report_merge_is_associative_and_commutative():
    a, b, c = sample_report(1), sample_report(2), sample_report(3)
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert left.to_dict() == right.to_dict()
    assert left.records == right.records
    assert a.merge(b).to_dict() == b.merge(a).to_dict()
    assert left.samples == 12


def test_point_cloud_csv(tmp_path):
    report = sample_report(4)
    path = write_point_cloud(report, str(tmp_path / "cloud.csv"))
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["x1", "x2", "component", "distance"]
    assert len(frame) == 4


def fixed_geometry(index: int, distance: float, padding: float) -> SimpleNamespace:
    return SimpleNamespace(index=index, parametric=False, distance=lambda x, hints, good_enough: distance,
                           padding=lambda x: padding)


@pytest.mark.parametrize("order", [(0, 1), (1, 0)])
def test_nearest_component_compares_padded_distances(order):
    # the closer centre carries the larger rounding pad
    geometries = [fixed_geometry(0, 0.30, 0.0), fixed_geometry(1, 0.25, 0.10)]
    label, d = _nearest([geometries[k] for k in order], np.zeros(4), [], 0.01)
    assert label == "C0"
    assert d == 0.30


def test_nearest_component_stops_when_good_enough():
    geometries = [fixed_geometry(0, 0.001, 0.0), fixed_geometry(1, 0.0, 0.0)]
    assert _nearest(geometries, np.zeros(4), [], 0.01) == ("C0", 0.001)
