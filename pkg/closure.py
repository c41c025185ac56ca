"""
Assembly of the closure decomposition

    cl(X + Lambda) = (X + Lambda) u U_i (C_i + V_i^Lambda + Lambda)

from families of asymptotic flats: V_i is the span of the directions in family i,
C_i the family's translates projected to V_i^perp, and V_i^Lambda the lattice
saturation of V_i.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

from asymptotics import AsymptoticFlat
from config import settings
from errors import (
    ContainmentError,
    DimensionMismatchError,
    EmptyFamilyError,
    IncompatibleParametersError,
    InvariantBreach,
    MathPreconditionError,
)
from exact_linalg import (
    COMPLEX,
    REAL,
    Lattice,
    Subspace,
    Vector,
    as_vector,
    kernel,
    lambda_saturate,
    lattice_points_basis,
    matrix_rank,
    realify,
)
from numberfield import NumberFieldElem, fraction_str
from parameters import KPoly, ParameterSystem

logger = logging.getLogger(__name__)

PolyVector = Tuple[KPoly, ...]


class FlatFamily:
    """Flats sharing ambient, mode and parameter system; one family T_i"""

    def __init__(self, members: Sequence[AsymptoticFlat], label: Optional[str] = None):
        members = list(members)
        if not members:
            raise EmptyFamilyError("a flat family needs at least one member")
        first = members[0]
        for A in members[1:]:
            if A.n != first.n:
                raise DimensionMismatchError("family members live in different ambients", {"label": label})
            if A.mode != first.mode:
                raise MathPreconditionError("family mixes real and complex flats", {"label": label})
            if not A.params.compatible(first.params):
                raise IncompatibleParametersError("family members carry different parameter systems",
                                                  {"label": label})
        self.members = members
        self.label = label
        self.mode = first.mode
        self.n = first.n
        self.params = first.params
        for A in members[1:]:
            self.params = self.params.merge(A.params)

    @property
    def ambient_dim(self) -> int:
        return self.members[0].ambient_dim

    @property
    def k(self) -> int:
        return max(A.dim for A in self.members)

    @cached_property
    def span(self) -> Subspace:
        return family_span(self)

    def unbounded(self) -> "FlatFamily":
        """Same family without its points (flats of dimension 0)."""
        kept = [A for A in self.members if A.generators]
        if not kept:
            raise EmptyFamilyError("family has no unbounded member", {"label": self.label})
        return FlatFamily(kept, self.label)

    def __len__(self) -> int:
        return len(self.members)


def family_span(T: FlatFamily) -> Subspace:
    """
    Span of all direction spaces in the family

    The parameter-monomial coefficient vectors give the candidate span; union of
    directions at sampled parameter points must reach the same dimension.
    """
    if not T.members:
        raise EmptyFamilyError("empty family")
    complex_ambient = T.mode == COMPLEX
    candidate_vectors: List[Vector] = []
    for A in T.members:
        candidate_vectors.extend(A.monomial_vectors())
    candidate = Subspace(T.ambient_dim, candidate_vectors, mode=T.mode, complex_ambient=complex_ambient)
    if T.params.is_trivial:
        return candidate

    sampled = Subspace.zero(T.ambient_dim, mode=T.mode, complex_ambient=complex_ambient)
    for round_ in range(4):
        before = sampled.dim
        for A in T.members:
            for point in A.sample_points():
                sampled = sampled.sum(A.direction_at(point))
        if sampled.dim == candidate.dim:
            return candidate
        if round_ and sampled.dim == before:
            break
    if not candidate.contains(sampled):
        raise InvariantBreach("sampled directions leave the monomial span")
    logger.warning(f"Family span: monomial span has dim {candidate.dim}, sampled rank stabilized at {sampled.dim}")
    return sampled


@dataclass
class TranslateSet:
    """Parametric point set {c(t) : t in domain}, or finitely many points when non-parametric"""

    points: List[PolyVector]
    params: ParameterSystem = dataclass_field(default_factory=ParameterSystem)
    mode: str = COMPLEX

    def __post_init__(self):
        unique: List[PolyVector] = []
        for p in self.points:
            p = tuple(self.params.reduce(self.params.poly(x)) if self.params.constraints else self.params.poly(x)
                      for x in p)
            if p not in unique:
                unique.append(p)
        self.points = unique

    @property
    def n(self) -> int:
        return len(self.points[0]) if self.points else 0

    def is_parametric(self) -> bool:
        return any(not x.is_constant() for p in self.points for x in p)

    def is_finite(self) -> bool:
        return not self.is_parametric()

    def at(self, point: Optional[Dict[str, NumberFieldElem]] = None) -> List[Tuple[NumberFieldElem, ...]]:
        if self.params.is_trivial or not self.is_parametric():
            return [tuple(x.constant_value() if x.is_constant() else x.evaluate(point or {}) for x in p)
                    for p in self.points]
        return [tuple(x.evaluate(point) for x in p) for p in self.points]

    def ambient_vectors(self, point=None) -> List[Vector]:
        values = self.at(point)
        return [realify(v) if self.mode == COMPLEX else as_vector(v) for v in values]

    def sample_points(self):
        return self.params.sample_points(settings.PARAM_SAMPLES) if self.is_parametric() else [{}]

    def dimension(self) -> int:
        """Generic rank of the parametrization restricted to the tangent space of the domain."""
        if not self.is_parametric():
            return 0
        names = list(self.params.names)
        best = 0
        for point in self.sample_points():
            constraint_rows = [[c.partial(name).evaluate(point) for name in names] for c in self.params.constraints]
            tangent = kernel(constraint_rows, len(names)) if constraint_rows else kernel([], len(names))
            if not tangent:
                continue
            for p in self.points:
                jac = [[x.partial(name).evaluate(point) for name in names] for x in p]
                image = [[sum((row[j] * t[j] for j in range(len(names))), row[0].field.zero) for t in tangent]
                         for row in jac]
                best = max(best, matrix_rank(image, len(tangent)))
        return best

    def closedness(self) -> str:
        """finite / closed (a graph over the parameter domain) / possibly non-closed."""
        if self.is_finite():
            return "finite"
        recovered = set()
        for p in self.points:
            for x in p:
                used = x.used_variables()
                if len(used) == 1 and x.total_degree() == 1:
                    recovered.update(used)
        if recovered >= set(self.params.names):
            return "closed"
        return "possibly non-closed"

    def key(self) -> Tuple:
        return (self.params.names, frozenset(self.params.constraints), frozenset(self.points))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "points": [[repr(x) for x in p] for p in self.points],
            "params": list(self.params.names),
            "constraints": [repr(c) for c in self.params.constraints],
        }


def translate_set(T: FlatFamily, V: Subspace) -> TranslateSet:
    """
    C = {proj_{V^perp}(base(A)) : A in T}

    Each (A + V) meets V^perp in exactly one point once L(A) is inside V.
    """
    if V.ambient_dim != T.ambient_dim:
        raise DimensionMismatchError("subspace and family live in different ambients")
    for A in T.members:
        for point in A.sample_points():
            if not V.contains(A.direction_at(point)):
                raise ContainmentError("direction of a family member is not inside V", {"label": T.label})
    P = V.coordinate_projector()
    points: List[PolyVector] = []
    for A in T.members:
        projected = []
        for row in P:
            total = T.params.poly(0)
            for coeff, x in zip(row, A.base):
                if not coeff.is_zero():
                    total = total + x * coeff
            projected.append(total)
        points.append(tuple(projected))
    return TranslateSet(points, T.params, T.mode)


@dataclass
class ClosureComponent:
    C: TranslateSet
    V: Subspace
    V_lambda: Subspace
    maximal: bool = False
    families: List[str] = dataclass_field(default_factory=list)

    @property
    def closedness(self) -> str:
        return self.C.closedness()


@dataclass
class ClosureDescription:
    """Right-hand side of the closure formula, immutable once assembled"""

    lattice: Lattice
    components: List[ClosureComponent]
    mode: str = COMPLEX
    n: int = 0
    variety: Optional[List[KPoly]] = None
    bounded_flats: int = 0

    @property
    def maximal_components(self) -> List[ClosureComponent]:
        return [c for c in self.components if c.maximal]


def _build_component(T: FlatFamily, lattice: Lattice) -> ClosureComponent:
    V = family_span(T)
    C = translate_set(T, V)
    complement = V.orth_complement()
    for point in C.sample_points()[:3]:
        for vector in C.ambient_vectors(point):
            if not complement.contains_vector(vector):
                raise InvariantBreach("translate point left the orthogonal complement", {"label": T.label})
    V_lambda = lambda_saturate(V, lattice)
    if not V_lambda.contains(V):
        raise InvariantBreach("saturation does not contain the subspace")
    return ClosureComponent(C, V, V_lambda, families=[T.label] if T.label else [])


def assemble_closure(families: Sequence[FlatFamily], lattice: Lattice,
                     X: Optional[Sequence[KPoly]] = None) -> ClosureDescription:
    """
    Closure decomposition from flat families

    Args:
        families: one FlatFamily per branch family; points (bounded flats) are dropped
        lattice: full-rank lattice of the ambient
        X: defining polynomials, carried along for reporting

    Returns:
        ClosureDescription with deduplicated components and maximality flags
    """
    families = list(families)
    modes = {T.mode for T in families}
    if len(modes) > 1:
        raise MathPreconditionError("families mix real and complex modes")
    dims = {T.ambient_dim for T in families}
    if len(dims) > 1:
        raise DimensionMismatchError("families live in different ambients", {"dims": sorted(dims)})
    mode = modes.pop() if modes else (COMPLEX if lattice.complex_ambient else REAL)
    if dims and dims.pop() != lattice.ambient_dim:
        raise DimensionMismatchError("families and lattice live in different ambients")

    unbounded: List[FlatFamily] = []
    bounded = 0
    for T in families:
        kept = [A for A in T.members if A.generators]
        bounded += len(T.members) - len(kept)
        if kept:
            unbounded.append(FlatFamily(kept, T.label))
    logger.info(f"Assembling closure from {len(unbounded)} families ({bounded} bounded flats belong to X)")

    if settings.WORKERS > 1 and len(unbounded) > 1:
        with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
            built = list(pool.map(lambda T: _build_component(T, lattice), unbounded))
    else:
        built = [_build_component(T, lattice) for T in unbounded]

    components: List[ClosureComponent] = []
    for comp in built:
        duplicate = next((c for c in components if c.V.equals(comp.V) and c.C.key() == comp.C.key()), None)
        if duplicate is not None:
            duplicate.families.extend(comp.families)
            continue
        components.append(comp)
    for comp in components:
        comp.maximal = not any(comp.V < other.V for other in components if other is not comp)

    n = lattice.ambient_dim // 2 if mode == COMPLEX else lattice.ambient_dim
    description = ClosureDescription(lattice, components, mode, n, list(X) if X is not None else None, bounded)
    logger.info(f"✓ {len(components)} components, {len(description.maximal_components)} maximal")
    return description


def clause_checks(desc: ClosureDescription, dim_x: int = 1) -> Dict[str, Any]:
    """
    Check dim C_i < dim X for every component and finiteness of C_i on maximal V_i

    Returns:
        report dict with 'status' ('pass' / 'fail'), per-component findings and violations
    """
    findings = []
    violations = []
    for index, comp in enumerate(desc.components):
        dim_c = comp.C.dimension()
        clause_i = dim_c < dim_x
        finite = comp.C.is_finite()
        clause_ii = finite if comp.maximal else None
        finding = {
            "index": index,
            "dim_C": dim_c,
            "dim_V": comp.V.dim,
            "maximal": comp.maximal,
            "finite": finite,
            "clause_i": clause_i,
            "clause_ii": clause_ii,
            "closedness": comp.closedness,
        }
        findings.append(finding)
        if not clause_i:
            violations.append({"index": index, "clause": "i", "message": f"dim C = {dim_c} is not below dim X = {dim_x}"})
            logger.warning(f"✗ Component {index}: dim C = {dim_c} >= dim X = {dim_x}")
        if clause_ii is False:
            violations.append({"index": index, "clause": "ii", "message": "maximal component with infinite C"})
            logger.warning(f"✗ Component {index}: maximal V with infinite C")
        if clause_i and clause_ii is not False:
            logger.info(f"✓ Component {index}: dim C = {dim_c}, maximal={comp.maximal}")
    return {
        "status": "pass" if not violations else "fail",
        "dim_x": dim_x,
        "components": findings,
        "violations": violations,
    }


def _fold_exact(values: Sequence[NumberFieldElem]) -> Optional[List[str]]:
    if not all(x.is_rational() for x in values):
        return None
    return [fraction_str(x.to_fraction() - (x.to_fraction().numerator // x.to_fraction().denominator)) for x in values]


def torus_description(desc: ClosureDescription) -> Dict[str, Any]:
    """
    Torus-side reading: subtori pi(V_i^Lambda) by integral lattice data, and pi(C_i)

    Returns:
        dict with one entry per component: real dimension of the subtorus, a Z-basis of
        Lambda n V_i^Lambda in lattice coordinates, and the folded translate when C_i is finite
    """
    lattice = desc.lattice
    entries = []
    for index, comp in enumerate(desc.components):
        basis = lattice_points_basis(comp.V_lambda, lattice)
        entry = {
            "index": index,
            "subtorus_dim": comp.V_lambda.dim,
            "lattice_basis": [[int(x) for x in basis[:, j]] for j in range(basis.shape[1])] if basis.size else [],
            "closed_subtorus": comp.V_lambda.equals(comp.V),
            "translate_closedness": comp.closedness,
            "maximal": comp.maximal,
        }
        if comp.C.is_finite():
            folded = []
            for vector in comp.C.ambient_vectors():
                folded.append(_fold_exact(lattice.to_coords(vector)))
            entry["folded_translates"] = folded
        else:
            entry["translate_curve"] = comp.C.to_dict()
        entries.append(entry)
    return {"status": "ok", "ambient_real_dim": lattice.ambient_dim, "components": entries}
