"""
Asymptotic flats of branches.

A branch alpha(z) = sum_{q<0} a_q z^q + a_0 + (terms of positive order) lies
infinitesimally close to the flat a_0 + span{a_q : q < 0} and to no smaller one:
a linear functional l has l(alpha) bounded iff it kills every a_q with q < 0,
and then the standard part of l(alpha) is l(a_0). Everything below is finite
linear algebra on these coefficient vectors.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from config import settings
from errors import (
    ConjugationError,
    ContainmentError,
    DimensionMismatchError,
    IncompatibleParametersError,
    InvariantBreach,
    MathPreconditionError,
    ParameterDependenceError,
    SchemaError,
    UncertifiedValuationError,
)
from exact_linalg import COMPLEX, REAL, Flat, Subspace, Vector, as_vector, realify
from numberfield import RATIONALS, NumberField, NumberFieldElem, as_fraction, common_field
from parameters import KPoly, ParameterSystem
from puiseux import (
    INF,
    PuiseuxBranch,
    PuiseuxScalar,
    Valuation,
    evaluate_polynomial,
    next_exponent_above,
    residual_valuation,
    series_inverse,
    valuation_bound,
)

logger = logging.getLogger(__name__)

PolyVector = Tuple[KPoly, ...]


def certified_valuation(s: PuiseuxScalar) -> Valuation:
    """
    Valuation of one branch coordinate, certified where it matters

    A negative leading exponent must have a leading coefficient that is nowhere
    zero on the parameter domain. Non-negative results are lower bounds, which is
    all the bounded/unbounded dichotomy needs.
    """
    if s.truncation is not None and s.truncation < 0:
        raise UncertifiedValuationError("principal part is not fully known",
                                        {"truncation": str(s.truncation)})
    for q, c in s.terms.items():
        if q >= 0:
            return q
        if s.params.is_trivial:
            return q
        if s.params.is_zero(c):
            continue
        if not s.params.is_nowhere_zero(c):
            raise ParameterDependenceError("leading coefficient vanishes on part of the parameter domain",
                                           {"exponent": str(q), "coefficient": repr(c)})
        return q
    if s.truncation is None:
        return INF
    return next_exponent_above(s.truncation, s.ramification)


def _check_mode(mode: str) -> str:
    if mode not in (REAL, COMPLEX):
        raise SchemaError(f"unknown scalar mode {mode!r}")
    return mode


@dataclass
class AsymptoticFlat:
    """
    Flat a_0 + span{a_q : q < 0} attached to a branch, possibly parametric

    base and generators hold coordinate vectors (C^n in complex mode, R^n in real
    mode) whose entries are polynomials in the parameters. The negative exponents
    of the generators are kept as the minimality certificate: dropping any subset
    that changes the span yields a flat the branch does not approach.
    """

    base: PolyVector
    generators: List[Tuple[Fraction, PolyVector]]
    mode: str = COMPLEX
    params: ParameterSystem = dataclass_field(default_factory=ParameterSystem)
    source: Optional[PuiseuxBranch] = dataclass_field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _check_mode(self.mode)
        self.base = tuple(self.params.poly(p) for p in self.base)
        self.generators = [(as_fraction(q), tuple(self.params.poly(p) for p in v)) for q, v in self.generators]
        for _, v in self.generators:
            if len(v) != len(self.base):
                raise DimensionMismatchError("generator length differs from the base point")

    @property
    def field(self) -> NumberField:
        polys = list(self.base) + [p for _, v in self.generators for p in v]
        return common_field(*(p.field for p in polys)) if polys else RATIONALS

    @property
    def n(self) -> int:
        return len(self.base)

    @property
    def ambient_dim(self) -> int:
        return 2 * self.n if self.mode == COMPLEX else self.n

    @property
    def exponents(self) -> List[Fraction]:
        return [q for q, _ in self.generators]

    def is_parametric(self) -> bool:
        return not self.params.is_trivial

    def _values(self, polys: Sequence[KPoly], point: Optional[Mapping] = None) -> List[NumberFieldElem]:
        if self.is_parametric():
            if point is None:
                raise IncompatibleParametersError("parametric flat needs a parameter point",
                                                  {"params": list(self.params.names)})
            return [p.evaluate(point) for p in polys]
        return [p.constant_value() for p in polys]

    def coordinate_vector(self, polys: Sequence[KPoly], point: Optional[Mapping] = None) -> Vector:
        """Realified (complex mode) or plain (real mode) vector of the ambient."""
        values = self._values(polys, point)
        if self.mode == COMPLEX:
            return realify(values)
        for x in values:
            if not x.field.is_real:
                raise ConjugationError("real-mode flat with non-real coordinates", {"field": x.field.descriptor()})
        return as_vector(values)

    def direction_at(self, point: Optional[Mapping] = None, indices: Optional[Sequence[int]] = None) -> Subspace:
        chosen = self.generators if indices is None else [self.generators[k] for k in indices]
        vectors = [self.coordinate_vector(v, point) for _, v in chosen]
        return Subspace(self.ambient_dim, vectors, mode=self.mode, complex_ambient=self.mode == COMPLEX)

    def at(self, point: Optional[Mapping] = None) -> Flat:
        return Flat(self.coordinate_vector(self.base, point), self.direction_at(point))

    @property
    def flat(self) -> Flat:
        if self.is_parametric():
            raise IncompatibleParametersError("flat depends on parameters; use at(point)")
        return self.at()

    def sample_points(self) -> List[Dict[str, NumberFieldElem]]:
        return self.params.sample_points(settings.PARAM_SAMPLES)

    @cached_property
    def dim(self) -> int:
        """Real dimension; for families the maximum over sampled parameter points."""
        if not self.generators:
            return 0
        return max(self.direction_at(p).dim for p in self.sample_points())

    def monomial_vectors(self) -> List[Vector]:
        """Ambient vectors of the parameter-monomial coefficients of every generator."""
        vectors = []
        for _, v in self.generators:
            monos = sorted({m for p in v for m in p.terms})
            for mono in monos:
                entries = [p.terms.get(mono, p.field.zero) for p in v]
                if self.mode == COMPLEX:
                    vectors.append(realify(entries))
                else:
                    vectors.append(as_vector(entries))
        return vectors

    def translate(self, c: Sequence) -> "AsymptoticFlat":
        base = tuple(p + x for p, x in zip(self.base, c))
        return AsymptoticFlat(base, list(self.generators), self.mode, self.params, self.source)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "base": [repr(p) for p in self.base],
            "dirs": [[repr(p) for p in v] for _, v in self.generators],
            "exponents": [str(q) for q in self.exponents],
            "params": list(self.params.names),
        }


def flat_of_branch(alpha: PuiseuxBranch, mode: str = COMPLEX) -> AsymptoticFlat:
    """
    Asymptotic flat of a branch

    Args:
        alpha: branch whose coordinate valuations can be certified
        mode: "complex" closes the span under multiplication by i, "real" keeps the
            R-span (real Laurent branches only)

    Returns:
        AsymptoticFlat with base a_0 and one generator a_q per negative exponent q
    """
    _check_mode(mode)
    if mode == REAL and not alpha.field.is_real:
        raise ConjugationError("real mode needs real coefficients", {"field": alpha.field.descriptor()})
    for coord in alpha.coords:
        certified_valuation(coord)
    exponents = sorted({q for coord in alpha.coords for q in coord.terms if q < 0})
    generators = [(q, tuple(coord.coefficient(q) for coord in alpha.coords)) for q in exponents]
    base = tuple(coord.coefficient(0) for coord in alpha.coords)
    flat = AsymptoticFlat(base, generators, mode, alpha.params, alpha)
    logger.debug(f"Asymptotic flat with {len(generators)} principal exponents ({mode} mode)")
    return flat


def is_bounded(alpha: PuiseuxBranch) -> bool:
    bounded = all(certified_valuation(c) >= 0 for c in alpha.coords)
    flat = flat_of_branch(alpha, COMPLEX)
    if bounded != (not flat.generators):
        raise InvariantBreach("boundedness disagrees with the dimension of the asymptotic flat")
    return bounded


# ----------------------------------------------------------------------------
# the functional criterion


def _ambient_series(alpha: PuiseuxBranch, complex_ambient: bool) -> List[PuiseuxScalar]:
    """Coordinates of a non-parametric branch in the real ambient (coefficientwise Re/Im)."""
    if alpha.is_parametric():
        raise IncompatibleParametersError("functional tests need a specialized branch; use alpha.at(point)")
    if not complex_ambient:
        return list(alpha.coords)
    series = []
    for coord in alpha.coords:
        re_terms, im_terms = {}, {}
        for q, c in coord.terms.items():
            re, im = c.constant_value().real_imag()
            re_terms[q], im_terms[q] = re, im
        series.append(PuiseuxScalar(re_terms, coord.ramification, coord.truncation))
        series.append(PuiseuxScalar(im_terms, coord.ramification, coord.truncation))
    return series


def _apply(functional: Sequence[NumberFieldElem], series: Sequence[PuiseuxScalar]) -> PuiseuxScalar:
    total = PuiseuxScalar.zero()
    for coeff, s in zip(functional, series):
        if not coeff.is_zero():
            total = total + s * coeff
    return total


def _is_infinitesimal(s: PuiseuxScalar) -> bool:
    if s.terms:
        return s.leading_exponent() > 0
    if s.truncation is None or s.truncation >= 0:
        return True
    raise UncertifiedValuationError("truncation too low to decide", {"truncation": str(s.truncation)})


def cut_out(A: Flat) -> Tuple[List[Vector], List[NumberFieldElem]]:
    """Functionals M and values r with A = {x : M x = r}."""
    rows = A.direction.annihilator()
    values = []
    for row in rows:
        total = RATIONALS.zero
        for a, b in zip(row, A.base):
            total = total + a * b
        values.append(total)
    return rows, values


def within_mu(alpha: PuiseuxBranch, A: Flat) -> bool:
    """Whether alpha lies infinitesimally close to A: every l(alpha) - r is infinitesimal."""
    series = _ambient_series(alpha, A.direction.complex_ambient)
    if len(series) != A.direction.ambient_dim:
        raise DimensionMismatchError("branch and flat live in different ambients")
    rows, values = cut_out(A)
    return all(_is_infinitesimal(_apply(row, series) - r) for row, r in zip(rows, values))


def minimality_witness(alpha: PuiseuxBranch, A: AsymptoticFlat,
                       subset: Sequence[int]) -> Optional[Tuple[Vector, Fraction]]:
    """
    Witness that the flat spanned by a strict subset of generators is too small

    Returns:
        (l, q): l vanishes on the smaller direction and l(alpha) has valuation q < 0;
        None when the subset spans the full direction (no proper subflat)
    """
    subset = sorted(set(subset))
    if len(subset) >= len(A.generators) or any(k < 0 or k >= len(A.generators) for k in subset):
        raise MathPreconditionError("subset must be a strict subset of the generator indices",
                                    {"subset": subset, "generators": len(A.generators)})
    full = A.direction_at()
    smaller = A.direction_at(indices=subset)
    if smaller.equals(full):
        return None
    series = _ambient_series(alpha, A.mode == COMPLEX)
    for functional in smaller.annihilator():
        image = _apply(functional, series)
        q = valuation_bound(image)
        if q < 0:
            return functional, q
    raise InvariantBreach("proper subflat without a negative-valuation witness", {"subset": subset})


# ----------------------------------------------------------------------------
# decomposition


@dataclass
class FlatDecomposition:
    """Reassembled flat H + A_{alpha_1}"""

    H: Subspace
    projected: AsymptoticFlat

    def at(self, point: Optional[Mapping] = None) -> Flat:
        part = self.projected.at(point)
        return Flat(part.base, self.H.sum(part.direction))

    @property
    def flat(self) -> Flat:
        return self.at()


def flat_decompose(alpha: PuiseuxBranch, H: Subspace) -> Tuple[PuiseuxBranch, FlatDecomposition]:
    """
    Split A_alpha = H + A_{alpha_1} with alpha_1 the projection of alpha onto H^perp along H

    Args:
        alpha: branch
        H: subspace of the direction of A_alpha (i-invariant in a complex ambient)

    Returns:
        (alpha_1, reassembled flat), the reassembly checked against A_alpha exactly
    """
    mode = COMPLEX if H.complex_ambient else REAL
    A = flat_of_branch(alpha, mode)
    if H.ambient_dim != A.ambient_dim:
        raise DimensionMismatchError("subspace and branch live in different ambients",
                                     {"subspace": H.ambient_dim, "flat": A.ambient_dim})
    points = A.sample_points()
    for point in points:
        if not A.direction_at(point).contains(H):
            raise ContainmentError("H is not contained in the direction of the asymptotic flat")
    P = H.coordinate_projector()
    coords = []
    for row in P:
        total = PuiseuxScalar.zero(params=alpha.params)
        for coeff, s in zip(row, alpha.coords):
            if not coeff.is_zero():
                total = total + s * coeff
        coords.append(total)
    alpha_1 = PuiseuxBranch(coords, alpha.params, check_domain=False)
    decomposition = FlatDecomposition(H, flat_of_branch(alpha_1, mode))
    for point in points:
        if decomposition.at(point) != A.at(point):
            raise InvariantBreach("reassembled flat differs from the asymptotic flat")
    return alpha_1, decomposition


# ----------------------------------------------------------------------------
# stabilizer semi-decision


def _taylor_coefficients(f: KPoly) -> List[Tuple[Tuple[int, ...], KPoly]]:
    """(m, d^m f / m!) for every multi-index with |m| >= 1 and a nonzero derivative."""
    degree = f.total_degree()
    result = []
    for total in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(f.variables)), total):
            m = tuple(combo.count(k) for k in range(len(f.variables)))
            d = f
            for k, e in enumerate(m):
                for _ in range(e):
                    d = d.partial(f.variables[k])
            if d.is_zero():
                continue
            scale = math.prod(math.factorial(e) for e in m)
            result.append((m, d * Fraction(1, scale)))
    return result


def _obstruction(f: KPoly, derivatives, beta: PuiseuxBranch, order: Fraction):
    """
    Leading term of -f(beta) when no infinitesimal correction can cancel it

    The obstruction is reported as c z^q with f(beta) = -c z^q + (higher terms), so
    y - x^2 at (1 + z^-1, z^-2) is obstructed by 2 z^-1.
    """
    residual = evaluate_polynomial(f, beta)
    if not residual.terms:
        return None, residual
    kappa = min((valuation_bound(evaluate_polynomial(d, beta)) for _, d in derivatives), default=INF)
    q, c = residual.leading()
    if q <= order and q <= kappa:
        return (q, -c.constant_value()), residual
    return None, residual


def mu_stab_member(v: Sequence, alpha: PuiseuxBranch, X: Sequence[KPoly], order) -> Dict[str, Any]:
    """
    Three-valued test whether translating alpha by v stays near the points of X

    Seeds gamma = v + alpha and looks for beta on X (up to `order`) with
    beta - gamma infinitesimal, by Newton steps on one pivot variable per step.

    Returns:
        dict with 'status' in {'yes', 'no', 'unknown'}; 'witness' (yes), 'exponent'
        and 'coefficient' of the obstruction c z^q with f(v + alpha) = -c z^q + ... (no),
        and a 'reason'
    """
    order = as_fraction(order)
    if alpha.is_parametric():
        raise IncompatibleParametersError("stabilizer test is implemented for non-parametric branches")
    X = list(X)
    for f in X:
        if len(f.variables) != alpha.n:
            raise DimensionMismatchError("polynomial system and branch have different numbers of variables")
    if any(r <= order for r in residual_valuation(X, alpha)):
        raise MathPreconditionError("branch does not satisfy the system to the requested order",
                                    {"order": str(order)})
    v = as_vector(v)
    if len(v) != alpha.n:
        raise DimensionMismatchError("translation vector has the wrong length")
    if all(x.is_zero() for x in v):
        return {"status": "yes", "witness": alpha, "reason": "zero translation", "steps": 0}

    if alpha.field.conjugation_closed and all(x.field.conjugation_closed for x in v):
        direction = flat_of_branch(alpha, COMPLEX).flat.direction
        if not direction.contains_vector(realify(v)):
            return {"status": "no", "witness": None, "exponent": None, "coefficient": None,
                    "reason": "translation leaves the direction of the asymptotic flat"}

    gamma = alpha.translate(v)
    taylor = [_taylor_coefficients(f) for f in X]
    jacobians = [[f.partial(name) for name in f.variables] for f in X]
    lowest = min((valuation_bound(evaluate_polynomial(d, gamma)) for row in jacobians for d in row), default=0)
    target = order + 1 - min(Fraction(0), lowest if lowest != INF else Fraction(0))

    for attempt in range(3):
        beta = gamma
        for step in range(settings.MAX_LIFT_STEPS):
            worst, worst_val, worst_residual = None, None, None
            for j, f in enumerate(X):
                found, residual = _obstruction(f, taylor[j], beta, order)
                if found is not None:
                    q, c = found
                    logger.info(f"✗ Obstruction {c}*z^{q} in equation {j}")
                    return {"status": "no", "witness": None, "exponent": q, "coefficient": c,
                            "equation": j, "reason": "leading residual term cannot be cancelled"}
                r = residual.generic_valuation()
                if r <= order and (worst_val is None or r < worst_val):
                    worst, worst_val, worst_residual = j, r, residual
            if worst is None:
                for a, b in zip(beta.coords, gamma.coords):
                    if valuation_bound(a - b) <= 0:
                        raise InvariantBreach("lifted branch drifted by a non-infinitesimal amount")
                logger.info(f"✓ Lift reached order {order} after {step} steps")
                return {"status": "yes", "witness": beta, "reason": "lift converged", "steps": step}
            if not worst_residual.terms:
                break
            partials = [evaluate_polynomial(d, beta) for d in jacobians[worst]]
            candidates = [(valuation_bound(p), k) for k, p in enumerate(partials) if p.terms]
            if not candidates:
                return {"status": "unknown", "witness": None, "reason": "Jacobian vanishes to known order"}
            _, k = min(candidates)
            inverse = series_inverse(partials[k], target - worst_residual.leading_exponent())
            delta = (-(worst_residual * inverse)).truncate(target)
            if delta.terms and delta.leading_exponent() <= 0:
                return {"status": "unknown", "witness": None,
                        "reason": "Newton correction is not infinitesimal"}
            coords = list(beta.coords)
            coords[k] = (coords[k] + delta).truncate(target)
            beta = PuiseuxBranch(coords, check_domain=False)
        target = target + order + 2
        logger.debug(f"Lift lost precision; retrying at truncation {target}")
    return {"status": "unknown", "witness": None, "reason": "lift did not converge"}
