"""
Puiseux / Laurent series with (optionally parametric) coefficients, and a
Newton-Puiseux solver for the branches of plane curves at infinity.

A series is a finite map exponent -> coefficient together with a truncation
order Q: exponents above Q are unknown, not zero (Q = None means the series is
exact). Exponents live in (1/e)Z for the ramification e. Coefficients are KPoly
in the names of a ParameterSystem and are kept in normal form modulo its
constraints.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from errors import (
    FieldExtensionError,
    IncompatibleParametersError,
    MathPreconditionError,
    NotSquarefreeError,
    ParameterDependenceError,
    SamplerError,
    UnboundedError,
    UncertifiedValuationError,
)
from numberfield import MAX_DEGREE, RATIONALS, THETA, NumberField, NumberFieldElem, as_fraction, common_field
from parameters import KPoly, ParameterSystem

logger = logging.getLogger(__name__)

INF = math.inf
MAX_NEWTON_DEPTH = 400

Valuation = Union[Fraction, float]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _min_trunc(*values: Optional[Fraction]) -> Optional[Fraction]:
    finite = [v for v in values if v is not None]
    return min(finite) if finite else None


def next_exponent_above(q: Fraction, e: int) -> Fraction:
    """Smallest element of (1/e)Z strictly greater than q."""
    return Fraction(math.floor(q * e) + 1, e)


class PuiseuxScalar:
    """Truncated Puiseux series sum_q c_q z^q"""

    __slots__ = ("terms", "ramification", "truncation", "params", "field")

    def __init__(self, terms: Mapping = None, ramification: int = 1, truncation: Optional[Fraction] = None,
                 params: Optional[ParameterSystem] = None, field: Optional[NumberField] = None):
        params = params or ParameterSystem()
        truncation = None if truncation is None else as_fraction(truncation)
        fields = [params.field] + ([field] if field is not None else [])
        raw: Dict[Fraction, KPoly] = {}
        for q, c in (terms or {}).items():
            q = as_fraction(q)
            if truncation is not None and q > truncation:
                continue
            poly = params.poly(c)
            fields.append(poly.field)
            raw[q] = raw[q] + poly if q in raw else poly
        self.field = common_field(*fields)
        e = int(ramification)
        cleaned: Dict[Fraction, KPoly] = {}
        for q in sorted(raw):
            poly = raw[q]
            if params.constraints:
                poly = params.reduce(poly)
            if not poly.is_zero():
                cleaned[q] = poly
                e = _lcm(e, q.denominator)
        self.terms = cleaned
        self.ramification = e
        self.truncation = truncation
        self.params = params

    # ------------------------------------------------------------------
    # constructors
    @classmethod
    def zero(cls, truncation: Optional[Fraction] = None, params: Optional[ParameterSystem] = None) -> "PuiseuxScalar":
        return cls({}, 1, truncation, params)

    @classmethod
    def constant(cls, value, params: Optional[ParameterSystem] = None) -> "PuiseuxScalar":
        return cls({Fraction(0): value}, 1, None, params)

    @classmethod
    def monomial(cls, value, exponent, params: Optional[ParameterSystem] = None) -> "PuiseuxScalar":
        return cls({as_fraction(exponent): value}, 1, None, params)

    def _like(self, terms, ramification=None, truncation="keep", params=None) -> "PuiseuxScalar":
        return PuiseuxScalar(terms, ramification or self.ramification,
                             self.truncation if truncation == "keep" else truncation, params or self.params)

    # ------------------------------------------------------------------
    # structure
    @property
    def exponents(self) -> List[Fraction]:
        return list(self.terms)

    @property
    def is_exact(self) -> bool:
        return self.truncation is None

    def is_exact_zero(self) -> bool:
        return not self.terms and self.truncation is None

    def is_parametric(self) -> bool:
        return not self.params.is_trivial

    def coefficient(self, q) -> KPoly:
        q = as_fraction(q)
        if self.truncation is not None and q > self.truncation:
            raise UncertifiedValuationError(f"coefficient of z^{q} lies beyond the truncation order {self.truncation}")
        return self.terms.get(q, self.params.poly(0))

    def leading(self) -> Tuple[Fraction, KPoly]:
        if not self.terms:
            raise UncertifiedValuationError("series has no known nonzero term")
        q = next(iter(self.terms))
        return q, self.terms[q]

    def leading_exponent(self) -> Fraction:
        return self.leading()[0]

    def _val_lower(self) -> Valuation:
        """Lower bound for the valuation used in truncation bookkeeping."""
        if self.terms:
            return next(iter(self.terms))
        return self.truncation if self.truncation is not None else INF

    def truncate(self, order) -> "PuiseuxScalar":
        order = as_fraction(order)
        return self._like(self.terms, truncation=_min_trunc(self.truncation, order))

    def with_ramification(self, e: int) -> "PuiseuxScalar":
        return self._like(self.terms, ramification=_lcm(self.ramification, e))

    # ------------------------------------------------------------------
    # arithmetic
    def _coerce(self, other) -> "PuiseuxScalar":
        if isinstance(other, PuiseuxScalar):
            if not self.params.compatible(other.params):
                raise IncompatibleParametersError("series carry different parameter systems",
                                                  {"left": list(self.params.names), "right": list(other.params.names)})
            return other
        return PuiseuxScalar.constant(other, self.params)

    def _params_with(self, other: "PuiseuxScalar") -> ParameterSystem:
        return self.params.merge(other.params)

    def __add__(self, other) -> "PuiseuxScalar":
        other = self._coerce(other)
        terms: Dict[Fraction, KPoly] = dict(self.terms)
        for q, c in other.terms.items():
            terms[q] = terms[q] + c if q in terms else c
        return PuiseuxScalar(terms, _lcm(self.ramification, other.ramification),
                             _min_trunc(self.truncation, other.truncation), self._params_with(other))

    __radd__ = __add__

    def __neg__(self) -> "PuiseuxScalar":
        return self._like({q: -c for q, c in self.terms.items()})

    def __sub__(self, other) -> "PuiseuxScalar":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PuiseuxScalar":
        return (-self) + other

    def __mul__(self, other) -> "PuiseuxScalar":
        other = self._coerce(other)
        va, vb = self._val_lower(), other._val_lower()
        bounds = []
        if self.truncation is not None and vb != INF:
            bounds.append(self.truncation + vb)
        if other.truncation is not None and va != INF:
            bounds.append(other.truncation + va)
        truncation = min(bounds) if bounds else None
        if va == INF or vb == INF:
            truncation = None
        terms: Dict[Fraction, KPoly] = {}
        for q1, c1 in self.terms.items():
            for q2, c2 in other.terms.items():
                q = q1 + q2
                if truncation is not None and q > truncation:
                    continue
                value = c1 * c2
                terms[q] = terms[q] + value if q in terms else value
        return PuiseuxScalar(terms, _lcm(self.ramification, other.ramification), truncation,
                             self._params_with(other))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "PuiseuxScalar":
        if exponent < 0:
            raise ValueError("negative powers are not supported")
        result = PuiseuxScalar.constant(1, self.params)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def shift(self, q) -> "PuiseuxScalar":
        """Multiply by z^q."""
        q = as_fraction(q)
        return PuiseuxScalar({p + q: c for p, c in self.terms.items()}, self.ramification,
                             None if self.truncation is None else self.truncation + q, self.params)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PuiseuxScalar):
            return NotImplemented
        return (self.truncation == other.truncation and self.terms.keys() == other.terms.keys()
                and all(self.terms[q] == other.terms[q] for q in self.terms))

    def __hash__(self) -> int:
        return hash((self.truncation, tuple(self.terms)))

    # ------------------------------------------------------------------
    # valuation
    def valuation(self, certify: bool = True) -> Valuation:
        """
        Least exponent with a nonzero coefficient

        Args:
            certify: for parametric series, require the leading coefficient to be
                nowhere zero on the parameter domain

        Returns:
            the valuation, or INF for the exact zero series
        """
        for q, c in self.terms.items():
            if self.params.is_trivial or not self.params.constraints and c.is_constant():
                return q
            if self.params.is_zero(c):
                continue
            if certify and not self.params.is_nowhere_zero(c):
                raise ParameterDependenceError("leading coefficient vanishes on part of the parameter domain",
                                               {"exponent": str(q), "coefficient": repr(c)})
            return q
        if self.truncation is None:
            return INF
        raise UncertifiedValuationError("every known term vanishes; cannot certify zero",
                                        {"truncation": str(self.truncation)})

    def generic_valuation(self) -> Valuation:
        """Valuation at a generic parameter; a strict lower bound marker when nothing is known."""
        for q, c in self.terms.items():
            if self.params.is_trivial or not self.params.is_zero(c):
                return q
        if self.truncation is None:
            return INF
        return next_exponent_above(self.truncation, self.ramification)

    def standard_part(self) -> KPoly:
        """Coefficient of z^0; the series must be bounded."""
        for q, c in self.terms.items():
            if q >= 0:
                break
            if not self.params.is_zero(c):
                raise UnboundedError("series has negative valuation", {"exponent": str(q)})
        if self.truncation is not None and self.truncation < 0:
            raise UncertifiedValuationError("truncation order is below zero; standard part unknown")
        return self.coefficient(0)

    def principal_part(self) -> Dict[Fraction, KPoly]:
        return {q: c for q, c in self.terms.items() if q < 0}

    # ------------------------------------------------------------------
    # evaluation
    def at(self, point: Mapping[str, NumberFieldElem]) -> "PuiseuxScalar":
        """Specialize the parameters to a point of the domain."""
        if self.params.is_trivial:
            return self
        terms = {q: c.evaluate(point) for q, c in self.terms.items()}
        return PuiseuxScalar(terms, self.ramification, self.truncation)

    def evaluate_numeric(self, w: np.ndarray, point: Optional[Mapping[str, complex]] = None) -> np.ndarray:
        """Value at z = w^e for complex w (same root choice across coordinates)."""
        w = np.asarray(w, dtype=np.complex128)
        total = np.zeros_like(w)
        values = None
        if self.params.names:
            values = np.array([complex((point or {})[n]) for n in self.params.names], dtype=np.complex128)
        for q, c in self.terms.items():
            power = int(q * self.ramification)
            coeff = c.evaluate_numeric(values) if values is not None else complex(c.constant_value())
            total = total + coeff * w ** power
        return total

    def evaluate_exact(self, z: Fraction) -> NumberFieldElem:
        """Exact value of a non-parametric Laurent series (e = 1) at a rational z."""
        if self.ramification != 1:
            raise MathPreconditionError("exact evaluation needs integral exponents")
        total = self.field.zero
        for q, c in self.terms.items():
            total = total + c.constant_value() * (self.field.coerce(z) ** int(q))
        return total

    def __repr__(self) -> str:
        parts = [f"({c})*z^{q}" for q, c in self.terms.items()]
        tail = "" if self.truncation is None else f" + O(z^>{self.truncation})"
        return (" + ".join(parts) or "0") + tail


class PuiseuxBranch:
    """
    Vector of series sharing ramification and parameter system

    The branch is known up to `truncation`, the least coordinate truncation;
    coordinates given exactly stay exact.
    """

    def __init__(self, coords: Sequence[PuiseuxScalar], params: Optional[ParameterSystem] = None,
                 check_domain: bool = True):
        params = params or ParameterSystem()
        for c in coords:
            params = params.merge(c.params)
        e = 1
        for c in coords:
            e = _lcm(e, c.ramification)
        truncation = _min_trunc(*(c.truncation for c in coords))
        self.params = params
        self.coords: Tuple[PuiseuxScalar, ...] = tuple(
            PuiseuxScalar(c.terms, e, c.truncation, params) for c in coords)
        self.ramification = e
        self.truncation = truncation
        self.field = common_field(*(c.field for c in self.coords)) if coords else RATIONALS
        if check_domain and params.constraints:
            try:
                params.sample_point()
            except SamplerError as err:
                raise SamplerError("parameter domain of the branch appears empty", err.details)

    @property
    def n(self) -> int:
        return len(self.coords)

    def is_parametric(self) -> bool:
        return not self.params.is_trivial

    def at(self, point: Mapping[str, NumberFieldElem]) -> "PuiseuxBranch":
        return PuiseuxBranch([c.at(point) for c in self.coords])

    def translate(self, v: Sequence) -> "PuiseuxBranch":
        return PuiseuxBranch([c + x for c, x in zip(self.coords, v)], self.params, check_domain=False)

    def truncate(self, order) -> "PuiseuxBranch":
        return PuiseuxBranch([c.truncate(order) for c in self.coords], self.params, check_domain=False)

    def evaluate_numeric(self, w: np.ndarray, point: Optional[Mapping[str, complex]] = None) -> np.ndarray:
        """Points of the branch at z = w^e, shape (len(w), n)."""
        w = np.atleast_1d(np.asarray(w, dtype=np.complex128))
        return np.stack([c.evaluate_numeric(w, point) for c in self.coords], axis=1)

    def __eq__(self, other) -> bool:
        return isinstance(other, PuiseuxBranch) and self.coords == other.coords and self.params == other.params

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return "PuiseuxBranch(" + ", ".join(repr(c) for c in self.coords) + ")"


# ----------------------------------------------------------------------------
# module-level operations


def series_arith(a: PuiseuxScalar, b: PuiseuxScalar, op: str) -> PuiseuxScalar:
    if op == "+":
        return a + b
    if op in ("-", "−"):
        return a - b
    if op in ("*", "×"):
        return a * b
    raise ValueError(f"unknown series operation {op!r}")


def series_inverse(a: PuiseuxScalar, order) -> PuiseuxScalar:
    """1/a known up to z^order; a must be non-parametric with a known leading term."""
    order = as_fraction(order)
    if a.is_parametric():
        raise IncompatibleParametersError("series inversion needs constant coefficients")
    q0, c0 = a.leading()
    lead_inv = c0.constant_value().inverse()
    u = a.shift(-q0) * lead_inv - 1
    if u.is_exact_zero():
        return PuiseuxScalar.monomial(lead_inv, -q0)
    target = order + q0
    step = u.leading_exponent() if u.terms else next_exponent_above(u.truncation, u.ramification)
    count = max(0, math.floor(target / step)) + 1 if target >= 0 else 1
    result = PuiseuxScalar.constant(1)
    power = PuiseuxScalar.constant(1)
    for _ in range(count):
        power = (power * (-u)).truncate(target)
        result = result + power
    return (result.truncate(target) * lead_inv).shift(-q0)


def valuation_bound(a: PuiseuxScalar) -> Valuation:
    """Certified lower bound for the valuation (exact when a term is known)."""
    if a.terms:
        return a.leading_exponent()
    if a.truncation is None:
        return INF
    return next_exponent_above(a.truncation, a.ramification)


def valuation(a: PuiseuxScalar) -> Valuation:
    return a.valuation(certify=True)


def standard_part(a: PuiseuxScalar) -> KPoly:
    return a.standard_part()


def evaluate_polynomial(F: KPoly, alpha: PuiseuxBranch) -> PuiseuxScalar:
    """F(alpha) with F's variables read positionally as the branch coordinates."""
    if len(F.variables) != alpha.n:
        raise IncompatibleParametersError(f"polynomial in {len(F.variables)} variables, branch of length {alpha.n}")
    powers: List[Dict[int, PuiseuxScalar]] = [{0: PuiseuxScalar.constant(1, alpha.params)} for _ in range(alpha.n)]

    def power(k: int, e: int) -> PuiseuxScalar:
        cache = powers[k]
        if e not in cache:
            cache[e] = power(k, e - 1) * alpha.coords[k]
        return cache[e]

    total = PuiseuxScalar.zero(params=alpha.params)
    for mono, coeff in F.terms.items():
        term = PuiseuxScalar.constant(coeff, alpha.params)
        for k, e in enumerate(mono):
            if e:
                term = term * power(k, e)
        total = total + term
    return total


def residual_valuation(F: Sequence[KPoly], alpha: PuiseuxBranch) -> List[Valuation]:
    """
    Valuation of each F_j(alpha)

    Exact zeros give INF. When every known term cancels, the result is the first
    exponent above the truncation order (a lower bound), so "residual > Q" reads
    as "no obstruction up to Q".
    """
    return [evaluate_polynomial(f, alpha).generic_valuation() for f in F]


def accepted_on(F: Sequence[KPoly], alpha: PuiseuxBranch, order) -> bool:
    order = as_fraction(order)
    return all(r > order for r in residual_valuation(F, alpha))


# ----------------------------------------------------------------------------
# Newton-Puiseux


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_convex_hull(points):
    """Andrew's monotone chain, lower part."""
    pts = sorted(dict.fromkeys(points).keys(), key=lambda p: (p[0], p[1]))
    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    return lower


def _numeric_roots(coeffs: Sequence[Fraction]) -> List[complex]:
    return [complex(r) for r in np.roots([float(c) for c in reversed(coeffs)])]


def field_roots(coeffs: Sequence[NumberFieldElem]) -> List[Tuple[NumberFieldElem, int]]:
    """
    Roots (with multiplicity) of a univariate polynomial over K, constant term first.

    Over Q, irreducible factors of degree <= 4 give one new number field per root.
    Over a larger field only roots inside that field are supported.
    """
    field = common_field(*(c.field for c in coeffs))
    coeffs = [field.coerce(c) for c in coeffs]
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    degree = len(coeffs) - 1
    if degree <= 0:
        return []
    if degree == 1:
        return [(-coeffs[0] / coeffs[1], 1)]
    c = sympy.Symbol("c")
    roots: List[Tuple[NumberFieldElem, int]] = []
    if all(x.is_rational() for x in coeffs):
        expr = sum(sympy.Rational(x.to_fraction().numerator, x.to_fraction().denominator) * c ** k
                   for k, x in enumerate(coeffs))
        _, factors = sympy.factor_list(expr, c)
        for factor, mult in factors:
            poly = sympy.Poly(factor, c, domain=sympy.QQ)
            part = [as_fraction(x) for x in reversed(poly.all_coeffs())]
            if poly.degree() == 1:
                roots.append((field.coerce(-part[0] / part[1]), mult))
            elif field.is_rational:
                if poly.degree() > MAX_DEGREE:
                    raise FieldExtensionError(f"root needs an extension of degree {poly.degree()}",
                                              {"factor": str(factor)})
                monic = [x / part[-1] for x in part]
                for hint in _numeric_roots(monic):
                    extension = NumberField(monic, hint)
                    roots.append((extension.gen, mult))
            else:
                roots.extend((r, mult) for r, _ in _roots_over(field, [field.coerce(x) for x in part]))
        return roots
    return _roots_over(field, coeffs)


def _roots_over(field: NumberField, coeffs: Sequence[NumberFieldElem]) -> List[Tuple[NumberFieldElem, int]]:
    """Roots lying in `field` of a polynomial with coefficients in `field`; anything else is unsupported."""
    c = sympy.Symbol("c")
    expr = sum(field.to_sympy_number(x) * c ** k for k, x in enumerate(coeffs))
    try:
        _, factors = sympy.factor_list(expr, c, extension=field.sympy_root)
    except (NotImplementedError, sympy.PolynomialError) as e:
        raise FieldExtensionError(f"cannot factor over {field.describe()}: {str(e)}")
    roots = []
    for factor, mult in factors:
        poly = sympy.Poly(factor, c, domain=field.algebraic_domain)
        if poly.degree() == 0:
            continue
        if poly.degree() > 1:
            raise FieldExtensionError("root requires a field extension of an extension",
                                      {"field": field.descriptor(), "factor": str(factor)})
        a1, a0 = poly.all_coeffs()
        value = sympy.simplify(-a0 / a1)
        roots.append((field.from_sympy_number(value), mult))
    return roots


def is_squarefree(f: KPoly) -> bool:
    field = f.field
    gens = [sympy.Symbol(v) for v in f.variables]
    expr = f.to_sympy()
    if not field.is_rational:
        expr = expr.subs(THETA, field.sympy_root)
    return sympy.Poly(expr, *gens, domain=field.algebraic_domain).is_sqf


def _taylor_shift(H: Mapping[int, PuiseuxScalar], term: PuiseuxScalar) -> Dict[int, PuiseuxScalar]:
    """Coefficients of H(term + y) as a polynomial in y."""
    top = max(H)
    powers = [PuiseuxScalar.constant(1)]
    for _ in range(top):
        powers.append(powers[-1] * term)
    shifted: Dict[int, PuiseuxScalar] = {}
    for j, coeff in H.items():
        for k in range(j + 1):
            value = coeff * powers[j - k] * math.comb(j, k)
            shifted[k] = shifted[k] + value if k in shifted else value
    return shifted


def _newton_roots(H: Mapping[int, PuiseuxScalar], lower: Optional[Fraction], upper: Optional[Fraction],
                  target: Fraction, depth: int = 0) -> List[PuiseuxScalar]:
    """
    Series roots y of sum_j H_j y^j with lower < val(y) < upper, each known up to `target`.

    The H_j are exact series. A root is pushed until it separates from the others and
    its next term lies beyond `target`; an exact root (H_0 == 0) comes back untruncated.
    """
    if depth > MAX_NEWTON_DEPTH:
        raise NotSquarefreeError("Newton-Puiseux iteration does not separate the roots")
    H = {j: c for j, c in H.items() if not c.is_exact_zero()}
    if not H:
        raise NotSquarefreeError("polynomial vanishes identically along the expansion")
    results: List[PuiseuxScalar] = []
    shift = min(H)
    if shift > 0:
        if shift > 1:
            raise NotSquarefreeError("repeated root in the Newton-Puiseux expansion")
        if upper is None:
            results.append(PuiseuxScalar.zero())
        H = {j - shift: c for j, c in H.items()}
    points = [(j, c.leading_exponent()) for j, c in H.items()]
    hull = lower_convex_hull(points)
    for (j1, v1), (j2, v2) in zip(hull, hull[1:]):
        gamma = Fraction(v1 - v2) / (j2 - j1)
        if lower is not None and gamma <= lower:
            continue
        if upper is not None and gamma >= upper:
            continue
        level = v1 + j1 * gamma
        edge = []
        for j in range(j1, j2 + 1):
            if j in H and H[j].leading_exponent() + j * gamma == level:
                edge.append(H[j].leading()[1].constant_value())
            else:
                edge.append(RATIONALS.zero)
        for c, mult in field_roots(edge):
            if mult == 1 and gamma > target:
                results.append(PuiseuxScalar.zero(truncation=target))
                continue
            term = PuiseuxScalar.monomial(c, gamma)
            for tail in _newton_roots(_taylor_shift(H, term), gamma, None, target, depth + 1):
                results.append(term + tail)
    return results


def _y_coefficients(f: KPoly, x_image: PuiseuxScalar) -> Dict[int, PuiseuxScalar]:
    """f(x_image, y) as a polynomial in y with exact series coefficients."""
    x_name, y_name = f.variables
    result: Dict[int, PuiseuxScalar] = {}
    for j, coeff in f.coefficients_in(y_name).items():
        total = PuiseuxScalar.zero()
        for mono, c in coeff.terms.items():
            total = total + (x_image ** mono[0]) * PuiseuxScalar.constant(c)
        result[j] = total
    return result


def _branches_at_target(f: KPoly, target: Fraction) -> List[PuiseuxBranch]:
    x_name, y_name = f.variables
    branches: List[PuiseuxBranch] = []

    x_inf = PuiseuxScalar.monomial(1, -1)
    for y in _newton_roots(_y_coefficients(f, x_inf), None, None, target):
        branches.append(PuiseuxBranch([x_inf, y]))

    # vertical asymptotes: x -> x0 with y unbounded
    parts = f.coefficients_in(y_name)
    top = parts[max(parts)]
    lead = [top.terms.get((k,), top.field.zero) for k in range(top.degree_in(x_name) + 1)]
    for x0, _ in field_roots(lead):
        x_near = PuiseuxScalar({0: x0, 1: 1})
        H = _y_coefficients(f, x_near)
        if all(c.is_exact_zero() or c.leading_exponent() > 0 for c in H.values()):
            # x - x0 divides f: the whole vertical line lies on the curve
            branches.append(PuiseuxBranch([PuiseuxScalar.constant(x0), PuiseuxScalar.monomial(1, -1)]))
        if max(H) == 0:
            continue
        for y in _newton_roots(H, None, Fraction(0), target):
            branches.append(PuiseuxBranch([x_near, y]))
    return branches


def newton_puiseux_at_infinity(f: KPoly, order) -> List[PuiseuxBranch]:
    """
    All branches of the plane curve f = 0 leaving every compact set

    Args:
        f: squarefree polynomial in two variables (x, y), in that order
        order: requested accuracy; every returned branch has residual valuation > order

    Returns:
        branches (z^-1, y(z)) for x -> infinity (every root y, bounded or not), and
        branches (x0 + z, y(z)) with y unbounded for each root x0 of the leading
        y-coefficient
    """
    order = as_fraction(order)
    if order < 0:
        raise MathPreconditionError("truncation order must be >= 0", {"order": str(order)})
    if len(f.variables) != 2:
        raise MathPreconditionError("Newton-Puiseux needs a polynomial in exactly two variables",
                                    {"variables": list(f.variables)})
    if f.is_zero() or f.is_constant():
        raise MathPreconditionError("the curve is empty or the whole plane")
    if not is_squarefree(f):
        raise NotSquarefreeError("polynomial is not squarefree", {"poly": repr(f)})

    target = order
    for attempt in range(12):
        branches = _branches_at_target(f, target)
        deficits = []
        for branch in branches:
            r = residual_valuation([f], branch)[0]
            if r <= order:
                deficits.append(order - r + Fraction(1, branch.ramification))
        if not deficits:
            logger.info(f"Newton-Puiseux: {len(branches)} branches at internal order {target}")
            return branches
        target = target + max(deficits)
        logger.debug(f"Residual below {order}; raising internal order to {target}")
    raise UncertifiedValuationError("could not reach the requested residual order", {"order": str(order)})
