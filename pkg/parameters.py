"""
Polynomials over a number field and the parameter systems that constrain them.

KPoly is a sparse map from exponent tuples to field elements over a fixed list of
variable names. The same type carries the defining equations of a variety
(variables x_1..x_n) and the coefficients of parametric families (variables are
the parameter names). ParameterSystem pairs parameter names with constraint
polynomials cutting out the parameter domain and answers the questions the rest
of the toolkit asks about it: exact-ish zero tests, rational sample points, and
"nowhere zero on the domain" certificates (Rabinowitsch trick via sympy
Groebner bases).
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy import QQ

from config import get_rng, random_rational, settings
from errors import IncompatibleParametersError, SamplerError, SchemaError
from numberfield import RATIONALS, THETA, NumberField, NumberFieldElem, as_fraction, common_field

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction, NumberFieldElem]


class KPoly:
    """Sparse polynomial with coefficients in a number field"""

    __slots__ = ("variables", "terms", "field", "_numeric")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponent, Scalar], field: NumberField):
        self.variables: Tuple[str, ...] = tuple(variables)
        self.field = field
        cleaned: Dict[Exponent, NumberFieldElem] = {}
        for mono, coeff in terms.items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != len(self.variables):
                raise SchemaError(f"monomial {mono} does not match variables {self.variables}")
            if any(e < 0 for e in mono):
                raise SchemaError(f"negative exponent in monomial {mono}")
            value = field.coerce(coeff)
            if not value.is_zero():
                cleaned[mono] = cleaned[mono] + value if mono in cleaned else value
                if cleaned[mono].is_zero():
                    del cleaned[mono]
        self.terms: Dict[Exponent, NumberFieldElem] = cleaned
        self._numeric = None

    # ------------------------------------------------------------------
    # constructors
    @classmethod
    def constant(cls, value: Scalar, variables: Sequence[str] = (), field: Optional[NumberField] = None) -> "KPoly":
        if field is None:
            field = value.field if isinstance(value, NumberFieldElem) else RATIONALS
        return cls(variables, {tuple(0 for _ in variables): value}, field)

    @classmethod
    def zero(cls, variables: Sequence[str] = (), field: NumberField = RATIONALS) -> "KPoly":
        return cls(variables, {}, field)

    @classmethod
    def variable(cls, name: str, variables: Sequence[str], field: NumberField = RATIONALS) -> "KPoly":
        variables = tuple(variables)
        if name not in variables:
            raise SchemaError(f"unknown variable {name!r}; expected one of {variables}")
        mono = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {mono: field.one}, field)

    @classmethod
    def from_expr(cls, text: str, variables: Sequence[str], field: NumberField = RATIONALS) -> "KPoly":
        """Parse a polynomial written in sympy syntax; `theta` denotes the field generator."""
        symbols = {name: sympy.Symbol(name) for name in variables}
        symbols["theta"] = THETA
        try:
            expr = sympy.sympify(text, locals=symbols)
        except (sympy.SympifyError, SyntaxError, TypeError) as e:
            raise SchemaError(f"cannot parse polynomial {text!r}: {str(e)}")
        return cls.from_sympy(expr, variables, field)

    @classmethod
    def from_sympy(cls, expr, variables: Sequence[str], field: NumberField = RATIONALS) -> "KPoly":
        gens = [sympy.Symbol(name) for name in variables] + [THETA]
        try:
            poly = sympy.Poly(sympy.expand(expr), *gens, domain=QQ)
        except sympy.PolynomialError as e:
            raise SchemaError(f"not a polynomial in {list(variables)}: {str(e)}")
        terms: Dict[Exponent, NumberFieldElem] = {}
        for monom, coeff in poly.terms():
            mono, theta_power = tuple(monom[:-1]), monom[-1]
            if theta_power and field.is_rational:
                raise SchemaError("theta used with the rational field")
            basis = [Fraction(0)] * (theta_power + 1)
            basis[theta_power] = as_fraction(coeff)
            value = field.element(basis)
            terms[mono] = terms[mono] + value if mono in terms else value
        return cls(variables, terms, field)

    # ------------------------------------------------------------------
    # structure
    def _check(self, other: "KPoly") -> Tuple["KPoly", "KPoly"]:
        if self.variables != other.variables:
            merged = tuple(self.variables) + tuple(v for v in other.variables if v not in self.variables)
            return self.extend(merged)._check(other.extend(merged))
        if self.field is other.field:
            return self, other
        field = common_field(self.field, other.field)
        return self.over(field), other.over(field)

    def over(self, field: NumberField) -> "KPoly":
        if field is self.field:
            return self
        return KPoly(self.variables, {m: field.coerce(c) for m, c in self.terms.items()}, field)

    def extend(self, variables: Sequence[str]) -> "KPoly":
        """Same polynomial viewed in a larger variable list."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        missing = [v for v in self.variables if v not in variables]
        if missing and any(self.degree_in(v) > 0 for v in missing):
            raise IncompatibleParametersError(f"variables {missing} are not in {variables}")
        positions = [self.variables.index(v) if v in self.variables else None for v in variables]
        terms = {}
        for mono, coeff in self.terms.items():
            terms[tuple(mono[p] if p is not None else 0 for p in positions)] = coeff
        return KPoly(variables, terms, self.field)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(mono) for mono in self.terms)

    def constant_value(self) -> NumberFieldElem:
        if not self.is_constant():
            raise IncompatibleParametersError("polynomial depends on parameters")
        return self.terms.get(tuple(0 for _ in self.variables), self.field.zero)

    def degree_in(self, name: str) -> int:
        if name not in self.variables:
            return 0
        k = self.variables.index(name)
        return max((mono[k] for mono in self.terms), default=-1)

    def total_degree(self) -> int:
        return max((sum(mono) for mono in self.terms), default=-1)

    def used_variables(self) -> List[str]:
        return [v for k, v in enumerate(self.variables) if any(mono[k] for mono in self.terms)]

    def coefficients_in(self, name: str) -> Dict[int, "KPoly"]:
        """Coefficients of powers of `name`, as polynomials in the remaining variables."""
        k = self.variables.index(name)
        rest = self.variables[:k] + self.variables[k + 1:]
        buckets: Dict[int, Dict[Exponent, NumberFieldElem]] = {}
        for mono, coeff in self.terms.items():
            buckets.setdefault(mono[k], {})[mono[:k] + mono[k + 1:]] = coeff
        return {power: KPoly(rest, terms, self.field) for power, terms in buckets.items()}

    # ------------------------------------------------------------------
    # arithmetic
    def _lift_scalar(self, other) -> "KPoly":
        if isinstance(other, KPoly):
            return other
        return KPoly.constant(other, self.variables, common_field(self.field, _field_of(other)))

    def __add__(self, other) -> "KPoly":
        a, b = self._check(self._lift_scalar(other))
        terms = dict(a.terms)
        for mono, coeff in b.terms.items():
            terms[mono] = terms[mono] + coeff if mono in terms else coeff
        return KPoly(a.variables, terms, a.field)

    __radd__ = __add__

    def __neg__(self) -> "KPoly":
        return KPoly(self.variables, {m: -c for m, c in self.terms.items()}, self.field)

    def __sub__(self, other) -> "KPoly":
        return self + (-self._lift_scalar(other))

    def __rsub__(self, other) -> "KPoly":
        return (-self) + other

    def __mul__(self, other) -> "KPoly":
        a, b = self._check(self._lift_scalar(other))
        terms: Dict[Exponent, NumberFieldElem] = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                mono = tuple(x + y for x, y in zip(m1, m2))
                value = c1 * c2
                terms[mono] = terms[mono] + value if mono in terms else value
        return KPoly(a.variables, terms, a.field)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "KPoly":
        if exponent < 0:
            raise ValueError("negative powers of polynomials are not polynomials")
        result = KPoly.constant(self.field.one, self.variables, self.field)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, KPoly):
            if isinstance(other, (int, Fraction, NumberFieldElem)):
                return self.is_constant() and self.constant_value() == other
            return NotImplemented
        try:
            a, b = self._check(other)
        except IncompatibleParametersError:
            return False
        return a.terms == b.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def partial(self, name: str) -> "KPoly":
        if name not in self.variables:
            return KPoly.zero(self.variables, self.field)
        k = self.variables.index(name)
        terms = {}
        for mono, coeff in self.terms.items():
            if mono[k]:
                new = list(mono)
                new[k] -= 1
                terms[tuple(new)] = coeff * mono[k]
        return KPoly(self.variables, terms, self.field)

    # ------------------------------------------------------------------
    # evaluation
    def evaluate(self, point: Mapping[str, Scalar]) -> NumberFieldElem:
        """Exact value at a point assigning every used variable."""
        field = self.field
        values = []
        for v in self.variables:
            if v in point:
                value = point[v]
                if isinstance(value, NumberFieldElem) and not value.field.is_rational and value.field is not field:
                    field = common_field(field, value.field)
                values.append(value)
            else:
                values.append(None)
        total = field.zero
        for mono, coeff in self.terms.items():
            term = field.coerce(coeff)
            for value, e in zip(values, mono):
                if e:
                    if value is None:
                        raise IncompatibleParametersError("point does not assign every variable",
                                                          {"variables": list(self.variables)})
                    term = term * (field.coerce(value) ** e)
            total = total + term
        return total

    def substitute(self, assignments: Mapping[str, Scalar]) -> "KPoly":
        """Partial evaluation; the result keeps the unassigned variables."""
        keep = [v for v in self.variables if v not in assignments]
        result = KPoly.zero(keep, self.field)
        for mono, coeff in self.terms.items():
            term = KPoly.constant(coeff, keep, self.field)
            rest = []
            for v, e in zip(self.variables, mono):
                if v in assignments:
                    if e:
                        term = term * KPoly.constant(self.field.coerce(assignments[v]) ** e, keep, self.field)
                else:
                    rest.append(e)
            result = result + KPoly(keep, {tuple(rest): term.constant_value()}, self.field)
        return result

    def compose(self, assignments: Mapping[str, "KPoly"], variables: Sequence[str]) -> "KPoly":
        """Substitute polynomials for variables; the result lives in `variables`."""
        result = KPoly.zero(variables, self.field)
        for mono, coeff in self.terms.items():
            term = KPoly.constant(coeff, variables, self.field)
            for v, e in zip(self.variables, mono):
                if e:
                    image = assignments.get(v, KPoly.variable(v, variables, self.field) if v in variables else None)
                    if image is None:
                        raise IncompatibleParametersError(f"no image for variable {v!r}")
                    term = term * (image.extend(variables) ** e)
            result = result + term
        return result

    def numeric_terms(self) -> Tuple[np.ndarray, np.ndarray]:
        """Exponent matrix and complex128 coefficients for fast float evaluation."""
        if self._numeric is None:
            monos = sorted(self.terms)
            exps = np.array(monos, dtype=np.int64).reshape(len(monos), len(self.variables))
            coeffs = np.array([complex(self.terms[m]) for m in monos], dtype=np.complex128)
            self._numeric = (exps, coeffs)
        return self._numeric

    def evaluate_numeric(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at complex points of shape (N, n) (or (n,)), returning shape (N,)."""
        points = np.asarray(points, dtype=np.complex128)
        single = points.ndim == 1
        points = np.atleast_2d(points)
        exps, coeffs = self.numeric_terms()
        if len(coeffs) == 0:
            values = np.zeros(points.shape[0], dtype=np.complex128)
        else:
            powers = np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
            values = powers @ coeffs
        return values[0] if single else values

    # ------------------------------------------------------------------
    # sympy bridge
    def to_sympy(self):
        gens = [sympy.Symbol(v) for v in self.variables]
        expr = sympy.Integer(0)
        for mono, coeff in self.terms.items():
            if self.field.is_rational:
                c = sympy.Rational(coeff.coeffs[0].numerator, coeff.coeffs[0].denominator)
            else:
                c = sum(sympy.Rational(x.numerator, x.denominator) * THETA ** j for j, x in enumerate(coeff.coeffs))
            expr += c * sympy.Mul(*[g ** e for g, e in zip(gens, mono)])
        return expr

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, coeff in sorted(self.terms.items(), reverse=True):
            factors = [v if e == 1 else f"{v}^{e}" for v, e in zip(self.variables, mono) if e]
            parts.append("*".join([repr(coeff)] + factors) if factors else repr(coeff))
        return " + ".join(parts)


def _field_of(value) -> NumberField:
    return value.field if isinstance(value, NumberFieldElem) else RATIONALS


def theta_minimal_poly(field: NumberField):
    return sum(sympy.Rational(c.numerator, c.denominator) * THETA ** k for k, c in enumerate(field.min_poly))


@dataclass
class ParameterSystem:
    """
    Parameter names plus constraints cutting out the parameter domain.

    The empty system (no names) stands for a single point; coefficient polynomials
    are then constants.
    """

    names: Tuple[str, ...] = ()
    constraints: Tuple[KPoly, ...] = ()
    field: NumberField = RATIONALS
    _groebner: Optional[object] = dataclass_field(default=None, repr=False, compare=False)
    _solve_order: Optional[List[Tuple[str, KPoly]]] = dataclass_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.names = tuple(self.names)
        if len(set(self.names)) != len(self.names):
            raise SchemaError(f"duplicate parameter names in {self.names}")
        self.constraints = tuple(c.extend(self.names) for c in self.constraints)
        for c in self.constraints:
            self.field = common_field(self.field, c.field)

    @property
    def is_trivial(self) -> bool:
        return not self.names

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParameterSystem):
            return NotImplemented
        return self.names == other.names and set(self.constraints) == set(other.constraints)

    def __hash__(self) -> int:
        return hash((self.names, frozenset(self.constraints)))

    def compatible(self, other: "ParameterSystem") -> bool:
        return self == other or self.is_trivial or other.is_trivial

    def merge(self, other: "ParameterSystem") -> "ParameterSystem":
        if self.is_trivial:
            return other
        if other.is_trivial or self == other:
            return self
        raise IncompatibleParametersError("objects carry different parameter systems",
                                          {"left": list(self.names), "right": list(other.names)})

    def poly(self, value) -> KPoly:
        if isinstance(value, KPoly):
            return value.extend(self.names)
        return KPoly.constant(value, self.names, common_field(self.field, _field_of(value)))

    # ------------------------------------------------------------------
    def _basis(self):
        if self._groebner is None:
            gens = [sympy.Symbol(n) for n in self.names]
            exprs = [c.to_sympy() for c in self.constraints]
            if not self.field.is_rational:
                gens.append(THETA)
                exprs.append(theta_minimal_poly(self.field))
            self._groebner = (sympy.groebner(exprs, *gens, order="grevlex", domain=QQ) if exprs else None, gens)
        return self._groebner

    def reduce(self, poly: KPoly) -> KPoly:
        """Normal form modulo the constraint ideal (identity when unconstrained)."""
        poly = self.poly(poly)
        basis, gens = self._basis()
        if basis is None or poly.is_zero():
            return poly
        _, remainder = basis.reduce(poly.to_sympy())
        return KPoly.from_sympy(remainder, self.names, poly.field)

    def is_zero(self, poly: KPoly) -> bool:
        """Whether poly vanishes identically on the parameter domain."""
        poly = self.poly(poly)
        if poly.is_zero():
            return True
        if not self.constraints:
            return False
        if self.reduce(poly).is_zero():
            return True
        for point in self.sample_points(settings.ZERO_TEST_SAMPLES):
            if not poly.evaluate(point).is_zero():
                return False
        logger.debug(f"Zero test for {poly} decided by sampling only")
        return True

    def is_nowhere_zero(self, poly: KPoly) -> bool:
        """Certify that poly has no zero on the parameter domain."""
        poly = self.poly(poly)
        if poly.is_zero():
            return False
        if poly.is_constant():
            return True
        if self._monomial_units(poly):
            return True
        if not self.constraints:
            return False
        basis, gens = self._basis()
        helper = sympy.Symbol("_rabinowitsch")
        exprs = list(basis.exprs) + [1 - helper * poly.to_sympy()]
        certificate = sympy.groebner(exprs, *gens, helper, order="grevlex", domain=QQ)
        return list(certificate.exprs) == [1]

    def _monomial_units(self, poly: KPoly) -> bool:
        """A single monomial in variables that constraints of the form c*m - k make invertible."""
        if len(poly.terms) != 1:
            return False
        (mono,) = poly.terms
        units = set()
        for c in self.constraints:
            if len(c.terms) != 2 or not any(m == tuple(0 for _ in self.names) for m in c.terms):
                continue
            for m in c.terms:
                if any(m):
                    units.update(k for k, e in enumerate(m) if e)
        return all(e == 0 or k in units for k, e in enumerate(mono))

    # ------------------------------------------------------------------
    def _plan(self) -> List[Tuple[str, KPoly]]:
        """Order in which constrained parameters are solved for, one linear unknown per constraint."""
        if self._solve_order is None:
            plan: List[Tuple[str, KPoly]] = []
            solved = set()
            for c in self.constraints:
                for name in self.names:
                    if name not in solved and c.degree_in(name) == 1:
                        plan.append((name, c))
                        solved.add(name)
                        break
                else:
                    raise SamplerError("constraint is not linear in any free parameter; cannot sample",
                                       {"constraint": repr(c)})
            self._solve_order = plan
        return self._solve_order

    def sample_point(self, attempts: int = 50) -> Dict[str, NumberFieldElem]:
        """A random point of the parameter domain with rational (or K-) coordinates."""
        plan = self._plan()
        dependent = {name for name, _ in plan}
        for _ in range(attempts):
            point: Dict[str, NumberFieldElem] = {n: self.field.coerce(random_rational(9, nonzero=True))
                                                  for n in self.names if n not in dependent}
            ok = True
            for name, c in reversed(plan):
                others = {k: v for k, v in point.items() if k != name}
                restricted = c.substitute(others)
                missing = [v for v in restricted.used_variables() if v != name]
                if missing:
                    ok = False
                    break
                parts = restricted.coefficients_in(name)
                slope = parts.get(1)
                if slope is None or slope.constant_value().is_zero():
                    ok = False
                    break
                offset = parts.get(0)
                value = -(offset.constant_value() if offset is not None else self.field.zero) / slope.constant_value()
                point[name] = value
            if ok and all(c.evaluate(point).is_zero() for c in self.constraints):
                return point
        raise SamplerError("could not find a point on the parameter domain", {"names": list(self.names)})

    def sample_points(self, count: int) -> List[Dict[str, NumberFieldElem]]:
        if self.is_trivial:
            return [{}]
        return [self.sample_point() for _ in range(count)]

    @property
    def free_names(self) -> List[str]:
        dependent = {name for name, _ in self._plan()}
        return [n for n in self.names if n not in dependent]

    def complete_complex_point(self, free: Mapping[str, complex]) -> Dict[str, complex]:
        """Solve the constrained parameters from values of the free ones."""
        point: Dict[str, complex] = {n: complex(free[n]) for n in self.free_names}
        for name, c in reversed(self._plan()):
            parts = c.coefficients_in(name)
            rest = [v for v in c.variables if v != name]
            values = np.array([point.get(v, 0j) for v in rest], dtype=np.complex128)
            slope = parts[1].evaluate_numeric(values) if 1 in parts else 0j
            offset = parts[0].evaluate_numeric(values) if 0 in parts else 0j
            if slope == 0:
                raise SamplerError("degenerate complex sample", {"parameter": name})
            point[name] = complex(-offset / slope)
        return point

    def sample_complex_point(self, real: bool = False) -> Dict[str, complex]:
        """Non-rational point: free parameters get random values, constrained ones are solved."""
        rng = get_rng()
        free = {n: complex(rng.normal(), 0.0 if real else rng.normal()) for n in self.free_names}
        return self.complete_complex_point(free)
