"""
Number field arithmetic for the toolkit.

A field K = Q[theta]/(p) is fixed by a monic irreducible minimal polynomial p of
degree at most 4 and a designated complex root of p. Elements are power-basis
coordinate vectors of rationals; all arithmetic is exact. The designated root is
isolated by a certified disk (numerical roots from mpmath, radii from the
Newton bound |c - root| <= d |p(c)/p'(c)| computed in exact rationals), and the
disk is refined on demand to embed elements as certified complex intervals.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import sympy
from sympy import QQ, Poly

from errors import (
    ConjugationError,
    FieldDivisionError,
    FieldExtensionError,
    FieldMismatchError,
    NumberFieldError,
    PrecisionError,
)

logger = logging.getLogger(__name__)

THETA = sympy.Symbol("theta")
MAX_DEGREE = 4
MAX_ISOLATION_BITS = 4096

Rational = Union[int, Fraction]


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions, sympy rationals and "p/q" / decimal strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, float):
        return Fraction(value)
    raise TypeError(f"cannot read {value!r} as a rational")


def fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RealInterval:
    lo: Fraction
    hi: Fraction

    @classmethod
    def point(cls, value: Rational) -> "RealInterval":
        value = Fraction(value)
        return cls(value, value)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Rational) -> bool:
        return self.lo <= value <= self.hi

    def is_subset(self, other: "RealInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __add__(self, other: "RealInterval") -> "RealInterval":
        return RealInterval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "RealInterval") -> "RealInterval":
        return RealInterval(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "RealInterval":
        return RealInterval(-self.hi, -self.lo)

    def __mul__(self, other: "RealInterval") -> "RealInterval":
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return RealInterval(min(products), max(products))

    def scale(self, factor: Rational) -> "RealInterval":
        a, b = self.lo * factor, self.hi * factor
        return RealInterval(min(a, b), max(a, b))

    def __float__(self) -> float:
        return float(self.mid)


@dataclass(frozen=True)
class ComplexInterval:
    """Axis-parallel rectangle re x im with rational corners"""

    re: RealInterval
    im: RealInterval

    @classmethod
    def point(cls, re: Rational, im: Rational = 0) -> "ComplexInterval":
        return cls(RealInterval.point(re), RealInterval.point(im))

    @property
    def width(self) -> Fraction:
        return max(self.re.width, self.im.width)

    def contains(self, re: Rational, im: Rational = 0) -> bool:
        return self.re.contains(re) and self.im.contains(im)

    def is_subset(self, other: "ComplexInterval") -> bool:
        return self.re.is_subset(other.re) and self.im.is_subset(other.im)

    def __add__(self, other: "ComplexInterval") -> "ComplexInterval":
        return ComplexInterval(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexInterval") -> "ComplexInterval":
        return ComplexInterval(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "ComplexInterval") -> "ComplexInterval":
        return ComplexInterval(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def scale(self, factor: Rational) -> "ComplexInterval":
        return ComplexInterval(self.re.scale(factor), self.im.scale(factor))

    def __complex__(self) -> complex:
        return complex(float(self.re.mid), float(self.im.mid))


# ----------------------------------------------------------------------------
# root isolation


def _sqrt_upper(value: Fraction, bits: int) -> Fraction:
    """Rational upper bound of sqrt(value) within about 2^-bits."""
    if value <= 0:
        return Fraction(0)
    scale = 1 << (2 * bits)
    scaled = value * scale
    root = math.isqrt(math.ceil(scaled)) + 1
    return Fraction(root, 1 << bits)


def _mpf_to_fraction(x) -> Fraction:
    x = mpmath.mpf(x)
    if not x:
        return Fraction(0)
    sign, man, exp, _ = x._mpf_
    man = -int(man) if sign else int(man)
    if exp >= 0:
        return Fraction(int(man) << int(exp))
    return Fraction(int(man), 1 << int(-exp))


def _eval_gaussian(coeffs: Sequence[Fraction], re: Fraction, im: Fraction) -> Tuple[Fraction, Fraction]:
    """Evaluate a rational polynomial (constant first) at re + i*im exactly."""
    acc_re, acc_im = Fraction(0), Fraction(0)
    for c in reversed(coeffs):
        acc_re, acc_im = acc_re * re - acc_im * im + c, acc_re * im + acc_im * re
    return acc_re, acc_im


@dataclass(frozen=True)
class _Disk:
    re: Fraction
    im: Fraction
    radius: Fraction

    def contains_disk(self, other: "_Disk") -> bool:
        slack = self.radius - other.radius
        if slack < 0:
            return False
        return (self.re - other.re) ** 2 + (self.im - other.im) ** 2 <= slack * slack

    def disjoint(self, other: "_Disk") -> bool:
        reach = self.radius + other.radius
        return (self.re - other.re) ** 2 + (self.im - other.im) ** 2 > reach * reach


def _certified_disks(coeffs: Sequence[Fraction], bits: int) -> Optional[List[_Disk]]:
    """Pairwise disjoint disks, one per root of the squarefree polynomial, or None."""
    degree = len(coeffs) - 1
    derivative = [k * coeffs[k] for k in range(1, degree + 1)]
    dps = max(20, int(bits * 0.31) + 10)
    with mpmath.workdps(dps):
        try:
            approx = mpmath.polyroots([mpmath.mpf(c.numerator) / c.denominator for c in reversed(coeffs)],
                                      maxsteps=200, extraprec=2 * bits)
        except mpmath.NoConvergence:
            return None
        centres = [(_mpf_to_fraction(mpmath.mpc(r).real), _mpf_to_fraction(mpmath.mpc(r).imag)) for r in approx]
    disks = []
    for re, im in centres:
        p_re, p_im = _eval_gaussian(coeffs, re, im)
        d_re, d_im = _eval_gaussian(derivative, re, im)
        denom = d_re * d_re + d_im * d_im
        if denom == 0:
            return None
        radius_sq = degree * degree * (p_re * p_re + p_im * p_im) / denom
        disks.append(_Disk(re, im, _sqrt_upper(radius_sq, bits + 8)))
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            if not disks[i].disjoint(disks[j]):
                return None
    return disks


class NumberField:
    """K = Q[theta]/(p) with a designated complex embedding"""

    def __init__(self, min_poly: Sequence, root_hint: complex = 0j, hint_text: Optional[Tuple[str, str]] = None):
        coeffs = [as_fraction(c) for c in min_poly]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        degree = len(coeffs) - 1
        if degree < 1:
            raise NumberFieldError("minimal polynomial must have degree >= 1", {"min_poly": [str(c) for c in coeffs]})
        if degree > MAX_DEGREE:
            raise NumberFieldError(f"degree {degree} exceeds the supported maximum {MAX_DEGREE}")
        if coeffs[-1] != 1:
            raise NumberFieldError("minimal polynomial must be monic", {"leading": str(coeffs[-1])})
        if degree > 1 and not self._sympy_poly(coeffs).is_irreducible:
            raise NumberFieldError("minimal polynomial is reducible over Q", {"min_poly": [str(c) for c in coeffs]})

        self.min_poly: Tuple[Fraction, ...] = tuple(coeffs)
        self.degree = degree
        if hint_text is None:
            hint_text = (repr(float(complex(root_hint).real)), repr(float(complex(root_hint).imag)))
        self.hint_text = hint_text
        hint_re, hint_im = as_fraction(hint_text[0]), as_fraction(hint_text[1])
        self._refined: Dict[int, _Disk] = {}
        self._disk, self.is_real = self._isolate(hint_re, hint_im)
        logger.debug(f"Isolated root of {self.describe()} in disk of radius {float(self._disk.radius):.3g}")

    @staticmethod
    def _sympy_poly(coeffs: Sequence[Fraction]) -> Poly:
        return Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(coeffs)], THETA, domain=QQ)

    def _isolate(self, hint_re: Fraction, hint_im: Fraction) -> Tuple[_Disk, bool]:
        if self.degree == 1:
            return _Disk(-self.min_poly[0], Fraction(0), Fraction(0)), True
        bits = 64
        while bits <= MAX_ISOLATION_BITS:
            disks = _certified_disks(self.min_poly, bits)
            if disks is not None:
                index = min(range(len(disks)),
                            key=lambda k: (disks[k].re - hint_re) ** 2 + (disks[k].im - hint_im) ** 2)
                chosen = disks[index]
                others = [d for k, d in enumerate(disks) if k != index]
                if abs(chosen.im) > chosen.radius:
                    return chosen, False
                recentred = _Disk(chosen.re, Fraction(0), chosen.radius + abs(chosen.im))
                if all(recentred.disjoint(d) for d in others):
                    # a real-centred disk holding exactly one root holds a real root
                    return recentred, True
            bits *= 2
        raise NumberFieldError(f"could not isolate a root of {self.describe()}")

    def _disk_at(self, bits: int) -> _Disk:
        """Disk around the designated root of radius <= 2^-bits, nested in coarser ones."""
        if self.degree == 1 or self._disk.radius <= Fraction(1, 1 << bits):
            return self._disk
        if bits in self._refined:
            return self._refined[bits]
        previous = self._disk
        for known in sorted(self._refined):
            if known < bits:
                previous = self._refined[known]
        work = bits + 16
        while work <= MAX_ISOLATION_BITS:
            disks = _certified_disks(self.min_poly, work) or []
            for disk in disks:
                if self.is_real:
                    disk = _Disk(disk.re, Fraction(0), disk.radius + abs(disk.im))
                if disk.radius <= Fraction(1, 1 << bits) and previous.contains_disk(disk):
                    self._refined[bits] = disk
                    return disk
            work *= 2
        raise PrecisionError(f"could not refine the root of {self.describe()} to {bits} bits")

    def theta_interval(self, bits: int) -> ComplexInterval:
        disk = self._disk_at(bits)
        im = RealInterval.point(0) if self.is_real else RealInterval(disk.im - disk.radius, disk.im + disk.radius)
        return ComplexInterval(RealInterval(disk.re - disk.radius, disk.re + disk.radius), im)

    # ------------------------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    @property
    def is_gaussian(self) -> bool:
        return self.min_poly == (Fraction(1), Fraction(0), Fraction(1))

    @property
    def imag_sign(self) -> int:
        return 1 if self._disk.im >= 0 else -1

    @property
    def conjugation_closed(self) -> bool:
        return self.is_real or self.is_gaussian

    @cached_property
    def power_parts(self) -> Tuple[Tuple["NumberFieldElem", "NumberFieldElem"], ...]:
        """(Re theta^k, Im theta^k) for k < degree, in the real field Q(Re theta, Im theta)."""
        if self.is_real:
            return tuple((self.gen ** k, self.zero) for k in range(self.degree))
        re, im = _root_parts(self)
        parts = [(RATIONALS.one, RATIONALS.zero)]
        for _ in range(1, self.degree):
            a, b = parts[-1]
            parts.append((a * re - b * im, a * im + b * re))
        logger.debug(f"Real and imaginary parts of {self.describe()} live in {re.field.describe()}")
        return tuple(parts)

    def _same_root(self, other: "NumberField") -> bool:
        bits = 16
        while bits <= MAX_ISOLATION_BITS:
            mine, theirs = self._disk_at(bits), other._disk_at(bits)
            if mine.disjoint(theirs):
                return False
            if theirs.contains_disk(mine) or mine.contains_disk(theirs):
                # both isolate exactly one root of the same polynomial
                return True
            bits *= 2
        raise PrecisionError("could not compare embeddings")

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, NumberField) or self.min_poly != other.min_poly:
            return False
        return self.degree == 1 or self._same_root(other)

    def __hash__(self) -> int:
        return hash(self.min_poly)

    # ------------------------------------------------------------------
    # sympy bridge, used where factoring over K is needed
    @cached_property
    def sympy_root(self):
        """Closed form (or CRootOf) of the designated root."""
        a = [sympy.Rational(c.numerator, c.denominator) for c in self.min_poly]
        if self.degree == 1:
            return -a[0]
        target = complex(self.gen)
        if self.degree == 2:
            disc = a[1] ** 2 - 4 * a[0]
            candidates = [(-a[1] + sign * sympy.sqrt(disc)) / 2 for sign in (1, -1)]
        else:
            poly = self._sympy_poly(self.min_poly)
            candidates = [sympy.CRootOf(poly.as_expr(), k) for k in range(self.degree)]
        return min(candidates, key=lambda r: abs(complex(sympy.N(r, 30)) - target))

    @cached_property
    def algebraic_domain(self):
        return QQ if self.is_rational else QQ.algebraic_field(self.sympy_root)

    def to_sympy_number(self, a: "NumberFieldElem"):
        return sum(sympy.Rational(c.numerator, c.denominator) * self.sympy_root ** k for k, c in enumerate(a.coeffs))

    def from_sympy_number(self, expr) -> "NumberFieldElem":
        if self.is_rational:
            return self.element([as_fraction(sympy.nsimplify(expr))])
        number = sympy.polys.numberfields.to_number_field(expr, self.sympy_root)
        return self.element([as_fraction(c) for c in reversed(number.coeffs())])

    def describe(self) -> str:
        terms = " + ".join(f"({c})*theta^{k}" for k, c in enumerate(self.min_poly) if c != 0)
        return f"Q[theta]/({terms})"

    def __repr__(self) -> str:
        return f"NumberField({[str(c) for c in self.min_poly]}, hint={self.hint_text})"

    def descriptor(self) -> Dict:
        return {
            "min_poly": [fraction_str(c) for c in self.min_poly],
            "root_hint": {"re": self.hint_text[0], "im": self.hint_text[1]},
        }

    # ------------------------------------------------------------------
    def element(self, coeffs: Sequence) -> "NumberFieldElem":
        values = [as_fraction(c) for c in coeffs]
        if len(values) > self.degree:
            values = _reduce_mod(values, self.min_poly)
        values += [Fraction(0)] * (self.degree - len(values))
        return NumberFieldElem(tuple(values), self)

    def __call__(self, value) -> "NumberFieldElem":
        return self.coerce(value)

    @property
    def zero(self) -> "NumberFieldElem":
        return self.element([0])

    @property
    def one(self) -> "NumberFieldElem":
        return self.element([1])

    @property
    def gen(self) -> "NumberFieldElem":
        return self.element([0, 1]) if self.degree > 1 else self.element([-self.min_poly[0]])

    def coerce(self, value) -> "NumberFieldElem":
        if isinstance(value, NumberFieldElem):
            if value.field is self or value.field == self:
                return value if value.field is self else NumberFieldElem(value.coeffs, self)
            if value.field.is_rational or value.is_rational():
                return self.element([value.coeffs[0]])
            raise FieldMismatchError("element belongs to another number field",
                                     {"element_field": value.field.descriptor(), "target": self.descriptor()})
        return self.element([as_fraction(value)])


def _reduce_mod(values: List[Fraction], modulus: Sequence[Fraction]) -> List[Fraction]:
    """Remainder of a polynomial (constant first) by the monic modulus."""
    values = list(values)
    degree = len(modulus) - 1
    for k in range(len(values) - 1, degree - 1, -1):
        lead = values[k]
        if lead:
            for j in range(degree):
                values[k - degree + j] -= lead * modulus[j]
        values[k] = Fraction(0)
    return values[:degree]


def common_field(*fields: NumberField) -> NumberField:
    """The field both operands live in; Q coerces into any other field."""
    result = None
    for field in fields:
        if result is None or result.is_rational:
            result = field if result is None or field.degree >= result.degree else result
        elif not field.is_rational and field is not result and field != result:
            raise FieldMismatchError("operands belong to different number fields",
                                     {"left": result.descriptor(), "right": field.descriptor()})
    return result


class NumberFieldElem:
    """Immutable element of K in power-basis coordinates"""

    __slots__ = ("coeffs", "field", "_hash")

    def __init__(self, coeffs: Tuple[Fraction, ...], field: NumberField):
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("NumberFieldElem is immutable")

    def _lift(self, other) -> Tuple["NumberFieldElem", "NumberFieldElem"]:
        if not isinstance(other, NumberFieldElem):
            return self, self.field.coerce(other)
        if other.field is self.field:
            return self, other
        try:
            field = common_field(self.field, other.field)
        except FieldMismatchError:
            # rational values travel between fields
            if other.is_rational():
                return self, self.field.coerce(other)
            if self.is_rational():
                return other.field.coerce(self), other
            raise
        return field.coerce(self), field.coerce(other)

    def __add__(self, other) -> "NumberFieldElem":
        a, b = self._lift(other)
        return NumberFieldElem(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), a.field)

    __radd__ = __add__

    def __neg__(self) -> "NumberFieldElem":
        return NumberFieldElem(tuple(-x for x in self.coeffs), self.field)

    def __sub__(self, other) -> "NumberFieldElem":
        a, b = self._lift(other)
        return NumberFieldElem(tuple(x - y for x, y in zip(a.coeffs, b.coeffs)), a.field)

    def __rsub__(self, other) -> "NumberFieldElem":
        return (-self) + other

    def __mul__(self, other) -> "NumberFieldElem":
        a, b = self._lift(other)
        field = a.field
        if field.degree == 1:
            return NumberFieldElem((a.coeffs[0] * b.coeffs[0],), field)
        product = [Fraction(0)] * (2 * field.degree - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        product[i + j] += x * y
        return NumberFieldElem(tuple(_reduce_mod(product, field.min_poly)), field)

    __rmul__ = __mul__

    def inverse(self) -> "NumberFieldElem":
        if self.is_zero():
            raise FieldDivisionError("division by zero in number field", {"field": self.field.descriptor()})
        field = self.field
        if field.degree == 1:
            return NumberFieldElem((1 / self.coeffs[0],), field)
        inv = sympy.invert(NumberField._sympy_poly(self.coeffs), NumberField._sympy_poly(field.min_poly))
        return field.element([as_fraction(c) for c in reversed(inv.all_coeffs())])

    def __truediv__(self, other) -> "NumberFieldElem":
        a, b = self._lift(other)
        return a * b.inverse()

    def __rtruediv__(self, other) -> "NumberFieldElem":
        return self.field.coerce(other) * self.inverse()

    def __pow__(self, exponent: int) -> "NumberFieldElem":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result, base = self.field.one, self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if not isinstance(other, NumberFieldElem):
            return NotImplemented
        if other.field is not self.field:
            try:
                a, b = self._lift(other)
            except FieldMismatchError:
                return False
            return a.coeffs == b.coeffs
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self.is_rational():
            return hash(self.coeffs[0])
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.coeffs, self.field.min_poly)))
        return self._hash

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise FieldMismatchError("element is not rational", {"coeffs": [str(c) for c in self.coeffs]})
        return self.coeffs[0]

    def conjugate(self) -> "NumberFieldElem":
        if self.field.is_real or self.is_rational():
            return self
        if self.field.is_gaussian:
            return NumberFieldElem((self.coeffs[0], -self.coeffs[1]), self.field)
        raise ConjugationError("field is not closed under complex conjugation", {"field": self.field.descriptor()})

    def real_imag(self) -> Tuple["NumberFieldElem", "NumberFieldElem"]:
        """
        Real and imaginary parts, as elements of a real field

        For a non-real field K = Q(theta) the parts live in L = Q(Re theta, Im theta),
        which is generally not a subfield of K (Q(sqrt 3) for the cube roots of unity).
        """
        if self.field.is_real:
            return self, self.field.zero
        if self.is_rational():
            return RATIONALS.element([self.coeffs[0]]), RATIONALS.zero
        if self.field.is_gaussian:
            # theta is i or -i depending on the designated root
            return RATIONALS.element([self.coeffs[0]]), RATIONALS.element([self.coeffs[1] * self.field.imag_sign])
        re, im = RATIONALS.zero, RATIONALS.zero
        for c, (p, q) in zip(self.coeffs, self.field.power_parts):
            if c:
                re, im = re + p * c, im + q * c
        return re, im

    def galois_conjugates(self) -> List["NumberFieldElem"]:
        """Images under the automorphisms of K (rational and quadratic fields)."""
        if self.field.degree == 1:
            return [self]
        if self.field.degree == 2:
            c0, c1 = self.coeffs
            a1 = self.field.min_poly[1]
            return [self, NumberFieldElem((c0 - a1 * c1, -c1), self.field)]
        raise FieldExtensionError("automorphisms are only available for fields of degree <= 2",
                                  {"field": self.field.descriptor()})

    def embed(self, precision: int = 53) -> ComplexInterval:
        return nf_embed(self, precision)

    def __complex__(self) -> complex:
        return complex(nf_embed(self, 53))

    def __float__(self) -> float:
        return complex(self).real

    def __repr__(self) -> str:
        if self.is_rational():
            return str(self.coeffs[0])
        terms = []
        for k, c in enumerate(self.coeffs):
            if c:
                terms.append(str(c) if k == 0 else (f"{c}*theta" if k == 1 else f"{c}*theta^{k}"))
        return "(" + " + ".join(terms) + ")"


RATIONALS = NumberField([0, 1], 0j, hint_text=("0", "0"))


@lru_cache(maxsize=None)
def gaussian_field() -> NumberField:
    return NumberField([1, 0, 1], 1j, hint_text=("0", "1"))


@lru_cache(maxsize=None)
def real_quadratic_field(d: int) -> NumberField:
    """Q(sqrt(d)) with the positive real embedding."""
    return NumberField([-d, 0, 1], complex(math.sqrt(d)), hint_text=(repr(math.sqrt(d)), "0"))


@lru_cache(maxsize=None)
def _real_field(min_poly: Tuple[Fraction, ...], hint: str) -> NumberField:
    return NumberField(min_poly, hint_text=(hint, "0"))


def positive_sqrt(value: Rational) -> NumberFieldElem:
    """The positive square root of a positive rational, in Q or in the canonical Q(sqrt d)."""
    value = as_fraction(value)
    if value <= 0:
        raise ValueError("square root of a non-positive rational")
    n = value.numerator * value.denominator
    d = 1
    for p, e in sympy.factorint(n).items():
        if e % 2:
            d *= p
    coeff = Fraction(math.isqrt(n // d), value.denominator)
    if d == 1:
        return RATIONALS.element([coeff])
    return real_quadratic_field(d).element([0, coeff])


# ----------------------------------------------------------------------------
# real and imaginary parts of a non-real root

_X, _Y, _T = sympy.symbols("x y t")
_SEPARATING = ((0, 1), (1, 0), (1, 1), (1, -1), (1, 2), (2, 1), (1, 3), (3, 1))
_PARTS_DPS = 120


def _split_real_imaginary(coeffs: Sequence[Fraction]):
    """U, W with p(x + i y) = U(x, y) + i y W(x, y) for real x, y."""
    u, w = sympy.Integer(0), sympy.Integer(0)
    for k, c in enumerate(coeffs):
        c = sympy.Rational(c.numerator, c.denominator)
        for j in range(k + 1):
            term = c * math.comb(k, j) * (-1) ** (j // 2) * _X ** (k - j)
            if j % 2 == 0:
                u += term * _Y ** j
            else:
                w += term * _Y ** (j - 1)
    return sympy.expand(u), sympy.expand(w)


def _eliminate(u, w, s: int, t: int, gamma) -> Optional[List[Fraction]]:
    """Monic minimal polynomial of gamma = s Re(theta) + t Im(theta), or None if elimination degenerates."""
    if t:
        subs, var = {_Y: (_T - s * _X) / t}, _X
    else:
        subs, var = {_X: _T / s}, _Y
    resultant = sympy.resultant(sympy.expand(u.subs(subs)), sympy.expand(w.subs(subs)), var)
    resultant = sympy.expand(resultant)
    if resultant == 0 or not resultant.has(_T):
        return None
    _, factors = sympy.factor_list(resultant, _T)
    best, best_value = None, None
    for factor, _ in factors:
        poly = Poly(factor, _T, domain=QQ)
        if poly.degree() < 1:
            continue
        coeffs = [as_fraction(c) for c in reversed(poly.monic().all_coeffs())]
        value = abs(mpmath.polyval([mpmath.mpf(c.numerator) / c.denominator for c in reversed(coeffs)], gamma))
        if best_value is None or value < best_value:
            best, best_value = coeffs, value
    if best is None or best_value > mpmath.mpf(10) ** (-_PARTS_DPS // 2):
        return None
    return best


def _express(targets, gamma, degree: int) -> Optional[List[List[Fraction]]]:
    """Rational coordinates of each target in the basis 1, gamma, ..., gamma^(degree-1), found by PSLQ."""
    powers = [gamma ** k for k in range(degree)]
    tiny = mpmath.mpf(10) ** (-_PARTS_DPS // 2)
    coords = []
    for target in targets:
        if abs(target) < tiny:
            coords.append([Fraction(0)] * degree)
            continue
        relation = mpmath.pslq([target] + powers, maxcoeff=10 ** 15, maxsteps=10 ** 5)
        if relation is None or relation[0] == 0:
            return None
        coords.append([Fraction(-int(c), int(relation[0])) for c in relation[1:]])
    return coords


def _generator_in(min_poly: Sequence[Fraction], gamma) -> Optional[NumberFieldElem]:
    """gamma as an element of a real field; quadratic ones go to the canonical Q(sqrt d)."""
    degree = len(min_poly) - 1
    if degree == 1:
        return RATIONALS.element([-min_poly[0]])
    if degree == 2:
        g0, g1 = min_poly[0], min_poly[1]
        sign = 1 if 2 * gamma + mpmath.mpf(g1.numerator) / g1.denominator > 0 else -1
        return (positive_sqrt(g1 * g1 - 4 * g0) * sign - g1) / 2
    field = _real_field(tuple(min_poly), mpmath.nstr(gamma, 40))
    return field.gen if field.is_real else None


def _root_parts(field: NumberField) -> Tuple[NumberFieldElem, NumberFieldElem]:
    """
    Re and Im of the designated root of a non-real field, as elements of one real field

    Quadratic fields have a closed form. Otherwise a separating combination gamma of
    the two parts is eliminated from U = W = 0, where p(x + iy) = U + i y W. Both
    parts are written in powers of gamma with PSLQ, and the answer is certified
    exactly: p vanishes at the candidate, whose enclosure lies in the isolating
    disk of the designated root.
    """
    a = field.min_poly
    if field.degree == 2:
        disc = a[1] * a[1] - 4 * a[0]
        return RATIONALS.element([-a[1] / 2]), positive_sqrt(-disc / 4) * field.imag_sign
    u, w = _split_real_imaginary(a)
    box = field.theta_interval(4 * _PARTS_DPS)
    too_large = None
    with mpmath.workdps(_PARTS_DPS):
        rho = mpmath.mpf(box.re.mid.numerator) / box.re.mid.denominator
        iota = mpmath.mpf(box.im.mid.numerator) / box.im.mid.denominator
        for s, t in _SEPARATING:
            gamma = s * rho + t * iota
            min_poly = _eliminate(u, w, s, t, gamma)
            if min_poly is None:
                continue
            if len(min_poly) - 1 > MAX_DEGREE:
                too_large = len(min_poly) - 1
                continue
            coords = _express([rho, iota], gamma, len(min_poly) - 1)
            gen = _generator_in(min_poly, gamma) if coords is not None else None
            if gen is None:
                continue
            re, im = (sum((gen ** k * c for k, c in enumerate(cs)), RATIONALS.zero) for cs in coords)
            if _is_designated_root(field, re, im):
                return re, im
    if too_large is not None:
        raise FieldExtensionError(f"real and imaginary parts need a real field of degree {too_large}",
                                  {"field": field.descriptor(), "max_degree": MAX_DEGREE})
    raise ConjugationError("could not split the root into real and imaginary parts", {"field": field.descriptor()})


def _is_designated_root(field: NumberField, re: NumberFieldElem, im: NumberFieldElem) -> bool:
    acc_re, acc_im = RATIONALS.zero, RATIONALS.zero
    for c in reversed(field.min_poly):
        acc_re, acc_im = acc_re * re - acc_im * im + c, acc_re * im + acc_im * re
    if not (acc_re.is_zero() and acc_im.is_zero()):
        return False
    # exactly one root of p lies in the isolating disk
    re_box, im_box = nf_embed(re, 96).re, nf_embed(im, 96).re
    enclosure = _Disk(re_box.mid, im_box.mid, re_box.width + im_box.width)
    return field._disk.contains_disk(enclosure)


def nf_arith(a: NumberFieldElem, b: NumberFieldElem, op: str) -> NumberFieldElem:
    if a.field is not b.field and not (a.field.is_rational or b.field.is_rational) and a.field != b.field:
        raise FieldMismatchError("operands belong to different number fields")
    if op == "+":
        return a + b
    if op in ("-", "−"):
        return a - b
    if op in ("*", "×"):
        return a * b
    if op in ("/", "÷"):
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def nf_embed(a: NumberFieldElem, precision: int = 53) -> ComplexInterval:
    """
    Certified enclosure of the image of a under the designated embedding

    Args:
        a: element to embed
        precision: requested bits; the result has width <= 2^(1 - precision)

    Returns:
        ComplexInterval containing the image; asking for more bits returns a nested interval
    """
    if precision < 1:
        raise ValueError("precision must be >= 1")
    if a.is_rational():
        return ComplexInterval.point(a.coeffs[0])
    target = Fraction(2) ** (1 - precision)
    bits = precision + 2 * a.field.degree + 8
    while True:
        theta = a.field.theta_interval(bits)
        acc = ComplexInterval.point(a.coeffs[-1])
        for c in reversed(a.coeffs[:-1]):
            acc = acc * theta + ComplexInterval.point(c)
        if a.field.is_real:
            acc = ComplexInterval(acc.re, RealInterval.point(0))
        if acc.width <= target:
            return acc
        bits += 16
        if bits > MAX_ISOLATION_BITS:
            raise PrecisionError("embedding did not reach the requested width")


def rational_coefficient_vectors(v: Sequence[NumberFieldElem], n: Optional[int] = None) -> List[Tuple[Fraction, ...]]:
    """
    Split a K-vector into its rational power-basis components

    Returns the d vectors v_0..v_{d-1} in Q^n with v = sum_j v_j theta^j entrywise.
    """
    if n is not None and len(v) != n:
        raise ValueError(f"vector has length {len(v)}, expected {n}")
    if not v:
        return []
    fields = [x.field for x in v if not x.is_rational()]
    field = common_field(*fields) if fields else RATIONALS
    lifted = [field.coerce(x) for x in v]
    return [tuple(x.coeffs[j] for x in lifted) for j in range(field.degree)]


def from_coefficient_vectors(vectors: Sequence[Sequence[Fraction]], field: NumberField) -> List[NumberFieldElem]:
    """Inverse of rational_coefficient_vectors."""
    n = len(vectors[0])
    return [field.element([vectors[j][i] for j in range(field.degree)]) for i in range(n)]
