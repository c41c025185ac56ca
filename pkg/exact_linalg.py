"""
Exact linear algebra: lattices, subspaces, flats, Hermite normal form and the
lattice saturation H -> H^Lambda.

Complex ambient spaces C^m are handled as R^{2m} in interleaved coordinates
(Re z1, Im z1, Re z2, ...), with multiplication by i acting as (x, y) -> (-y, x).
Subspace bases live over a real field (Q, or a number field whose designated
root is real); everything here is exact.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import (
    ConjugationError,
    DimensionMismatchError,
    FieldExtensionError,
    InvariantBreach,
    MathPreconditionError,
)
from numberfield import (
    RATIONALS,
    NumberField,
    NumberFieldElem,
    as_fraction,
    common_field,
    gaussian_field,
    rational_coefficient_vectors,
)

logger = logging.getLogger(__name__)

Vector = Tuple[NumberFieldElem, ...]

REAL = "real"
COMPLEX = "complex"


# ----------------------------------------------------------------------------
# elimination over a field


def _field_of(rows: Sequence[Sequence]) -> NumberField:
    # rational entries fit any field, whatever field they were computed in
    fields = [x.field for row in rows for x in row if isinstance(x, NumberFieldElem) and not x.is_rational()]
    return common_field(*fields) if fields else RATIONALS


def as_vector(values: Sequence, field: Optional[NumberField] = None) -> Vector:
    field = field or _field_of([values])
    return tuple(field.coerce(x) for x in values)


def rref(rows: Sequence[Sequence], ncols: int) -> Tuple[List[Vector], List[int]]:
    """Reduced row echelon form; returns the nonzero rows and their pivot columns."""
    field = _field_of(rows)
    m = [[field.coerce(x) for x in row] for row in rows]
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == len(m):
            break
        pivot = next((i for i in range(r, len(m)) if not m[i][c].is_zero()), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and not m[i][c].is_zero():
                factor = m[i][c]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return [tuple(row) for row in m[:r]], pivots


def matrix_rank(rows: Sequence[Sequence], ncols: int) -> int:
    return len(rref(rows, ncols)[1]) if rows else 0


def kernel(rows: Sequence[Sequence], ncols: int) -> List[Vector]:
    """Basis of {x : rows . x = 0}."""
    field = _field_of(rows)
    if not rows:
        return [tuple(field.one if k == j else field.zero for k in range(ncols)) for j in range(ncols)]
    reduced, pivots = rref(rows, ncols)
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        v = [field.zero] * ncols
        v[free] = field.one
        for row, p in zip(reduced, pivots):
            v[p] = -row[free]
        basis.append(tuple(v))
    return basis


def solve_linear(rows: Sequence[Sequence], rhs: Sequence, ncols: int) -> Optional[Vector]:
    """One solution of rows . x = rhs (free variables set to zero), or None."""
    if not rows:
        return tuple(RATIONALS.zero for _ in range(ncols))
    augmented = [list(row) + [b] for row, b in zip(rows, rhs)]
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        return None
    field = _field_of(reduced) if reduced else RATIONALS
    x = [field.zero] * ncols
    for row, p in zip(reduced, pivots):
        x[p] = row[ncols]
    return tuple(x)


def matrix_inverse(rows: Sequence[Sequence]) -> List[Vector]:
    n = len(rows)
    field = _field_of(rows)
    augmented = [list(row) + [field.one if i == j else field.zero for j in range(n)] for i, row in enumerate(rows)]
    reduced, pivots = rref(augmented, 2 * n)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise MathPreconditionError("matrix is singular")
    return [tuple(row[n:]) for row in reduced]


def mat_vec(rows: Sequence[Sequence], v: Sequence) -> Vector:
    return tuple(_dot(row, v) for row in rows)


def _dot(a: Sequence, b: Sequence):
    total = RATIONALS.zero
    for x, y in zip(a, b):
        if x and y:
            total = total + x * y
    return total


def transpose(rows: Sequence[Sequence]) -> List[Vector]:
    return [tuple(col) for col in zip(*rows)] if rows else []


# ----------------------------------------------------------------------------
# realification


def realify(v: Sequence[NumberFieldElem]) -> Vector:
    """Vector in K^m -> vector in R^{2m} over a real field."""
    out = []
    for x in as_vector(v):
        re, im = x.real_imag()
        out.extend([re, im])
    return as_vector(out)


def complexify(u: Sequence[NumberFieldElem]) -> Vector:
    """Inverse of realify; the result lives in Q(i) or in the real field of u."""
    if len(u) % 2:
        raise DimensionMismatchError("real vector of odd length has no complex reading")
    field = _field_of([u])
    pairs = [(u[2 * k], u[2 * k + 1]) for k in range(len(u) // 2)]
    if all(im.is_zero() for _, im in pairs):
        return tuple(re for re, _ in pairs)
    if not field.is_rational:
        raise ConjugationError("complex vector with irrational real and imaginary parts has no single field",
                               {"field": field.descriptor()})
    gauss = gaussian_field()
    return tuple(gauss.element([re.coeffs[0], im.coeffs[0]]) for re, im in pairs)


def j_action(u: Sequence[NumberFieldElem]) -> Vector:
    out = []
    for k in range(0, len(u), 2):
        out.extend([-u[k + 1], u[k]])
    return tuple(out)


# ----------------------------------------------------------------------------
# Hermite normal form


def exgcd(a: int, b: int) -> np.ndarray:
    """2x2 integer matrix M of determinant 1 with M @ [a, b] = [gcd(a, b), 0]."""
    a_sign = -1 if a < 0 else 1
    b_sign = -1 if b < 0 else 1
    a, b = a * a_sign, b * b_sign
    M = np.array([[b, 0, 1], [a, 1, 0]], dtype=object)
    while M[1, 0] != 0:
        q = M[0, 0] // M[1, 0]
        M[0] -= q * M[1]
        M = M[::-1].copy()
    g = M[0, 0]
    M = M[:, 1:] * np.array([a_sign, b_sign], dtype=object)
    if g != 0:
        M[1] = [-b_sign * b // g, a_sign * a // g]
    else:
        M = np.eye(2, dtype=object)
    return M


def hnf(M) -> Tuple[np.ndarray, np.ndarray]:
    """
    Column-style Hermite normal form

    Args:
        M: integer matrix (anything numpy can turn into an object array)

    Returns:
        (H, U) with H = M @ U, U unimodular, H lower triangular in echelon form with
        positive pivots and entries left of each pivot reduced into [0, pivot).
    """
    H = np.array(M, dtype=object)
    if H.ndim != 2:
        raise DimensionMismatchError("hnf expects a matrix")
    rows, cols = H.shape
    U = np.eye(cols, dtype=object)
    col = 0
    for i in range(rows):
        if col == cols:
            break
        for j in range(col + 1, cols):
            if H[i, j] == 0:
                continue
            E = exgcd(int(H[i, col]), int(H[i, j])).T
            H[:, [col, j]] = H[:, [col, j]] @ E
            U[:, [col, j]] = U[:, [col, j]] @ E
        if H[i, col] == 0:
            continue
        if H[i, col] < 0:
            H[:, col] = -H[:, col]
            U[:, col] = -U[:, col]
        for k in range(col):
            q = H[i, k] // H[i, col]
            if q:
                H[:, k] = H[:, k] - q * H[:, col]
                U[:, k] = U[:, k] - q * U[:, col]
        col += 1
    return H, U


def integer_kernel(A) -> np.ndarray:
    """Columns forming a Z-basis of {x in Z^n : A x = 0}."""
    A = np.array(A, dtype=object)
    if A.size == 0:
        n = A.shape[1] if A.ndim == 2 else 0
        return np.eye(n, dtype=object)
    H, U = hnf(A)
    zero_cols = [k for k in range(H.shape[1]) if all(H[i, k] == 0 for i in range(H.shape[0]))]
    return U[:, zero_cols]


def clear_denominators(v: Sequence) -> List[int]:
    values = [as_fraction(x.to_fraction() if isinstance(x, NumberFieldElem) else x) for x in v]
    lcm = 1
    for x in values:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    return [int(x * lcm) for x in values]


# ----------------------------------------------------------------------------
# lattices


class Lattice:
    """Full-rank lattice given by the columns of a rational basis matrix"""

    def __init__(self, basis: Sequence[Sequence], complex_ambient: bool = False):
        matrix = [[as_fraction(x) for x in row] for row in basis]
        n = len(matrix)
        if n == 0 or any(len(row) != n for row in matrix):
            raise DimensionMismatchError("lattice basis must be a square matrix")
        if complex_ambient and n % 2:
            raise DimensionMismatchError("complex ambient needs an even real dimension")
        self.ambient_dim = n
        self.complex_ambient = complex_ambient
        self.matrix = np.array(matrix, dtype=object)
        try:
            self.inverse_rows = matrix_inverse([[RATIONALS.element([x]) for x in row] for row in matrix])
        except MathPreconditionError:
            raise MathPreconditionError("lattice basis is singular; Lambda must span the ambient space")

    @classmethod
    def standard(cls, n: int) -> "Lattice":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def gaussian(cls, m: int) -> "Lattice":
        """Z^m + iZ^m inside C^m = R^{2m}."""
        return cls([[1 if i == j else 0 for j in range(2 * m)] for i in range(2 * m)], complex_ambient=True)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Lattice) and self.complex_ambient == other.complex_ambient
                and self.ambient_dim == other.ambient_dim and (self.matrix == other.matrix).all())

    @cached_property
    def basis_rows(self) -> List[Vector]:
        return [tuple(RATIONALS.element([x]) for x in row) for row in self.matrix]

    @cached_property
    def matrix_float(self) -> np.ndarray:
        return self.matrix.astype(float)

    @cached_property
    def inverse_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.inverse_rows])

    @property
    def inverse_matrix(self) -> np.ndarray:
        return np.array([[x.to_fraction() for x in row] for row in self.inverse_rows], dtype=object)

    def to_coords(self, x: Sequence) -> Vector:
        return mat_vec(self.inverse_rows, as_vector(x))

    def from_coords(self, y: Sequence) -> Vector:
        return mat_vec(self.basis_rows, as_vector(y))

    def covering_radius_bound(self) -> float:
        """Half the sum of basis column lengths, an upper bound for the covering radius."""
        return 0.5 * float(np.linalg.norm(self.matrix_float, axis=0).sum())


# ----------------------------------------------------------------------------
# subspaces


class Subspace:
    """
    Real subspace of R^n (or of C^m read as R^{2m}), kept in reduced row echelon form.

    mode is "complex" when the subspace is invariant under multiplication by i; the
    basis is then a real basis of that complex subspace.
    """

    def __init__(self, ambient_dim: int, vectors: Sequence[Sequence] = (), mode: str = REAL,
                 complex_ambient: bool = False):
        if mode not in (REAL, COMPLEX):
            raise DimensionMismatchError(f"unknown scalar mode {mode!r}")
        if mode == COMPLEX:
            complex_ambient = True
        if complex_ambient and ambient_dim % 2:
            raise DimensionMismatchError("complex ambient needs an even real dimension")
        for v in vectors:
            if len(v) != ambient_dim:
                raise DimensionMismatchError(f"vector of length {len(v)} in ambient of dimension {ambient_dim}")
        vectors = [as_vector(v) for v in vectors]
        if mode == COMPLEX:
            vectors = vectors + [j_action(v) for v in vectors]
        self.ambient_dim = ambient_dim
        self.complex_ambient = complex_ambient
        self.mode = mode
        self.rows, self.pivots = rref(vectors, ambient_dim) if vectors else ([], [])

    # constructors
    @classmethod
    def from_complex(cls, vectors: Sequence[Sequence[NumberFieldElem]], m: int, mode: str = COMPLEX) -> "Subspace":
        """Span of vectors of K^m (C-span in complex mode, R-span of the realified vectors otherwise)."""
        for v in vectors:
            if len(v) != m:
                raise DimensionMismatchError(f"vector of length {len(v)} in C^{m}")
        return cls(2 * m, [realify(v) for v in vectors], mode=mode, complex_ambient=True)

    @classmethod
    def zero(cls, ambient_dim: int, mode: str = REAL, complex_ambient: bool = False) -> "Subspace":
        return cls(ambient_dim, [], mode=mode, complex_ambient=complex_ambient)

    @classmethod
    def full(cls, ambient_dim: int, mode: str = REAL, complex_ambient: bool = False) -> "Subspace":
        identity = [[1 if i == j else 0 for j in range(ambient_dim)] for i in range(ambient_dim)]
        return cls(ambient_dim, identity, mode=mode, complex_ambient=complex_ambient)

    def _like(self, vectors: Sequence[Sequence], mode: Optional[str] = None) -> "Subspace":
        """New subspace in the same ambient; complex mode is kept only if the span is i-invariant."""
        result = Subspace(self.ambient_dim, vectors, REAL, self.complex_ambient)
        wanted = mode or self.mode
        if wanted == COMPLEX and result.is_j_invariant():
            result.mode = COMPLEX
        return result

    # queries
    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def complex_dim(self) -> int:
        if self.mode != COMPLEX:
            raise ConjugationError("complex dimension of a subspace that is not i-invariant")
        return self.dim // 2

    @property
    def field(self) -> NumberField:
        return _field_of(self.rows)

    @property
    def basis(self) -> List[Vector]:
        return list(self.rows)

    def is_j_invariant(self) -> bool:
        return self.complex_ambient and all(self.contains_vector(j_action(v)) for v in self.rows)

    def contains_vector(self, v: Sequence) -> bool:
        v = list(as_vector(v))
        if len(v) != self.ambient_dim:
            raise DimensionMismatchError("vector length does not match the ambient dimension")
        for row, p in zip(self.rows, self.pivots):
            if not v[p].is_zero():
                factor = v[p]
                v = [a - factor * b for a, b in zip(v, row)]
        return all(x.is_zero() for x in v)

    def reduce_vector(self, v: Sequence) -> Vector:
        """Canonical representative of v modulo the subspace."""
        v = list(as_vector(v))
        for row, p in zip(self.rows, self.pivots):
            if not v[p].is_zero():
                factor = v[p]
                v = [a - factor * b for a, b in zip(v, row)]
        return tuple(v)

    def _check(self, other: "Subspace"):
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatchError("subspaces live in different ambients",
                                         {"left": self.ambient_dim, "right": other.ambient_dim})

    def contains(self, other: "Subspace") -> bool:
        self._check(other)
        return all(self.contains_vector(v) for v in other.rows)

    def equals(self, other: "Subspace") -> bool:
        self._check(other)
        return self.dim == other.dim and self.pivots == other.pivots and self.rows == other.rows

    def __eq__(self, other) -> bool:
        return isinstance(other, Subspace) and self.ambient_dim == other.ambient_dim and self.equals(other)

    def __hash__(self) -> int:
        return hash((self.ambient_dim, tuple(self.rows)))

    def __le__(self, other: "Subspace") -> bool:
        return other.contains(self)

    def __lt__(self, other: "Subspace") -> bool:
        return other.contains(self) and self.dim < other.dim

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim}, mode={self.mode})"

    # operations
    def annihilator(self) -> List[Vector]:
        """Rows of functionals whose common kernel is the subspace."""
        return kernel(self.rows, self.ambient_dim)

    def sum(self, other: "Subspace") -> "Subspace":
        self._check(other)
        mode = COMPLEX if self.mode == other.mode == COMPLEX else REAL
        return self._like(list(self.rows) + list(other.rows), mode)

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check(other)
        mode = COMPLEX if self.mode == other.mode == COMPLEX else REAL
        return self._like(kernel(self.annihilator() + other.annihilator(), self.ambient_dim), mode)

    def orth_complement(self) -> "Subspace":
        """Euclidean complement of the realified subspace, which is the Hermitian complement in complex mode."""
        return self._like(self.annihilator(), self.mode)

    def orth_projector(self) -> List[Vector]:
        """Matrix (rows) of the orthogonal projection onto the complement of this subspace."""
        n = self.ambient_dim
        field = self.field
        identity = [[field.one if i == j else field.zero for j in range(n)] for i in range(n)]
        if not self.rows:
            return [tuple(row) for row in identity]
        gram = [[_dot(a, b) for b in self.rows] for a in self.rows]
        gram_inv = matrix_inverse(gram)
        # P = I - R^T G^{-1} R
        coeff = [[_dot(gram_inv[i], [row[c] for row in self.rows]) for c in range(n)] for i in range(self.dim)]
        proj = []
        for r in range(n):
            row = []
            for c in range(n):
                value = identity[r][c] - _dot([basis[r] for basis in self.rows], [coeff[i][c] for i in range(self.dim)])
                row.append(value)
            proj.append(tuple(row))
        return proj

    def coordinate_projector(self) -> List[Vector]:
        """orth_projector acting on coordinate vectors: C^m for i-invariant subspaces, R^n otherwise."""
        P = self.orth_projector()
        if not self.complex_ambient:
            return P
        if self.mode != COMPLEX:
            raise ConjugationError("projection along a subspace that is not i-invariant is not C-linear")
        m = self.ambient_dim // 2
        columns = [complexify([P[r][2 * l] for r in range(self.ambient_dim)]) for l in range(m)]
        return [tuple(columns[l][k] for l in range(m)) for k in range(m)]

    def complex_basis(self) -> List[Vector]:
        """A C-basis of a complex-mode subspace, as vectors of C^m."""
        if self.mode != COMPLEX:
            raise ConjugationError("subspace is not i-invariant")
        chosen: List[Vector] = []
        span = Subspace.zero(self.ambient_dim, complex_ambient=True)
        for v in self.rows:
            if not span.contains_vector(v):
                chosen.append(v)
                span = Subspace(self.ambient_dim, list(span.rows) + [v, j_action(v)], complex_ambient=True)
        return [complexify(v) for v in chosen]

    def basis_float(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.ambient_dim))
        return np.array([[float(x) for x in row] for row in self.rows])


def subspace_ops(A: Subspace, B: Subspace, op: str):
    """Dispatch for sum / intersect / contains / equals."""
    if op == "sum":
        return A.sum(B)
    if op == "intersect":
        return A.intersect(B)
    if op == "contains":
        return A.contains(B)
    if op == "equals":
        return A.equals(B)
    raise ValueError(f"unknown subspace operation {op!r}")


def orth_complement(V: Subspace) -> Subspace:
    return V.orth_complement()


# ----------------------------------------------------------------------------
# saturation


def _lambda_coords(H: Subspace, lattice: Lattice) -> List[Vector]:
    if H.ambient_dim != lattice.ambient_dim:
        raise DimensionMismatchError("subspace and lattice live in different ambients",
                                     {"subspace": H.ambient_dim, "lattice": lattice.ambient_dim})
    return [lattice.to_coords(v) for v in H.rows]


def _from_lambda_coords(H: Subspace, lattice: Lattice, coords: Sequence[Vector]) -> Subspace:
    vectors = [lattice.from_coords(y) for y in coords]
    result = Subspace(H.ambient_dim, vectors, REAL, lattice.complex_ambient or H.complex_ambient)
    if result.is_j_invariant():
        result.mode = COMPLEX
    return result


def lambda_saturate(H: Subspace, lattice: Lattice) -> Subspace:
    """
    Smallest subspace defined over the lattice that contains H

    In lattice coordinates every basis vector of H splits into its rational
    power-basis components; their rational span, mapped back, is H^Lambda.
    """
    components: List[Vector] = []
    for y in _lambda_coords(H, lattice):
        for part in rational_coefficient_vectors(y):
            components.append(as_vector(part, RATIONALS))
    saturated = rref(components, H.ambient_dim)[0] if components else []
    result = _from_lambda_coords(H, lattice, saturated)
    logger.debug(f"Saturated dim {H.dim} -> dim {result.dim}")
    return result


def galois_saturate(H: Subspace, lattice: Lattice) -> Subspace:
    """Saturation via the span of H and its Galois conjugates (fields of degree <= 2)."""
    coords = _lambda_coords(H, lattice)
    field = _field_of(coords) if coords else RATIONALS
    if field.degree > 2:
        raise FieldExtensionError("Galois saturation is implemented for fields of degree <= 2",
                                  {"field": field.descriptor()})
    vectors: List[Vector] = []
    for y in coords:
        conjugates = list(zip(*[field.coerce(x).galois_conjugates() for x in y])) if y else []
        vectors.extend(tuple(v) for v in conjugates)
    rows = rref(vectors, H.ambient_dim)[0] if vectors else []
    for row in rows:
        if not all(x.is_rational() for x in row):
            raise InvariantBreach("Galois-stable span has an irrational echelon form", {"row": [repr(x) for x in row]})
    rational_rows = [tuple(RATIONALS.element([x.to_fraction()]) for x in row) for row in rows]
    return _from_lambda_coords(H, lattice, rational_rows)


def is_lambda_defined(V: Subspace, lattice: Lattice) -> bool:
    """Whether V has a basis of lattice vectors, i.e. a rational basis in lattice coordinates."""
    rows = rref(_lambda_coords(V, lattice), V.ambient_dim)[0] if V.rows else []
    return all(x.is_rational() for row in rows for x in row)


def lattice_points_basis(V: Subspace, lattice: Lattice) -> np.ndarray:
    """Integer columns (lattice coordinates) forming a Z-basis of Lambda intersected with V."""
    if not is_lambda_defined(V, lattice):
        raise MathPreconditionError("subspace is not defined over the lattice")
    coords = [lattice.to_coords(v) for v in V.rows]
    ann = kernel(coords, V.ambient_dim) if coords else [
        tuple(RATIONALS.one if i == j else RATIONALS.zero for j in range(V.ambient_dim)) for i in range(V.ambient_dim)]
    if not ann:
        return np.eye(V.ambient_dim, dtype=object)
    integer_rows = [clear_denominators(row) for row in ann]
    return integer_kernel(integer_rows)


# ----------------------------------------------------------------------------
# flats


@dataclass
class Flat:
    """Affine subspace base + direction"""

    base: Vector
    direction: Subspace

    def __post_init__(self):
        self.base = as_vector(self.base)
        if len(self.base) != self.direction.ambient_dim:
            raise DimensionMismatchError("base point does not match the direction's ambient")

    @property
    def dim(self) -> int:
        return self.direction.dim

    @property
    def canonical_base(self) -> Vector:
        return self.direction.reduce_vector(self.base)

    def contains_point(self, x: Sequence) -> bool:
        diff = [a - b for a, b in zip(as_vector(x), self.base)]
        return self.direction.contains_vector(diff)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Flat) or not self.direction.equals(other.direction):
            return False
        return self.contains_point(other.base)

    def __hash__(self) -> int:
        return hash((self.direction, self.canonical_base))

    def translate(self, v: Sequence) -> "Flat":
        return Flat(tuple(a + b for a, b in zip(self.base, as_vector(v))), self.direction)

    def __repr__(self) -> str:
        return f"Flat(base={list(self.canonical_base)}, dim={self.dim}, mode={self.direction.mode})"


def flat_intersect(A1: Flat, A2: Flat) -> Optional[Flat]:
    """Intersection of two flats, or None when empty."""
    A1.direction._check(A2.direction)
    n = A1.direction.ambient_dim
    V1, V2 = A1.direction.rows, A2.direction.rows
    k1 = len(V1)
    # [V1^T | -V2^T] [x; y] = p2 - p1
    system = [[V1[j][r] for j in range(k1)] + [-V2[j][r] for j in range(len(V2))] for r in range(n)]
    rhs = [b - a for a, b in zip(A1.base, A2.base)]
    if not V1 and not V2:
        return A1 if all(x.is_zero() for x in rhs) else None
    solution = solve_linear(system, rhs, k1 + len(V2))
    if solution is None:
        return None
    point = list(A1.base)
    for j in range(k1):
        point = [p + solution[j] * v for p, v in zip(point, V1[j])]
    return Flat(tuple(point), A1.direction.intersect(A2.direction))


def _forward_eliminate(m: List[list], t: List) -> List[int]:
    """Row echelon form of m in place, applying the same row operations to t; returns free columns."""
    free_vars = []
    n_rows, n_cols = len(m), len(m[0]) if m else 0
    piv_r = 0
    for piv_c in range(n_cols):
        i_row = next((i for i in range(piv_r, n_rows) if not m[i][piv_c].is_zero()), None)
        if i_row is None:
            free_vars.append(piv_c)
            continue
        if i_row != piv_r:
            m[piv_r], m[i_row] = m[i_row], m[piv_r]
            t[piv_r], t[i_row] = t[i_row], t[piv_r]
        fp = m[piv_r][piv_c]
        for r in range(piv_r + 1, n_rows):
            fr = m[r][piv_c]
            if fr.is_zero():
                continue
            frp = fr / fp
            m[r] = [a - b * frp for a, b in zip(m[r], m[piv_r])]
            t[r] = t[r] - t[piv_r] * frp
        piv_r += 1
    return free_vars


def _back_substitute(m: List[list], t: List, free_vars: List[int], n_cols: int) -> Optional[list]:
    rank = n_cols - len(free_vars)
    if any(not t[r].is_zero() for r in range(rank, len(m))):
        return None
    field = _field_of(m + [t])
    sol = [field.zero] * n_cols
    piv_cols = [c for c in range(n_cols) if c not in free_vars]
    for r in range(len(piv_cols) - 1, -1, -1):
        c = piv_cols[r]
        s = -t[r]
        for k in range(c + 1, n_cols):
            s = s + m[r][k] * sol[k]
        sol[c] = -s / m[r][c]
    return sol


def flat_intersect_bruteforce(A1: Flat, A2: Flat) -> Optional[Flat]:
    """Intersection through stacked annihilator systems M x = M p; independent of flat_intersect."""
    A1.direction._check(A2.direction)
    n = A1.direction.ambient_dim
    rows, rhs = [], []
    for flat in (A1, A2):
        for functional in flat.direction.annihilator():
            rows.append(list(functional))
            rhs.append(_dot(functional, flat.base))
    if not rows:
        return Flat(A1.base, Subspace.full(n, A1.direction.mode, A1.direction.complex_ambient))
    free = _forward_eliminate(rows, rhs)
    point = _back_substitute(rows, rhs, free, n)
    if point is None:
        return None
    mode = COMPLEX if A1.direction.mode == A2.direction.mode == COMPLEX else REAL
    direction = A1.direction._like(kernel([list(r) for r in rows], n), mode)
    return Flat(tuple(point), direction)
