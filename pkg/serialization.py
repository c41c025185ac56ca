"""
JSON documents (schema "v1") and their pydantic models.

Rationals travel as "p/q" strings, number field elements as power-basis
coefficient lists, polynomials as sparse monomial lists (or expression strings
on input). Emitted documents are key-sorted so the same object always gives the
same bytes.
"""

import json
import logging
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, StrictInt, StrictStr, ValidationError

from asymptotics import AsymptoticFlat
from closure import ClosureComponent, ClosureDescription, TranslateSet
from errors import SchemaError
from exact_linalg import Lattice, Subspace, realify
from numberfield import (
    RATIONALS,
    NumberField,
    NumberFieldElem,
    as_fraction,
    fraction_str,
    gaussian_field,
    real_quadratic_field,
)
from parameters import KPoly, ParameterSystem
from puiseux import PuiseuxBranch, PuiseuxScalar

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"

Rat = Union[StrictInt, StrictStr]
KElemDoc = Union[Rat, List[Rat]]


class Document(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RootHint(Document):
    re: Union[StrictStr, float, StrictInt] = "0"
    im: Union[StrictStr, float, StrictInt] = "0"


class FieldDoc(Document):
    min_poly: List[Rat]
    root_hint: RootHint = Field(default_factory=RootHint)


class MonomialDoc(Document):
    exp: List[StrictInt]
    coeff: KElemDoc


KPolyDoc = Union[StrictStr, List[MonomialDoc]]


class LatticeDoc(Document):
    dim: StrictInt
    basis: List[List[Rat]]
    complex: bool = False


class SubspaceDoc(Document):
    mode: Literal["real", "complex"]
    basis: List[List[KElemDoc]]
    coords: Literal["real", "complex"] = "real"
    dim: Optional[StrictInt] = None
    complex_ambient: Optional[bool] = None


class TermDoc(Document):
    exp: Rat
    coeff: KPolyDoc


class BranchDoc(Document):
    ramification: StrictInt = 1
    field: Optional[FieldDoc] = None
    truncation: Optional[Rat] = None
    coords: List[List[TermDoc]]
    params: List[StrictStr] = []
    constraints: List[KPolyDoc] = []


class VarietyDoc(Document):
    vars: List[StrictStr]
    polys: List[KPolyDoc]


class BundleDoc(Document):
    version: Literal["v1"] = Field(SCHEMA_VERSION, alias="schema")
    name: Optional[StrictStr] = None
    field: Optional[FieldDoc] = None
    mode: Literal["real", "complex"] = "complex"
    variety: Optional[VarietyDoc] = None
    lattice: Optional[LatticeDoc] = None
    families: Optional[List[List[BranchDoc]]] = None
    dim_x: Optional[StrictInt] = None
    truncation: Optional[Rat] = None


class SaturateDoc(Document):
    version: Literal["v1"] = Field(SCHEMA_VERSION, alias="schema")
    field: Optional[FieldDoc] = None
    lattice: LatticeDoc
    subspace: SubspaceDoc
    method: Literal["lambda", "galois"] = "lambda"


class FlatDoc(Document):
    mode: Literal["real", "complex"]
    field: Optional[FieldDoc] = None
    base: List[KPolyDoc]
    dirs: List[List[KPolyDoc]]
    exponents: List[Rat]
    params: List[StrictStr] = []
    constraints: List[KPolyDoc] = []


class TranslateDoc(Document):
    base: List[List[KPolyDoc]]
    params: List[StrictStr] = []
    constraints: List[KPolyDoc] = []


class ComponentDoc(Document):
    V: SubspaceDoc
    V_lambda: SubspaceDoc
    C: TranslateDoc
    maximal: bool
    families: List[StrictStr] = []


class ClosureDoc(Document):
    version: Literal["v1"] = Field(SCHEMA_VERSION, alias="schema")
    field: FieldDoc
    mode: Literal["real", "complex"]
    n: StrictInt
    variety: Optional[VarietyDoc] = None
    lattice: LatticeDoc
    components: List[ComponentDoc]
    bounded_flats: StrictInt = 0
    clause_report: Optional[Dict[str, Any]] = None
    torus: Optional[Dict[str, Any]] = None


def validate(model, payload: Dict[str, Any]):
    """Validate a raw document, turning pydantic errors into SchemaError."""
    try:
        return model.model_validate(payload)
    except ValidationError as err:
        raise SchemaError(f"invalid {model.__name__}", {"errors": json.loads(err.json())})


def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False)


def load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path} is not valid JSON", {"line": err.lineno, "column": err.colno})
    except OSError as err:
        raise SchemaError(f"cannot read {path}", {"reason": str(err)})


# ----------------------------------------------------------------------------
# scalars


def encode_field(field: NumberField) -> Dict[str, Any]:
    return field.descriptor()


def decode_field(doc: Optional[FieldDoc]) -> NumberField:
    if doc is None:
        return RATIONALS
    min_poly = [as_fraction(c) for c in doc.min_poly]
    if min_poly == [0, 1]:
        return RATIONALS
    hint = (str(doc.root_hint.re), str(doc.root_hint.im))
    if min_poly == [1, 0, 1] and as_fraction(hint[1]) > 0:
        return gaussian_field()
    if len(min_poly) == 3 and min_poly[1] == 0 and min_poly[2] == 1 and min_poly[0] < 0 and min_poly[0].denominator == 1 \
            and as_fraction(hint[0]) > 0 and as_fraction(hint[1]) == 0:
        return real_quadratic_field(int(-min_poly[0]))
    return NumberField(min_poly, complex(float(as_fraction(hint[0])), float(as_fraction(hint[1]))), hint_text=hint)


def encode_elem(x: NumberFieldElem, field: NumberField) -> List[str]:
    return [fraction_str(c) for c in field.coerce(x).coeffs]


def decode_elem(doc: KElemDoc, field: NumberField) -> NumberFieldElem:
    if isinstance(doc, list):
        return field.element([as_fraction(c) for c in doc])
    return field.coerce(as_fraction(doc))


def encode_poly(p: KPoly, field: NumberField) -> List[Dict[str, Any]]:
    return [{"exp": list(mono), "coeff": encode_elem(c, field)} for mono, c in sorted(p.terms.items())]


def decode_poly(doc: KPolyDoc, variables: Sequence[str], field: NumberField) -> KPoly:
    if isinstance(doc, str):
        return KPoly.from_expr(doc, variables, field)
    terms = {}
    for monomial in doc:
        if len(monomial.exp) != len(variables):
            raise SchemaError("monomial exponent does not match the variables",
                              {"exp": monomial.exp, "variables": list(variables)})
        terms[tuple(monomial.exp)] = decode_elem(monomial.coeff, field)
    return KPoly(variables, terms, field)


def _params(names: Sequence[str], constraints: Sequence[KPolyDoc], field: NumberField) -> ParameterSystem:
    return ParameterSystem(tuple(names), tuple(decode_poly(c, names, field) for c in constraints), field)


def _encode_params(params: ParameterSystem, field: NumberField) -> Dict[str, Any]:
    return {"params": list(params.names), "constraints": [encode_poly(c, field) for c in params.constraints]}


# ----------------------------------------------------------------------------
# lattices and subspaces


def encode_lattice(lattice: Lattice) -> Dict[str, Any]:
    columns = [[fraction_str(lattice.matrix[i, j]) for i in range(lattice.ambient_dim)]
               for j in range(lattice.ambient_dim)]
    return {"dim": lattice.ambient_dim, "basis": columns, "complex": lattice.complex_ambient}


def decode_lattice(doc: LatticeDoc) -> Lattice:
    if len(doc.basis) != doc.dim or any(len(v) != doc.dim for v in doc.basis):
        raise SchemaError("lattice needs dim basis vectors of length dim", {"dim": doc.dim})
    rows = [[as_fraction(doc.basis[j][i]) for j in range(doc.dim)] for i in range(doc.dim)]
    return Lattice(rows, complex_ambient=doc.complex)


def encode_subspace(V: Subspace, field: NumberField) -> Dict[str, Any]:
    return {
        "mode": V.mode,
        "coords": "real",
        "dim": V.ambient_dim,
        "complex_ambient": V.complex_ambient,
        "basis": [[encode_elem(x, field) for x in row] for row in V.rows],
    }


def decode_subspace(doc: SubspaceDoc, field: NumberField, ambient_dim: Optional[int] = None,
                    complex_ambient: Optional[bool] = None) -> Subspace:
    rows = [[decode_elem(x, field) for x in row] for row in doc.basis]
    complex_ambient = doc.complex_ambient if doc.complex_ambient is not None else complex_ambient
    if doc.coords == "complex":
        m = len(rows[0]) if rows else (doc.dim or ambient_dim or 0) // 2
        rows = [realify(row) for row in rows]
        complex_ambient = True
        N = 2 * m
    else:
        N = doc.dim or ambient_dim or (len(rows[0]) if rows else None)
    if N is None:
        raise SchemaError("ambient dimension of an empty subspace must be given")
    if ambient_dim is not None and N != ambient_dim:
        raise SchemaError("subspace and lattice live in different ambients", {"subspace": N, "lattice": ambient_dim})
    return Subspace(N, rows, mode=doc.mode, complex_ambient=bool(complex_ambient))


# ----------------------------------------------------------------------------
# branches and flats


def _member_field(own: NumberField, field: NumberField) -> NumberField:
    """Field a branch or flat is written over: the document field unless it needs its own."""
    if own.is_rational or own is field or own == field:
        return field
    return own


def encode_branch(branch: PuiseuxBranch, field: NumberField) -> Dict[str, Any]:
    own = _member_field(branch.field, field)
    coords = []
    for c in branch.coords:
        coords.append([{"exp": fraction_str(q), "coeff": encode_poly(p, own)} for q, p in sorted(c.terms.items())])
    doc = {
        "ramification": branch.ramification,
        "truncation": None if branch.truncation is None else fraction_str(branch.truncation),
        "coords": coords,
    }
    doc.update(_encode_params(branch.params, own))
    if own is not field:
        doc["field"] = encode_field(own)
    return doc


def decode_branch(doc: BranchDoc, field: NumberField) -> PuiseuxBranch:
    if doc.field is not None:
        field = decode_field(doc.field)
    params = _params(doc.params, doc.constraints, field)
    truncation = None if doc.truncation is None else as_fraction(doc.truncation)
    coords = []
    for terms in doc.coords:
        series: Dict[Fraction, KPoly] = {}
        for term in terms:
            q = as_fraction(term.exp)
            poly = decode_poly(term.coeff, params.names, field)
            series[q] = series[q] + poly if q in series else poly
        coords.append(PuiseuxScalar(series, doc.ramification, truncation, params, field))
    return PuiseuxBranch(coords, params)


def encode_flat(flat: AsymptoticFlat, field: NumberField) -> Dict[str, Any]:
    own = _member_field(flat.field, field)
    doc = {
        "mode": flat.mode,
        "base": [encode_poly(p, own) for p in flat.base],
        "dirs": [[encode_poly(p, own) for p in v] for _, v in flat.generators],
        "exponents": [fraction_str(q) for q in flat.exponents],
    }
    doc.update(_encode_params(flat.params, own))
    if own is not field:
        doc["field"] = encode_field(own)
    return doc


def decode_flat(doc: FlatDoc, field: NumberField) -> AsymptoticFlat:
    if len(doc.dirs) != len(doc.exponents):
        raise SchemaError("every direction needs its exponent")
    if doc.field is not None:
        field = decode_field(doc.field)
    params = _params(doc.params, doc.constraints, field)
    base = tuple(decode_poly(p, params.names, field) for p in doc.base)
    generators = [(as_fraction(q), tuple(decode_poly(p, params.names, field) for p in v))
                  for q, v in zip(doc.exponents, doc.dirs)]
    return AsymptoticFlat(base, generators, doc.mode, params)


# ----------------------------------------------------------------------------
# bundles


class Bundle:
    """Parsed input bundle: field, mode, variety, lattice and branch families"""

    def __init__(self, doc: BundleDoc, truncation: Optional[Fraction] = None):
        self.name = doc.name
        self.field = decode_field(doc.field)
        self.mode = doc.mode
        self.variables: List[str] = list(doc.variety.vars) if doc.variety else []
        self.variety: Optional[List[KPoly]] = (
            [decode_poly(p, self.variables, self.field) for p in doc.variety.polys] if doc.variety else None)
        self.lattice = decode_lattice(doc.lattice) if doc.lattice else None
        self.dim_x = doc.dim_x
        self.truncation = truncation if truncation is not None else (
            as_fraction(doc.truncation) if doc.truncation is not None else None)
        self.families: Optional[List[List[PuiseuxBranch]]] = (
            [[decode_branch(b, self.field) for b in family] for family in doc.families]
            if doc.families is not None else None)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any], truncation: Optional[Fraction] = None) -> "Bundle":
        return cls(validate(BundleDoc, payload), truncation)

    def plane_curve(self) -> KPoly:
        if not self.variety or len(self.variety) != 1 or len(self.variables) != 2:
            raise SchemaError("bundle has no families and no single bivariate polynomial to expand")
        return self.variety[0]

    @property
    def n(self) -> int:
        if self.families:
            return self.families[0][0].n
        return len(self.variables)


def encode_variety(variables: Sequence[str], polys: Optional[Sequence[KPoly]], field: NumberField):
    if polys is None:
        return None
    return {"vars": list(variables), "polys": [encode_poly(p, field) for p in polys]}


def encode_bundle(field: NumberField, mode: str, families: Sequence[Sequence[PuiseuxBranch]],
                  variables: Sequence[str] = (), variety: Optional[Sequence[KPoly]] = None,
                  lattice: Optional[Lattice] = None, dim_x: Optional[int] = None,
                  name: Optional[str] = None) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "field": encode_field(field),
        "mode": mode,
        "families": [[encode_branch(b, field) for b in family] for family in families],
    }
    if variety is not None:
        doc["variety"] = encode_variety(variables, variety, field)
    if lattice is not None:
        doc["lattice"] = encode_lattice(lattice)
    if dim_x is not None:
        doc["dim_x"] = dim_x
    if name is not None:
        doc["name"] = name
    return doc


# ----------------------------------------------------------------------------
# closure descriptions


def _description_field(desc: ClosureDescription) -> NumberField:
    fields = [RATIONALS]
    for comp in desc.components:
        for row in comp.V.rows + comp.V_lambda.rows:
            fields.extend(x.field for x in row if not x.is_rational())
        for p in comp.C.points:
            fields.extend(c.field for x in p for c in x.terms.values() if not c.is_rational())
    for p in desc.variety or []:
        fields.append(p.field)
    best = RATIONALS
    for f in fields:
        if f.degree > best.degree:
            best = f
    return best


def encode_closure(desc: ClosureDescription, clause_report: Optional[Dict[str, Any]] = None,
                   torus: Optional[Dict[str, Any]] = None, field: Optional[NumberField] = None) -> Dict[str, Any]:
    field = field or _description_field(desc)
    components = []
    for comp in desc.components:
        translate = {"base": [[encode_poly(x, field) for x in p] for p in comp.C.points]}
        translate.update(_encode_params(comp.C.params, field))
        components.append({
            "V": encode_subspace(comp.V, field),
            "V_lambda": encode_subspace(comp.V_lambda, field),
            "C": translate,
            "maximal": comp.maximal,
            "families": sorted(comp.families),
        })
    variables = list(desc.variety[0].variables) if desc.variety else []
    doc = {
        "schema": SCHEMA_VERSION,
        "field": encode_field(field),
        "mode": desc.mode,
        "n": desc.n,
        "variety": encode_variety(variables, desc.variety, field),
        "lattice": encode_lattice(desc.lattice),
        "components": components,
        "bounded_flats": desc.bounded_flats,
        "clause_report": clause_report,
        "torus": torus,
    }
    return doc


def decode_closure(payload: Dict[str, Any]) -> ClosureDescription:
    doc = validate(ClosureDoc, payload)
    field = decode_field(doc.field)
    lattice = decode_lattice(doc.lattice)
    components = []
    for comp in doc.components:
        params = _params(comp.C.params, comp.C.constraints, field)
        points = [tuple(decode_poly(x, params.names, field) for x in p) for p in comp.C.base]
        components.append(ClosureComponent(
            TranslateSet(points, params, doc.mode),
            decode_subspace(comp.V, field, lattice.ambient_dim, lattice.complex_ambient),
            decode_subspace(comp.V_lambda, field, lattice.ambient_dim, lattice.complex_ambient),
            comp.maximal,
            list(comp.families),
        ))
    variety = None
    if doc.variety is not None:
        variety = [decode_poly(p, doc.variety.vars, field) for p in doc.variety.polys]
    return ClosureDescription(lattice, components, doc.mode, doc.n, variety, doc.bounded_flats)


def encode_error(err) -> Dict[str, Any]:
    payload = err.to_dict()
    payload["schema"] = SCHEMA_VERSION
    return payload
