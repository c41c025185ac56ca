"""
Numerical verification harness.

Points are sampled far out on the variety (branch evaluation at small |z|, or
random line slices of a hypersurface), folded into the torus, and compared with
the predicted components C_i + V_i^Lambda + Lambda. Subspace orbits are checked
for density in their saturation. Distances are float computations padded by a
rounding bound; folding of exact inputs is exact.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.neighbors import KDTree

from asymptotics import is_bounded
from closure import ClosureComponent, ClosureDescription
from config import get_rng, settings
from errors import DimensionMismatchError, PrecisionError, SamplerError
from exact_linalg import COMPLEX, REAL, Lattice, Subspace, lambda_saturate, lattice_points_basis
from numberfield import MAX_ISOLATION_BITS, NumberFieldElem, RealInterval, as_fraction, nf_embed
from parameters import KPoly
from puiseux import PuiseuxBranch

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
WINDOW_BUDGET = 4096
GRID_BUDGET = 20000


# ----------------------------------------------------------------------------
# torus points


@dataclass(frozen=True)
class TorusPoint:
    """Lattice coordinates reduced to [0, 1), each as a certified interval"""

    coords: Tuple[RealInterval, ...]

    @property
    def mid(self) -> np.ndarray:
        return np.array([float(c.mid) for c in self.coords])

    @property
    def width(self) -> Fraction:
        return max((c.width for c in self.coords), default=Fraction(0))

    def is_exact(self) -> bool:
        return self.width == 0


def _real_entries(x: Sequence, lattice: Lattice) -> List[Union[Fraction, NumberFieldElem]]:
    """Entries of x in the real ambient of the lattice."""
    N = lattice.ambient_dim
    entries: List[Union[Fraction, NumberFieldElem]] = []
    if len(x) == N:
        for value in x:
            if isinstance(value, complex):
                if value.imag:
                    raise DimensionMismatchError("complex entry in a real chart")
                value = value.real
            entries.append(value if isinstance(value, NumberFieldElem) else as_fraction(value))
        return entries
    if lattice.complex_ambient and 2 * len(x) == N:
        for value in x:
            if isinstance(value, NumberFieldElem):
                entries.extend(value.real_imag())
            else:
                value = complex(value)
                entries.extend([as_fraction(value.real), as_fraction(value.imag)])
        return entries
    raise DimensionMismatchError(f"point of length {len(x)} for a lattice in dimension {N}")


def fold(x: Sequence, lattice: Lattice, precision: Optional[int] = None) -> TorusPoint:
    """
    Lattice coordinates of x modulo 1

    Args:
        x: point with rational, number field or float entries (floats are read exactly),
            either in the real ambient or, for complex ambients, in C^m
        lattice: full-rank lattice
        precision: starting bits for the enclosure of irrational entries

    Returns:
        TorusPoint; exact (zero-width) whenever every entry is rational
    """
    entries = _real_entries(x, lattice)
    inverse = lattice.inverse_matrix
    if all(isinstance(e, Fraction) or e.is_rational() for e in entries):
        values = [e if isinstance(e, Fraction) else e.to_fraction() for e in entries]
        coords = []
        for row in inverse:
            y = sum((a * b for a, b in zip(row, values)), Fraction(0))
            coords.append(RealInterval.point(y - math.floor(y)))
        return TorusPoint(tuple(coords))

    bits = precision or settings.PRECISION_BITS
    while bits <= MAX_ISOLATION_BITS:
        enclosures = []
        for e in entries:
            if isinstance(e, Fraction) or e.is_rational():
                enclosures.append(RealInterval.point(e if isinstance(e, Fraction) else e.to_fraction()))
            else:
                enclosures.append(nf_embed(e, bits).re)
        coords = []
        for row in inverse:
            y = RealInterval.point(0)
            for a, enclosure in zip(row, enclosures):
                y = y + enclosure.scale(a)
            k = math.floor(y.lo)
            if math.floor(y.hi) != k:
                break
            coords.append(RealInterval(y.lo - k, y.hi - k))
        else:
            return TorusPoint(tuple(coords))
        bits *= 2
    raise PrecisionError("could not separate a lattice coordinate from an integer", {"bits": bits})


def fold_array(points: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Float lattice coordinates modulo 1 of real-ambient points (rows)."""
    y = np.asarray(points, dtype=float) @ lattice.inverse_float.T
    return y - np.floor(y)


def to_ambient(values: np.ndarray, mode: str) -> np.ndarray:
    """Complex coordinates (rows) to the real ambient: interleaved in complex mode, real parts otherwise."""
    values = np.atleast_2d(np.asarray(values, dtype=np.complex128))
    if mode == REAL:
        return values.real.copy()
    out = np.empty((values.shape[0], 2 * values.shape[1]))
    out[:, 0::2] = values.real
    out[:, 1::2] = values.imag
    return out


# ----------------------------------------------------------------------------
# distances


def _lattice_window(lattice: Lattice) -> np.ndarray:
    """Lattice vectors with coordinates in a box large enough for the quotient metric (capped)."""
    N = lattice.ambient_dim
    radius = lattice.covering_radius_bound() + float(np.linalg.norm(lattice.matrix_float, axis=0).sum())
    K = max(1, math.ceil(radius * np.linalg.norm(lattice.inverse_float, 2)))
    while K > 1 and (2 * K + 1) ** N > WINDOW_BUDGET:
        K -= 1
    grid = np.array(list(itertools.product(range(-K, K + 1), repeat=N)), dtype=float)
    return grid @ lattice.matrix_float.T


class FoldedComponent:
    """pi(C + V^Lambda) with the data needed for quotient distances"""

    def __init__(self, component: ClosureComponent, lattice: Lattice, index: int = 0,
                 window: Optional[np.ndarray] = None):
        self.component = component
        self.index = index
        self.lattice = lattice
        self.mode = component.C.mode
        N = lattice.ambient_dim
        self.L = lattice.matrix_float
        self.L_inv = lattice.inverse_float
        self.window = window if window is not None else _lattice_window(lattice)
        basis = component.V_lambda.basis_float()
        if basis.shape[0]:
            q, _ = np.linalg.qr(basis.T)
            self.perp = np.eye(N) - q @ q.T
        else:
            self.perp = np.eye(N)
        self.parametric = component.C.is_parametric()
        self.params = component.C.params
        if not self.parametric:
            self.points = np.array([[float(x) for x in v] for v in component.C.ambient_vectors()]).reshape(-1, N)

    # quotient distance of w to V^Lambda + Lambda, with the minimizing lattice vector
    def _quotient(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        w = np.atleast_2d(w)
        y = w @ self.L_inv.T
        shift = np.floor(y) @ self.L.T
        w0 = w - shift
        chunk = max(1, 2_000_000 // max(1, self.window.size))
        dists, lams = [], []
        for start in range(0, w0.shape[0], chunk):
            diffs = w0[start:start + chunk, None, :] - self.window[None, :, :]
            proj = diffs @ self.perp.T
            norms = np.sqrt((proj ** 2).sum(axis=-1))
            best = norms.argmin(axis=1)
            dists.append(norms[np.arange(len(best)), best])
            lams.append(shift[start:start + chunk] + self.window[best])
        return np.concatenate(dists), np.concatenate(lams)

    def _translate(self, point: Dict[str, complex]) -> np.ndarray:
        values = np.array([point[n] for n in self.params.names], dtype=np.complex128)
        rows = [[x.evaluate_numeric(values) for x in p] for p in self.component.C.points]
        return to_ambient(np.array(rows), self.mode)

    def _seeds(self, x: np.ndarray) -> List[Dict[str, complex]]:
        """Free-parameter starts read off coordinates that are affine in a single parameter."""
        free = self.params.free_names
        rng = get_rng()
        choices: Dict[str, List[complex]] = {}
        n = len(self.component.C.points[0])
        for p in self.component.C.points:
            for k, poly in enumerate(p):
                used = poly.used_variables()
                if len(used) != 1 or used[0] not in free or poly.total_degree() != 1:
                    continue
                name = used[0]
                parts = poly.coefficients_in(name)
                a = complex(parts[1].constant_value())
                b = complex(parts[0].constant_value()) if 0 in parts else 0j
                if self.mode == COMPLEX:
                    z = complex(x[2 * k], x[2 * k + 1])
                    shifts = {complex(round(s[2 * k], 9), round(s[2 * k + 1], 9)) for s in self.window}
                else:
                    z = complex(x[k])
                    shifts = {complex(round(s[k], 9)) for s in self.window}
                shifts = sorted(shifts, key=abs)[:9]
                choices.setdefault(name, [(z + s - b) / a for s in shifts])
        for name in free:
            choices.setdefault(name, [complex(rng.normal(), rng.normal() if self.mode == COMPLEX else 0.0)
                                      for _ in range(4)])
        combos = itertools.islice(itertools.product(*[choices[name] for name in free]), 64)
        return [dict(zip(free, combo)) for combo in combos]

    def _refine(self, x: np.ndarray, start: Dict[str, complex], steps: int = 15) -> float:
        free = self.params.free_names
        complex_mode = self.mode == COMPLEX

        def unpack(theta):
            if complex_mode:
                return {n: complex(theta[2 * j], theta[2 * j + 1]) for j, n in enumerate(free)}
            return {n: complex(theta[j], 0.0) for j, n in enumerate(free)}

        theta = np.array([part for n in free for part in ((start[n].real, start[n].imag) if complex_mode
                                                          else (start[n].real,))], dtype=float)
        try:
            c = self._translate(self.params.complete_complex_point(unpack(theta)))
        except (SamplerError, ZeroDivisionError, FloatingPointError):
            return math.inf
        dist, lam = self._quotient(x - c)
        best = float(dist.min())
        lam = lam[int(dist.argmin())]
        row = int(dist.argmin())
        for _ in range(steps):
            def residual(th):
                ct = self._translate(self.params.complete_complex_point(unpack(th)))
                return self.perp @ (x - ct[row] - lam)

            try:
                r0 = residual(theta)
                h = 1e-7 * (1.0 + np.abs(theta))
                J = np.stack([(residual(theta + h[j] * np.eye(len(theta))[j]) - r0) / h[j]
                              for j in range(len(theta))], axis=1)
                step, *_ = np.linalg.lstsq(J, -r0, rcond=None)
            except (SamplerError, ZeroDivisionError, np.linalg.LinAlgError, FloatingPointError):
                break
            improved = False
            for damping in (1.0, 0.5, 0.25, 0.125):
                candidate = theta + damping * step
                try:
                    c = self._translate(self.params.complete_complex_point(unpack(candidate)))
                except (SamplerError, ZeroDivisionError, FloatingPointError):
                    continue
                dist, lams = self._quotient(x - c)
                value = float(dist.min())
                if np.isfinite(value) and value < best:
                    best, theta = value, candidate
                    row = int(dist.argmin())
                    lam = lams[row]
                    improved = True
                    break
            if not improved:
                break
        return best

    def distance(self, x: np.ndarray, hints: Sequence[Dict[str, complex]] = (),
                 good_enough: float = 0.0) -> float:
        """Upper bound for the quotient distance from x to C + V^Lambda + Lambda."""
        if not self.parametric:
            if self.points.shape[0] == 0:
                return math.inf
            return float(self._quotient(x[None, :] - self.points)[0].min())
        names = set(self.params.names)
        best = math.inf
        starts = []
        for hint in hints:
            if set(hint) >= names:
                with np.errstate(all="ignore"):
                    value = float(self._quotient(x - self._translate(hint))[0].min())
                best = min(best, value)
                starts.append({n: hint[n] for n in self.params.free_names})
        if best <= good_enough:
            return best
        candidates = []
        for seed in self._seeds(x):
            try:
                point = self.params.complete_complex_point(seed)
            except SamplerError:
                continue
            with np.errstate(all="ignore"):
                value = float(self._quotient(x - self._translate(point))[0].min())
            if np.isfinite(value):
                candidates.append((value, seed))
        candidates.sort(key=lambda item: item[0])
        starts.extend(seed for _, seed in candidates[:3])
        for start in starts:
            with np.errstate(all="ignore"):
                best = min(best, self._refine(x, start))
            if best <= good_enough:
                break
        return best

    def padding(self, x: np.ndarray) -> float:
        scale = 1.0 + float(np.abs(x).max()) + float(np.abs(self.window).max(initial=0.0))
        return 64 * EPS * scale * max(1.0, float(np.linalg.cond(self.L)))


def torus_distance(p: TorusPoint, component: Union[ClosureComponent, FoldedComponent], lattice: Lattice,
                   hints: Sequence[Dict[str, complex]] = ()) -> RealInterval:
    """
    Distance from p to pi(C + V^Lambda)

    Returns:
        interval whose upper end is a certified upper bound (up to the rounding pad);
        the lower end is heuristic for parametric C
    """
    geometry = component if isinstance(component, FoldedComponent) else FoldedComponent(component, lattice)
    x = p.mid @ lattice.matrix_float.T
    d = geometry.distance(x, hints)
    if not math.isfinite(d):
        return RealInterval(Fraction(0), Fraction(10 ** 9))
    pad = geometry.padding(x) + float(p.width) * float(np.linalg.norm(lattice.matrix_float, 2))
    return RealInterval(Fraction(max(0.0, d - pad)), Fraction(d + pad))


# ----------------------------------------------------------------------------
# reports


def _merge_discrepancy(a: Dict[str, Any], b: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(a)
    for key, value in b.items():
        if key not in merged:
            merged[key] = value
        elif isinstance(value, list):
            merged[key] = sorted(merged[key] + value)
        elif isinstance(value, (int, float)):
            merged[key] = max(merged[key], value)
    return merged


@dataclass
class VerificationReport:
    """Partial or total verification result; merge is associative and commutative"""

    name: str
    tol: float
    samples: int = 0
    radii: List[float] = dataclass_field(default_factory=list)
    components: Dict[str, Dict[str, float]] = dataclass_field(default_factory=dict)
    failures: List[Dict[str, Any]] = dataclass_field(default_factory=list)
    discrepancy: Dict[str, Any] = dataclass_field(default_factory=dict)
    records: List[Tuple] = dataclass_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.samples > 0 and not self.failures

    @property
    def max_distance(self) -> float:
        return max((c["max_distance"] for c in self.components.values()), default=0.0)

    def add(self, folded: np.ndarray, component: str, distance: float, radius: float, judged: bool,
            source: str = ""):
        self.samples += 1
        if radius not in self.radii:
            self.radii = sorted(self.radii + [radius])
        stats = self.components.setdefault(component, {"count": 0, "max_distance": 0.0, "min_distance": math.inf})
        stats["count"] += 1
        stats["max_distance"] = max(stats["max_distance"], distance)
        stats["min_distance"] = min(stats["min_distance"], distance)
        self.records.append(tuple(float(v) for v in folded) + (component, distance))
        if judged and not distance <= self.tol:
            self.failures.append({
                "radius": radius,
                "point": [round(float(v), 12) for v in folded],
                "distance": distance,
                "source": source,
            })

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        components: Dict[str, Dict[str, float]] = {}
        for key in sorted(set(self.components) | set(other.components)):
            a = self.components.get(key)
            b = other.components.get(key)
            if a is None or b is None:
                components[key] = dict(a or b)
                continue
            components[key] = {
                "count": a["count"] + b["count"],
                "max_distance": max(a["max_distance"], b["max_distance"]),
                "min_distance": min(a["min_distance"], b["min_distance"]),
            }
        failure_key = lambda f: (f.get("radius", 0), f.get("distance", 0), tuple(f.get("point", ())),
                                 str(f.get("source", "")), str(f.get("reason", "")))
        return VerificationReport(
            name=self.name if self.name == other.name else "+".join(sorted({self.name, other.name})),
            tol=max(self.tol, other.tol),
            samples=self.samples + other.samples,
            radii=sorted(set(self.radii) | set(other.radii)),
            components=components,
            failures=sorted(self.failures + other.failures, key=failure_key),
            discrepancy=_merge_discrepancy(self.discrepancy, other.discrepancy),
            records=sorted(self.records + other.records, key=str),
        )

    def to_frame(self, dim: Optional[int] = None) -> pd.DataFrame:
        """Point cloud x1..xn, component, distance."""
        if not self.records:
            columns = [f"x{k + 1}" for k in range(dim or 0)] + ["component", "distance"]
            return pd.DataFrame(columns=columns)
        width = len(self.records[0]) - 2
        columns = [f"x{k + 1}" for k in range(width)] + ["component", "distance"]
        frame = pd.DataFrame(sorted(self.records, key=str), columns=columns)
        return frame

    def to_dict(self) -> Dict[str, Any]:
        def clean(value):
            if isinstance(value, float) and not math.isfinite(value):
                return "inf"
            return value

        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "tol": self.tol,
            "samples": self.samples,
            "radii": self.radii,
            "components": {k: {kk: clean(vv) for kk, vv in v.items()} for k, v in sorted(self.components.items())},
            "failures": [{k: clean(v) for k, v in f.items()} for f in self.failures],
            "discrepancy": {k: clean(v) for k, v in sorted(self.discrepancy.items())},
        }


def write_point_cloud(report: VerificationReport, path: str) -> str:
    frame = report.to_frame()
    frame.to_csv(path, index=False)
    logger.info(f"Point cloud with {len(frame)} rows saved to {path}")
    return path


# ----------------------------------------------------------------------------
# samplers


def _branch_samples(branch: PuiseuxBranch, radius: float, count: int, mode: str):
    """(points in the real ambient, parameter hints) at |z| = 1/radius."""
    rng = get_rng()
    e = branch.ramification
    hints = []
    if mode == COMPLEX:
        angles = rng.uniform(0.0, 2 * np.pi, size=count)
        w = radius ** (-1.0 / e) * np.exp(1j * angles)
    else:
        w = (radius * (1.0 + rng.uniform(0.0, 1.0, size=count))) ** (-1.0 / e) + 0j
    rows = []
    for k in range(count):
        point = branch.params.sample_complex_point(real=mode == REAL) if branch.is_parametric() else {}
        hints.append(point)
        rows.append(branch.evaluate_numeric(w[k:k + 1], point)[0])
    return to_ambient(np.array(rows), mode), hints


def line_slice_samples(f: KPoly, radius: float, count: int, mode: str = COMPLEX,
                       attempts: Optional[int] = None) -> np.ndarray:
    """
    Points of the hypersurface f = 0 with norm >= radius / 2, from random lines through points of norm radius

    Each line x = p + s d gives a univariate polynomial; its coefficients come from
    sampling on the unit circle, roots from numpy, then Newton polishing in s.
    """
    rng = get_rng()
    n = len(f.variables)
    degree = f.total_degree()
    if degree < 1:
        raise SamplerError("constant polynomial has no sample points")
    nodes = np.exp(2j * np.pi * np.arange(degree + 1) / (degree + 1))
    vandermonde = np.vander(nodes, degree + 1, increasing=True)
    found: List[np.ndarray] = []
    attempts = attempts or 40 * count
    for _ in range(attempts):
        if len(found) >= count:
            break
        if mode == COMPLEX:
            p = rng.normal(size=n) + 1j * rng.normal(size=n)
            d = rng.normal(size=n) + 1j * rng.normal(size=n)
        else:
            p = rng.normal(size=n) + 0j
            d = rng.normal(size=n) + 0j
        p = radius * p / np.linalg.norm(p)
        d = d / np.linalg.norm(d)
        values = f.evaluate_numeric(p[None, :] + nodes[:, None] * d[None, :])
        coeffs = np.linalg.solve(vandermonde, values)
        if np.allclose(coeffs[1:], 0):
            continue
        trimmed = np.trim_zeros(coeffs[::-1], "f")
        for s in np.roots(trimmed):
            for _ in range(8):
                x = p + s * d
                g = f.evaluate_numeric(x)
                grad = np.array([f.partial(v).evaluate_numeric(x) for v in f.variables])
                slope = grad @ d
                if slope == 0:
                    break
                s = s - g / slope
            x = p + s * d
            if mode == REAL and abs(s.imag) > 1e-9 * max(1.0, abs(s)):
                continue
            if np.linalg.norm(x) >= radius / 2 and abs(f.evaluate_numeric(x)) <= 1e-6 * max(1.0, np.linalg.norm(x)) ** degree:
                found.append(x)
    if not found:
        raise SamplerError("no points found at the requested radius", {"radius": radius})
    return to_ambient(np.array(found[:count]), mode)


# ----------------------------------------------------------------------------
# attraction


def _nearest(geometries: List[FoldedComponent], x: np.ndarray, hints, good_enough: float) -> Tuple[str, float]:
    best_label, best = "none", math.inf
    ordered = sorted(geometries, key=lambda g: g.parametric)
    for geometry in ordered:
        # compare upper bounds: each distance carries its own rounding pad
        d = geometry.distance(x, hints, good_enough) + geometry.padding(x)
        if d < best:
            best, best_label = d, f"C{geometry.index}"
        if best <= good_enough:
            break
    return best_label, best


def _attraction_partial(task) -> VerificationReport:
    label, points, hints, radius, geometries, lattice, tol, threshold = task
    report = VerificationReport("attraction", tol)
    good_enough = tol / 10
    for k in range(points.shape[0]):
        x = points[k]
        component, d = _nearest(geometries, x, [hints[k]] if hints else [], good_enough)
        folded = fold_array(x[None, :], lattice)[0]
        report.add(folded, component, d, radius, radius >= threshold, label)
    return report


def attraction_test(source: Sequence, desc: ClosureDescription, radii: Optional[Sequence[float]] = None,
                    tol: Optional[float] = None, samples: Optional[int] = None,
                    threshold: Optional[float] = None) -> VerificationReport:
    """
    Sample unbounded points of X and check they fold close to the predicted components

    Args:
        source: branches (PuiseuxBranch) or a hypersurface given as [KPoly]
        desc: predicted closure description
        radii: sampling radii (|z| = 1/r for branches, |x| ~ r for line slices)
        tol: distance tolerance, judged only at radii >= threshold
        samples: points per radius and branch

    Returns:
        merged VerificationReport; failures carry the folded witness point
    """
    radii = list(radii or settings.RADIUS_SCHEDULE)
    tol = settings.TOLERANCE if tol is None else tol
    samples = samples or settings.ATTRACTION_SAMPLES
    threshold = settings.THRESHOLD_RADIUS if threshold is None else threshold
    lattice = desc.lattice
    window = _lattice_window(lattice)
    geometries = [FoldedComponent(c, lattice, k, window) for k, c in enumerate(desc.components)]

    source = list(source)
    tasks = []
    if source and isinstance(source[0], PuiseuxBranch):
        for b, branch in enumerate(source):
            if is_bounded(branch):
                logger.debug(f"Branch {b} is bounded; its points belong to X + Lambda")
                continue
            for radius in radii:
                points, hints = _branch_samples(branch, radius, samples, desc.mode)
                tasks.append((f"branch-{b}", points, hints, radius, geometries, lattice, tol, threshold))
    elif source and isinstance(source[0], KPoly):
        if len(source) != 1:
            raise SamplerError("line slicing needs a single hypersurface equation")
        for radius in radii:
            points = line_slice_samples(source[0], radius, samples, desc.mode)
            tasks.append(("line-slice", points, None, radius, geometries, lattice, tol, threshold))
    else:
        raise SamplerError("no sampler available: pass branches or a hypersurface equation")
    if not tasks:
        raise SamplerError("every branch is bounded; nothing to attract")

    if settings.WORKERS > 1:
        with ThreadPoolExecutor(max_workers=settings.WORKERS) as pool:
            partials = list(pool.map(_attraction_partial, tasks))
    else:
        partials = [_attraction_partial(task) for task in tasks]
    report = partials[0]
    for partial in partials[1:]:
        report = report.merge(partial)
    marker = "✓" if report.passed else "✗"
    logger.info(f"{marker} Attraction: {report.samples} samples, {len(report.failures)} failures "
                f"(tol {tol}, radius >= {threshold})")
    return report


# ----------------------------------------------------------------------------
# density


def _torus_distance_to_cloud(query_y: np.ndarray, cloud_y: np.ndarray, L: np.ndarray) -> float:
    diff = cloud_y - query_y[None, :]
    diff = diff - np.round(diff)
    return float(np.sqrt(((diff @ L.T) ** 2).sum(axis=1)).min())


def _periodic_copies(s: np.ndarray, margin: float) -> np.ndarray:
    copies = s
    for axis in range(s.shape[1]):
        low = copies[copies[:, axis] < margin].copy()
        low[:, axis] += 1.0
        high = copies[copies[:, axis] > 1.0 - margin].copy()
        high[:, axis] -= 1.0
        copies = np.vstack([copies, low, high])
    return copies


def density_test(V: Subspace, lattice: Lattice, N: Optional[int] = None, eps: Optional[float] = None,
                 queries: Optional[Sequence[Sequence[float]]] = None, adaptive: bool = True,
                 max_samples: Optional[int] = None) -> VerificationReport:
    """
    Check that the folded orbit of V is eps-dense in the folded saturation V^Lambda

    Samples points of V, expresses them on the subtorus pi(V^Lambda) through a
    Z-basis of Lambda n V^Lambda, and measures the largest gap on a covering grid.
    Query points report their distance to the folded cloud.
    """
    eps = settings.TOLERANCE if eps is None else eps
    N = N or settings.SAMPLES
    max_samples = max_samples or settings.MAX_SAMPLES
    rng = get_rng()
    saturated = lambda_saturate(V, lattice)
    B = np.array(lattice_points_basis(saturated, lattice), dtype=float)
    if B.ndim != 2:
        B = B.reshape(lattice.ambient_dim, -1)
    sub_dim = B.shape[1]
    L, L_inv = lattice.matrix_float, lattice.inverse_float
    report = VerificationReport("density", eps)
    report.radii = []
    basis_v = V.basis_float()

    if sub_dim == 0 or basis_v.shape[0] == 0:
        report.samples = 1
        report.discrepancy = {"max_gap": 0.0, "subtorus_dim": sub_dim, "saturation_dim": saturated.dim,
                              "samples": 1, "max_offset": 0.0}
        report.components["V_lambda"] = {"count": 1, "max_distance": 0.0, "min_distance": 0.0}
        return report

    LB = L @ B
    R = np.linalg.cholesky(LB.T @ LB).T
    B_pinv = np.linalg.pinv(B)
    h = eps / (np.linalg.norm(R, 2) * math.sqrt(sub_dim))
    per_axis = math.ceil(1.0 / h)
    if per_axis ** sub_dim <= GRID_BUDGET:
        axes = [np.arange(per_axis) / per_axis] * sub_dim
        grid = np.array(list(itertools.product(*axes)))
    else:
        grid = rng.uniform(0.0, 1.0, size=(GRID_BUDGET, sub_dim))
    margin = min(0.5, eps * np.linalg.norm(np.linalg.inv(R), 2) * 1.5)

    spread = 1e3
    cloud_s = np.zeros((0, sub_dim))
    cloud_y = np.zeros((0, lattice.ambient_dim))
    max_offset = 0.0
    target = N
    while True:
        extra = target - cloud_s.shape[0]
        coeffs = rng.uniform(-spread, spread, size=(extra, basis_v.shape[0]))
        points = coeffs @ basis_v
        y = points @ L_inv.T
        s = y @ B_pinv.T
        offset = np.sqrt((((y - s @ B.T) @ L.T) ** 2).sum(axis=1)).max()
        max_offset = max(max_offset, float(offset))
        cloud_s = np.vstack([cloud_s, s - np.floor(s)])
        cloud_y = np.vstack([cloud_y, y - np.floor(y)])
        tree = KDTree(_periodic_copies(cloud_s, margin) @ R.T)
        gaps, _ = tree.query(grid @ R.T, k=1)
        max_gap = float(gaps.max())
        logger.debug(f"Density: {cloud_s.shape[0]} samples, max gap {max_gap:.4f}")
        if max_gap <= eps or not adaptive or 2 * target > max_samples:
            break
        target *= 2

    count = cloud_s.shape[0]
    report.samples = count
    report.components["V_lambda"] = {"count": count, "max_distance": max_offset, "min_distance": 0.0}
    for row in cloud_y[: settings.SAMPLES]:
        report.records.append(tuple(float(v) for v in row) + ("V_lambda", 0.0))
    report.discrepancy = {
        "max_gap": max_gap,
        "grid_points": int(grid.shape[0]),
        "subtorus_dim": sub_dim,
        "saturation_dim": saturated.dim,
        "samples": count,
        "max_offset": max_offset,
    }
    if queries is not None:
        distances = []
        for query in queries:
            query_y = fold_array(np.asarray(query, dtype=float)[None, :], lattice)[0]
            distances.append(_torus_distance_to_cloud(query_y, cloud_y, L))
        report.discrepancy["query_distances"] = distances
    if max_gap > eps:
        report.failures.append({"reason": "coverage", "distance": max_gap})
    if max_offset > eps:
        report.failures.append({"reason": "offset", "distance": max_offset})
    marker = "✓" if report.passed else "✗"
    logger.info(f"{marker} Density: subtorus dim {sub_dim}, {count} samples, max gap {max_gap:.4f} (eps {eps})")
    return report
