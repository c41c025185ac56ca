"""
Torus Closure Toolkit: command-line front end

Commands:
- saturate: lattice saturation V^Lambda of a subspace
- branches: Newton-Puiseux branches at infinity of a plane curve, as a bundle
- flat:     asymptotic flat of every branch in a bundle
- closure:  closure decomposition of X + Lambda with clause report and torus data
- verify:   closure plus numerical attraction and density checks, JSON + CSV
"""

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, StrictStr

from asymptotics import flat_of_branch
from closure import FlatFamily, assemble_closure, clause_checks, torus_description
from config import reset_rng, settings
from errors import ClosureToolkitError, InvariantBreach, SchemaError
from exact_linalg import COMPLEX, Lattice, galois_saturate, lambda_saturate, lattice_points_basis
from numberfield import as_fraction
from puiseux import newton_puiseux_at_infinity
from serialization import (
    SCHEMA_VERSION,
    Bundle,
    SaturateDoc,
    decode_field,
    decode_lattice,
    decode_subspace,
    dumps,
    encode_bundle,
    encode_closure,
    encode_error,
    encode_field,
    encode_flat,
    encode_lattice,
    encode_subspace,
    load_json,
    validate,
)
from verify import attraction_test, density_test, write_point_cloud

logger = logging.getLogger(__name__)

COMMANDS = ("saturate", "branches", "flat", "closure", "verify")


def configure_logging():
    logging.basicConfig(
        level=logging.INFO,
        format='[%(asctime)s] %(levelname)s: %(message)s',
        handlers=[
            logging.FileHandler(settings.LOG_FILE),
            logging.StreamHandler()
        ]
    )


def log_run_event(event_type: str, details: Dict[str, Any]):
    """Append one event to the JSON-lines run log"""
    try:
        event = {
            'timestamp': datetime.now().isoformat(),
            'type': event_type,
            'details': details
        }
        with open(settings.RUN_LOG, 'a') as f:
            f.write(json.dumps(event, sort_keys=True) + '\n')
    except OSError as e:
        logger.error(f"Error logging event: {str(e)}")


class JobSpec(BaseModel):
    """One CLI invocation; options left as None fall back to Config"""

    model_config = ConfigDict(extra="forbid")

    command: Literal["saturate", "branches", "flat", "closure", "verify"]
    input: Union[StrictStr, Dict[str, Any]]
    output: Optional[StrictStr] = None
    csv: Optional[StrictStr] = None
    seed: Optional[int] = None
    precision_bits: Optional[int] = None
    truncation: Optional[StrictStr] = None
    tol: Optional[float] = None
    samples: Optional[int] = None
    radius_schedule: Optional[List[float]] = None
    density: bool = True


@contextmanager
def _overrides(job: JobSpec):
    """Apply the job's options to the shared settings for the duration of the job."""
    saved = {name: getattr(settings, name) for name in
             ("SEED", "PRECISION_BITS", "TRUNCATION", "TOLERANCE", "ATTRACTION_SAMPLES", "RADIUS_SCHEDULE")}
    try:
        if job.seed is not None:
            settings.SEED = job.seed
        if job.precision_bits is not None:
            settings.PRECISION_BITS = job.precision_bits
        if job.truncation is not None:
            try:
                settings.TRUNCATION = as_fraction(job.truncation)
            except (ValueError, ZeroDivisionError):
                raise SchemaError("truncation must be a rational", {"truncation": job.truncation})
        if job.tol is not None:
            settings.TOLERANCE = job.tol
        if job.samples is not None:
            settings.ATTRACTION_SAMPLES = job.samples
        if job.radius_schedule:
            settings.RADIUS_SCHEDULE = list(job.radius_schedule)
        reset_rng(settings.SEED)
        yield
    finally:
        for name, value in saved.items():
            setattr(settings, name, value)


class ClosurePipeline:
    """Runs one command on a parsed input document"""

    def __init__(self, job: JobSpec):
        self.job = job
        self.payload = load_json(job.input) if isinstance(job.input, str) else job.input
        if not isinstance(self.payload, dict):
            raise SchemaError("input document must be a JSON object")

    # ------------------------------------------------------------------
    # helpers
    def _bundle(self) -> Bundle:
        return Bundle.from_dict(self.payload)

    def _families(self, bundle: Bundle):
        if bundle.families is not None:
            return bundle.families
        order = bundle.truncation if bundle.truncation is not None else settings.TRUNCATION
        curve = bundle.plane_curve()
        logger.info(f"[BRANCHES] Newton-Puiseux at infinity of {curve!r} to order {order}")
        return [[branch] for branch in newton_puiseux_at_infinity(curve, order)]

    @staticmethod
    def _lattice(bundle: Bundle, n: int) -> Lattice:
        if bundle.lattice is not None:
            return bundle.lattice
        logger.info("[CLOSURE] No lattice given; using the standard lattice")
        return Lattice.gaussian(n) if bundle.mode == COMPLEX else Lattice.standard(n)

    def _closure(self):
        bundle = self._bundle()
        families = self._families(bundle)
        if not families:
            raise SchemaError("bundle has no branch families")
        lattice = self._lattice(bundle, families[0][0].n)
        flat_families = [FlatFamily([flat_of_branch(b, bundle.mode) for b in family], label=f"family-{k}")
                         for k, family in enumerate(families)]
        desc = assemble_closure(flat_families, lattice, bundle.variety)
        return bundle, families, desc

    # ------------------------------------------------------------------
    # commands
    def saturate(self) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        doc = validate(SaturateDoc, self.payload)
        field = decode_field(doc.field)
        lattice = decode_lattice(doc.lattice)
        V = decode_subspace(doc.subspace, field, lattice.ambient_dim, lattice.complex_ambient)
        W = galois_saturate(V, lattice) if doc.method == "galois" else lambda_saturate(V, lattice)
        basis = lattice_points_basis(W, lattice)
        logger.info(f"✓ Saturation: dim {V.dim} -> dim {W.dim} ({doc.method})")
        artifact = {
            "schema": SCHEMA_VERSION,
            "field": encode_field(field),
            "lattice": encode_lattice(lattice),
            "input": encode_subspace(V, field),
            "subspace": encode_subspace(W, field),
            "lattice_basis": [[int(x) for x in basis[:, j]] for j in range(basis.shape[1])] if basis.size else [],
        }
        return artifact, {"dim_in": V.dim, "dim_out": W.dim}

    def branches(self) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        bundle = self._bundle()
        families = self._families(bundle)
        artifact = encode_bundle(bundle.field, bundle.mode, families, bundle.variables, bundle.variety,
                                 bundle.lattice, bundle.dim_x, bundle.name)
        logger.info(f"✓ {sum(len(f) for f in families)} branches in {len(families)} families")
        return artifact, {"branches": sum(len(f) for f in families)}

    def flat(self) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        bundle = self._bundle()
        families = self._families(bundle)
        flats = [[encode_flat(flat_of_branch(b, bundle.mode), bundle.field) for b in family] for family in families]
        artifact = {"schema": SCHEMA_VERSION, "field": encode_field(bundle.field), "mode": bundle.mode,
                    "flats": flats}
        logger.info(f"✓ {sum(len(f) for f in flats)} asymptotic flats")
        return artifact, {"flats": sum(len(f) for f in flats)}

    def closure(self) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        bundle, _, desc = self._closure()
        dim_x = bundle.dim_x if bundle.dim_x is not None else 1
        report = clause_checks(desc, dim_x)
        artifact = encode_closure(desc, report, torus_description(desc))
        marker = "✓" if report["status"] == "pass" else "✗"
        logger.info(f"{marker} Clause report: {report['status']} ({len(report['violations'])} violations)")
        return artifact, {"components": len(desc.components), "clause_report": report["status"]}

    def verify(self) -> Tuple[Dict[str, Any], Dict[str, Any]]:
        bundle, families, desc = self._closure()
        if self.payload.get("families") is None and bundle.variety and len(bundle.variables) != 2:
            source = bundle.variety
        else:
            source = [b for family in families for b in family]
        attraction = attraction_test(source, desc)
        density = []
        if self.job.density:
            for index, comp in enumerate(desc.components):
                if comp.V_lambda.equals(comp.V):
                    continue
                report = density_test(comp.V, desc.lattice)
                entry = report.to_dict()
                entry["component"] = index
                density.append(entry)
        passed = attraction.passed and all(entry["status"] == "pass" for entry in density)
        artifact = {
            "schema": SCHEMA_VERSION,
            "status": "pass" if passed else "fail",
            "attraction": attraction.to_dict(),
            "density": density,
        }
        if self.job.csv:
            write_point_cloud(attraction, self.job.csv)
        return artifact, {"status": artifact["status"], "samples": attraction.samples}


def run(job: JobSpec) -> Tuple[int, Dict[str, Any]]:
    """
    Execute one job

    Returns:
        (exit status, artifact dict); the artifact is the error payload when the
        status is non-zero. The artifact is also written to job.output when given.
    """
    logger.info("=" * 70)
    logger.info(f"JOB: {job.command.upper()}")
    logger.info("=" * 70)
    try:
        with _overrides(job):
            pipeline = ClosurePipeline(job)
            artifact, summary = getattr(pipeline, job.command)()
        status = 0
        log_run_event(job.command, summary)
    except ClosureToolkitError as e:
        logger.error(f"✗ {type(e).__name__}: {e.message}")
        artifact, status = encode_error(e), e.exit_code
        log_run_event("error", {"command": job.command, "error": type(e).__name__, "exit_code": status})
    except Exception as e:
        logger.exception(f"✗ Unexpected failure in {job.command}: {str(e)}")
        breach = InvariantBreach(f"unexpected {type(e).__name__}: {e}")
        artifact, status = encode_error(breach), breach.exit_code
        log_run_event("error", {"command": job.command, "error": type(e).__name__, "exit_code": status})

    if job.output:
        with open(job.output, "w") as f:
            f.write(dumps(artifact) + "\n")
        logger.info(f"Artifact written to {job.output}")
    logger.info("=" * 70)
    return status, artifact


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Closure of X + Lambda in a torus: compute and verify")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", required=True, help="input JSON document")
    parser.add_argument("--output", help="artifact path (stdout when omitted)")
    parser.add_argument("--csv", help="point cloud path for verify")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--precision-bits", type=int)
    parser.add_argument("--truncation", help="truncation order, e.g. 6 or 13/2")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--samples", type=int, help="attraction samples per radius and branch")
    parser.add_argument("--radius-schedule", help="comma-separated radii, e.g. 100,1000,10000")
    parser.add_argument("--no-density", action="store_true", help="skip density checks in verify")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        schedule = [float(r) for r in args.radius_schedule.split(",")] if args.radius_schedule else None
    except ValueError:
        print(dumps(encode_error(SchemaError("radius schedule must be a comma list of numbers"))))
        return 2
    job = JobSpec(
        command=args.command,
        input=args.input,
        output=args.output,
        csv=args.csv,
        seed=args.seed,
        precision_bits=args.precision_bits,
        truncation=args.truncation,
        tol=args.tol,
        samples=args.samples,
        radius_schedule=schedule,
        density=not args.no_density,
    )
    status, artifact = run(job)
    if not job.output:
        print(dumps(artifact))
    return status


if __name__ == "__main__":
    sys.exit(main())
