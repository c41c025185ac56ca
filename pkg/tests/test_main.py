import json

import pytest

from config import settings
from main import JobSpec, build_parser, main, run
from serialization import Bundle, decode_closure, load_json
from tests.conftest import fixture_path


@pytest.fixture(autouse=True)
def run_files(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "RUN_LOG", str(tmp_path / "run_log.json"))
    monkeypatch.setattr(settings, "LOG_FILE", str(tmp_path / "torus_closure.log"))
    return tmp_path


def quick_verify(**overrides):
    options = dict(command="verify", input=fixture_path("hyperbola.json"), samples=4,
                   radius_schedule=[100.0, 1000.0], seed=7)
    options.update(overrides)
    return JobSpec(**options)


def test_saturate_irrational_line_fills_the_plane():
    status, artifact = run(JobSpec(command="saturate", input=fixture_path("saturate_sqrt2.json")))
    assert status == 0
    assert len(artifact["input"]["basis"]) == 1
    assert len(artifact["subspace"]["basis"]) == 2
    assert len(artifact["lattice_basis"]) == 2


def test_branches_of_hyperbola():
    status, artifact = run(JobSpec(command="branches", input=fixture_path("hyperbola.json")))
    assert status == 0
    bundle = Bundle.from_dict(artifact)
    assert [len(family) for family in bundle.families] == [1, 1]
    assert bundle.name == "hyperbola xy = 1"


def cube_root_curve():
    doc = load_json(fixture_path("hyperbola.json"))
    doc["name"] = "cube root y^3 = x"
    doc["variety"]["polys"] = ["y**3 - x"]
    return doc


def test_branches_over_cube_roots_of_unity():
    status, artifact = run(JobSpec(command="branches", input=cube_root_curve()))
    assert status == 0
    assert sum("field" in branch for family in artifact["families"] for branch in family) == 2
    bundle = Bundle.from_dict(json.loads(json.dumps(artifact)))
    assert sorted(branch.field.degree for family in bundle.families for branch in family) == [1, 2, 2]


def test_closure_over_cube_roots_of_unity():
    status, artifact = run(JobSpec(command="closure", input=cube_root_curve()))
    assert status == 0
    assert artifact["clause_report"]["status"] == "pass"
    assert all(len(c["V"]["basis"]) == 4 for c in artifact["components"])
    status, flats = run(JobSpec(command="flat", input=cube_root_curve()))
    assert status == 0
    assert sum(len(family) for family in flats["flats"]) == 3


def test_flats_of_hyperbola():
    status, artifact = run(JobSpec(command="flat", input=fixture_path("hyperbola.json")))
    assert status == 0
    assert sum(len(family) for family in artifact["flats"]) == 2
    assert all(len(flat["dirs"]) == 1 for family in artifact["flats"] for flat in family)


def test_surface_closure_document(run_files):
    out = run_files / "closure.json"
    status, artifact = run(JobSpec(command="closure", input=fixture_path("surface_x1yz.json"), output=str(out)))
    assert status == 0
    assert artifact["clause_report"]["status"] == "pass"
    assert len(decode_closure(load_json(str(out))).components) == 4
    assert json.loads(out.read_text()) == artifact


def test_hyperbola_closure_from_the_curve():
    status, artifact = run(JobSpec(command="closure", input=fixture_path("hyperbola.json")))
    assert status == 0
    assert len(artifact["components"]) == 2
    assert all(c["maximal"] for c in artifact["components"])


@pytest.mark.slow
def test_verify_hyperbola(run_files):
    cloud = run_files / "cloud.csv"
    status, artifact = run(quick_verify(csv=str(cloud)))
    assert status == 0
    assert artifact["status"] == "pass"
    assert artifact["density"] == []
    assert artifact["attraction"]["samples"] == 2 * 2 * 4
    assert cloud.read_text().splitlines()[0] == "x1,x2,x3,x4,component,distance"


@pytest.mark.slow
def test_verify_is_deterministic_for_a_seed():
    assert run(quick_verify())[1] == run(quick_verify())[1]


@pytest.mark.parametrize("payload", [{"schema": "v2"}, {"lattice": "square"}, {"surprise": 1}])
def test_schema_errors_exit_with_two(payload):
    status, artifact = run(JobSpec(command="closure", input=payload))
    assert status == 2
    assert artifact["error"]["type"] == "SchemaError"


def test_missing_input_file(run_files):
    status, artifact = run(JobSpec(command="closure", input=str(run_files / "missing.json")))
    assert status == 2
    assert artifact["schema"] == "v1"


def test_unreadable_truncation():
    status, artifact = run(JobSpec(command="branches", input=fixture_path("hyperbola.json"), truncation="six"))
    assert status == 2
    assert settings.TRUNCATION == 6


def test_math_precondition_exits_with_three():
    doc = load_json(fixture_path("hyperbola.json"))
    doc["variety"]["polys"] = ["(y - x)**2"]
    status, artifact = run(JobSpec(command="branches", input=doc))
    assert status == 3
    assert artifact["error"]["type"] == "NotSquarefreeError"


def test_run_log_records_every_job(run_files):
    run(JobSpec(command="flat", input=fixture_path("hyperbola.json")))
    run(JobSpec(command="closure", input={"schema": "v2"}))
    events = [json.loads(line) for line in (run_files / "run_log.json").read_text().splitlines()]
    assert [e["type"] for e in events] == ["flat", "error"]
    assert events[0]["details"] == {"flats": 2}
    assert events[1]["details"]["exit_code"] == 2


def test_options_do_not_leak_between_jobs():
    run(quick_verify(tol=0.2, seed=11))
    assert settings.TOLERANCE == 0.05
    assert settings.SEED == 0


def test_cli_writes_artifact(run_files):
    out = run_files / "saturated.json"
    code = main(["saturate", "--input", fixture_path("saturate_sqrt2.json"), "--output", str(out)])
    assert code == 0
    assert len(json.loads(out.read_text())["subspace"]["basis"]) == 2


def test_cli_rejects_bad_radius_schedule(capsys):
    assert main(["verify", "--input", fixture_path("hyperbola.json"), "--radius-schedule", "1e2,far"]) == 2
    assert "SchemaError" in capsys.readouterr().out


def test_parser_defaults():
    args = build_parser().parse_args(["closure", "--input", "x.json"])
    assert args.command == "closure"
    assert args.seed is None
    assert not args.no_density
