import json
import subprocess
import sys

import pytest

from fedtrace.cli import JobError, JobSpec, main

TORUS = {"model": "torus", "perturbation": {"0,0,1": [{"freq": [1, 0], "cos": "1/2"}]},
         "Omega": [{"0,1": [{"freq": [0, 1], "sin": "1/3"}]}, {"0,1": "1/5"}]}


def run_job(tmp_path, job, *extra):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(job))
    out = tmp_path / "report.json"
    code = main(["--job", str(path), "--out", str(out), *extra])
    return code, json.loads(out.read_text())


def test_star_on_flat_plane(tmp_path):
    code, rep = run_job(tmp_path, {"command": "star", "model": {"model": "flat"}, "order": 2,
                                   "f": {"2,0": "1"}, "g": {"0,2": "1"}})
    assert code == 0 and rep["ok"]
    assert rep["values"]["star"] == {"nu^0": "x0^2*x1^2", "nu^1": "-2*x0*x1", "nu^2": "1/2"}


def test_report_is_deterministic(tmp_path):
    job = {"command": "density", "model": TORUS}
    _, a = run_job(tmp_path, job)
    _, b = run_job(tmp_path, job)
    assert a == b
    assert a["values"]["rho1"] != "0"


def test_verify_flat_passes(tmp_path):
    code, rep = run_job(tmp_path, {"command": "verify", "model": {"model": "flat"}, "order": 3, "trials": 2})
    assert code == 0
    names = [c["name"] for c in rep["checks"]]
    assert "Moyal equality [0]" in names and "mu(flat) = 0" in names


def test_verify_torus_reports_the_third_order_discrepancy(tmp_path):
    code, rep = run_job(tmp_path, {"command": "verify", "model": TORUS, "order": 3, "trials": 1}, "--seed", "4")
    status = {c["name"]: c["status"] for c in rep["checks"]}
    assert status["associativity mod nu^4 [0]"] == "pass"
    assert status["trace property nu^1..nu^3 [0]"] == "pass"
    assert status["C3 antisymmetric closed form [0]"] == "pass"
    assert status["C3 closed form as displayed [0]"] == "fail"
    assert code == 1 and not rep["ok"]


def test_invariant_on_sphere(tmp_path):
    code, rep = run_job(tmp_path, {"command": "invariant",
                                   "model": {"model": "s2", "profile": ["1", "0", "-1"], "k": "1"}})
    assert code == 0
    assert rep["values"]["kahler_direct"]["values"]["1"]["exact"] == "0"


def test_momentum_error_is_structured(tmp_path):
    code, rep = run_job(tmp_path, {"command": "momentum", "model": {"model": "torus"}})
    assert code == 1
    assert rep["checks"][0]["status"] == "fail"
    assert "MomentError" in rep["checks"][0]["error"]


def test_invalid_model_is_reported(tmp_path):
    code, rep = run_job(tmp_path, {"command": "density", "model": {"model": "s2", "profile": ["1", "0", "-2"]}})
    assert code == 1
    assert rep["checks"][0]["name"] == "model validation"


def test_job_schema_errors():
    with pytest.raises(JobError):
        JobSpec.from_dict({"command": "fly", "model": {"model": "flat"}})
    with pytest.raises(JobError):
        JobSpec.from_dict({"command": "star", "model": {"model": "flat"}, "tolerance": 0})
    assert main(["star"]) == 2


def test_flags_override_job(tmp_path):
    code, rep = run_job(tmp_path, {"command": "star", "model": {"model": "flat"}, "order": 1},
                        "--order", "2", "--seed", "9")
    assert rep["job"]["order"] == 2 and rep["job"]["seed"] == 9
    assert len(rep["values"]["star"]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fedtrace", "density", "--model", json.dumps({"model": "flat"})],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["values"]["rho1"] == "0"
