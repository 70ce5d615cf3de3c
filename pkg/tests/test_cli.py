import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qit import divergences as dv, linalg as la
from qit.cli import EXIT_INVALID, EXIT_OK, EXIT_SOLVER, run
from qit.states import DensityOperator, cq_state, state_from_json, state_to_json


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, buf.getvalue()


def report(*argv):
    code, text = call(*argv)
    return code, json.loads(text)


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(1)
    paths = {}

    def dump(name, state):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(state_to_json(state)))
        paths[name] = str(p)

    dump("r", DensityOperator.from_matrix(la.random_density(4, rng=rng), (2, 2), ("A", "B")))
    dump("s", DensityOperator.from_matrix(la.random_density(4, rng=rng), (2, 2), ("A", "B")))
    dump("k0", DensityOperator.from_matrix(np.diag([1.0, 0.0])))
    dump("kp", DensityOperator.from_matrix(np.full((2, 2), 0.5)))
    w = rng.dirichlet(np.ones(16))
    dump("ze", cq_state(w, [la.random_density(2, rng=rng) for _ in range(16)], labels=("Z", "E")))
    return paths


def test_eval_on_identical_files(files):
    code, rep = report("eval", "--quantity", "dmin", "--alpha", "0.5", "--rho", files["r"], "--sigma", files["r"])
    assert code == EXIT_OK and rep["status"] == "ok"
    assert abs(rep["value"]) < 1e-12 and rep["base"] == "2"


def test_eval_matches_library(files):
    code, rep = report("eval", "--quantity", "dpetz", "--alpha", "1.5", "--rho", files["r"], "--sigma", files["s"], "--base", "e")
    assert code == EXIT_OK
    expected = dv.petz(state_from_json(files["r"]).matrix, state_from_json(files["s"]).matrix, 1.5, base="e")
    assert rep["value"] == pytest.approx(expected, abs=1e-12)


def test_renyi_figure_csv():
    code, text = call("fig", "--name", "renyi-orgy", "--out", "csv")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["alpha", "minimal", "petz", "maximal"]
    body = [[float(x) for x in r] for r in rows[1:]]
    assert len(body) == 29
    for a, lo, mid, _ in body:
        assert lo <= mid + 1e-9
    # in the range where the maximal divergence is the largest data-processing one
    assert all(mid <= hi + 1e-9 for a, _, mid, hi in body if a <= 2)
    # twelve significant digits, no exponent for ordinary values
    assert all(len(x.replace(".", "").lstrip("0")) <= 12 for x in rows[1][1:])


def test_verify_duality_suite():
    code, rep = report("verify", "--suite", "duality", "--samples", "100", "--seed", "1", "--tol", "1e-6")
    assert code == EXIT_OK
    assert rep["passed"] and rep["max_residual"] < 1e-6 and rep["samples"] == 100


def test_validation_errors_exit_two(files):
    assert call("eval", "--quantity", "dmin", "--rho", files["r"], "--sigma", files["r"])[0] == EXIT_INVALID
    assert call("smooth", "--state", files["r"], "--cut", "A:B", "--eps", "1.5")[0] == EXIT_INVALID
    assert call("entropy", "--state", "/nonexistent.json")[0] == EXIT_INVALID
    code, rep = report("bogus")
    assert code == EXIT_INVALID and rep["status"] == "invalid"


def test_solver_failure_exits_three_with_certificate(files):
    code, rep = report("entropy", "--state", files["r"], "--quantity", "min", "--cut", "A:B", "--tol", "1e-30")
    assert code == EXIT_SOLVER
    assert rep["status"] == "nonconvergence"
    assert rep["certificate"]["status"] == "max_iter"


def test_reports_carry_certificates_and_witness_hash(files):
    code, rep = report("entropy", "--state", files["r"], "--quantity", "min", "--cut", "A:B")
    assert code == EXIT_OK
    assert rep["certificate"]["duality_gap"] <= 1e-8
    assert len(rep["witness_hash"]) == 16
    code, rep = report("smooth", "--state", files["r"], "--cut", "A:B", "--eps", "0.1")
    assert code == EXIT_OK and rep["distance"] <= 0.1 + 1e-7 and "witness_hash" in rep


def test_other_commands(files):
    code, rep = report("hypotest", "--rho", files["k0"], "--sigma", files["kp"])
    assert code == EXIT_OK and abs(rep["rows"][0][1] - 0.146447) < 1e-6
    code, rep = report("ur", "--dims", "2,2,2", "--samples", "3", "--seed", "4")
    assert code == EXIT_OK and rep["min_slack"] >= -1e-6
    code, rep = report("extract", "--state", files["ze"], "--n-bits", "4", "--m-bits", "1", "--eps", "0.1", "--delta", "0.05")
    assert code == EXIT_OK and rep["delta"] <= rep["bound_collision"]
    code, text = call("aep", "--eps", "0.05", "--n", "50,150", "--out", "csv")
    assert code == EXIT_OK and text.splitlines()[0].startswith("n,lower_bound,exact_or_NA,upper_bound,second_order_ref")


def test_determinism(files):
    argv = ("verify", "--suite", "dpi", "--samples", "10", "--seed", "7")
    assert call(*argv) == call(*argv)
    assert call("fig", "--name", "tangent", "--out", "csv") == call("fig", "--name", "tangent", "--out", "csv")
    a = call("entropy", "--state", files["r"], "--quantity", "renyi", "--alpha", "1.5", "--cut", "A:B")
    b = call("entropy", "--state", files["r"], "--quantity", "renyi", "--alpha", "1.5", "--cut", "A:B")
    assert a == b


def test_console_script_exit_code(files):
    ok = subprocess.run([sys.executable, "-m", "qit.cli", "fig", "--name", "renyi-orgy"], capture_output=True, text=True)
    assert ok.returncode == 0 and json.loads(ok.stdout)["figure"] == "renyi-orgy"
    bad = subprocess.run([sys.executable, "-m", "qit.cli", "eval", "--quantity", "dmin"], capture_output=True, text=True)
    assert bad.returncode == 2
