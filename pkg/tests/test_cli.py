import json

import numpy as np
import pytest

from momentcard.cli import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SOLVER,
    InputError,
    RunSpec,
    main,
    parse_orders,
    parse_problem,
)
from momentcard.sdp import read_sdpa

BOX2 = {
    "type": "mincard",
    "A": [[1, 1], [1, 0], [0, 1], [-1, 0], [0, -1]],
    "b": [1, 0, 0, -1, -1],
}


@pytest.fixture
def write(tmp_path):
    def _write(obj, name="p.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
        return str(path)

    return _write


def run_cli(args, tmp_path):
    out = tmp_path / "out.json"
    code = main([*args, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_parse_orders():
    assert parse_orders("3") == (3,)
    assert parse_orders("2..4") == (2, 3, 4)
    for bad in ("0", "3..2", "x", "1..y"):
        with pytest.raises(InputError):
            parse_orders(bad)


def test_parse_problem_schema():
    assert parse_problem(BOX2).kind == "mincard"
    mr = parse_problem({"type": "minrank", "A_list": [np.eye(2).tolist()], "b": [1]})
    assert mr.kind == "minrank" and mr.A_list[0].shape == (2, 2)
    env = parse_problem({"type": "envelope", "A": [[1, 1]], "b": [0.5], "degree": 2})
    assert env.degree == 2
    bad = [
        [],
        {"type": "other"},
        {"type": "mincard", "A": [[1]]},
        {"type": "mincard", "A": [[1, 2]], "b": [1, 2]},
        {"type": "mincard", "A": [["a"]], "b": [1]},
        {"type": "mincard", "A": [[1]], "b": [1], "alpha": 0.5},
        {"type": "envelope", "A": [[1]], "b": [1]},
        {"type": "minrank", "A_list": [[[1, 0, 0]]], "b": [1]},
        {"type": "minrank", "A_list": [np.eye(2).tolist()], "b": [1, 2]},
    ]
    for obj in bad:
        with pytest.raises(InputError):
            parse_problem(obj)


def test_run_spec_needs_order():
    with pytest.raises(InputError):
        RunSpec("relax", "x.json")
    with pytest.raises(InputError):
        RunSpec("launch", "x.json", (1,))


def test_certify_n1(write, tmp_path):
    path = write({"type": "mincard", "A": [[1]], "b": [1], "alpha": 2})
    code, rep = run_cli(["certify", path, "--order", "2"], tmp_path)
    assert code == EXIT_OK
    cert = rep["certificate"]
    assert cert["rounded_bound"] == 1 and cert["certified"]
    assert cert["point"] == pytest.approx({"x1": 1.0, "v1": 1.0}, abs=1e-5)


def test_relax_range_monotone(write, tmp_path):
    code, rep = run_cli(["relax", write(BOX2), "--order", "2..3"], tmp_path)
    assert code == EXIT_OK
    l2, l3 = (r["bound"] for r in rep["results"])
    assert [r["order"] for r in rep["results"]] == [2, 3]
    assert l2 <= l3 + 1e-6
    assert all("rounded_bound" in r and "bound" in r for r in rep["results"])


def test_reports_are_reproducible(write, tmp_path):
    path = write(BOX2)
    texts = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert main(["relax", path, "--order", "1..2", "--out", str(out)]) == EXIT_OK
        lines = out.read_bytes().splitlines()
        texts.append([ln for ln in lines if not ln.strip().startswith(b'"created"')])
    assert texts[0] == texts[1]


def test_drop_constraint_never_raises_bound(write, tmp_path):
    path = write(BOX2)
    _, full = run_cli(["relax", path, "--order", "2"], tmp_path)
    _, dropped = run_cli(["relax", path, "--order", "2", "--drop-constraint", "2"], tmp_path)
    assert dropped["results"][0]["bound"] <= full["results"][0]["bound"] + 1e-6


def test_bruteforce_and_heuristic(write, tmp_path):
    path = write(BOX2)
    code, rep = run_cli(["bruteforce", path], tmp_path)
    assert code == EXIT_OK and rep["optimum"] == 1 and "wall_time" not in rep
    code, rep = run_cli(["heuristic", path], tmp_path)
    assert code == EXIT_OK and rep["method"] == "l1" and rep["value"] == pytest.approx(1.0, abs=1e-6)
    mr = write({"type": "minrank", "A_list": [np.eye(2).tolist()], "b": [1]}, "mr.json")
    code, rep = run_cli(["heuristic", mr], tmp_path)
    assert code == EXIT_OK and rep["method"] == "nuclear" and rep["rank"] == 1
    assert main(["bruteforce", mr]) == EXIT_PARSE


def test_envelope_report(write, tmp_path):
    path = write({"type": "envelope", "A": [[1, 1]], "b": [0.5], "degree": 1})
    code, rep = run_cli(["envelope", path], tmp_path)
    assert code == EXIT_OK
    assert rep["validation"]["samples"] == 1000
    assert rep["validation"]["max_excess"] <= 1e-6
    assert rep["p"]["vars"] == ["x1", "x2"]
    assert all(len(t["exp"]) == 2 and sum(t["exp"]) <= 1 for t in rep["p"]["terms"])
    code, _ = run_cli(["envelope", write(BOX2, "mc.json")], tmp_path)
    assert code == EXIT_PARSE  # mincard input needs --degree


def test_export_sdpa_round_trip(write, tmp_path):
    out = tmp_path / "p.dat-s"
    assert main(["export-sdpa", write(BOX2), "--order", "1", "--out", str(out)]) == EXIT_OK
    problem = read_sdpa(out.read_text())
    assert problem.m > 0 and problem.n_free == 0
    assert main(["export-sdpa", write(BOX2), "--order", "1..2"]) == EXIT_PARSE


def test_parse_errors(write, tmp_path, capsys):
    assert main(["relax", str(tmp_path / "missing.json"), "--order", "1"]) == EXIT_PARSE
    assert main(["relax", write("{not json"), "--order", "1"]) == EXIT_PARSE
    assert main(["relax", write(BOX2), "--order", "1", "--tol", "-1"]) == EXIT_PARSE
    assert main(["relax", write(BOX2)]) == EXIT_PARSE
    assert "error" in capsys.readouterr().err


def test_solver_failure_writes_partial_report(write, tmp_path):
    code, rep = run_cli(["relax", write(BOX2), "--order", "2", "--max-iter", "2"], tmp_path)
    assert code == EXIT_SOLVER
    assert rep["results"][0]["status"] == "max_iter"


def test_infeasible_exit(write, tmp_path):
    path = write({"type": "mincard", "A": [[1], [-1]], "b": [1, 0]})
    code, rep = run_cli(["bruteforce", path], tmp_path)
    assert code == EXIT_INFEASIBLE and "error" in rep
    code, _ = run_cli(["relax", path, "--order", "1"], tmp_path)
    assert code == EXIT_INFEASIBLE
