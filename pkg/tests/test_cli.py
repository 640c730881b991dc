import json

import numpy as np
import pytest

from woldkit import manifest as mf
from woldkit.cli import main
from woldkit.fixtures import build_fixture, polydisc_spec, truncated_shift
from woldkit.operators import IsometryTuple


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def shift_unitary(tmp_path):
    path = tmp_path / "su.json"
    assert run("fixture", "--preset", "shift-unitary", "--seed", 3, "--out", path,
               "--oracle", tmp_path / "su.oracle.json") == 0
    return path


def test_check_polydisc(tmp_path):
    path = tmp_path / "p.json"
    assert run("fixture", "--preset", "polydisc", "--e", 1, "--D", 3, "--n", 2, "--out", path) == 0
    assert json.loads(path.read_text())["ambient_dim"] == 9
    assert run("check", path, "--json", tmp_path / "r.json") == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["status"] == "accepted"
    assert report["defects"]["double_commutation_defect"] <= 1e-12


def test_check_jordan_pair(tmp_path):
    path = tmp_path / "j.json"
    assert run("fixture", "--preset", "jordan-pair", "--out", path) == 0
    assert run("check", path, "--json", tmp_path / "r.json") == 2
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["status"] == "rejected"
    assert report["defects"]["double_commutation_defect"] == 1.0
    assert run("decompose", path) == 2
    assert run("verify", path, "--json", tmp_path / "v.json") == 2
    assert json.loads((tmp_path / "v.json").read_text())["rows"] == []


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run("check", path) == 3
    assert "cannot read" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert run("check", tmp_path / "absent.json") == 3


def test_usage_error():
    assert run("decompose") == 3


def test_resource_cap(tmp_path):
    assert run("fixture", "--preset", "polydisc", "--D", 6, "--n", 3, "--max-dim", 100,
               "--out", tmp_path / "x.json") == 5
    assert not (tmp_path / "x.json").exists()


def test_decompose_both(tmp_path, shift_unitary):
    out = tmp_path / "d.json"
    assert run("decompose", shift_unitary, "--method", "both", "--json", out,
               "--oracle", tmp_path / "su.oracle.json") == 0
    doc = json.loads(out.read_text())
    assert [b["label"] for b in doc["blocks"] if b["dim"]] == [[1]]
    assert max(a["max_angle"] for a in doc["agreement"]) <= 1e-8
    assert doc["oracle"]["match"] and "timing_seconds" not in doc


def test_oracle_mismatch(tmp_path, shift_unitary):
    oracle = tmp_path / "wrong.json"
    oracle.write_text(json.dumps({"blocks": [{"label": [1, 2], "dim": 9}]}))
    assert run("decompose", shift_unitary, "--oracle", oracle) == 4


def test_all_unitary(tmp_path):
    path = tmp_path / "u.json"
    run("fixture", "--preset", "all-unitary", "--out", path)
    assert run("decompose", path, "--json", tmp_path / "d.json") == 0
    doc = json.loads((tmp_path / "d.json").read_text())
    assert [(b["label"], b["dim"]) for b in doc["blocks"] if b["dim"]] == [([], 9)]


def test_unresolved_exit(tmp_path):
    path = tmp_path / "p.json"
    run("fixture", "--preset", "polydisc", "--D", 6, "--n", 2, "--out", path)
    assert run("decompose", path, "--max-power", 2) == 4


def test_depth_option(tmp_path):
    path = tmp_path / "r.json"
    run("fixture", "--preset", "random", "--n", 3, "--seed", 2, "--out", path)
    assert run("decompose", path, "-m", 2, "--json", tmp_path / "d.json") == 0
    assert len(json.loads((tmp_path / "d.json").read_text())["blocks"]) == 4


def test_verify_equivalence_polydisc(tmp_path):
    path = tmp_path / "p.json"
    run("fixture", "--preset", "polydisc", "--seed", 4, "--out", path)
    assert run("verify", path, "--suite", "equivalence", "--json", tmp_path / "v.json") == 0
    rows = json.loads((tmp_path / "v.json").read_text())["rows"]
    assert all(r["passed"] for r in rows) and len(rows) == 6


def test_verify_identities_shift_unitary(tmp_path, shift_unitary):
    assert run("verify", shift_unitary, "--json", tmp_path / "v.json") == 0
    rows = json.loads((tmp_path / "v.json").read_text())["rows"]
    required = [r for r in rows if not r["informational"]]
    assert required and all(r["passed"] for r in required)
    assert [r["passed"] for r in rows if r["informational"]] == [False]


@pytest.mark.parametrize("suite", ["wold", "multi"])
def test_verify_other_suites(tmp_path, suite):
    path = tmp_path / "s.json"
    run("fixture", "--preset", "slocinski-mixed", "--seed", 1, "--out", path)
    assert run("verify", path, "--suite", suite) == 0


def test_fixture_determinism(tmp_path):
    for d in ("a", "b"):
        assert run("fixture", "--preset", "random", "--seed", 9, "--mtx", "--out", tmp_path / d / "f.json",
                   "--oracle", tmp_path / d / "o.json") == 0
    for name in ("f.json", "o.json", "f.V1.mtx", "f.V3.mtx"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_determinism(tmp_path, shift_unitary):
    outs = []
    for k in range(2):
        out = tmp_path / f"d{k}.json"
        run("decompose", shift_unitary, "--method", "both", "--json", out)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_manifest_matches_in_memory(tmp_path):
    spec = polydisc_spec(2, 2, 2, scramble_seed=6)
    run("fixture", "--preset", "polydisc", "--e", 2, "--D", 2, "--n", 2, "--seed", 6,
        "--out", tmp_path / "p.json")
    t, _ = build_fixture(spec)
    t2, _ = mf.load_manifest(tmp_path / "p.json")
    assert t.defects == t2.defects


def test_spec_file(tmp_path):
    spec = polydisc_spec(1, 2, 3)
    (tmp_path / "spec.json").write_text(json.dumps(spec.to_dict()))
    assert run("fixture", "--spec", tmp_path / "spec.json", "--out", tmp_path / "f.json") == 0
    assert json.loads((tmp_path / "f.json").read_text())["ambient_dim"] == 8


def test_external_manifest(tmp_path):
    # a hand-written manifest with Matrix Market operators
    J = truncated_shift(3)
    t = IsometryTuple((np.kron(J, np.eye(2)), np.kron(np.eye(3), np.array([[0, 1], [1, 0]]))),
                      np.kron(np.diag([1.0, 1, 0]), np.eye(2)))
    mf.write_manifest(tmp_path / "h.json", t, matrix_market=True)
    assert run("decompose", tmp_path / "h.json", "--method", "both") == 0
