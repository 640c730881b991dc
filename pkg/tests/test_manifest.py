import json

import numpy as np
import pytest

from woldkit import manifest as mf
from woldkit.fixtures import build_fixture, random_spec, random_unitary
from woldkit.operators import IsometryTuple


@pytest.fixture
def scrambled():
    return build_fixture(random_spec(2, 5))


def test_encode_decode_exact():
    A = random_unitary(4, 1) * np.pi
    assert np.array_equal(mf.decode_matrix(json.loads(json.dumps(mf.encode_matrix(A)))), A)


def test_manifest_round_trip_defects(tmp_path, scrambled):
    t, _ = scrambled
    mf.write_manifest(tmp_path / "m.json", t)
    t2, overrides = mf.load_manifest(tmp_path / "m.json")
    assert overrides == {}
    assert all(np.array_equal(a, b) for a, b in zip(t.operators, t2.operators))
    assert np.array_equal(t.interior, t2.interior)
    assert t.defects == t2.defects


def test_matrix_market_round_trip(tmp_path, scrambled):
    t, _ = scrambled
    mf.write_manifest(tmp_path / "m.json", t, {"rank_tol": 1e-11}, matrix_market=True)
    assert (tmp_path / "m.V1.mtx").read_text().startswith("%%MatrixMarket matrix array complex")
    t2, overrides = mf.load_manifest(tmp_path / "m.json")
    assert overrides == {"rank_tol": 1e-11}
    for a, b in zip(t.operators, t2.operators):
        assert np.array_equal(a, b)


def test_tolerance_config():
    cfg = mf.config_from({"rank_tol": 1e-9, "max_power": 12})
    assert cfg.rank_tol == 1e-9 and cfg.max_power == 12
    assert mf.tolerance_dict(cfg)["max_power"] == 12
    with pytest.raises(mf.ManifestError):
        mf.config_from({"rank_tol": -1.0})


@pytest.mark.parametrize("doc", [
    [],
    {"schema_version": "other/1", "ambient_dim": 1, "operators": [[[[1, 0]]]]},
    {"schema_version": mf.SCHEMA_VERSION, "operators": [[[[1, 0]]]]},
    {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": []},
    {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 2, "operators": [[[[1, 0]]]]},
    {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": [[[1, 0]]]},
    {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": [{"url": "x"}]},
    {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": [[[[1, 0]]]],
     "tolerances": {"speed": 1}},
    {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": [[[["a", 0]]]]},
])
def test_parse_errors(doc):
    with pytest.raises(mf.ManifestError):
        mf.parse_manifest(doc)


def test_plain_list_source():
    doc = {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": [[[[1.0, 0.0]]]]}
    t, _ = mf.parse_manifest(doc)
    assert isinstance(t, IsometryTuple) and t.dim == 1


def test_missing_mtx(tmp_path):
    doc = {"schema_version": mf.SCHEMA_VERSION, "ambient_dim": 1, "operators": [{"file": "none.mtx"}]}
    with pytest.raises(mf.ManifestError):
        mf.parse_manifest(doc, tmp_path)


def test_atomic_write_leaves_no_partial(tmp_path, monkeypatch):
    target = tmp_path / "out.json"
    target.write_text("old\n")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(mf.os, "replace", boom)
    with pytest.raises(OSError):
        mf.atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


def test_oracle_round_trip(tmp_path, scrambled):
    _, oracle = scrambled
    mf.write_oracle(tmp_path / "o.json", oracle)
    assert mf.load_oracle(tmp_path / "o.json") == oracle.block_dims
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(mf.ManifestError):
        mf.load_oracle(tmp_path / "bad.json")
