import json
import subprocess
import sys
from pathlib import Path

import pytest

from bundlecoh import serialize
from bundlecoh.cli import main
from bundlecoh.fixtures import i1_bundle
from bundlecoh.linalg import INTEGER, Matrix
from bundlecoh.poset import validate_poset
from bundlecoh.sheaf import Sheaf

DATA = Path(__file__).parent / "data"


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv, **kw):
    code, out, err = run(capsys, *argv, **kw)
    return code, json.loads(out) if out else None, err


def test_gen_boolean_pipe_admissible():
    cmd = [sys.executable, "-m", "bundlecoh.cli"]
    gen = subprocess.run(cmd + ["gen", "boolean", "2"], capture_output=True, text=True, check=True)
    adm = subprocess.run(cmd + ["admissible"], input=gen.stdout, capture_output=True, text=True)
    assert adm.returncode == 0
    rep = json.loads(adm.stdout)
    assert rep["witness"] == "{1}" and rep["verdict"] == "pass"
    assert rep["inputs_sha256"] == serialize.digest(gen.stdout)


def test_constant_bundle_verify_main(capsys, monkeypatch):
    code, doc, _ = run(capsys, "gen", "constant-bundle", "--base", "boolean:2", "--fiber", "chain:2")
    assert code == 0
    code, rep, _ = report(capsys, "verify-main", stdin=doc, monkeypatch=monkeypatch)
    assert code == 0 and rep["verdict"] == "pass" and rep["exit_code"] == 0
    assert rep["certificate"]["conclusion"]["sheaf_equals_total_cohomology"]


def test_cube_fixture_validates_and_verifies(capsys):
    code, rep, _ = report(capsys, "validate", str(DATA / "cube.json"))
    assert code == 0 and rep["kind"] == "bundle"
    code, rep, _ = report(capsys, "verify-main", str(DATA / "cube.json"), "--jobs", "2")
    assert code == 0


def test_chain_base_fixtures(capsys, tmp_path):
    for n in (1, 2, 3):
        out = tmp_path / f"c{n}.json"
        assert main(["gen", "constant-bundle", "--base", f"chain:{n}", "--fiber", "chain:2", "--out", str(out)]) == 0
        code, rep, _ = report(capsys, "verify-main", str(out))
        assert code == 0, rep


def test_pages_on_singleton_base_has_one_column(capsys, tmp_path):
    out = tmp_path / "pt.json"
    main(["gen", "constant-bundle", "--base", "chain:1", "--fiber", "boolean:2", "--out", str(out)])
    code, rep, _ = report(capsys, "pages", str(out))
    assert code == 0 and rep["columns"] == 1
    assert {row["p"] for row in rep["pages"]} == {0}


def test_cohomology_command(capsys):
    code, rep, _ = report(capsys, "cohomology", str(DATA / "i1.json"))
    assert code == 0
    assert [r["betti"] for r in rep["cohomology"]] == [1, 0, 0]
    code, rep, _ = report(capsys, "cohomology", str(DATA / "boolean-3.json"), "--max-degree", "1")
    assert [r["degree"] for r in rep["cohomology"]] == [0, 1]


def test_integer_ring_reports_torsion(capsys, tmp_path):
    O = validate_poset(["a", "b", "c", "d"], [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])
    one = Matrix.from_rows([[1]], ring=INTEGER)
    res = {c: one for c in O.covers}
    res[(0, 2)] = Matrix.from_rows([[3]], ring=INTEGER)
    path = tmp_path / "circle.json"
    path.write_text(serialize.dumps(serialize.to_document(Sheaf(O, (1, 1, 1, 1), res, INTEGER))))
    code, rep, _ = report(capsys, "cohomology", str(path), "--ring", "integer")
    assert code == 0
    assert rep["cohomology"][1]["torsion"] == [2]


def test_total_sheaf_and_phi_check(capsys):
    code, out, _ = run(capsys, "total-sheaf", str(DATA / "i1.json"))
    assert code == 0
    doc = json.loads(out)
    assert doc["poset"]["elements"] == ["0:a", "0:b", "1:c"]
    code, rep, _ = report(capsys, "phi-check", str(DATA / "random-7.json"), "--trials", "2")
    assert code == 0 and rep["phi"]["verdict"] == "pass"


def test_text_format(capsys):
    code, out, _ = run(capsys, "admissible", str(DATA / "boolean-3.json"), "--format", "text")
    assert code == 0
    assert "verdict: pass" in out and "witness: {1}" in out


def test_exit_code_validation_failure(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "bundlecoh/1", "kind": "poset", "elements": ["a", "b"], '
                   '"covers": [["a", "b"], ["b", "a"]]}')
    code, rep, _ = report(capsys, "validate", str(bad))
    assert code == 1 and rep["verdict"] == "fail"
    # a bundle with a broken diamond
    doc = json.loads((DATA / "cube.json").read_text())
    doc["arrows"][0]["matrices"][0]["matrix"][0][0] = "5"
    bad.write_text(serialize.dumps(doc))
    code, rep, _ = report(capsys, "validate", str(bad))
    assert code == 1 and "diamond" in rep["violation"]
    code, _, err = run(capsys, "verify-main", str(bad))
    assert code == 1 and "diamond" in err
    code, _, err = run(capsys, "pages", str(DATA / "i1.json"), "--ring", "integer")
    assert code == 1


def test_exit_code_property_violated(capsys, tmp_path):
    vee = tmp_path / "vee.json"
    vee.write_text(serialize.dumps({"format": "bundlecoh/1", "kind": "poset",
                                    "elements": ["0", "a", "b"], "covers": [["0", "a"], ["0", "b"]]}))
    code, rep, _ = report(capsys, "admissible", str(vee))
    assert code == 2 and rep["verdict"] == "fail" and rep["witness"] is None


def test_exit_code_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "validate", str(tmp_path / "missing.json"))
    assert code == 3 and "cannot read" in err
    code, _, err = run(capsys, "gen", "i1", "--out", str(tmp_path / "no" / "such" / "dir.json"))
    assert code == 3


def test_reports_are_reproducible(capsys):
    a = run(capsys, "verify-main", str(DATA / "random-base5-3.json"))
    b = run(capsys, "verify-main", str(DATA / "random-base5-3.json"), "--jobs", "2")
    assert a == b and a[0] == 0


def test_gen_is_deterministic(capsys):
    assert run(capsys, "gen", "random", "--seed", "5") == run(capsys, "gen", "random", "--seed", "5")
    assert run(capsys, "gen", "i1")[1] == serialize.dumps(serialize.to_document(i1_bundle()))


def test_gen_rejects_bad_poset_spec(capsys):
    code, _, err = run(capsys, "gen", "constant-bundle", "--base", "torus:2")
    assert code == 1 and "bad poset spec" in err
    with pytest.raises(SystemExit):
        main(["gen", "boolean"])
