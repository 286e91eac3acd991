"""End-to-end tests of the batch command-line front end."""

import json
from pathlib import Path

import pytest

from shiftindex.cli import main

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main(list(argv) + ["--out", str(out)])
    return code, json.loads(out.read_text())


def write_spec(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


B1_SPEC = """{
  "d": 1, "theta": [0.3],
  "terms": [
    {"k": 0, "coeffs": [{"j": 1, "m": [0], "re": 1.0}]},
    {"k": 1, "coeffs": [{"j": 1, "m": [0], "re": 1.0}]}
  ]
}"""


def test_equality_on_derivative_spec(tmp_path):
    code, doc = run(tmp_path, "--spec", str(CORPUS / "s1_dx.json"),
                    "--command", "equality")
    assert code == 0
    assert doc["schema"].startswith("shiftindex-report/")
    assert len(doc["spec_hash"]) == 64
    assert doc["result"]["match"] is True
    assert doc["result"]["base_index"]["index"] == 0
    assert doc["result"]["product_index"]["index"] == 0


def test_ellipticity_conclusive_negative_exits_zero(tmp_path):
    spec = write_spec(tmp_path, "b1.json", B1_SPEC)
    code, doc = run(tmp_path, "--spec", str(spec), "--command", "ellipticity")
    assert code == 0
    assert doc["result"]["torus"]["is_elliptic"] is False
    assert doc["result"]["torus"]["status"] == "not_elliptic"


def test_index_command_rejects_degenerate_spec(tmp_path):
    spec = write_spec(tmp_path, "b1.json", B1_SPEC)
    code, doc = run(tmp_path, "--spec", str(spec), "--command", "index")
    assert code == 1
    assert "not elliptic" in doc["error"]


def test_topo_requires_two_dimensions(tmp_path):
    code, doc = run(tmp_path, "--spec", str(CORPUS / "s1_dx.json"),
                    "--command", "topo")
    assert code == 1
    assert "n > 1" in doc["error"]


def test_malformed_spec_exits_one(tmp_path):
    spec = write_spec(tmp_path, "bad.json", '{"d": 1, "junk": true}')
    code, doc = run(tmp_path, "--spec", str(spec), "--command", "ellipticity")
    assert code == 1
    assert "unknown" in doc["error"] or "needs" in doc["error"]


def test_uniformize_verify_passes(tmp_path):
    code, doc = run(tmp_path, "--spec", str(CORPUS / "s1_dx.json"),
                    "--command", "uniformize-verify")
    assert code == 0
    assert doc["result"]["pass"] is True
    assert doc["result"]["conjugate_shift_defect"] < 1e-10


def test_empty_corpus_dir_exits_one(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    code, doc = run(tmp_path, "--spec", str(empty), "--command", "corpus")
    assert code == 1
    assert "no spec" in doc["error"]


def test_corpus_isolates_malformed_member(tmp_path):
    little = tmp_path / "corpus"
    little.mkdir()
    (little / "good.json").write_text((CORPUS / "s1_shift_03.json").read_text())
    (little / "broken.json").write_text("{oops")
    code, doc = run(tmp_path, "--spec", str(little), "--command", "corpus")
    rows = {r["spec"]: r for r in doc["result"]["rows"]}
    assert rows["broken.json"]["status"] == "error"
    assert rows["good.json"]["status"] == "pass"
    assert doc["result"]["errors"] == 1
    assert code == 2  # an errored row makes the aggregate non-passing


def test_reports_are_deterministic(tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    argv = ["--spec", str(CORPUS / "s1_dx.json"), "--command", "ellipticity",
            "--fixed-order"]
    main(argv + ["--out", str(out1)])
    main(argv + ["--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_unknown_command_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["--spec", "x.json", "--command", "frobnicate"])
