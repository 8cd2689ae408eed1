from __future__ import annotations

import json

from nccw.cli.app import app

Z23 = {"name": "Z2,3", "e": [2, 3], "f": [6], "mult0": [[3, 0]], "mult1": [[0, 2]]}


def test_validate_builtin_complex(runner):
    """A bundled complex validates and prints its K1."""
    r = runner.invoke(app, ["validate", "builtin:z23"])
    assert r.exit_code == 0
    assert "K1 free rank 0" in r.stdout
    assert "PASS validate" in r.stdout


def test_validate_complex_file(runner, write_json, tmp_path):
    """A complex file is accepted and the report records neighbourhoods."""
    path = write_json("z23.json", Z23)
    out = tmp_path / "report.json"
    r = runner.invoke(app, ["--out", str(out), "validate", str(path)])
    assert r.exit_code == 0
    report = json.loads(out.read_text())
    assert report["pass"] is True
    assert report["results"]["k1"] == {"free_rank": 0, "torsion": []}
    assert len(report["results"]["neighborhoods"]) == 2


def test_validate_not_unital(runner, write_json):
    """A multiplicity row that leaves a block unfilled is an input error."""
    path = write_json("bad.json", {"e": [1], "f": [1], "mult0": [[0]], "mult1": [[1]]})
    r = runner.invoke(app, ["validate", str(path)])
    assert r.exit_code == 2
    assert "Input error" in r.stdout


def test_validate_schema_error_names_field(runner, write_json):
    """Schema failures exit 2 and point at the offending entry."""
    path = write_json("bad.json", {**Z23, "e": [2, 0]})
    r = runner.invoke(app, ["validate", str(path)])
    assert r.exit_code == 2
    assert "/e/1" in r.stdout


def test_validate_missing_file(runner, tmp_path):
    r = runner.invoke(app, ["validate", str(tmp_path / "missing.json")])
    assert r.exit_code == 2
    assert "file not found" in " ".join(r.stdout.split())


def test_validate_unknown_builtin(runner):
    r = runner.invoke(app, ["validate", "builtin:torus"])
    assert r.exit_code == 2
    assert "Unknown builtin" in r.stdout


def test_validate_builtin_of_wrong_kind(runner):
    r = runner.invoke(app, ["validate", "builtin:phi0"])
    assert r.exit_code == 2
    assert "is not a complex" in r.stdout


def test_validate_invalid_kind(runner):
    r = runner.invoke(app, ["validate", "--kind", "hom", "builtin:phi0"])
    assert r.exit_code == 2
    assert "Invalid kind" in r.stdout


def test_validate_standard_map_into_matrices(runner):
    r = runner.invoke(app, ["--grid", "48", "validate", "--kind", "standard", "builtin:example-map"])
    assert r.exit_code == 0
    assert "[OK]" in r.stdout


def test_validate_standard_map_into_complex(runner, tmp_path):
    """Maps into a complex are also checked for boundary coherence."""
    out = tmp_path / "report.json"
    r = runner.invoke(
        app, ["--grid", "48", "--out", str(out), "validate", "--kind", "standard", "builtin:z23-z25"]
    )
    assert r.exit_code == 0
    results = json.loads(out.read_text())["results"]
    assert results["kind"] == "complex"
    assert results["boundary_residual"] < 1e-8
