from __future__ import annotations

import json

from nccw.cli.app import app


def test_test_set_counts(runner, tmp_path):
    out = tmp_path / "h.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "test-set", "builtin:z23"])
    assert r.exit_code == 0
    results = json.loads(out.read_text())["results"]
    assert results["count"] == 15
    assert sum(e["label"].startswith("type1") for e in results["elements"]) == 12
    assert all(e["min_eigenvalue"] >= -1e-12 for e in results["elements"])
    assert "data" not in results["elements"][0]


def test_test_set_with_samples(runner, tmp_path):
    out = tmp_path / "h.json"
    r = runner.invoke(app, ["--grid", "12", "--out", str(out), "test-set", "builtin:z23", "--m", "2", "--samples"])
    assert r.exit_code == 0
    element = json.loads(out.read_text())["results"]["elements"][0]
    assert element["data"]["grid"] == 12


def test_test_set_tilde(runner, tmp_path):
    out = tmp_path / "h.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "test-set", "builtin:z23", "--tilde"])
    assert r.exit_code == 0
    assert json.loads(out.read_text())["results"]["count"] == 6 * 4 + 6 * 9 + 3 * 36


def test_test_set_grid_not_divisible(runner):
    r = runner.invoke(app, ["--grid", "48", "test-set", "builtin:z23", "--m", "5"])
    assert r.exit_code == 2


def test_test_set_is_deterministic(runner, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for out in (first, second):
        r = runner.invoke(app, ["--grid", "48", "--out", str(out), "test-set", "builtin:example"])
        assert r.exit_code == 0
    assert first.read_bytes() == second.read_bytes()


def test_dpair(runner, tmp_path):
    out = tmp_path / "dpair.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "dpair", "builtin:example-map"])
    assert r.exit_code == 0
    assert "Roundtrip residual" in r.stdout


def test_approximate_builtin_map(runner, tmp_path):
    """A sampled map is replaced by a standard map within the tolerance."""
    out, saved = tmp_path / "approx.json", tmp_path / "psi.json"
    r = runner.invoke(
        app,
        ["--grid", "48", "--out", str(out), "approximate", "builtin:z23-z25", "--epsilon", "0.5", "--save", str(saved)],
    )
    assert r.exit_code == 0
    results = json.loads(out.read_text())["results"]
    assert all(b["max_deviation"] < 0.5 for b in results["blocks"])
    assert json.loads(saved.read_text())["kind"] == "complex"


def test_approximate_needs_map_into_complex(runner):
    r = runner.invoke(app, ["--grid", "48", "approximate", "builtin:example-map"])
    assert r.exit_code == 2
