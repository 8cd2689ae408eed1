from __future__ import annotations

import json

from nccw.cli.app import app


def test_diagonal_check_complex(runner, tmp_path):
    out = tmp_path / "diag.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "diagonal-check", "builtin:z25", "--trials", "2"])
    assert r.exit_code == 0
    hypotheses = json.loads(out.read_text())["results"]["hypotheses"]
    assert [h["hypothesis"] for h in hypotheses] == [
        "maximal abelian",
        "faithful expectation",
        "regular",
        "expectation properties",
    ]


def test_diagonal_check_needs_map_into_complex(runner):
    r = runner.invoke(app, ["--grid", "48", "diagonal-check", "--kind", "standard", "builtin:example-map"])
    assert r.exit_code == 2
    assert "does not map into a complex" in r.stdout


def test_rebase(runner, tmp_path):
    """Rebasing keeps the spectrum and records the boundary permutations."""
    out = tmp_path / "rebase.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "rebase", "builtin:z23-z25"])
    assert r.exit_code == 0
    assert "[OK]" in r.stdout
    results = json.loads(out.read_text())["results"]
    assert results["pointwise_equivalent"] is True
    assert results["map"]["kind"] == "complex"


def test_rebase_chain(runner, tmp_path):
    out = tmp_path / "chain.json"
    r = runner.invoke(
        app, ["--grid", "48", "--out", str(out), "rebase-chain", "builtin:z23-z25", "builtin:z25-identity"]
    )
    assert r.exit_code == 0
    stages = json.loads(out.read_text())["results"]["stages"]
    assert len(stages) == 2
    for stage in stages:
        assert all(h["pass"] for h in stage["hypotheses"])
        assert stage["square_residual"] < 1e-6


def test_rebase_chain_must_compose(runner):
    r = runner.invoke(app, ["--grid", "48", "rebase-chain", "builtin:z25-identity", "builtin:z23-z25"])
    assert r.exit_code == 1
    assert "intermediate" in " ".join(r.stdout.split())


def test_cu_rank_family(runner, tmp_path):
    out = tmp_path / "cu.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "cu-rank", "builtin:z23"])
    assert r.exit_code == 0
    results = json.loads(out.read_text())["results"]
    assert len(results["elements"]) == 15
    assert results["failures"] == []
    for entry in results["elements"]:
        assert set(entry["rank"]) == {"ranks", "e_ranks", "eps"}
        assert len(entry["rank"]["e_ranks"]) == 2
        assert len(entry["rank"]["ranks"]) == 1


def test_cu_rank_rebased_map_agrees(runner, tmp_path):
    out = tmp_path / "cu.json"
    r = runner.invoke(app, ["--grid", "48", "--out", str(out), "cu-rank", "builtin:z23", "--map", "builtin:z23-z25"])
    assert r.exit_code == 0
    elements = json.loads(out.read_text())["results"]["elements"]
    assert all(e["rebased_equal"] for e in elements)


def test_cu_rank_map_from_other_complex(runner):
    r = runner.invoke(app, ["--grid", "48", "cu-rank", "builtin:z23", "--map", "builtin:z25-identity"])
    assert r.exit_code == 2
