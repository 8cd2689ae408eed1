from __future__ import annotations

from nccw.cli.app import app


def test_version(runner):
    r = runner.invoke(app, ["--version"])
    assert r.exit_code == 0
    assert "nccw" in r.stdout


def test_grid_below_minimum(runner):
    """Grid overrides are validated like config file values."""
    r = runner.invoke(app, ["--grid", "6", "k1", "builtin:z23"])
    assert r.exit_code == 2
    assert "Configuration error" in r.stdout


def test_unknown_h_mode(runner):
    r = runner.invoke(app, ["--h-mode", "sparse", "k1", "builtin:z23"])
    assert r.exit_code == 2


def test_missing_config_file(runner, tmp_path):
    r = runner.invoke(app, ["--config", str(tmp_path / "nope.toml"), "k1", "builtin:z23"])
    assert r.exit_code == 2
    assert "Config file does not exist" in r.stdout


def test_config_file_sets_seed(runner, tmp_path):
    """Values from the config file reach the report."""
    config = tmp_path / "config.toml"
    config.write_text("[run]\nseed = 5\n")
    out = tmp_path / "k1.json"
    r = runner.invoke(app, ["--config", str(config), "--out", str(out), "k1", "builtin:z23"])
    assert r.exit_code == 0
    assert '"seed": 5' in out.read_text()


def test_output_directory_must_exist(runner, tmp_path):
    r = runner.invoke(app, ["--out", str(tmp_path / "missing" / "r.json"), "k1", "builtin:z23"])
    assert r.exit_code == 2
    assert "Output directory does not exist" in r.stdout
