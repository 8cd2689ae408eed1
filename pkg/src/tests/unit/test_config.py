from __future__ import annotations

import pytest

from nccw.config import ConfigError, GridConfig, RunConfig, load_config


class TestRunConfig:
    def test_is_frozen(self):
        config = RunConfig()
        with pytest.raises(AttributeError):
            config.seed = 3

    def test_defaults(self):
        config = RunConfig()
        assert config.grid.size == 240
        assert config.tolerances.rank_eps == 1e-6
        assert config.tolerances.delta == 2.0
        assert config.h_mode == "contiguous"

    def test_overrides_leave_unset_values(self):
        config = RunConfig().with_overrides(grid=48, seed=7)
        assert config.grid.size == 48
        assert config.seed == 7
        assert config.grid.kappa == 50.0
        assert config.tolerances.bc == 1e-9

    def test_overrides_are_validated(self):
        with pytest.raises(ConfigError, match="at least 12"):
            RunConfig().with_overrides(grid=6)

    def test_to_json_sections(self):
        doc = RunConfig(grid=GridConfig(size=48)).to_json()
        assert doc["grid"]["size"] == 48
        assert set(doc["tolerances"]) == {"bc", "unit", "herm", "rank_eps", "delta"}


class TestLoadConfig:
    def test_missing_file_gives_defaults(self, tmp_path):
        assert load_config(tmp_path / "nonexistent" / "config.toml") == RunConfig()

    def test_uses_default_path_when_none_provided(self, tmp_path, monkeypatch):
        config_file = tmp_path / "config.toml"
        config_file.write_text("[run]\nseed = 11\n")
        monkeypatch.setattr("nccw.config.DEFAULT_CONFIG_PATH", config_file)

        assert load_config(None).seed == 11

    def test_reads_all_tables(self, tmp_path):
        config_file = tmp_path / "config.toml"
        config_file.write_text(
            "[grid]\nsize = 96\nkappa = 20.0\n"
            "[tolerances]\nbc = 1e-8\nrank_eps = 1e-4\ndelta = 4.0\n"
            '[run]\nseed = 2\nh_mode = "full"\n'
        )

        config = load_config(config_file)

        assert config.grid == GridConfig(size=96, kappa=20.0)
        assert config.tolerances.bc == 1e-8
        assert config.tolerances.rank_eps == 1e-4
        assert config.tolerances.unit == 1e-9
        assert config.tolerances.delta == 4.0
        assert config.seed == 2
        assert config.h_mode == "full"

    def test_small_grid(self, tmp_path):
        config_file = tmp_path / "config.toml"
        config_file.write_text("[grid]\nsize = 4\n")
        with pytest.raises(ConfigError, match="Grid size"):
            load_config(config_file)

    def test_unknown_h_mode(self, tmp_path):
        config_file = tmp_path / "config.toml"
        config_file.write_text('[run]\nh_mode = "sparse"\n')
        with pytest.raises(ConfigError, match="h_mode"):
            load_config(config_file)

    def test_nonpositive_tolerance(self, tmp_path):
        config_file = tmp_path / "config.toml"
        config_file.write_text("[tolerances]\nherm = 0.0\n")
        with pytest.raises(ConfigError, match="herm"):
            load_config(config_file)

    def test_wrong_type(self, tmp_path):
        config_file = tmp_path / "config.toml"
        config_file.write_text('[grid]\nsize = "large"\n')
        with pytest.raises(ConfigError, match="Invalid value"):
            load_config(config_file)

    def test_malformed_toml(self, tmp_path):
        config_file = tmp_path / "config.toml"
        config_file.write_text("[grid\nsize = 48\n")
        with pytest.raises(ConfigError, match="Malformed TOML"):
            load_config(config_file)

    @pytest.mark.parametrize("delta", [0.0, 9.0])
    def test_delta_out_of_range(self, tmp_path, delta):
        config_file = tmp_path / "config.toml"
        config_file.write_text(f"[tolerances]\ndelta = {delta}\n")
        with pytest.raises(ConfigError, match="delta"):
            load_config(config_file)
