from __future__ import annotations

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from nccw.standard import DEFAULT_DELTA
from nccw.testfn import DEFAULT_CAP, H_MODES

LOGGER = logging.getLogger(__name__)

APP_DIR = Path(os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config")) / "nccw"
DEFAULT_CONFIG_PATH = APP_DIR / "config.toml"
MIN_GRID = 12


class ConfigError(Exception):
    """Raised when configuration validation fails."""


@dataclass(frozen=True)
class GridConfig:
    size: int = 240
    kappa: float = 50.0


@dataclass(frozen=True)
class ToleranceConfig:
    bc: float = 1e-9
    unit: float = 1e-9
    herm: float = 1e-10
    rank_eps: float = 1e-6
    delta: float = DEFAULT_DELTA


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    seed: int = 0
    h_mode: str = "contiguous"
    explosion_cap: int = DEFAULT_CAP
    max_hom_size: int = 64

    def with_overrides(
        self,
        grid: Optional[int] = None,
        seed: Optional[int] = None,
        tol_bc: Optional[float] = None,
        tol_unit: Optional[float] = None,
        eps: Optional[float] = None,
        h_mode: Optional[str] = None,
    ) -> RunConfig:
        """Apply command-line flags on top of file values; None leaves a value alone."""
        tolerances = replace(
            self.tolerances,
            bc=self.tolerances.bc if tol_bc is None else tol_bc,
            unit=self.tolerances.unit if tol_unit is None else tol_unit,
            rank_eps=self.tolerances.rank_eps if eps is None else eps,
        )
        cfg = replace(
            self,
            grid=replace(self.grid, size=self.grid.size if grid is None else grid),
            tolerances=tolerances,
            seed=self.seed if seed is None else seed,
            h_mode=self.h_mode if h_mode is None else h_mode,
        )
        validate(cfg)
        return cfg

    def to_json(self) -> dict:
        return {
            "grid": {"size": self.grid.size, "kappa": self.grid.kappa},
            "tolerances": {
                "bc": self.tolerances.bc,
                "unit": self.tolerances.unit,
                "herm": self.tolerances.herm,
                "rank_eps": self.tolerances.rank_eps,
                "delta": self.tolerances.delta,
            },
            "seed": self.seed,
            "h_mode": self.h_mode,
            "explosion_cap": self.explosion_cap,
            "max_hom_size": self.max_hom_size,
        }


def validate(cfg: RunConfig) -> None:
    if cfg.grid.size < MIN_GRID:
        raise ConfigError(f"Grid size must be at least {MIN_GRID}, got {cfg.grid.size}")
    if cfg.grid.kappa <= 0:
        raise ConfigError(f"Continuity constant kappa must be positive, got {cfg.grid.kappa}")
    if cfg.h_mode not in H_MODES:
        raise ConfigError(f"Unknown h_mode '{cfg.h_mode}'. Must be one of: {', '.join(H_MODES)}")
    for name in ("bc", "unit", "herm", "rank_eps", "delta"):
        if getattr(cfg.tolerances, name) <= 0:
            raise ConfigError(f"Tolerance '{name}' must be positive")
    if cfg.tolerances.delta > 8:
        raise ConfigError(f"Tolerance 'delta' must be at most 8, got {cfg.tolerances.delta}")
    if cfg.explosion_cap < 1 or cfg.max_hom_size < 1:
        raise ConfigError("explosion_cap and max_hom_size must be positive")


def load_config(path: Optional[Path] = None) -> RunConfig:
    cfg_path = path or DEFAULT_CONFIG_PATH

    LOGGER.info(f"Config file path is {cfg_path}")

    if not cfg_path.exists():
        return RunConfig()

    try:
        data = tomllib.loads(cfg_path.read_text("utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Malformed TOML in {cfg_path}: {e}") from e

    grid_data = data.get("grid", {})
    tol_data = data.get("tolerances", {})
    run_data = data.get("run", {})
    defaults = RunConfig()
    try:
        cfg = RunConfig(
            grid=GridConfig(
                size=int(grid_data.get("size", defaults.grid.size)),
                kappa=float(grid_data.get("kappa", defaults.grid.kappa)),
            ),
            tolerances=ToleranceConfig(
                bc=float(tol_data.get("bc", defaults.tolerances.bc)),
                unit=float(tol_data.get("unit", defaults.tolerances.unit)),
                herm=float(tol_data.get("herm", defaults.tolerances.herm)),
                rank_eps=float(tol_data.get("rank_eps", defaults.tolerances.rank_eps)),
                delta=float(tol_data.get("delta", defaults.tolerances.delta)),
            ),
            seed=int(run_data.get("seed", defaults.seed)),
            h_mode=str(run_data.get("h_mode", defaults.h_mode)),
            explosion_cap=int(run_data.get("explosion_cap", defaults.explosion_cap)),
            max_hom_size=int(run_data.get("max_hom_size", defaults.max_hom_size)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value in {cfg_path}: {e}") from e

    validate(cfg)
    return cfg
