# src/nccw/cli/app.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import typer
from rich import print

from nccw.config import ConfigError, RunConfig, load_config
from nccw.logging_utils import configure_logging
from nccw.report import library_version

LOGGER = logging.getLogger(__name__)

app = typer.Typer(no_args_is_help=True, help="Toolkit for 1-dimensional NCCW complexes")


def version_callback(value: bool) -> None:
    if value:
        print(f"nccw {library_version()}")
        raise typer.Exit()


@dataclass
class AppContext:
    config: RunConfig
    out: Optional[Path]


@app.callback()
def main_callback(
    ctx: typer.Context,
    config_path: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Path to config file"
    ),
    grid: Optional[int] = typer.Option(None, "--grid", help="Grid size N for sampled elements"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for every random draw"),
    tol_bc: Optional[float] = typer.Option(None, "--tol-bc", help="Boundary-condition tolerance"),
    tol_unit: Optional[float] = typer.Option(None, "--tol-unit", help="Unitarity tolerance"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Rank threshold for eigenvalues"),
    h_mode: Optional[str] = typer.Option(None, "--h-mode", help="Test-set enumeration: contiguous or full"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the JSON report here"),
    verbose: int = typer.Option(
        0, "--verbose", "-v", count=True, help="Increase verbosity (-v, -vv)"
    ),
    version: Optional[bool] = typer.Option(
        None, "--version", callback=version_callback, is_eager=True, help="Show version and exit"
    ),
):
    configure_logging(verbose=verbose)

    if config_path is not None and not config_path.exists():
        print(f"[red]Error:[/red] Config file does not exist: {config_path}")
        raise typer.Exit(2)

    try:
        config = load_config(config_path).with_overrides(
            grid=grid, seed=seed, tol_bc=tol_bc, tol_unit=tol_unit, eps=eps, h_mode=h_mode
        )
    except ConfigError as e:
        print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(2)

    if out is not None and not out.parent.exists():
        print(f"[red]Error:[/red] Output directory does not exist: {out.parent}")
        raise typer.Exit(2)

    LOGGER.info(f"Grid size is {config.grid.size}, seed is {config.seed}")
    ctx.obj = AppContext(config=config, out=out)


def main() -> None:
    app()


# Register subcommands
from nccw.cli.commands.approximate import approximate
from nccw.cli.commands.cu_rank import cu_rank
from nccw.cli.commands.diagonal import diagonal_check
from nccw.cli.commands.dpair import dpair
from nccw.cli.commands.k1 import k1
from nccw.cli.commands.pair import pair
from nccw.cli.commands.rebase import rebase, rebase_chain
from nccw.cli.commands.report import report
from nccw.cli.commands.test_set import test_set
from nccw.cli.commands.validate import validate

app.command("validate")(validate)
app.command("test-set")(test_set)
app.command("pair")(pair)
app.command("approximate")(approximate)
app.command("dpair")(dpair)
app.command("rebase")(rebase)
app.command("rebase-chain")(rebase_chain)
app.command("diagonal-check")(diagonal_check)
app.command("k1")(k1)
app.command("cu-rank")(cu_rank)
app.command("report")(report)
