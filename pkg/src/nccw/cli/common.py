from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import typer
from rich import print

from nccw.cli.app import AppContext
from nccw.complex import ComplexSpec
from nccw.examples import UnknownExample, is_builtin, resolve
from nccw.homspec import HomToMatrix
from nccw.report import CheckReport, Report, write_report
from nccw.schema import INPUT_ERRORS, parse_spec
from nccw.standard import HomFamily, StandardMapToComplex, StandardMapToMatrix

LOGGER = logging.getLogger(__name__)

EXPECTED = {
    "complex": (ComplexSpec,),
    "hom": (HomToMatrix,),
    "standard": (StandardMapToMatrix, StandardMapToComplex),
    "family": (HomFamily,),
}


def load_input(source: str, kind: str) -> Any:
    """
    A file path or a builtin:NAME reference, as an object of the given kind.

    Input errors exit with code 2.
    """
    try:
        if is_builtin(source):
            obj = resolve(source)
            if not isinstance(obj, EXPECTED[kind]):
                print(f"[red]Error:[/red] {source} is not a {kind}")
                raise typer.Exit(2)
            return obj
        return parse_spec(Path(source), kind)
    except UnknownExample as e:
        print(f"[red]Error:[/red] {e}")
        raise typer.Exit(2)
    except INPUT_ERRORS as e:
        print(f"[red]Input error:[/red] {source}: {e}")
        LOGGER.debug(f"{type(e).__name__} while loading {source}")
        raise typer.Exit(2)


def print_checks(checks: CheckReport) -> None:
    for result in checks.results:
        if result.ok:
            print(f"[green][OK][/green] {result.message}")
        else:
            print(f"[red][ERROR][/red] {result.message}")


def finish(appctx: AppContext, command: str, passed: bool, results: dict) -> None:
    """Write the report when --out is set, print the verdict and exit 1 on failure."""
    report = Report(command=command, passed=passed, results=results, config=appctx.config)
    if appctx.out is not None:
        try:
            write_report(report, appctx.out)
        except OSError as e:
            print(f"[red]Error:[/red] Cannot write report {appctx.out}: {e}")
            raise typer.Exit(2)
        LOGGER.info(f"Report written to {appctx.out}")

    if passed:
        print(f"[green]PASS[/green] {command}")
    else:
        print(f"[red]FAIL[/red] {command}")
        raise typer.Exit(1)
