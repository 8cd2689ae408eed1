from __future__ import annotations

import json
from pathlib import Path
from typing import List

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish


def report(
    ctx: typer.Context,
    paths: List[Path] = typer.Argument(..., help="Report files written with --out"),
):
    """
       Aggregate report files into one verdict.

       Reads the JSON reports of earlier runs, prints one row per report
       and passes only if every report passed. With --out the aggregate is
       written as a report of its own.

       Examples:
         nccw report k1.json pair.json
         nccw --out all.json report runs/*.json
    """
    appctx: AppContext = ctx.obj
    rows = []
    for path in paths:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            rows.append({"file": str(path), "command": data["command"], "pass": bool(data["pass"])})
        except FileNotFoundError:
            print(f"[red]Error:[/red] Report file does not exist: {path}")
            raise typer.Exit(2)
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            print(f"[red]Error:[/red] Not a report file: {path} ({e})")
            raise typer.Exit(2)

    table = Table()
    table.add_column("file")
    table.add_column("command")
    table.add_column("pass")
    for row in rows:
        table.add_row(row["file"], row["command"], "[green]yes[/green]" if row["pass"] else "[red]no[/red]")
    print(table)

    passed = sum(1 for r in rows if r["pass"])
    print()
    print("Summary:")
    print(f"  Passed: {passed}")
    print(f"  Failed: {len(rows) - passed}")
    finish(appctx, "report", passed == len(rows), {"reports": rows})
