from __future__ import annotations

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.cu import cu_rank
from nccw.testfn import FamilyError, build_H, build_H_tilde


def test_set(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Complex file or builtin:NAME"),
    m: int = typer.Option(4, "--m", "-m", help="Partition count; the family is H(1/m)"),
    tilde: bool = typer.Option(False, "--tilde", help="Emit the matrix-unit family H-tilde instead"),
    form: str = typer.Option("raw", "--form", help="H-tilde units: raw or hermitian"),
    samples: bool = typer.Option(False, "--samples", help="Include sampled values in the report"),
):
    """
       Emit the test family H(1/m) or H-tilde(1/m) of a complex.

       Prints how many type-1 and type-2 elements the family holds. The
       report lists every label with its sup norm and, with --samples, the
       sampled values themselves.

       Examples:
         nccw test-set builtin:z23
         nccw test-set builtin:example --m 6 --tilde
         nccw --out h.json test-set spec.json --samples
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    spec = load_input(source, "complex")

    try:
        if tilde:
            family = build_H_tilde(spec, m, cfg.h_mode, cfg.grid.size, cfg.explosion_cap, form=form)
        else:
            family = build_H(spec, m, cfg.h_mode, cfg.grid.size, cfg.explosion_cap)
    except FamilyError as e:
        print(f"[red]Error:[/red] {e}")
        raise typer.Exit(2)

    type1 = sum(1 for el in family if el.label.startswith("type1"))
    table = Table(title=f"{'H-tilde' if tilde else 'H'}(1/{m})")
    table.add_column("type")
    table.add_column("count")
    table.add_row("1", str(type1))
    table.add_row("2", str(len(family) - type1))
    print(table)

    entries = []
    for el in family:
        entry = {"label": el.label, "min_eigenvalue": el.min_eigenvalue()}
        if not tilde:
            entry["cu"] = cu_rank(el, cfg.tolerances.rank_eps).to_json()
        if samples:
            entry["data"] = el.to_json()
        entries.append(entry)
    finish(appctx, "test-set", True, {"m": m, "tilde": tilde, "count": len(family), "elements": entries})
