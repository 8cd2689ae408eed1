from __future__ import annotations

from typing import Optional

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.cu import CuError, cu_compare_homs, cu_rank as rank_of
from nccw.homspec import HomSpecError
from nccw.standard import StandardMapError, StandardMapToComplex, grid_d_pair, rebase_via_theta
from nccw.testfn import FamilyError, build_H


def cu_rank(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Complex file or builtin:NAME"),
    m: int = typer.Option(4, "--m", "-m", help="Rank the elements of H(1/m)"),
    against: Optional[str] = typer.Option(
        None, "--map", help="Also compare Cu of this map and of its rebased form on every element"
    ),
):
    """
       Rank functions of the test family H(1/m).

       Every element gets its pointwise rank function on each F-block and
       its E-block ranks, checked for lower semicontinuity and for agreement
       with the boundary maps. With --map, the rank data of φ(h) and of the
       rebased map applied to h must agree for every h.

       Examples:
         nccw cu-rank builtin:z23
         nccw cu-rank builtin:z23 --map builtin:z23-z25
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    spec = load_input(source, "complex")
    phi = None
    if against is not None:
        phi = load_input(against, "standard")
        if not isinstance(phi, StandardMapToComplex) or phi.source != spec:
            print(f"[red]Error:[/red] {against} must map {source} into a complex")
            raise typer.Exit(2)

    try:
        family = build_H(spec, m, cfg.h_mode, cfg.grid.size, cfg.explosion_cap)
    except FamilyError as e:
        print(f"[red]Error:[/red] {e}")
        raise typer.Exit(2)

    eps = cfg.tolerances.rank_eps
    entries, failures = [], []
    try:
        psi = None
        if phi is not None:
            psi = rebase_via_theta(phi, grid_d_pair(phi, cfg.grid.size, cfg.seed)).psi
    except (StandardMapError, HomSpecError) as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "cu-rank", False, {"failure": str(e)})
        return

    for el in family:
        try:
            entry = {"label": el.label, "rank": rank_of(el, eps).to_json()}
            if psi is not None:
                comparison = cu_compare_homs(phi, psi, el, eps)
                entry["rebased_equal"] = comparison.equal
                if not comparison.equal:
                    failures.append(f"{el.label}: rebased map changes the rank data")
        except CuError as e:
            failures.append(f"{el.label}: {e}")
            continue
        entries.append(entry)

    table = Table(title=f"Cu data of H(1/{m})")
    table.add_column("elements")
    table.add_column("ranked")
    table.add_column("failures")
    table.add_row(str(len(family)), str(len(entries)), str(len(failures)))
    print(table)
    for f in failures[:10]:
        print(f"[red][ERROR][/red] {f}")
    finish(appctx, "cu-rank", not failures, {"m": m, "elements": entries, "failures": failures})
