from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.complex import unit_element
from nccw.examples import is_builtin
from nccw.report import dump_json
from nccw.standard import (
    DEFAULT_PAIR_M,
    ContinuityTooCoarse,
    InjectivityLost,
    StandardMapToComplex,
    approximate_by_standard,
    sample_family,
)
from nccw.testfn import FamilyError, build_H


def approximate(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Sampled family file, or builtin:NAME of a map into a complex"),
    eps: float = typer.Option(0.05, "--epsilon", help="Allowed deviation on the finite set"),
    finite_m: int = typer.Option(4, "--finite-m", help="Finite set is the unit together with H(1/finite-m)"),
    pair_m: int = typer.Option(DEFAULT_PAIR_M, "--pair-m", help="Test family H(1/pair-m) for each connector"),
    samples: Optional[int] = typer.Option(
        None, "--samples", help="Sampling resolution for builtin maps; defaults to the grid size"
    ),
    save: Optional[Path] = typer.Option(None, "--save", help="Write the standard map as an input file"),
):
    """
       Approximate a family of homomorphisms by a standard map.

       The family is either a JSON file of point evaluations at t = k/N or a
       builtin map sampled at --samples points. Each component becomes a
       3m-standard map within --epsilon of the family on the finite set;
       E-block maps are kept. If the family covers the whole spectrum the
       result must too.

       Examples:
         nccw approximate builtin:z23-z25
         nccw approximate family.json --epsilon 0.1 --save psi.json
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    if is_builtin(source):
        phi = load_input(source, "standard")
        if not isinstance(phi, StandardMapToComplex):
            print(f"[red]Error:[/red] {source} does not map into a complex")
            raise typer.Exit(2)
        family = sample_family(phi, samples or cfg.grid.size)
    else:
        family = load_input(source, "family")

    try:
        finite_set = [unit_element(family.source, cfg.grid.size)]
        finite_set += build_H(family.source, finite_m, cfg.h_mode, cfg.grid.size, cfg.explosion_cap)
    except FamilyError as e:
        print(f"[red]Error:[/red] {e}")
        raise typer.Exit(2)

    try:
        psi = approximate_by_standard(
            family, finite_set, eps, pair_m=pair_m, grid_size=cfg.grid.size, mode=cfg.h_mode,
            delta=cfg.tolerances.delta,
        )
    except (ContinuityTooCoarse, InjectivityLost) as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "approximate", False, {"epsilon": eps, "failure": str(e)})
        return

    table = Table(title=f"Standard approximation within {eps:g}")
    table.add_column("component")
    table.add_column("pieces")
    table.add_column("η₁")
    table.add_column("max deviation")
    for i, b in enumerate(psi.blocks):
        table.add_row(str(i + 1), str(b.params["pieces"]), f"{b.params['eta1']:.3e}", f"{b.params['max_deviation']:.3e}")
    print(table)

    if save is not None:
        save.write_text(dump_json(psi.to_json()), encoding="utf-8")
        print(f"Standard map written to {save}")

    results = {
        "epsilon": eps,
        "params": psi.params,
        "blocks": [b.params for b in psi.blocks],
        "map": psi.to_json(),
    }
    finish(appctx, "approximate", True, results)
