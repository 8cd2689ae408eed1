from __future__ import annotations

from typing import List

import typer
from rich import print
from rich.table import Table

from nccw.cartan import CartanError, check_diagonal_preservation, rebase_chain as run_chain
from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.homspec import HomSpecError
from nccw.standard import (
    StandardMapError,
    StandardMapToComplex,
    check_pointwise_equiv,
    grid_d_pair,
    rebase_via_theta,
)


def _load_stage(source: str) -> StandardMapToComplex:
    phi = load_input(source, "standard")
    if not isinstance(phi, StandardMapToComplex):
        print(f"[red]Error:[/red] {source} does not map into a complex")
        raise typer.Exit(2)
    return phi


def rebase(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Standard map into a complex, file or builtin:NAME"),
):
    """
       Rebase a standard map onto permutation endpoints.

       Conjugates θ by a unitary path W whose values at 0 and 1 are the
       permutations S0, S1 aligning θ with the target's boundary maps, then
       checks that the result has the same spectrum as the input at every
       grid point.

       Examples:
         nccw rebase builtin:z23-z25
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    phi = _load_stage(source)

    try:
        rr = rebase_via_theta(phi, grid_d_pair(phi, cfg.grid.size, cfg.seed))
    except (StandardMapError, HomSpecError) as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "rebase", False, {"failure": str(e)})
        return

    equivalent = check_pointwise_equiv(phi, rr.psi, cfg.grid.size)
    if equivalent:
        print("[green][OK][/green] Rebased map is pointwise equivalent to the input")
    else:
        print("[red][ERROR][/red] Rebased map changes the spectrum somewhere on the grid")
    results = {**rr.to_json(), "pointwise_equivalent": equivalent, "map": rr.psi.to_json()}
    finish(appctx, "rebase", equivalent, results)


def rebase_chain(
    ctx: typer.Context,
    sources: List[str] = typer.Argument(..., help="Consecutive stage maps, files or builtin:NAME"),
    trials: int = typer.Option(2, "--trials", help="Random elements per commuting-square check"),
):
    """
       Rebase a chain of stages A1 → A2 → ... so every stage preserves diagonals.

       Each stage is rebased in turn, twisting its source by the path V
       from the previous stage. For every rebased stage the three
       preservation hypotheses are checked and the commuting-square
       residual against the original stage is reported.

       Examples:
         nccw rebase-chain builtin:z23-z25 builtin:z25-identity
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    stages = [_load_stage(s) for s in sources]

    try:
        rebased = run_chain(stages, grid_size=cfg.grid.size, trials=trials, seed=cfg.seed)
    except (CartanError, StandardMapError, HomSpecError) as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "rebase-chain", False, {"failure": str(e)})
        return

    table = Table(title="Rebased chain")
    table.add_column("stage")
    table.add_column("hypothesis")
    table.add_column("pass")
    table.add_column("residual")
    passed = True
    entries = []
    for n, rs in enumerate(rebased):
        hypotheses = check_diagonal_preservation(rs.rebased, cfg.grid.size, trials, cfg.seed)
        for h in hypotheses:
            table.add_row(str(n + 1), h.hypothesis, "yes" if h.passed else "no", f"{h.worst_residual:.2e}")
        passed = passed and all(h.passed for h in hypotheses)
        entries.append({**rs.to_json(), "hypotheses": [h.to_json() for h in hypotheses]})
    print(table)
    finish(appctx, "rebase-chain", passed, {"stages": entries})
