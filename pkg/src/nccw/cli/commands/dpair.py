from __future__ import annotations

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.homspec import HomSpecError
from nccw.standard import StandardMapError, StandardMapToComplex, default_probes, extract_d_pair


def dpair(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Standard map file or builtin:NAME"),
):
    """
       Factor a standard map into a D-pair (θ, R).

       Each piece's unitary is split as R(t) Q_m* with Q_m the permutation
       aligning the diagonal forms at the breakpoints. The report lists the
       permutations Q_m, the jumps of R and the grid roundtrip residual of
       φ_t - R(t) θ_t R(t)*.

       Examples:
         nccw dpair builtin:example-map
         nccw --grid 120 dpair psi.json
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    sm = load_input(source, "standard")
    spec = sm.source if isinstance(sm, StandardMapToComplex) else sm.spec
    probes = default_probes(spec, cfg.grid.size, seed=cfg.seed)

    try:
        dp = extract_d_pair(sm, probes, cfg.grid.size)
    except (StandardMapError, HomSpecError) as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "dpair", False, {"failure": str(e)})
        return

    pairs = dp.blocks if isinstance(sm, StandardMapToComplex) else (dp,)
    table = Table(title="D-pair")
    table.add_column("block")
    table.add_column("Q")
    table.add_column("jumps of R")
    for i, p in enumerate(pairs):
        q = p.to_json()["Q"]
        table.add_row(str(i + 1), " ".join(str(x) for x in q), ", ".join(f"{z:g}" for z in p.jumps()) or "-")
    print(table)
    print(f"Roundtrip residual {dp.residual:.3e}")
    finish(appctx, "dpair", True, dp.to_json())
