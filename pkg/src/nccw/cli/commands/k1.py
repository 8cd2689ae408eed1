from __future__ import annotations

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.complex import k1_group, k_matrices


def k1(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Complex file or builtin:NAME"),
):
    """
       Compute K1 of a complex as the cokernel of α - β.

       Prints the multiplicity matrices and the free rank and torsion of
       the cokernel, read off from the Smith normal form.

       Examples:
         nccw k1 builtin:z23
         nccw k1 builtin:circle
    """
    appctx: AppContext = ctx.obj
    spec = load_input(source, "complex")
    data = k_matrices(spec)
    group = k1_group(spec)

    table = Table(title=f"K-matrices of {spec.name or source}")
    table.add_column("F-block")
    table.add_column("α row")
    table.add_column("β row")
    for i, (a, b) in enumerate(zip(data.alpha, data.beta)):
        table.add_row(str(i + 1), str(list(a)), str(list(b)))
    print(table)
    if group.trivial:
        print("K1 = 0")
    else:
        parts = [f"Z^{group.free_rank}"] if group.free_rank else []
        parts += [f"Z/{d}" for d in group.torsion]
        print(f"K1 = {' ⊕ '.join(parts)}")

    results = {
        "alpha": [list(r) for r in data.alpha],
        "beta": [list(r) for r in data.beta],
        "free_rank": group.free_rank,
        "torsion": list(group.torsion),
        "k1_trivial": group.trivial,
    }
    finish(appctx, "k1", True, results)
