from __future__ import annotations

import typer
from rich import print

from nccw.cartan import check_diagonal_preservation, verify_cartan_sample
from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input, print_checks
from nccw.report import CheckReport
from nccw.standard import StandardMapToComplex

VALID_KINDS = ("complex", "standard")


def diagonal_check(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Complex or stage map, file or builtin:NAME"),
    kind: str = typer.Option("complex", "--kind", "-k", help="Input kind: complex or standard"),
    trials: int = typer.Option(4, "--trials", help="Random elements per sampled hypothesis"),
):
    """
       Check the canonical diagonal of a complex, or its preservation by a stage.

       For a complex: maximal abelian, faithful expectation, regular, and the
       expectation properties. For a map into a complex: diagonal preserved,
       normalizers preserved, and expectations intertwined. Each hypothesis
       is reported with its worst residual and a witness.

       Examples:
         nccw diagonal-check builtin:z25
         nccw diagonal-check --kind standard builtin:z23-z25
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    if kind not in VALID_KINDS:
        print(f"[red]Error:[/red] Invalid kind '{kind}'. Must be one of: {', '.join(VALID_KINDS)}")
        raise typer.Exit(2)

    obj = load_input(source, kind)
    if kind == "standard" and not isinstance(obj, StandardMapToComplex):
        print(f"[red]Error:[/red] {source} does not map into a complex")
        raise typer.Exit(2)

    if kind == "standard":
        hypotheses = check_diagonal_preservation(obj, cfg.grid.size, trials, cfg.seed)
    else:
        hypotheses = verify_cartan_sample(obj, cfg.grid.size, trials, cfg.seed)

    checks = CheckReport()
    for h in hypotheses:
        message = f"{h.hypothesis}: worst residual {h.worst_residual:.2e}"
        if h.witness and not h.passed:
            message += f" at {h.witness}"
        if h.passed:
            checks.ok(message)
        else:
            checks.error(message)
    print_checks(checks)
    results = {"hypotheses": [h.to_json() for h in hypotheses], "checks": checks.to_json()}
    finish(appctx, "diagonal-check", checks.errors == 0, results)
