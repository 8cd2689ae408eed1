from __future__ import annotations

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input
from nccw.complex import SpecMismatch
from nccw.homspec import ExtractionFailed, HypothesisFailed, lemma_pairing
from nccw.testfn import FamilyError


def pair(
    ctx: typer.Context,
    phi_source: str = typer.Argument(..., help="First homomorphism file or builtin:NAME"),
    psi_source: str = typer.Argument(..., help="Second homomorphism file or builtin:NAME"),
    m: int = typer.Option(8, "--m", "-m", help="Pair on H(1/m); η = 1/m"),
    eps_pair: float = typer.Option(1.0, "--eps-pair", help="Eigenvalue gap allowed on the test family"),
):
    """
       Pair the interior spectra of two close homomorphisms.

       Checks that eigenvalues of φ(h) and ψ(h) stay within --eps-pair on
       H(1/m), then matches the interior points of each component so that
       no point moves by 2/m or more. A failed hypothesis or a component
       without a matching exits with code 1 and names the culprit.

       Examples:
         nccw pair phi.json psi.json
         nccw pair builtin:phi0 builtin:phi1 --m 4
    """
    appctx: AppContext = ctx.obj
    cfg = appctx.config
    phi = load_input(phi_source, "hom")
    psi = load_input(psi_source, "hom")

    try:
        result = lemma_pairing(phi, psi, m, eps_pair, grid_size=cfg.grid.size, mode=cfg.h_mode)
    except (SpecMismatch, FamilyError) as e:
        print(f"[red]Error:[/red] {e}")
        raise typer.Exit(2)
    except HypothesisFailed as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "pair", False, {"m": m, "failure": "hypothesis", "label": e.label, "gap": e.gap})
        return
    except ExtractionFailed as e:
        print(f"[red][ERROR][/red] {e}")
        finish(appctx, "pair", False, {"m": m, "failure": "extraction", "component": e.i + 1})
        return

    table = Table(title=f"Pairing at η = 1/{m}")
    table.add_column("component")
    table.add_column("pairs")
    for b in result.blocks:
        table.add_row(str(b.i + 1), ", ".join(f"{x:.4g}→{y:.4g}" for x, y in b.pairs) or "-")
    print(table)
    print(f"Worst eigenvalue gap on H(1/{m}): {result.worst_gap:.3e}")
    finish(appctx, "pair", True, result.to_json())
