from __future__ import annotations

import typer
from rich import print
from rich.table import Table

from nccw.cli.app import AppContext
from nccw.cli.common import finish, load_input, print_checks
from nccw.complex import ComplexSpec, basis_topology_neighborhood, k1_group
from nccw.homspec import HomSpecError
from nccw.report import CheckReport
from nccw.standard import (
    StandardMapError,
    StandardMapToComplex,
    check_boundary,
    default_probes,
    validate_standard,
)

VALID_KINDS = ("complex", "standard")


def _complex_summary(spec: ComplexSpec) -> dict:
    table = Table(title=spec.name or "complex")
    table.add_column("F-block")
    table.add_column("size")
    table.add_column("mult at 0")
    table.add_column("mult at 1")
    for i, fi in enumerate(spec.f_shape.sizes):
        table.add_row(str(i + 1), str(fi), str(list(spec.mult0[i])), str(list(spec.mult1[i])))
    print(table)

    group = k1_group(spec)
    print(f"E = {list(spec.e_shape.sizes)}, K1 free rank {group.free_rank}, torsion {list(group.torsion)}")
    neighborhoods = []
    for j in range(spec.l):
        nb = basis_topology_neighborhood(spec, j, 0.25)
        arcs = [{"component": i + 1, "side": side, "arc": list(arc)} for i, side, arc in nb.arcs]
        neighborhoods.append({"delta": j + 1, "arcs": arcs})
    return {
        "complex": spec.to_json(),
        "k1": {"free_rank": group.free_rank, "torsion": list(group.torsion)},
        "neighborhoods": neighborhoods,
    }


def validate(
    ctx: typer.Context,
    source: str = typer.Argument(..., help="Input file or builtin:NAME"),
    kind: str = typer.Option("complex", "--kind", "-k", help="Input kind: complex or standard"),
):
    """
       Validate a complex or a standard map.

       A complex is schema-checked and its unitality and injectivity
       conditions enforced; the K-matrices, K1 and the basic neighbourhoods
       of the E-points are printed. A standard map is additionally checked
       for unitary paths, breakpoint continuity and, for maps into a
       complex, boundary coherence.

       Examples:
         nccw validate builtin:z23
         nccw validate spec.json
         nccw validate --kind standard builtin:example-map
    """
    if kind not in VALID_KINDS:
        print(f"[red]Error:[/red] Invalid kind '{kind}'. Must be one of: {', '.join(VALID_KINDS)}")
        raise typer.Exit(2)

    appctx: AppContext = ctx.obj
    obj = load_input(source, kind)
    if kind == "complex":
        finish(appctx, "validate", True, _complex_summary(obj))
        return

    cfg = appctx.config
    checks = CheckReport()
    results: dict = {"kind": "complex" if isinstance(obj, StandardMapToComplex) else "matrix"}
    blocks = obj.blocks if isinstance(obj, StandardMapToComplex) else (obj,)
    probes = default_probes(blocks[0].spec, cfg.grid.size, seed=cfg.seed)
    validations = []
    for i, sm in enumerate(blocks):
        try:
            v = validate_standard(sm, probes, tol=cfg.tolerances.bc, tol_unit=cfg.tolerances.unit)
            checks.ok(f"Block {i + 1}: {len(sm.pieces)} pieces, breakpoint residual {v.breakpoint_residual:.2e}")
            validations.append(v.to_json())
        except (StandardMapError, HomSpecError) as e:
            checks.error(f"Block {i + 1}: {e}")
    if isinstance(obj, StandardMapToComplex):
        try:
            residual = check_boundary(obj, probes)
            checks.ok(f"Boundary coherent, residual {residual:.2e}")
            results["boundary_residual"] = residual
        except StandardMapError as e:
            checks.error(str(e))

    print_checks(checks)
    results["blocks"] = validations
    results["checks"] = checks.to_json()
    finish(appctx, "validate", checks.errors == 0, results)
