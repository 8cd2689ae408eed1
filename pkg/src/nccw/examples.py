"""
Bundled complexes, homomorphisms and standard maps.

Complexes also ship as JSON under nccw/data; the standard maps whose unitary
paths are computed (boundary alignment, breakpoint matching) are built here.
"""
from __future__ import annotations

import logging
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from nccw.complex import ComplexSpec, Endpoint, build_complex, dimension_drop
from nccw.findim import UnitaryPath
from nccw.homspec import DiagonalForm, HomToMatrix, match_matrix
from nccw.schema import parse_spec
from nccw.standard import (
    EigenPath,
    StandardMapToComplex,
    StandardMapToMatrix,
    StandardPiece,
    boundary_form,
)

LOGGER = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"


class UnknownExample(KeyError):
    """Raised when a builtin name is not registered."""

    def __str__(self) -> str:
        return f"Unknown builtin '{self.args[0]}'. Known: {', '.join(sorted(REGISTRY))}"


def z23() -> ComplexSpec:
    return dimension_drop(2, 3)


def z25() -> ComplexSpec:
    return dimension_drop(2, 5)


def example_complex() -> ComplexSpec:
    """E = C³, F = M₂, β₀ = diag(a₁, a₃), β₁ = diag(a₂, a₃)."""
    return build_complex((1, 1, 1), (2,), ((1, 0, 1),), ((0, 1, 1),), name="example")


def circle() -> ComplexSpec:
    """C(S¹) as a complex: one point glued to both ends of one interval."""
    return build_complex((1,), (1,), ((1,),), ((1,),), name="circle")


def c3_m3() -> ComplexSpec:
    """E = C³, F = M₃, β₀ = diag(a₁, a₂, a₃), β₁ = diag(a₁, a₁, a₂)."""
    return build_complex((1, 1, 1), (3,), ((1, 1, 1),), ((2, 1, 0),), name="c3-m3")


def chain_pieces(
    spec: ComplexSpec, pieces: Sequence[tuple[tuple[float, float], Sequence[EigenPath]]], u0: np.ndarray
) -> tuple[StandardPiece, ...]:
    """
    Pieces with constant unitaries; each unitary after the first is the previous
    one times the permutation matching the two forms at the shared breakpoint.
    """
    out: list[StandardPiece] = []
    u = np.asarray(u0, dtype=complex)
    for (a, b), paths in pieces:
        if out:
            prev = out[-1]
            here = DiagonalForm.of_points(spec, [p.point_at(a) for p in paths])
            u = prev.unitary.at(a) @ match_matrix(here, prev.form_at(spec, a), where=f"t={a}")
        out.append(StandardPiece((a, b), tuple(paths), UnitaryPath.constant(u, (a, b))))
    return tuple(out)


def aligned_piece(
    source: ComplexSpec, target: ComplexSpec, e_maps: Sequence[HomToMatrix], i: int, paths: Sequence[EigenPath]
) -> StandardPiece:
    """One piece on [0,1] whose unitary carries the endpoint forms onto the target's boundary maps."""
    piece = StandardPiece((0.0, 1.0), tuple(paths), UnitaryPath.constant(np.eye(1)))
    ends = []
    for side in (0, 1):
        v, b = boundary_form(target, e_maps, i, side)
        ends.append(v @ match_matrix(piece.form_at(source, float(side)), b, where=f"t={side}"))
    return StandardPiece((0.0, 1.0), tuple(paths), UnitaryPath.through((0.0, 1.0), ends))


def example_map() -> StandardMapToMatrix:
    """diag(a₁, f(t+½)) on [0,½] and a swap of diag(f(t-½), a₂) on [½,1], into M₃."""
    spec = example_complex()
    left, right = (0.0, 0.5), (0.5, 1.0)
    pieces = chain_pieces(
        spec,
        [
            (left, [EigenPath.delta(left, 0), EigenPath.linear(left, 0, 0.5, 1.0)]),
            (right, [EigenPath.linear(right, 0, 0.0, 0.5), EigenPath.delta(right, 1)]),
        ],
        np.eye(3),
    )
    return StandardMapToMatrix(spec, 3, pieces)


def c3_m4_map() -> StandardMapToMatrix:
    """diag(a₁, f(½-t)) on [0,½], a cyclic permutation of diag(a₃, f(3/2-t)) on [½,1], into M₄."""
    spec = c3_m3()
    left, right = (0.0, 0.5), (0.5, 1.0)
    pieces = chain_pieces(
        spec,
        [
            (left, [EigenPath.delta(left, 0), EigenPath.linear(left, 0, 0.5, 0.0)]),
            (right, [EigenPath.delta(right, 2), EigenPath.linear(right, 0, 1.0, 0.5)]),
        ],
        np.eye(4),
    )
    return StandardMapToMatrix(spec, 4, pieces)


def z23_z25_map() -> StandardMapToComplex:
    """Z₂,₃ → Z₂,₅ by u_t · diag(a ⊗ I₂, f(t)) · u_t*, with δ'₁ ↦ a and δ'₂ ↦ diag(a, b)."""
    source, target = z23(), z25()
    e_maps = (HomToMatrix(source, 2, (1, 0)), HomToMatrix(source, 5, (1, 1)))
    whole = (0.0, 1.0)
    paths = [EigenPath.delta(whole, 0), EigenPath.delta(whole, 0), EigenPath.linear(whole, 0, 0.0, 1.0)]
    piece = aligned_piece(source, target, e_maps, 0, paths)
    block = StandardMapToMatrix(source, 10, (piece,))
    return StandardMapToComplex(source, target, (block,), e_maps)


def z25_identity() -> StandardMapToComplex:
    spec = z25()
    e_maps = (HomToMatrix(spec, 2, (1, 0)), HomToMatrix(spec, 5, (0, 1)))
    whole = (0.0, 1.0)
    piece = aligned_piece(spec, spec, e_maps, 0, [EigenPath.linear(whole, 0, 0.0, 1.0)])
    return StandardMapToComplex(spec, spec, (StandardMapToMatrix(spec, 10, (piece,)),), e_maps)


def phi0() -> HomToMatrix:
    """diag(a₁, f(1)) on the example complex."""
    return HomToMatrix(example_complex(), 3, (1, 0, 0), (Endpoint(0, 1),))


def phi1() -> HomToMatrix:
    """diag(a₁, f(0)) on the example complex."""
    return HomToMatrix(example_complex(), 3, (1, 0, 0), (Endpoint(0, 0),))


COMPLEXES: dict[str, Callable[[], ComplexSpec]] = {
    "z23": z23,
    "z25": z25,
    "example": example_complex,
    "circle": circle,
    "c3-m3": c3_m3,
}

MAPS: dict[str, Callable[[], Union[StandardMapToMatrix, StandardMapToComplex]]] = {
    "example-map": example_map,
    "c3-m4": c3_m4_map,
    "z23-z25": z23_z25_map,
    "z25-identity": z25_identity,
}

HOMS: dict[str, Callable[[], HomToMatrix]] = {"phi0": phi0, "phi1": phi1}

REGISTRY: dict[str, Callable] = {**COMPLEXES, **MAPS, **HOMS}

# bundled JSON files and the schema kind each one validates against
DATA_FILES = {
    "z23": "complex",
    "z25": "complex",
    "example": "complex",
    "circle": "complex",
    "c3-m3": "complex",
    "example-map": "standard",
}


def is_builtin(name: str) -> bool:
    return name.startswith(BUILTIN_PREFIX)


def resolve(name: str):
    """Build a registered example; the 'builtin:' prefix is optional."""
    key = name[len(BUILTIN_PREFIX):] if is_builtin(name) else name
    if key not in REGISTRY:
        raise UnknownExample(key)
    LOGGER.debug(f"Building builtin example {key}")
    return REGISTRY[key]()


def data_path(name: str) -> Path:
    if name not in DATA_FILES:
        raise UnknownExample(name)
    return Path(str(resources.files("nccw") / "data" / f"{name}.json"))


def load_bundled(name: str):
    """Parse a bundled JSON file through the same schema path as user input."""
    return parse_spec(data_path(name), DATA_FILES[name])
