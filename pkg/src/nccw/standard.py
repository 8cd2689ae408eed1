"""
n-standard maps.

A standard map into M_n is a partition of [0,1] with, on each piece, a list
of eigenvalue paths into sp(A) and a continuous unitary path. This module
evaluates and validates such maps, factors them into D-pairs, builds the
3-standard connector between two close homomorphisms, approximates sampled
families by standard maps and rebases a standard map onto permutation
endpoints.
"""
from __future__ import annotations

import bisect
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sl

from nccw.complex import (
    DEFAULT_GRID,
    BoundaryMismatch,
    ComplexSpec,
    Delta,
    Element,
    Endpoint,
    Interior,
    SpecMismatch,
    SpecPoint,
    make_element,
    random_element,
    unit_element,
)
from nccw.findim import BlockMatrix, UnitaryPath, as_permutation, matrix_from_json, matrix_to_json, op_norm
from nccw.homspec import (
    DiagonalForm,
    HomSpecError,
    HomToMatrix,
    NoMatchingPermutation,
    PairingResult,
    Summand,
    is_limit_of_max_homogeneous,
    is_maximally_homogeneous_at,
    lemma_pairing,
    match_matrix,
    spectrum_of,
)
from nccw.testfn import build_H, build_H_tilde

LOGGER = logging.getLogger(__name__)

ENDPOINT_SNAP = 1e-12
TAU_BREAK = 1e-8
TAU_DPAIR = 1e-8
DEFAULT_PAIR_M = 8
# Hypothesis tolerance: H and H-tilde may differ by less than DEFAULT_DELTA / 8.
DEFAULT_DELTA = 2.0


class StandardMapError(Exception):
    """Base class for standard-map failures."""


class MalformedStandard(StandardMapError):
    """Raised when standard-map data is inconsistent."""


class BreakpointJump(StandardMapError):
    """Raised when the two pieces at a breakpoint evaluate differently."""

    def __init__(self, breakpoint: float, residual: float):
        super().__init__(f"Standard map jumps by {residual:.3e} at t={breakpoint:g}")
        self.breakpoint = breakpoint
        self.residual = residual


class PairingFailed(StandardMapError):
    """Raised when the connector hypotheses do not hold."""


class PermutationSearchFailed(StandardMapError):
    """Raised when no permutation aligns the middle diagonal forms of a connector."""


class ContinuityTooCoarse(StandardMapError):
    """Raised when no admissible partition of a sampled family exists."""

    def __init__(self, component: int, step: int):
        super().__init__(f"Family on component {component + 1} is too coarse near sample step {step}")
        self.component = component
        self.step = step


class NoAligningPermutation(StandardMapError):
    """Raised when the boundary alignment of a rebase has no permutation solution."""

    def __init__(self, side: int, detail: str = ""):
        super().__init__(f"No permutation aligns θ with the boundary at t={side}" + (f": {detail}" if detail else ""))
        self.side = side


class BoundaryIncoherent(StandardMapError):
    """Raised when a map into a complex breaks the target's boundary conditions."""


class InjectivityLost(StandardMapError):
    """Raised when a fully covering family yields a map with a spectral gap."""


@dataclass(frozen=True)
class EigenPath:
    domain: tuple[float, float]
    kind: str
    index: int
    breaks: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        object.__setattr__(self, "breaks", tuple((float(t), float(v)) for t, v in self.breaks))
        if self.kind not in ("delta", "path"):
            raise MalformedStandard(f"Unknown eigenpath kind '{self.kind}'")
        if self.kind == "path":
            if not self.breaks:
                raise MalformedStandard("Interior path needs at least one break")
            ts = [t for t, _ in self.breaks]
            if any(b < a for a, b in zip(ts, ts[1:])):
                raise MalformedStandard(f"Eigenpath breaks must be sorted: {ts}")
            for _, v in self.breaks:
                if not np.isfinite(v) or v < -ENDPOINT_SNAP or v > 1.0 + ENDPOINT_SNAP:
                    raise MalformedStandard(f"Eigenpath value {v} leaves [0,1]")

    @classmethod
    def delta(cls, domain: tuple[float, float], j: int) -> EigenPath:
        return cls(domain, "delta", j)

    @classmethod
    def constant(cls, domain: tuple[float, float], i: int, x: float) -> EigenPath:
        return cls(domain, "path", i, ((domain[0], x),))

    @classmethod
    def linear(cls, domain: tuple[float, float], i: int, x0: float, x1: float) -> EigenPath:
        return cls(domain, "path", i, ((domain[0], x0), (domain[1], x1)))

    def value(self, t: float) -> float:
        ts = [b[0] for b in self.breaks]
        vs = [b[1] for b in self.breaks]
        return float(min(max(np.interp(t, ts, vs), 0.0), 1.0))

    def point_at(self, t: float) -> SpecPoint:
        if self.kind == "delta":
            return Delta(self.index)
        x = self.value(t)
        if x <= ENDPOINT_SNAP:
            return Endpoint(self.index, 0)
        if x >= 1.0 - ENDPOINT_SNAP:
            return Endpoint(self.index, 1)
        return Interior(self.index, x)

    def image(self) -> list[tuple[float, float]]:
        """Ranges swept by the linear segments of an interior path."""
        if self.kind == "delta":
            return []
        vs = [v for _, v in self.breaks]
        if len(vs) == 1:
            return [(vs[0], vs[0])]
        return [(min(a, b), max(a, b)) for a, b in zip(vs, vs[1:])]

    def to_json(self) -> dict:
        if self.kind == "delta":
            return {"kind": "delta", "j": self.index + 1}
        return {"kind": "path", "i": self.index + 1, "breaks": [list(b) for b in self.breaks]}

    @classmethod
    def from_json(cls, domain: tuple[float, float], data: dict) -> EigenPath:
        if data["kind"] == "delta":
            return cls.delta(domain, int(data["j"]) - 1)
        return cls(domain, "path", int(data["i"]) - 1, tuple(tuple(b) for b in data["breaks"]))


def unitary_path_to_json(path: UnitaryPath) -> dict:
    return {"knots": list(path.knots), "values": [matrix_to_json(v) for v in path.values]}


def unitary_path_from_json(data: dict) -> UnitaryPath:
    return UnitaryPath(tuple(data["knots"]), tuple(matrix_from_json(v) for v in data["values"]))


def _affine(x: float, lo: float, hi: float, a: float, b: float) -> float:
    # endpoints map exactly so that rescaled pieces stay adjacent
    if x == lo:
        return a
    if x == hi:
        return b
    return a + (x - lo) * (b - a) / (hi - lo)


def _rescale_unitary(path: UnitaryPath, a: float, b: float, lo: float, hi: float) -> UnitaryPath:
    return UnitaryPath(tuple(_affine(k, lo, hi, a, b) for k in path.knots), path.values)


@dataclass(frozen=True, eq=False)
class StandardPiece:
    interval: tuple[float, float]
    paths: tuple[EigenPath, ...]
    unitary: UnitaryPath
    pad: int = 0

    def form_at(self, spec: ComplexSpec, t: float) -> DiagonalForm:
        return DiagonalForm.of_points(spec, (p.point_at(t) for p in self.paths), self.pad)

    def size(self, spec: ComplexSpec) -> int:
        return sum(
            spec.e_shape.sizes[p.index] if p.kind == "delta" else spec.f_shape.sizes[p.index] for p in self.paths
        ) + self.pad

    def rescaled(self, a: float, b: float, lo: float = 0.0, hi: float = 1.0) -> StandardPiece:
        """This piece with [lo, hi] stretched onto [a, b]."""
        x0, x1 = self.interval
        start, end = _affine(x0, lo, hi, a, b), _affine(x1, lo, hi, a, b)
        paths = tuple(
            EigenPath((start, end), p.kind, p.index, tuple((_affine(t, lo, hi, a, b), v) for t, v in p.breaks))
            for p in self.paths
        )
        return StandardPiece((start, end), paths, _rescale_unitary(self.unitary, a, b, lo, hi), self.pad)


@dataclass(frozen=True, eq=False)
class StandardMapToMatrix:
    spec: ComplexSpec
    size: int
    pieces: tuple[StandardPiece, ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise MalformedStandard("Standard map needs at least one piece")
        if self.pieces[0].interval[0] != 0.0 or self.pieces[-1].interval[1] != 1.0:
            raise MalformedStandard("Partition must start at 0 and end at 1")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.interval[1] != right.interval[0]:
                raise MalformedStandard(f"Pieces {left.interval} and {right.interval} are not adjacent")
        for piece in self.pieces:
            a, b = piece.interval
            if not a < b:
                raise MalformedStandard(f"Empty piece {piece.interval}")
            if piece.size(self.spec) != self.size:
                raise MalformedStandard(
                    f"Piece {piece.interval} fills {piece.size(self.spec)} rows, target size is {self.size}"
                )
            if piece.unitary.size != self.size:
                raise MalformedStandard(f"Unitary on {piece.interval} has size {piece.unitary.size}")
            lo, hi = piece.unitary.domain
            if lo > a or hi < b:
                raise MalformedStandard(f"Unitary path on {piece.interval} only covers [{lo}, {hi}]")
        object.__setattr__(self, "_starts", [p.interval[0] for p in self.pieces])

    @property
    def partition(self) -> tuple[float, ...]:
        return tuple(self._starts) + (1.0,)

    def piece_index(self, t: float) -> int:
        """Breakpoints belong to the right-hand piece, except t = 1."""
        return min(max(bisect.bisect_right(self._starts, t) - 1, 0), len(self.pieces) - 1)

    def form_at(self, t: float) -> DiagonalForm:
        return self.pieces[self.piece_index(t)].form_at(self.spec, t)

    def unitary_at(self, t: float) -> np.ndarray:
        return self.pieces[self.piece_index(t)].unitary.at(t)

    def __call__(self, t: float, el: Element) -> np.ndarray:
        return eval_standard(self, t, el)

    def rescaled_pieces(self, a: float, b: float) -> tuple[StandardPiece, ...]:
        """The pieces squeezed onto [a, b], for concatenation into a longer map."""
        return tuple(p.rescaled(a, b) for p in self.pieces)

    def to_json(self, include_source: bool = True) -> dict:
        data = {
            "kind": "matrix",
            "n": self.size,
            "partition": list(self.partition),
            "pieces": [
                {
                    "paths": [p.to_json() for p in piece.paths],
                    "pad": piece.pad,
                    "u": unitary_path_to_json(piece.unitary),
                }
                for piece in self.pieces
            ],
        }
        if include_source:
            data["source"] = self.spec.to_json()
        if self.params:
            data["params"] = dict(self.params)
        return data

    @classmethod
    def from_json(cls, data: dict, spec: Optional[ComplexSpec] = None) -> StandardMapToMatrix:
        spec = spec if spec is not None else ComplexSpec.from_json(data["source"])
        partition = [float(z) for z in data["partition"]]
        if len(partition) != len(data["pieces"]) + 1:
            raise MalformedStandard("Partition needs one more entry than there are pieces")
        pieces = []
        for (a, b), raw in zip(zip(partition, partition[1:]), data["pieces"]):
            paths = tuple(EigenPath.from_json((a, b), p) for p in raw["paths"])
            pieces.append(StandardPiece((a, b), paths, unitary_path_from_json(raw["u"]), int(raw.get("pad", 0))))
        return cls(spec, int(data["n"]), tuple(pieces), dict(data.get("params", {})))


def eval_piece(sm: StandardMapToMatrix, m: int, t: float, el: Element) -> np.ndarray:
    piece = sm.pieces[m]
    u = piece.unitary.at(t)
    return u @ piece.form_at(sm.spec, t).evaluate(el) @ u.conj().T


def eval_standard(sm: StandardMapToMatrix, t: float, el: Element) -> np.ndarray:
    if el.spec != sm.spec:
        raise SpecMismatch("Element and standard map live on different complexes")
    if not 0.0 <= t <= 1.0:
        raise MalformedStandard(f"t={t} is outside [0,1]")
    return eval_piece(sm, sm.piece_index(t), t, el)


def default_probes(spec: ComplexSpec, grid_size: int = DEFAULT_GRID, count: int = 3, seed: int = 0) -> list[Element]:
    return [unit_element(spec, grid_size)] + [random_element(spec, seed + r, grid_size) for r in range(count)]


@dataclass(frozen=True, eq=False)
class StandardValidation:
    q_perms: tuple[np.ndarray, ...]
    unitarity_residual: float
    breakpoint_residual: float

    def to_json(self) -> dict:
        return {
            "Q": [[x + 1 for x in as_permutation(q)] for q in self.q_perms],
            "unitarity_residual": self.unitarity_residual,
            "breakpoint_residual": self.breakpoint_residual,
        }


def validate_standard(
    sm: StandardMapToMatrix,
    probes: Optional[Sequence[Element]] = None,
    *,
    tol: float = TAU_BREAK,
    tol_unit: float = 1e-9,
) -> StandardValidation:
    """
    Check unitarity, breakpoint matching and breakpoint continuity.

    Returns the permutations Q_m, with Q_1 = id, for which the permuted
    diagonal forms agree at every breakpoint.

    Raises:
        NoMatchingPermutation: if the spectra at a breakpoint differ
        MalformedStandard: if a unitary path is not unitary
        BreakpointJump: if the two pieces at a breakpoint disagree on a probe
    """
    q = [np.eye(sm.size)]
    for m in range(1, len(sm.pieces)):
        z = sm.pieces[m].interval[0]
        left = sm.pieces[m - 1].form_at(sm.spec, z)
        right = sm.pieces[m].form_at(sm.spec, z)
        q.append(q[-1] @ match_matrix(right, left, where=f"t={z:g}"))

    unitarity = 0.0
    for piece in sm.pieces:
        a, b = piece.interval
        times = sorted(set(np.linspace(a, b, 9)) | {k for k in piece.unitary.knots if a <= k <= b})
        unitarity = max(unitarity, piece.unitary.unitarity_residual(times))
    if unitarity > tol_unit:
        raise MalformedStandard(f"Unitary path residual {unitarity:.3e} exceeds {tol_unit:g}")

    probes = default_probes(sm.spec) if probes is None else probes
    jump = 0.0
    for m in range(1, len(sm.pieces)):
        z = sm.pieces[m].interval[0]
        for el in probes:
            residual = op_norm(eval_piece(sm, m - 1, z, el) - eval_piece(sm, m, z, el))
            if residual > tol:
                raise BreakpointJump(z, residual)
            jump = max(jump, residual)
    return StandardValidation(tuple(q), unitarity, jump)


@dataclass(frozen=True, eq=False)
class DPair:
    sm: StandardMapToMatrix
    q_perms: tuple[np.ndarray, ...]
    r_pieces: tuple[UnitaryPath, ...]
    residual: float = 0.0

    def theta_with(self, t: float, value: Callable[[SpecPoint], np.ndarray]) -> np.ndarray:
        """θ_t on an arbitrary point assignment, used for the extension to C([0,1], F) ⊕ E."""
        m = self.sm.piece_index(t)
        q = self.q_perms[m]
        return q @ self.sm.pieces[m].form_at(self.sm.spec, t).evaluate_with(value) @ q.T

    def theta(self, t: float, el: Element) -> np.ndarray:
        return self.theta_with(t, el.evaluate)

    def r_at(self, t: float) -> np.ndarray:
        return self.r_pieces[self.sm.piece_index(t)].at(t)

    def jumps(self, tol: float = 1e-9) -> list[float]:
        out = []
        for m in range(1, len(self.r_pieces)):
            z = self.sm.pieces[m].interval[0]
            if op_norm(self.r_pieces[m - 1].at(z) - self.r_pieces[m].at(z)) > tol:
                out.append(z)
        return out

    def roundtrip_residual(self, elements: Sequence[Element], times: Iterable[float]) -> float:
        worst = 0.0
        for t in times:
            r = self.r_at(t)
            for el in elements:
                rebuilt = r @ self.theta(t, el) @ r.conj().T
                worst = max(worst, op_norm(eval_standard(self.sm, t, el) - rebuilt))
        return worst

    def to_json(self) -> dict:
        return {
            "Q": [[x + 1 for x in as_permutation(q)] for q in self.q_perms],
            "jumps": self.jumps(),
            "residual": self.residual,
        }


@dataclass(frozen=True, eq=False)
class ComplexDPair:
    blocks: tuple[DPair, ...]

    @property
    def residual(self) -> float:
        return max((d.residual for d in self.blocks), default=0.0)

    def to_json(self) -> dict:
        return {"blocks": [d.to_json() for d in self.blocks], "residual": self.residual}


def _extract_block(sm: StandardMapToMatrix, probes: Optional[Sequence[Element]], grid_size: int) -> DPair:
    validation = validate_standard(sm, probes)
    r = tuple(piece.unitary.right_multiply(q.T) for piece, q in zip(sm.pieces, validation.q_perms))
    pair = DPair(sm, validation.q_perms, r)
    probes = default_probes(sm.spec, grid_size) if probes is None else probes
    residual = pair.roundtrip_residual(probes, np.linspace(0.0, 1.0, grid_size + 1))
    if residual > TAU_DPAIR:
        raise StandardMapError(f"D-pair roundtrip residual {residual:.3e} exceeds {TAU_DPAIR:g}")
    return DPair(sm, validation.q_perms, r, residual)


def extract_d_pair(
    sm: Union[StandardMapToMatrix, StandardMapToComplex],
    probes: Optional[Sequence[Element]] = None,
    grid_size: int = DEFAULT_GRID,
) -> Union[DPair, ComplexDPair]:
    """
    Factor φ_t = R(t) θ_t R(t)* with R(t) = u⁽ᵐ⁾(t) Q_m* on each piece.

    Raises:
        NoMatchingPermutation, BreakpointJump, MalformedStandard: from validation
        StandardMapError: if the roundtrip residual exceeds 1e-8
    """
    if isinstance(sm, StandardMapToComplex):
        return ComplexDPair(tuple(_extract_block(b, probes, grid_size) for b in sm.blocks))
    return _extract_block(sm, probes, grid_size)


def grid_d_pair(
    sm: Union[StandardMapToMatrix, StandardMapToComplex], grid_size: int = DEFAULT_GRID, seed: int = 0
) -> Union[DPair, ComplexDPair]:
    """extract_d_pair with the unit and seeded random probes sampled on grid_size."""
    spec = sm.source if isinstance(sm, StandardMapToComplex) else sm.spec
    return extract_d_pair(sm, default_probes(spec, grid_size, seed=seed), grid_size)


@dataclass(frozen=True, eq=False)
class StandardMapToComplex:
    source: ComplexSpec
    target: ComplexSpec
    blocks: tuple[StandardMapToMatrix, ...]
    e_maps: tuple[HomToMatrix, ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "e_maps", tuple(self.e_maps))
        if len(self.blocks) != self.target.k or len(self.e_maps) != self.target.l:
            raise MalformedStandard(
                f"Target needs {self.target.k} F-block maps and {self.target.l} E-block maps"
            )
        for i, (b, fi) in enumerate(zip(self.blocks, self.target.f_shape.sizes)):
            if b.size != fi or b.spec != self.source:
                raise MalformedStandard(f"Map into F-block {i + 1} has the wrong size or source")
        for r, (h, er) in enumerate(zip(self.e_maps, self.target.e_shape.sizes)):
            if h.n != er or h.spec != self.source:
                raise MalformedStandard(f"Map into E-block {r + 1} has the wrong size or source")

    def apply(self, el: Element, tol_bc: float = TAU_BREAK) -> Element:
        """Image of el as an Element of the target, sampled on el's grid."""
        if el.spec != self.source:
            raise SpecMismatch("Element does not live on the source complex")
        grid = el.grid()
        stacked = tuple(np.stack([eval_standard(b, float(t), el) for t in grid]) for b in self.blocks)
        e_part = BlockMatrix(self.target.e_shape, tuple(h(el) for h in self.e_maps))
        try:
            return make_element(self.target, stacked, e_part, kappa=None, tol_bc=tol_bc, label=el.label)
        except BoundaryMismatch as exc:
            raise BoundaryIncoherent(str(exc)) from exc

    def to_json(self) -> dict:
        data = {
            "kind": "complex",
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "blocks": [b.to_json(include_source=False) for b in self.blocks],
            "e_maps": [h.to_json() for h in self.e_maps],
        }
        if self.params:
            data["params"] = dict(self.params)
        return data

    @classmethod
    def from_json(cls, data: dict) -> StandardMapToComplex:
        source = ComplexSpec.from_json(data["source"])
        target = ComplexSpec.from_json(data["target"])
        blocks = tuple(StandardMapToMatrix.from_json(b, source) for b in data["blocks"])
        e_maps = tuple(HomToMatrix.from_json(source, h) for h in data["e_maps"])
        return cls(source, target, blocks, e_maps, dict(data.get("params", {})))


StandardMap = Union[StandardMapToMatrix, StandardMapToComplex]


def boundary_form(
    target: ComplexSpec, e_maps: Sequence[HomToMatrix], i: int, side: int
) -> tuple[np.ndarray, DiagonalForm]:
    """
    α_side of the E-map outputs on F-block i as (V, B), meaning V · B(h) · V*.

    Raises:
        BoundaryIncoherent: if an E-map that enters the boundary is not unital
    """
    row = target.mult(side)[i]
    summands: list[Summand] = []
    conjugators = []
    for r, mult in enumerate(row):
        if not mult:
            continue
        h = e_maps[r]
        if h.pad:
            raise BoundaryIncoherent(f"E-map {r + 1} is not unital and cannot enter a boundary")
        summands.extend(h.form.kron(mult).summands)
        conjugators.append(np.kron(h.u, np.eye(mult)))
    inner = sl.block_diag(*conjugators) if conjugators else np.zeros((0, 0))
    v = target.perm(side).matrix(i) @ inner
    return v, DiagonalForm(e_maps[0].spec, tuple(summands))


def check_boundary(phi: StandardMapToComplex, probes: Optional[Sequence[Element]] = None) -> float:
    """Worst ‖φ_side(h) - α_side(e-map outputs)‖ over probes and both sides."""
    probes = default_probes(phi.source) if probes is None else probes
    worst = 0.0
    for el in probes:
        outputs = BlockMatrix(phi.target.e_shape, tuple(h(el) for h in phi.e_maps))
        for i, b in enumerate(phi.blocks):
            for side in (0, 1):
                expected = phi.target.beta_block(side, outputs, i)
                worst = max(worst, op_norm(eval_standard(b, float(side), el) - expected))
    if worst > TAU_BREAK:
        raise BoundaryIncoherent(f"Boundary residual {worst:.3e} exceeds {TAU_BREAK:g}")
    return worst


def standard_to_hom(sm: StandardMapToMatrix, t: float) -> HomToMatrix:
    """The point evaluation φ_t as a spectral HomToMatrix."""
    form = sm.form_at(t)
    s_vec = [0] * sm.spec.l
    points: list[SpecPoint] = []
    for s in form.summands:
        if isinstance(s.point, Delta):
            s_vec[s.point.j] += 1
        else:
            points.append(s.point)
    plain = HomToMatrix(sm.spec, sm.size, tuple(s_vec), tuple(points), form.pad)
    pi = match_matrix(plain.form, form, where=f"t={t:g}")
    return plain.conjugated(sm.unitary_at(t) @ pi)


def lipschitz_bound(elements: Sequence[Element]) -> float:
    """Largest per-step sample jump times the grid size; 1 if the set is flat or empty."""
    worst = 0.0
    for el in elements:
        n = el.grid_size
        for s in el.f_samples:
            worst = max(worst, float(np.linalg.norm(np.diff(s, axis=0), ord=2, axis=(1, 2)).max()) * n)
    return worst if worst > 0 else 1.0


def max_deviation(
    sm: StandardMapToMatrix, reference: HomToMatrix, elements: Sequence[Element], times: Iterable[float]
) -> float:
    times = list(times)
    return max(
        (op_norm(eval_standard(sm, t, el) - reference(el)) for el in elements for t in times), default=0.0
    )


def _tracks(h: HomToMatrix) -> list[tuple[str, int, Optional[float]]]:
    out: list[tuple[str, int, Optional[float]]] = []
    for j, s in enumerate(h.s_vec):
        out.extend(("delta", j, None) for _ in range(s))
    for p in h.points:
        x = p.t if isinstance(p, Interior) else float(p.side)
        out.append(("path", p.i, x))
    return out


def _excursion(domain: tuple[float, float], i: int, w: float, target: float, radius: float, forward: bool) -> EigenPath:
    a, b = domain
    third = (b - a) / 3.0
    hi = min(w + radius, 1.0)
    lo = max(w - radius, 0.0)
    if forward:
        breaks = ((a, w), (a + third, hi), (a + 2 * third, lo), (b, target))
    else:
        breaks = ((a, target), (a + third, lo), (a + 2 * third, hi), (b, w))
    return EigenPath(domain, "path", i, breaks)


def _pop_partner(pairs: list[tuple[float, float]], w: float, position: int) -> Optional[float]:
    for k, pair in enumerate(pairs):
        if pair[position] == w:
            pairs.pop(k)
            return pair[1]
    return None


def _segment(
    h: HomToMatrix,
    pairing: PairingResult,
    domain: tuple[float, float],
    radius: float,
    forward: bool,
) -> tuple[list[EigenPath], list[EigenPath]]:
    """Excursion paths for h and the constant paths they end on."""
    position = 0 if forward else 1
    pairs = {b.i: list(b.pairs) for b in pairing.blocks}
    moving: list[EigenPath] = []
    resting: list[EigenPath] = []
    middle = (1.0 / 3.0, 2.0 / 3.0)
    for kind, idx, x in _tracks(h):
        if kind == "delta":
            moving.append(EigenPath.delta(domain, idx))
            resting.append(EigenPath.delta(middle, idx))
        elif x in (0.0, 1.0):
            moving.append(EigenPath.constant(domain, idx, x))
            resting.append(EigenPath.constant(middle, idx, x))
        else:
            partner = _pop_partner(pairs[idx], x, position)
            if partner is None:
                target = 0.0 if x < 0.5 else 1.0
            else:
                target = partner
            moving.append(_excursion(domain, idx, x, target, radius, forward))
            resting.append(EigenPath.constant(middle, idx, target))
    return moving, resting


def connect_3standard(
    phi0: HomToMatrix,
    phi1: HomToMatrix,
    m: int,
    eps_pair: float = 1.0,
    *,
    eps: float = 0.1,
    finite_set: Sequence[Element] = (),
    grid_size: int = DEFAULT_GRID,
    mode: str = "contiguous",
    tests: Optional[Sequence[Element]] = None,
    tilde: Optional[Sequence[Element]] = None,
    delta: float = DEFAULT_DELTA,
    eta1: Optional[float] = None,
) -> StandardMapToMatrix:
    """
    Unital 3-standard map on {0, 1/3, 2/3, 1} from phi0 to phi1.

    The first piece moves every interior point of phi0 through the ball of
    radius 4η₁ around it and on to its partner (or to the nearer endpoint when
    unpaired). The middle piece holds the points and rotates the unitary, the
    last piece runs phi1's excursions backwards.

    Both hypotheses are checked: eigenvalues pair within eps_pair on
    H(1/m), and phi0, phi1 differ by less than delta/8 on H(1/m) and its
    hermitian matrix-unit variants.

    Raises:
        PairingFailed: if either hypothesis fails
        PermutationSearchFailed: if the diagonal forms at t=2/3 do not match
    """
    if phi0.spec != phi1.spec or phi0.n != phi1.n or phi0.pad != phi1.pad:
        raise PairingFailed("Endpoints must share source, size and padding")
    spec, n = phi0.spec, phi0.n
    family = build_H(spec, m, mode, grid_size) if tests is None else list(tests)
    try:
        pairing = lemma_pairing(phi0, phi1, m, eps_pair, grid_size=grid_size, mode=mode, tests=family)
    except HomSpecError as exc:
        raise PairingFailed(str(exc)) from exc

    if tilde is None:
        tilde = build_H_tilde(spec, m, mode, grid_size, form="hermitian")
    h2_gap = max((op_norm(phi0(h) - phi1(h)) for h in [*family, *tilde]), default=0.0)
    if h2_gap >= delta / 8.0:
        raise PairingFailed(f"Norm gap {h2_gap:.3e} on H ∪ H-tilde is not below δ/8 = {delta / 8:.3e}")

    lipschitz = lipschitz_bound(finite_set) if finite_set else None
    if eta1 is None:
        eta1 = 1.0 / (8 * m * n)
        if lipschitz is not None:
            eta1 = min(eta1, eps / (16.0 * lipschitz))
    radius = 4.0 * eta1

    first, second = (0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)
    seg1, rest1 = _segment(phi0, pairing, first, radius, forward=True)
    seg3, _ = _segment(phi1, pairing, second, radius, forward=False)

    def form(paths: Sequence[EigenPath], t: float) -> DiagonalForm:
        return DiagonalForm.of_points(spec, (p.point_at(t) for p in paths), phi0.pad)

    try:
        u_start = phi0.u @ match_matrix(form(seg1, 0.0), phi0.form, "t=0")
        u_end = phi1.u @ match_matrix(form(seg3, 1.0), phi1.form, "t=1")
        pi = match_matrix(form(rest1, 2.0 / 3.0), form(seg3, 2.0 / 3.0), "t=2/3")
    except NoMatchingPermutation as exc:
        raise PermutationSearchFailed(str(exc)) from exc

    pieces = (
        StandardPiece(first, tuple(seg1), UnitaryPath.constant(u_start, first), phi0.pad),
        StandardPiece(
            (1.0 / 3.0, 2.0 / 3.0),
            tuple(rest1),
            UnitaryPath.through((1.0 / 3.0, 2.0 / 3.0), (u_start, u_end @ pi)),
            phi0.pad,
        ),
        StandardPiece(second, tuple(seg3), UnitaryPath.constant(u_end, second), phi0.pad),
    )
    params = {
        "m": m,
        "eta_pair": 1.0 / m,
        "eta1": eta1,
        "eta": eta1 / 3.0,
        "delta": delta,
        "h1_gap": pairing.worst_gap,
        "h2_gap": h2_gap,
    }
    if lipschitz is not None:
        params["lipschitz"] = lipschitz
    LOGGER.debug(f"3-standard connector: η₁={eta1:.3e}, eigenvalue gap {pairing.worst_gap:.3e}")
    return StandardMapToMatrix(spec, n, pieces, params)


@dataclass(frozen=True)
class CoverageResult:
    ok: bool
    missing: tuple[tuple[int, float], ...] = ()

    def to_json(self) -> dict:
        return {"ok": self.ok, "missing": [[i + 1, x] for i, x in self.missing]}


def image_intervals(sm: StandardMapToMatrix) -> dict[int, list[tuple[float, float]]]:
    out: dict[int, list[tuple[float, float]]] = defaultdict(list)
    for piece in sm.pieces:
        for p in piece.paths:
            if p.kind == "path":
                out[p.index].extend(p.image())
    return out


def ball_coverage(
    sm: StandardMapToMatrix, centers: Iterable[tuple[int, float]], radius: float, grid_size: int = DEFAULT_GRID
) -> CoverageResult:
    """Every grid node of the closed ball around each centre lies in the swept image."""
    images = image_intervals(sm)
    missing = []
    for i, mu in centers:
        nodes = [k / grid_size for k in range(grid_size + 1) if abs(k / grid_size - mu) <= radius + 1e-12]
        for x in [mu] + nodes:
            if not any(lo - 1e-12 <= x <= hi + 1e-12 for lo, hi in images.get(i, [])):
                missing.append((i, x))
    return CoverageResult(not missing, tuple(missing))


def connector_centers(phi0: HomToMatrix, phi1: HomToMatrix) -> list[tuple[int, float]]:
    return [(p.i, p.t) for h in (phi0, phi1) for p in h.points if isinstance(p, Interior)]


@dataclass(frozen=True)
class SpectralCoverage:
    deltas: frozenset
    cells: tuple[frozenset, ...]
    resolution: int

    def full(self, spec: ComplexSpec) -> bool:
        return len(self.deltas) == spec.l and all(len(c) == self.resolution for c in self.cells)

    def to_json(self) -> dict:
        return {
            "deltas": sorted(j + 1 for j in self.deltas),
            "cells_covered": [len(c) for c in self.cells],
            "resolution": self.resolution,
        }


def _cells(lo: float, hi: float, resolution: int) -> set[int]:
    first = min(int(np.floor(lo * resolution)), resolution - 1)
    last = min(max(int(np.ceil(hi * resolution)) - 1, first), resolution - 1)
    out = set(range(first, last + 1))
    if lo == hi and lo * resolution == int(lo * resolution) and lo > 0:
        out.add(int(lo * resolution) - 1)
    return out


def hom_coverage(
    spec: ComplexSpec, homs: Iterable[HomToMatrix], resolution: int
) -> SpectralCoverage:
    deltas: set[int] = set()
    cells: list[set[int]] = [set() for _ in range(spec.k)]
    for h in homs:
        sp = spectrum_of(h)
        deltas |= {j for j, d in enumerate(sp.delta_mults) if d}
        for i, ps in enumerate(sp.interior_points):
            for x in ps:
                cells[i] |= _cells(x, x, resolution)
    return SpectralCoverage(frozenset(deltas), tuple(frozenset(c) for c in cells), resolution)


def map_coverage(
    spec: ComplexSpec, maps: Iterable[StandardMapToMatrix], e_maps: Iterable[HomToMatrix], resolution: int
) -> SpectralCoverage:
    deltas: set[int] = set()
    cells: list[set[int]] = [set() for _ in range(spec.k)]
    for h in e_maps:
        deltas |= {j for j, d in enumerate(spectrum_of(h).delta_mults) if d}
    for sm in maps:
        for piece in sm.pieces:
            for p in piece.paths:
                if p.kind == "delta":
                    deltas.add(p.index)
                    continue
                for lo, hi in p.image():
                    cells[p.index] |= _cells(lo, hi, resolution)
                    for side, x in ((0, lo), (1, hi)):
                        if x in (0.0, 1.0) and x == float(side):
                            deltas |= {j for j, r in enumerate(spec.mult(side)[p.index]) if r}
    return SpectralCoverage(frozenset(deltas), tuple(frozenset(c) for c in cells), resolution)


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _piece_gap(values: np.ndarray, lo: int, hi: int) -> float:
    """Upper bound on the pairwise gap of the samples lo..hi on every element."""
    dists = np.linalg.norm(values[lo : hi + 1] - values[lo][None], ord=2, axis=(-2, -1)).max()
    return float(dists) if hi - lo == 1 else 2.0 * float(dists)


def _step_gaps(samples: Sequence[HomToMatrix], tests: Sequence[Element]) -> np.ndarray:
    """Largest ‖φ_{k+1}(h) - φ_k(h)‖ over the tests, one entry per sampling step."""
    steps = np.zeros(len(samples) - 1)
    if not tests:
        return steps
    prev = np.array([samples[0](el) for el in tests])
    for k, hom in enumerate(samples[1:]):
        cur = np.array([hom(el) for el in tests])
        steps[k] = float(np.linalg.norm(cur - prev, ord=2, axis=(-2, -1)).max())
        prev = cur
    return steps


def approximate_block(
    samples: Sequence[HomToMatrix],
    finite_set: Sequence[Element],
    eps: float,
    *,
    pair_m: int = DEFAULT_PAIR_M,
    grid_size: int = DEFAULT_GRID,
    mode: str = "contiguous",
    delta: float = DEFAULT_DELTA,
    component: int = 0,
) -> StandardMapToMatrix:
    """
    Standard map within eps of a family sampled at t = k/N on a finite set.

    Picks the coarsest uniform partition whose pieces vary by less than
    min(eps/2, delta/8) on the finite set, H(1/pair_m) and its hermitian
    matrix-unit variants, so that every connector meets its hypotheses. Joins
    the piece ends by 3-standard connectors and moves to a finer partition
    when a connector cannot be built or the final deviation reaches eps.

    Raises:
        ContinuityTooCoarse: if no partition works
    """
    nfam = len(samples) - 1
    if nfam < 1 or not finite_set:
        raise ContinuityTooCoarse(component, 0)
    spec = samples[0].spec
    values = np.array([[h(el) for el in finite_set] for h in samples])
    tests = build_H(spec, pair_m, mode, grid_size)
    tilde = build_H_tilde(spec, pair_m, mode, grid_size, form="hermitian")
    test_steps = _step_gaps(samples, [*tests, *tilde])
    reach = np.concatenate([[0.0], np.cumsum(test_steps)])
    steps = np.maximum(
        [float(np.linalg.norm(values[k + 1] - values[k], ord=2, axis=(-2, -1)).max()) for k in range(nfam)],
        test_steps,
    )
    bound = min(eps / 2.0, delta / 8.0)

    for m in _divisors(nfam):
        q = nfam // m
        gaps = [
            max(_piece_gap(values, k * q, (k + 1) * q), float(reach[(k + 1) * q] - reach[k * q])) for k in range(m)
        ]
        if max(gaps) >= bound:
            continue
        pieces: list[StandardPiece] = []
        eta1 = []
        try:
            for k in range(m):
                c = connect_3standard(
                    samples[k * q], samples[(k + 1) * q], pair_m,
                    eps=eps, finite_set=finite_set, grid_size=grid_size, mode=mode,
                    tests=tests, tilde=tilde, delta=delta,
                )
                pieces.extend(c.rescaled_pieces(k / m, (k + 1) / m))
                eta1.append(c.params["eta1"])
            sm = StandardMapToMatrix(spec, samples[0].n, tuple(pieces))
        except (StandardMapError, HomSpecError) as exc:
            LOGGER.debug(f"Partition into {m} pieces rejected: {exc}")
            continue
        deviation = max(
            float(op_norm(eval_standard(sm, k / nfam, el) - values[k][f]))
            for k in range(nfam + 1)
            for f, el in enumerate(finite_set)
        )
        if deviation >= eps:
            LOGGER.debug(f"Partition into {m} pieces deviates by {deviation:.3e}")
            continue
        params = {
            "m": m,
            "pieces": 3 * m,
            "pair_m": pair_m,
            "eta1": min(eta1),
            "eta": min(eta1) / 3.0,
            "delta": delta,
            "piece_gap": max(gaps),
            "max_deviation": deviation,
        }
        LOGGER.info(f"Component {component + 1}: {3 * m}-standard map, deviation {deviation:.3e}")
        return StandardMapToMatrix(spec, sm.size, sm.pieces, params)
    raise ContinuityTooCoarse(component, int(np.argmax(steps)))


@dataclass(frozen=True, eq=False)
class HomFamily:
    """Point evaluations of a map into a complex, sampled at t = k/N per F-block."""

    source: ComplexSpec
    target: ComplexSpec
    blocks: tuple[tuple[HomToMatrix, ...], ...]
    e_maps: tuple[HomToMatrix, ...]

    @property
    def grid_size(self) -> int:
        return len(self.blocks[0]) - 1

    def to_json(self) -> dict:
        return {
            "kind": "family",
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "blocks": [[h.to_json() for h in b] for b in self.blocks],
            "e_maps": [h.to_json() for h in self.e_maps],
        }

    @classmethod
    def from_json(cls, data: dict) -> HomFamily:
        source = ComplexSpec.from_json(data["source"])
        target = ComplexSpec.from_json(data["target"])
        blocks = tuple(tuple(HomToMatrix.from_json(source, h) for h in b) for b in data["blocks"])
        e_maps = tuple(HomToMatrix.from_json(source, h) for h in data["e_maps"])
        return cls(source, target, blocks, e_maps)


def sample_block(sm: StandardMapToMatrix, grid_size: int) -> tuple[HomToMatrix, ...]:
    return tuple(standard_to_hom(sm, k / grid_size) for k in range(grid_size + 1))


def sample_family(phi: StandardMapToComplex, grid_size: int) -> HomFamily:
    return HomFamily(phi.source, phi.target, tuple(sample_block(b, grid_size) for b in phi.blocks), phi.e_maps)


def approximate_by_standard(
    family: HomFamily,
    finite_set: Sequence[Element],
    eps: float,
    *,
    pair_m: int = DEFAULT_PAIR_M,
    grid_size: int = DEFAULT_GRID,
    mode: str = "contiguous",
    delta: float = DEFAULT_DELTA,
) -> StandardMapToComplex:
    """
    Unital standard map ψ into the target with ‖φ(h) - ψ(h)‖ < eps on the
    finite set at every sampled t, and ψ_{δ'ᵣ} = φ_{δ'ᵣ}.

    Raises:
        ContinuityTooCoarse: if some component admits no partition
        InjectivityLost: if the family covers Sp(A) but ψ does not
    """
    blocks = tuple(
        approximate_block(
            samples, finite_set, eps, pair_m=pair_m, grid_size=grid_size, mode=mode, delta=delta, component=i
        )
        for i, samples in enumerate(family.blocks)
    )
    resolution = family.grid_size
    before = hom_coverage(family.source, [h for b in family.blocks for h in b] + list(family.e_maps), resolution)
    after = map_coverage(family.source, blocks, family.e_maps, resolution)
    injective = after.full(family.source)
    if before.full(family.source) and not injective:
        raise InjectivityLost("Sampled family covers the spectrum, the standard map does not")
    params = {
        "eps": eps,
        "delta": delta,
        "eta1": min(b.params["eta1"] for b in blocks),
        "m": [b.params["m"] for b in blocks],
        "injective": injective,
    }
    return StandardMapToComplex(family.source, family.target, blocks, family.e_maps, params)


@dataclass(frozen=True, eq=False)
class RebaseResult:
    psi: StandardMapToComplex
    w_paths: tuple[UnitaryPath, ...]
    s0: tuple[np.ndarray, ...]
    s1: tuple[np.ndarray, ...]

    def to_json(self) -> dict:
        return {
            "S0": [[x + 1 for x in as_permutation(s)] for s in self.s0],
            "S1": [[x + 1 for x in as_permutation(s)] for s in self.s1],
        }


def rebase_via_theta(phi: StandardMapToComplex, dp: Optional[ComplexDPair] = None) -> RebaseResult:
    """
    ψ_t := W(t) θ_t W(t)* with W(0), W(1) permutations aligning θ with the
    target's boundary maps; ψ's E-maps are φ's in diagonal form.

    Raises:
        NoAligningPermutation: if a boundary cannot be aligned
    """
    dp = extract_d_pair(phi) if dp is None else dp
    e_diag = tuple(HomToMatrix(h.spec, h.n, h.s_vec, h.points, h.pad) for h in phi.e_maps)
    blocks, ws, s0s, s1s = [], [], [], []
    for i, (sm, pair) in enumerate(zip(phi.blocks, dp.blocks)):
        ends = []
        for side, piece, q in ((0, sm.pieces[0], pair.q_perms[0]), (1, sm.pieces[-1], pair.q_perms[-1])):
            try:
                v, b = boundary_form(phi.target, e_diag, i, side)
                pi = match_matrix(piece.form_at(phi.source, float(side)), b, where=f"t={side}")
            except (NoMatchingPermutation, BoundaryIncoherent) as exc:
                raise NoAligningPermutation(side, str(exc)) from exc
            ends.append(np.real(v @ pi @ q.T))
        w = UnitaryPath.through((0.0, 1.0), ends)
        pieces = tuple(
            StandardPiece(p.interval, p.paths, w.restrict(*p.interval).right_multiply(q), p.pad)
            for p, q in zip(sm.pieces, pair.q_perms)
        )
        blocks.append(StandardMapToMatrix(phi.source, sm.size, pieces, dict(sm.params)))
        ws.append(w)
        s0s.append(ends[0])
        s1s.append(ends[1])
    psi = StandardMapToComplex(phi.source, phi.target, tuple(blocks), e_diag, {**phi.params, "rebased": True})
    return RebaseResult(psi, tuple(ws), tuple(s0s), tuple(s1s))


def check_pointwise_equiv(
    phi: StandardMapToComplex, psi: StandardMapToComplex, grid_size: int = DEFAULT_GRID
) -> bool:
    """Resolved spectra agree at every grid point of every F-block and on every E-block."""
    if phi.source != psi.source or phi.target != psi.target:
        return False
    for a, b in zip(phi.e_maps, psi.e_maps):
        if not spectrum_of(a).matches(spectrum_of(b)):
            return False
    for a, b in zip(phi.blocks, psi.blocks):
        for k in range(grid_size + 1):
            t = k / grid_size
            if not a.form_at(t).spectrum().matches(b.form_at(t).spectrum()):
                return False
    return True


@dataclass(frozen=True)
class HomogeneityPoint:
    t: float
    maximally_homogeneous: bool
    limit_of_max_homogeneous: bool


def homogeneity_profile(sm: StandardMapToMatrix, times: Iterable[float]) -> list[HomogeneityPoint]:
    out = []
    for t in times:
        h = standard_to_hom(sm, t)
        limit = is_limit_of_max_homogeneous(h) if h.unital else False
        out.append(HomogeneityPoint(float(t), is_maximally_homogeneous_at(h), limit))
    return out


def load_standard_map(data: dict) -> StandardMap:
    if data.get("kind") == "complex":
        return StandardMapToComplex.from_json(data)
    return StandardMapToMatrix.from_json(data)
