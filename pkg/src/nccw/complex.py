"""
One-dimensional NCCW complexes A(E, F, β₀, β₁).

A complex is the pullback of C([0,1], F) and E along the two boundary
embeddings β₀, β₁: E → F. Elements are stored as grid samples of the
F-valued function together with the E-part.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from sympy.polys.domains import ZZ
from sympy.polys.matrices import DM
from sympy.polys.matrices.normalforms import invariant_factors

from nccw.findim import (
    BlockMatrix,
    BlockPermutation,
    BlockShape,
    FindimError,
    block_embed,
    matrix_from_json,
    matrix_to_json,
    op_norm,
)

LOGGER = logging.getLogger(__name__)

TAU_BC = 1e-9
DEFAULT_GRID = 240
DEFAULT_KAPPA = 50.0
# Interior times closer than this to a grid node are read off the sample directly.
GRID_SNAP = 1e-9


class ComplexError(Exception):
    """Base class for complex construction and element failures."""


class MalformedSpec(ComplexError):
    """Raised when raw complex data has inconsistent dimensions."""


class NotUnital(ComplexError):
    """Raised when a boundary embedding does not fill its F-block."""

    def __init__(self, side: int, row: int, filled: int, size: int):
        super().__init__(
            f"Boundary map {side} is not unital on F-block {row + 1}: fills {filled} of {size}"
        )
        self.side = side
        self.row = row


class NotInjectiveBeta(ComplexError):
    """Raised when β₀ ⊕ β₁ kills an E-block."""

    def __init__(self, index: int):
        super().__init__(f"E-block {index + 1} has zero multiplicity at both endpoints")
        self.index = index


class BoundaryMismatch(ComplexError):
    """Raised when f(0) ≠ β₀(a) or f(1) ≠ β₁(a)."""

    def __init__(self, side: int, residual: float):
        super().__init__(f"Boundary condition fails at t={side}: residual {residual:.3e}")
        self.side = side
        self.residual = residual


class DiscontinuitySuspected(ComplexError):
    """Raised when adjacent samples differ by more than κ/N."""

    def __init__(self, step: int, jump: float, bound: float):
        super().__init__(f"Samples {step} and {step + 1} differ by {jump:.3e} > {bound:.3e}")
        self.step = step
        self.jump = jump


class GridMismatch(ComplexError):
    """Raised when sample counts do not match the configured grid."""


class SpecMismatch(ComplexError):
    """Raised when an element belongs to a different complex."""


@dataclass(frozen=True)
class Delta:
    j: int


@dataclass(frozen=True)
class Interior:
    i: int
    t: float


@dataclass(frozen=True)
class Endpoint:
    i: int
    side: int


SpecPoint = Union[Delta, Interior, Endpoint]


@dataclass(frozen=True)
class ComplexSpec:
    e_shape: BlockShape
    f_shape: BlockShape
    mult0: tuple[tuple[int, ...], ...]
    mult1: tuple[tuple[int, ...], ...]
    perm0: BlockPermutation
    perm1: BlockPermutation
    name: str = field(default="", compare=False)

    @property
    def k(self) -> int:
        return len(self.f_shape)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.e_shape)

    def mult(self, side: int) -> tuple[tuple[int, ...], ...]:
        return self.mult0 if side == 0 else self.mult1

    def perm(self, side: int) -> BlockPermutation:
        return self.perm0 if side == 0 else self.perm1

    def beta_block(self, side: int, a: BlockMatrix, i: int) -> np.ndarray:
        return block_embed(a, self.mult(side)[i], self.perm(side).perms[i], self.f_shape.sizes[i])

    def beta(self, side: int, a: BlockMatrix) -> BlockMatrix:
        return BlockMatrix(self.f_shape, tuple(self.beta_block(side, a, i) for i in range(self.k)))

    def check_point(self, p: SpecPoint) -> None:
        if isinstance(p, Delta):
            ok = 0 <= p.j < self.l
        elif isinstance(p, Interior):
            ok = 0 <= p.i < self.k and 0.0 < p.t < 1.0
        else:
            ok = 0 <= p.i < self.k and p.side in (0, 1)
        if not ok:
            raise MalformedSpec(f"Spectrum point {p} is out of range for this complex")

    def point_size(self, p: SpecPoint) -> int:
        if isinstance(p, Delta):
            return self.e_shape.sizes[p.j]
        return self.f_shape.sizes[p.i]

    def to_json(self) -> dict:
        return {
            "e": list(self.e_shape.sizes),
            "f": list(self.f_shape.sizes),
            "mult0": [list(r) for r in self.mult0],
            "mult1": [list(r) for r in self.mult1],
            "perm0": self.perm0.to_one_based(),
            "perm1": self.perm1.to_one_based(),
        }

    @classmethod
    def from_json(cls, data: dict, name: str = "") -> ComplexSpec:
        return build_complex(
            data["e"], data["f"], data["mult0"], data["mult1"],
            perm0=data.get("perm0"), perm1=data.get("perm1"), name=name,
        )


def build_complex(
    e: Sequence[int],
    f: Sequence[int],
    mult0: Sequence[Sequence[int]],
    mult1: Sequence[Sequence[int]],
    perm0: Optional[Union[BlockPermutation, Sequence[Sequence[int]]]] = None,
    perm1: Optional[Union[BlockPermutation, Sequence[Sequence[int]]]] = None,
    name: str = "",
) -> ComplexSpec:
    """
    Validate raw data into a ComplexSpec.

    Permutations given as lists are 1-based image lists per F-block.

    Raises:
        MalformedSpec: if dimensions are inconsistent
        NotUnital: if a multiplicity row does not fill its F-block
        NotInjectiveBeta: if an E-block has a zero column in both matrices
    """
    try:
        e_shape = BlockShape(tuple(e))
        f_shape = BlockShape(tuple(f))
    except FindimError as exc:
        raise MalformedSpec(str(exc)) from exc

    rows = []
    for side, mult in ((0, mult0), (1, mult1)):
        if len(mult) != len(f_shape):
            raise MalformedSpec(f"mult{side} has {len(mult)} rows for {len(f_shape)} F-blocks")
        for i, row in enumerate(mult):
            if len(row) != len(e_shape) or any(int(r) < 0 for r in row):
                raise MalformedSpec(f"mult{side} row {i + 1} must hold {len(e_shape)} nonnegative integers")
        rows.append(tuple(tuple(int(r) for r in row) for row in mult))

    for side, mult in enumerate(rows):
        for i, row in enumerate(mult):
            filled = sum(ej * r for ej, r in zip(e_shape.sizes, row))
            if filled != f_shape.sizes[i]:
                raise NotUnital(side, i, filled, f_shape.sizes[i])

    for j in range(len(e_shape)):
        if all(rows[0][i][j] == 0 and rows[1][i][j] == 0 for i in range(len(f_shape))):
            raise NotInjectiveBeta(j)

    perms = []
    for perm in (perm0, perm1):
        if perm is None:
            perms.append(BlockPermutation.identity(f_shape))
        elif isinstance(perm, BlockPermutation):
            perms.append(perm)
        else:
            try:
                perms.append(BlockPermutation.from_one_based(f_shape, perm))
            except FindimError as exc:
                raise MalformedSpec(str(exc)) from exc

    return ComplexSpec(e_shape, f_shape, rows[0], rows[1], perms[0], perms[1], name=name)


def dimension_drop(p: int, q: int) -> ComplexSpec:
    """Z_{p,q}: functions into M_{pq} with f(0) ∈ M_p ⊗ 1 and f(1) ∈ 1 ⊗ M_q."""
    return build_complex((p, q), (p * q,), ((q, 0),), ((0, p),), name=f"Z{p},{q}")


@dataclass(frozen=True)
class KData:
    alpha: tuple[tuple[int, ...], ...]
    beta: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class K1Group:
    free_rank: int
    torsion: tuple[int, ...]

    @property
    def trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion


def k_matrices(spec: ComplexSpec) -> KData:
    return KData(alpha=spec.mult0, beta=spec.mult1)


def cokernel(rows: Sequence[Sequence[int]]) -> K1Group:
    """Cokernel of an integer k x l matrix, read off its invariant factors."""
    if not rows or not rows[0]:
        return K1Group(free_rank=len(rows), torsion=())
    factors = [abs(int(d)) for d in invariant_factors(DM([list(r) for r in rows], ZZ)) if d != 0]
    return K1Group(free_rank=len(rows) - len(factors), torsion=tuple(d for d in factors if d != 1))


def k1_group(spec: ComplexSpec) -> K1Group:
    """K1 as the cokernel of alpha - beta : Z^l → Z^k."""
    group = cokernel([[a - b for a, b in zip(ra, rb)] for ra, rb in zip(spec.mult0, spec.mult1)])
    LOGGER.debug(f"K1 of {spec.name or 'complex'}: free rank {group.free_rank}, torsion {group.torsion}")
    return group


def k1_is_trivial(spec: ComplexSpec) -> bool:
    return k1_group(spec).trivial


def endpoint_fibre(spec: ComplexSpec, i: int, side: int) -> tuple[Delta, ...]:
    row = spec.mult(side)[i]
    return tuple(Delta(j) for j, r in enumerate(row) for _ in range(r))


@dataclass(frozen=True)
class Neighborhood:
    j: int
    eps: float
    arcs: tuple[tuple[int, int, tuple[float, float]], ...]


def basis_topology_neighborhood(spec: ComplexSpec, j: int, eps: float) -> Neighborhood:
    """{δ_j} together with (0,ε)_i where α_ij ≠ 0 and (1-ε,1)_i where β_ij ≠ 0."""
    if not 0.0 < eps < 1.0:
        raise ComplexError(f"Neighbourhood radius must lie in (0,1), got {eps}")
    arcs = []
    for i in range(spec.k):
        if spec.mult0[i][j]:
            arcs.append((i, 0, (0.0, eps)))
        if spec.mult1[i][j]:
            arcs.append((i, 1, (1.0 - eps, 1.0)))
    return Neighborhood(j=j, eps=eps, arcs=tuple(arcs))


@dataclass(frozen=True, eq=False)
class Element:
    spec: ComplexSpec
    f_samples: tuple[np.ndarray, ...]
    e_part: BlockMatrix
    kappa: Optional[float] = DEFAULT_KAPPA
    label: str = ""

    @property
    def grid_size(self) -> int:
        return self.f_samples[0].shape[0] - 1

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size + 1)

    def sample(self, k: int) -> BlockMatrix:
        return BlockMatrix(self.spec.f_shape, tuple(s[k] for s in self.f_samples))

    def block_at(self, i: int, t: float) -> np.ndarray:
        n = self.grid_size
        x = min(max(float(t), 0.0), 1.0) * n
        k = int(round(x))
        if abs(x - k) < GRID_SNAP * n:
            return self.f_samples[i][k]
        lo = int(np.floor(x))
        w = x - lo
        return (1.0 - w) * self.f_samples[i][lo] + w * self.f_samples[i][lo + 1]

    def at(self, t: float) -> BlockMatrix:
        return BlockMatrix(self.spec.f_shape, tuple(self.block_at(i, t) for i in range(self.spec.k)))

    def endpoint(self, i: int, side: int) -> np.ndarray:
        return self.spec.beta_block(side, self.e_part, i)

    def evaluate(self, p: SpecPoint) -> np.ndarray:
        if isinstance(p, Delta):
            return self.e_part.blocks[p.j]
        if isinstance(p, Interior):
            return self.block_at(p.i, p.t)
        return self.endpoint(p.i, p.side)

    def _derived(self, f_samples, e_part: BlockMatrix) -> Element:
        return Element(self.spec, tuple(f_samples), e_part, kappa=None, label=self.label)

    def __add__(self, other: Element) -> Element:
        return self._derived((a + b for a, b in zip(self.f_samples, other.f_samples)), self.e_part + other.e_part)

    def __sub__(self, other: Element) -> Element:
        return self._derived((a - b for a, b in zip(self.f_samples, other.f_samples)), self.e_part - other.e_part)

    def __matmul__(self, other: Element) -> Element:
        return self._derived((a @ b for a, b in zip(self.f_samples, other.f_samples)), self.e_part @ other.e_part)

    def __mul__(self, scalar: complex) -> Element:
        return self._derived((scalar * a for a in self.f_samples), scalar * self.e_part)

    __rmul__ = __mul__

    def adjoint(self) -> Element:
        return self._derived((np.conj(np.swapaxes(a, 1, 2)) for a in self.f_samples), self.e_part.adjoint())

    def min_eigenvalue(self) -> float:
        lows = [float(np.linalg.eigvalsh(0.5 * (s + np.conj(np.swapaxes(s, 1, 2)))).min()) for s in self.f_samples]
        lows += [float(np.linalg.eigvalsh(0.5 * (b + b.conj().T)).min()) for b in self.e_part.blocks]
        return min(lows)

    def to_json(self) -> dict:
        return {
            "grid": self.grid_size,
            "label": self.label,
            "samples": [[matrix_to_json(s[k]) for s in self.f_samples] for k in range(self.grid_size + 1)],
            "e_part": [matrix_to_json(b) for b in self.e_part.blocks],
        }

    @classmethod
    def from_json(cls, spec: ComplexSpec, data: dict, **kwargs) -> Element:
        samples = [BlockMatrix(spec.f_shape, tuple(matrix_from_json(b) for b in row)) for row in data["samples"]]
        e_part = BlockMatrix(spec.e_shape, tuple(matrix_from_json(b) for b in data["e_part"]))
        return make_element(spec, samples, e_part, label=data.get("label", ""), **kwargs)


def _stack(spec: ComplexSpec, f_samples) -> tuple[np.ndarray, ...]:
    if isinstance(f_samples, tuple) and f_samples and isinstance(f_samples[0], np.ndarray) and f_samples[0].ndim == 3:
        return tuple(np.asarray(s, dtype=complex) for s in f_samples)
    samples = list(f_samples)
    return tuple(np.stack([s.blocks[i] for s in samples]).astype(complex) for i in range(spec.k))


def make_element(
    spec: ComplexSpec,
    f_samples,
    e_part: BlockMatrix,
    *,
    grid_size: Optional[int] = None,
    tol_bc: float = TAU_BC,
    kappa: Optional[float] = DEFAULT_KAPPA,
    label: str = "",
) -> Element:
    """
    Build an Element and verify its boundary and continuity invariants.

    Args:
        f_samples: N+1 BlockMatrix samples, or one (N+1, f_i, f_i) array per F-block
        kappa: continuity constant; None skips the per-step check

    Raises:
        BoundaryMismatch: if f(0) ≠ β₀(a) or f(1) ≠ β₁(a) beyond tol_bc
        DiscontinuitySuspected: if some step exceeds κ/N
        GridMismatch: if the sample count disagrees with grid_size
    """
    stacked = _stack(spec, f_samples)
    n = stacked[0].shape[0] - 1
    if n < 1 or any(s.shape[0] != n + 1 for s in stacked):
        raise GridMismatch("Every F-block needs the same number (at least two) of samples")
    if grid_size is not None and n != grid_size:
        raise GridMismatch(f"Element has {n + 1} samples, configured grid needs {grid_size + 1}")
    if e_part.shape != spec.e_shape:
        raise SpecMismatch("E-part shape does not match the complex")

    for side, k in ((0, 0), (1, n)):
        residual = max(
            op_norm(stacked[i][k] - spec.beta_block(side, e_part, i)) for i in range(spec.k)
        )
        if residual > tol_bc:
            raise BoundaryMismatch(side, residual)

    if kappa is not None:
        bound = kappa / n + tol_bc
        jumps = np.max(
            [np.linalg.norm(np.diff(s, axis=0), ord=2, axis=(1, 2)) for s in stacked], axis=0
        )
        step = int(np.argmax(jumps))
        if jumps[step] > bound:
            raise DiscontinuitySuspected(step, float(jumps[step]), bound)

    return Element(spec, stacked, e_part, kappa=kappa, label=label)


def sup_norm(el: Element) -> float:
    samples = max(float(np.linalg.norm(s, ord=2, axis=(1, 2)).max()) for s in el.f_samples)
    ends = max(op_norm(el.spec.beta(side, el.e_part)) for side in (0, 1))
    return max(samples, ends)


def constant_element(spec: ComplexSpec, value: BlockMatrix, e_part: BlockMatrix, grid_size: int = DEFAULT_GRID, label: str = "") -> Element:
    stacked = tuple(np.repeat(b[None, :, :], grid_size + 1, axis=0) for b in value.blocks)
    return make_element(spec, stacked, e_part, label=label)


def unit_element(spec: ComplexSpec, grid_size: int = DEFAULT_GRID) -> Element:
    return constant_element(
        spec, BlockMatrix.identity(spec.f_shape), BlockMatrix.identity(spec.e_shape), grid_size, label="unit"
    )


def zero_element(spec: ComplexSpec, grid_size: int = DEFAULT_GRID) -> Element:
    return constant_element(
        spec, BlockMatrix.zeros(spec.f_shape), BlockMatrix.zeros(spec.e_shape), grid_size, label="zero"
    )


def function_element(
    spec: ComplexSpec,
    fn,
    e_part: BlockMatrix,
    grid_size: int = DEFAULT_GRID,
    *,
    kappa: Optional[float] = DEFAULT_KAPPA,
    label: str = "",
) -> Element:
    """Sample fn(t) -> BlockMatrix on the grid."""
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    return make_element(spec, [fn(float(t)) for t in grid], e_part, kappa=kappa, label=label)


def _random_matrix(rng: np.random.Generator, n: int, amplitude: float, hermitian: bool) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    if hermitian:
        a = 0.5 * (a + a.conj().T)
    return amplitude * a / max(np.linalg.norm(a, 2), 1e-12)


def random_element(
    spec: ComplexSpec,
    seed: int,
    grid_size: int = DEFAULT_GRID,
    *,
    waypoints: int = 4,
    amplitude: float = 1.0,
    hermitian: bool = True,
) -> Element:
    """Seeded piecewise-linear element through random interior waypoints."""
    rng = np.random.default_rng(seed)
    e_part = BlockMatrix(
        spec.e_shape, tuple(_random_matrix(rng, n, amplitude, hermitian) for n in spec.e_shape.sizes)
    )
    knots = np.linspace(0.0, 1.0, waypoints + 2)
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    stacked = []
    for i, fi in enumerate(spec.f_shape.sizes):
        values = [spec.beta_block(0, e_part, i)]
        values += [_random_matrix(rng, fi, amplitude, hermitian) for _ in range(waypoints)]
        values.append(spec.beta_block(1, e_part, i))
        stacked.append(piecewise_linear(knots, np.stack(values), grid))
    return make_element(spec, tuple(stacked), e_part, label=f"random:{seed}")


def piecewise_linear(knots: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Interpolate stacked matrices values[r] at knots[r] onto grid."""
    idx = np.clip(np.searchsorted(knots, grid, side="right") - 1, 0, len(knots) - 2)
    w = (grid - knots[idx]) / (knots[idx + 1] - knots[idx])
    return (1.0 - w)[:, None, None] * values[idx] + w[:, None, None] * values[idx + 1]
