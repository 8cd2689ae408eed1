"""Arithmetic over finite-dimensional C*-algebras ⊕ M_n(C)."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as sl

TAU_UNIT = 1e-9
TAU_HERM = 1e-10
BRANCH_GAP = 1e-8
# Segments whose endpoint ratio has an eigenvalue this close to -1 get a midpoint knot.
SPLIT_GAP = 1e-3


class FindimError(Exception):
    """Base class for finite-dimensional arithmetic failures."""


class NotHermitian(FindimError):
    """Raised when a matrix expected to be hermitian is not."""

    def __init__(self, residual: float):
        super().__init__(f"Matrix is not hermitian: ||m - m*|| = {residual:.3e}")
        self.residual = residual


class SizeMismatch(FindimError):
    """Raised when block dimensions do not add up."""


class LogBranchFailure(FindimError):
    """Raised when a principal logarithm would cross the -1 branch cut."""


@dataclass(frozen=True)
class BlockShape:
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes:
            raise SizeMismatch("Block shape needs at least one block")
        if any(s < 1 for s in self.sizes):
            raise SizeMismatch(f"Block sizes must be positive: {self.sizes}")

    def __len__(self) -> int:
        return len(self.sizes)

    @property
    def dimension(self) -> int:
        return sum(s * s for s in self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes)


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    shape: BlockShape
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        if len(blocks) != len(self.shape):
            raise SizeMismatch(f"Expected {len(self.shape)} blocks, got {len(blocks)}")
        for b, (blk, n) in enumerate(zip(blocks, self.shape.sizes)):
            if blk.shape != (n, n):
                raise SizeMismatch(f"Block {b} has shape {blk.shape}, expected {(n, n)}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def zeros(cls, shape: BlockShape) -> BlockMatrix:
        return cls(shape, tuple(np.zeros((n, n), dtype=complex) for n in shape.sizes))

    @classmethod
    def identity(cls, shape: BlockShape) -> BlockMatrix:
        return cls(shape, tuple(np.eye(n, dtype=complex) for n in shape.sizes))

    @classmethod
    def matrix_unit(cls, shape: BlockShape, block: int, row: int, col: int) -> BlockMatrix:
        m = cls.zeros(shape)
        blocks = [b.copy() for b in m.blocks]
        blocks[block][row, col] = 1.0
        return cls(shape, tuple(blocks))

    @classmethod
    def unit_of_block(cls, shape: BlockShape, block: int) -> BlockMatrix:
        blocks = [np.zeros((n, n), dtype=complex) for n in shape.sizes]
        blocks[block] = np.eye(shape.sizes[block], dtype=complex)
        return cls(shape, tuple(blocks))

    def __add__(self, other: BlockMatrix) -> BlockMatrix:
        return BlockMatrix(self.shape, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: BlockMatrix) -> BlockMatrix:
        return BlockMatrix(self.shape, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __matmul__(self, other: BlockMatrix) -> BlockMatrix:
        return BlockMatrix(self.shape, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, scalar: complex) -> BlockMatrix:
        return BlockMatrix(self.shape, tuple(scalar * a for a in self.blocks))

    __rmul__ = __mul__

    def adjoint(self) -> BlockMatrix:
        return BlockMatrix(self.shape, tuple(a.conj().T for a in self.blocks))

    def diagonal_part(self) -> BlockMatrix:
        return BlockMatrix(self.shape, tuple(np.diag(np.diag(a)) for a in self.blocks))

    def norm(self) -> float:
        return op_norm(self)

    def allclose(self, other: BlockMatrix, tol: float = 1e-9) -> bool:
        return op_norm(self - other) <= tol


def op_norm(m: BlockMatrix | np.ndarray) -> float:
    """Largest singular value, maximised over blocks."""
    blocks = m.blocks if isinstance(m, BlockMatrix) else (np.asarray(m),)
    norms = [float(np.linalg.norm(b, 2)) for b in blocks if b.size]
    return max(norms, default=0.0)


def eig_sorted(m: np.ndarray, tol: float = TAU_HERM) -> np.ndarray:
    """
    Ascending eigenvalues of a hermitian matrix, multiplicity preserved.

    Raises:
        NotHermitian: if ||m - m*|| exceeds tol
    """
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros(0)
    residual = float(np.linalg.norm(m - m.conj().T, 2))
    if residual > tol:
        raise NotHermitian(residual)
    return sl.eigvalsh(0.5 * (m + m.conj().T))


def is_unitary(u: np.ndarray, tol: float = TAU_UNIT) -> bool:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2)) <= tol


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix P with P[perm[q], q] = 1, so P e_q = e_{perm[q]}."""
    n = len(perm)
    p = np.zeros((n, n))
    p[list(perm), list(range(n))] = 1.0
    return p


def as_permutation(m: np.ndarray, tol: float = 1e-8) -> Optional[tuple[int, ...]]:
    """Recover perm from a 0/1 permutation matrix, or None."""
    m = np.asarray(m)
    rounded = np.rint(m.real)
    if np.max(np.abs(m - rounded), initial=0.0) > tol:
        return None
    if not (np.all((rounded == 0) | (rounded == 1)) and np.all(rounded.sum(axis=0) == 1)
            and np.all(rounded.sum(axis=1) == 1)):
        return None
    return tuple(int(np.argmax(rounded[:, q])) for q in range(m.shape[1]))


@dataclass(frozen=True)
class BlockPermutation:
    shape: BlockShape
    perms: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        perms = tuple(tuple(int(x) for x in p) for p in self.perms)
        if len(perms) != len(self.shape):
            raise SizeMismatch(f"Expected {len(self.shape)} permutations, got {len(perms)}")
        for b, (p, n) in enumerate(zip(perms, self.shape.sizes)):
            if sorted(p) != list(range(n)):
                raise SizeMismatch(f"Permutation {b} is not a bijection of {n} points: {p}")
        object.__setattr__(self, "perms", perms)

    @classmethod
    def identity(cls, shape: BlockShape) -> BlockPermutation:
        return cls(shape, tuple(tuple(range(n)) for n in shape.sizes))

    @classmethod
    def from_one_based(cls, shape: BlockShape, images: Iterable[Sequence[int]]) -> BlockPermutation:
        return cls(shape, tuple(tuple(x - 1 for x in p) for p in images))

    def to_one_based(self) -> list[list[int]]:
        return [[x + 1 for x in p] for p in self.perms]

    def matrix(self, block: int) -> np.ndarray:
        return permutation_matrix(self.perms[block])

    def compose(self, other: BlockPermutation) -> BlockPermutation:
        """self ∘ other, i.e. matrix(self) @ matrix(other)."""
        return BlockPermutation(
            self.shape, tuple(tuple(p[q] for q in o) for p, o in zip(self.perms, other.perms))
        )

    def is_identity(self) -> bool:
        return all(p == tuple(range(len(p))) for p in self.perms)


def block_embed(
    a: BlockMatrix,
    mult: Sequence[int],
    perm: Optional[Sequence[int]],
    target_size: int,
) -> np.ndarray:
    """u · diag(a_1 ⊗ I_{r_1}, ..., a_l ⊗ I_{r_l}) · u*, with u the permutation matrix of perm."""
    if len(mult) != len(a.shape):
        raise SizeMismatch(f"Multiplicity row has {len(mult)} entries for {len(a.shape)} blocks")
    filled = sum(e * r for e, r in zip(a.shape.sizes, mult))
    if filled != target_size:
        raise SizeMismatch(f"Multiplicities fill {filled} rows, target size is {target_size}")
    parts = [np.kron(blk, np.eye(r)) for blk, r in zip(a.blocks, mult) if r > 0]
    d = sl.block_diag(*parts).astype(complex) if parts else np.zeros((0, 0), dtype=complex)
    if perm is not None:
        p = permutation_matrix(perm)
        d = p @ d @ p.T
    return d


def _principal_log(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Schur vectors and eigenphases of a unitary w, so that w = Z diag(e^{iθ}) Z*."""
    t, z = sl.schur(w, output="complex")
    return z, np.angle(np.diag(t))


def unitary_geodesic(u0: np.ndarray, u1: np.ndarray, t: float) -> np.ndarray:
    """
    Point u0·exp(t·L) on the principal geodesic, L = log(u0*·u1).

    Raises:
        LogBranchFailure: if u0*·u1 has an eigenvalue within BRANCH_GAP of -1
    """
    u0 = np.asarray(u0, dtype=complex)
    u1 = np.asarray(u1, dtype=complex)
    if u0.shape != u1.shape:
        raise SizeMismatch(f"Unitaries of shapes {u0.shape} and {u1.shape}")
    z, theta = _principal_log(u0.conj().T @ u1)
    if np.any(np.abs(np.exp(1j * theta) + 1.0) < BRANCH_GAP):
        raise LogBranchFailure("Geodesic crosses an eigenvalue at -1; split the path")
    if t == 0:
        return u0.copy()
    if t == 1:
        return u1.copy()
    return u0 @ z @ np.diag(np.exp(1j * t * theta)) @ z.conj().T


def geodesic_midpoint(u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
    """Halve every eigenphase of u0*·u1; both halves then stay clear of -1."""
    z, theta = _principal_log(np.asarray(u0).conj().T @ np.asarray(u1))
    return np.asarray(u0) @ z @ np.diag(np.exp(0.5j * theta)) @ z.conj().T


@dataclass(frozen=True, eq=False)
class UnitaryPath:
    """Continuous unitary path given by knots joined by principal geodesics."""

    knots: tuple[float, ...]
    values: tuple[np.ndarray, ...]
    _segments: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.knots) != len(self.values) or not self.knots:
            raise SizeMismatch("Unitary path needs one value per knot")
        if any(b < a for a, b in zip(self.knots, self.knots[1:])):
            raise SizeMismatch(f"Knots must be sorted: {self.knots}")
        values = tuple(np.asarray(v, dtype=complex) for v in self.values)
        object.__setattr__(self, "knots", tuple(float(k) for k in self.knots))
        object.__setattr__(self, "values", values)
        for a, b in zip(values, values[1:]):
            z, theta = _principal_log(a.conj().T @ b)
            if np.any(np.abs(np.exp(1j * theta) + 1.0) < BRANCH_GAP):
                raise LogBranchFailure("Path segment crosses an eigenvalue at -1")
            self._segments.append((z, theta))

    @classmethod
    def constant(cls, u: np.ndarray, domain: tuple[float, float] = (0.0, 1.0)) -> UnitaryPath:
        return cls((domain[0], domain[1]), (u, u))

    @classmethod
    def through(cls, knots: Sequence[float], values: Sequence[np.ndarray]) -> UnitaryPath:
        """Geodesic interpolation through prescribed values, splitting near the branch cut."""
        out_knots = [float(knots[0])]
        out_values = [np.asarray(values[0], dtype=complex)]
        for k, v in zip(knots[1:], values[1:]):
            v = np.asarray(v, dtype=complex)
            prev = out_values[-1]
            _, theta = _principal_log(prev.conj().T @ v)
            if np.any(np.abs(np.exp(1j * theta) + 1.0) < SPLIT_GAP):
                out_knots.append(0.5 * (out_knots[-1] + float(k)))
                out_values.append(geodesic_midpoint(prev, v))
            out_knots.append(float(k))
            out_values.append(v)
        return cls(tuple(out_knots), tuple(out_values))

    @classmethod
    def geodesic(cls, u0: np.ndarray, u1: np.ndarray, domain: tuple[float, float] = (0.0, 1.0)) -> UnitaryPath:
        return cls.through(domain, (u0, u1))

    @property
    def domain(self) -> tuple[float, float]:
        return self.knots[0], self.knots[-1]

    @property
    def size(self) -> int:
        return self.values[0].shape[0]

    def at(self, t: float) -> np.ndarray:
        lo, hi = self.domain
        t = min(max(float(t), lo), hi)
        idx = bisect.bisect_right(self.knots, t) - 1
        if idx >= len(self.knots) - 1:
            return self.values[-1]
        a, b = self.knots[idx], self.knots[idx + 1]
        if t == a or b == a:
            return self.values[idx]
        z, theta = self._segments[idx]
        s = (t - a) / (b - a)
        return self.values[idx] @ z @ np.diag(np.exp(1j * s * theta)) @ z.conj().T

    def right_multiply(self, q: np.ndarray) -> UnitaryPath:
        return UnitaryPath(self.knots, tuple(v @ q for v in self.values))

    def left_multiply(self, q: np.ndarray) -> UnitaryPath:
        return UnitaryPath(self.knots, tuple(q @ v for v in self.values))

    def restrict(self, a: float, b: float) -> UnitaryPath:
        inner = [(k, v) for k, v in zip(self.knots, self.values) if a < k < b]
        knots = [a] + [k for k, _ in inner] + [b]
        values = [self.at(a)] + [v for _, v in inner] + [self.at(b)]
        return UnitaryPath(tuple(knots), tuple(values))

    def unitarity_residual(self, times: Iterable[float]) -> float:
        worst = 0.0
        for t in times:
            u = self.at(t)
            worst = max(worst, float(np.linalg.norm(u.conj().T @ u - np.eye(self.size), 2)))
        return worst


def matrix_to_json(m: np.ndarray) -> list[list[list[float]]]:
    """Row-major [re, im] pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_json(data: Sequence[Sequence[Sequence[float]]]) -> np.ndarray:
    if len(data) == 0:
        return np.zeros((0, 0), dtype=complex)
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]
