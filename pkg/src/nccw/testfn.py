"""Finite test-function families H(η) and H̃(η) on a complex."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from nccw.complex import DEFAULT_GRID, DEFAULT_KAPPA, ComplexSpec, Element, make_element
from nccw.findim import BlockMatrix

LOGGER = logging.getLogger(__name__)

DEFAULT_CAP = 100_000
H_MODES = ("contiguous", "full")


class FamilyError(Exception):
    """Base class for test-function construction failures."""


class BadPartition(FamilyError):
    """Raised when type-1 partition data or the grid is inadmissible."""


class BadSupport(FamilyError):
    """Raised when a type-2 support leaves [η, 1-η] or is not on the grid."""


class ExplosionGuard(FamilyError):
    """Raised when a family would exceed the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"Test family would hold {count} elements, cap is {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Type1Spec:
    j: int
    a_vec: tuple[int, ...]
    b_vec: tuple[int, ...]
    m: int

    def validate(self, spec: ComplexSpec) -> None:
        if not 0 <= self.j < spec.l:
            raise BadPartition(f"E-block index {self.j + 1} out of range")
        if len(self.a_vec) != spec.k or len(self.b_vec) != spec.k:
            raise BadPartition(f"Partition vectors need {spec.k} entries")
        for i, (a, b) in enumerate(zip(self.a_vec, self.b_vec)):
            if not (0 <= a and a + 2 <= b <= self.m):
                raise BadPartition(f"Component {i + 1}: need 0 <= a, a+2 <= b <= {self.m}, got a={a}, b={b}")

    @property
    def label(self) -> str:
        return f"type1:j={self.j + 1},a={list(self.a_vec)},b={list(self.b_vec)},m={self.m}"


@dataclass(frozen=True)
class Type2Spec:
    i: int
    intervals: tuple[tuple[int, int], ...]
    m: int

    @classmethod
    def from_interval(cls, i: int, lo: float, hi: float, m: int) -> Type2Spec:
        r, s = lo * m, hi * m
        if abs(r - round(r)) > 1e-9 or abs(s - round(s)) > 1e-9:
            raise BadSupport(f"[{lo}, {hi}] does not sit on the 1/{m} grid")
        return cls(i, ((int(round(r)), int(round(s))),), m)

    def validate(self, spec: ComplexSpec) -> None:
        if not 0 <= self.i < spec.k:
            raise BadSupport(f"F-block index {self.i + 1} out of range")
        if not self.intervals:
            raise BadSupport("Support X is empty")
        for r, s in self.intervals:
            if not (1 <= r < s <= self.m - 1):
                raise BadSupport(
                    f"[{Fraction(r, self.m)}, {Fraction(s, self.m)}] is not inside [1/{self.m}, {self.m - 1}/{self.m}]"
                )

    @property
    def label(self) -> str:
        parts = ",".join(f"[{Fraction(r, self.m)},{Fraction(s, self.m)}]" for r, s in self.intervals)
        return f"type2:i={self.i + 1},X={parts},m={self.m}"


def _check_grid(grid_size: int, m: int) -> int:
    if m < 2:
        raise BadPartition(f"Partition count must be at least 2, got {m}")
    if grid_size % m:
        raise BadPartition(f"Grid size {grid_size} is not divisible by m={m}")
    return grid_size // m


def _kappa(m: int) -> float:
    return float(max(DEFAULT_KAPPA, m))


def _ramps(grid_size: int, q: int, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """Left and right ramp profiles on grid nodes, exact at nodes."""
    k = np.arange(grid_size + 1)
    left = np.clip(((a + 1) * q - k) / q, 0.0, 1.0)
    right = np.clip((k - (b - 1) * q) / q, 0.0, 1.0)
    return left, right


def type1_element(
    spec: ComplexSpec,
    t1: Type1Spec,
    grid_size: int = DEFAULT_GRID,
    unit: Optional[np.ndarray] = None,
) -> Element:
    """
    Type-1 test function for E-block j.

    The E-part is the unit of block j (or the given matrix, for H̃ variants).
    On component i the function equals β₀ⁱ(a) up to aᵢη and β₁ⁱ(a) from bᵢη on,
    with linear ramps of width η and zero in between.
    """
    t1.validate(spec)
    q = _check_grid(grid_size, t1.m)
    blocks = [np.zeros((n, n), dtype=complex) for n in spec.e_shape.sizes]
    blocks[t1.j] = np.eye(spec.e_shape.sizes[t1.j], dtype=complex) if unit is None else np.asarray(unit, dtype=complex)
    e_part = BlockMatrix(spec.e_shape, tuple(blocks))
    stacked = []
    for i in range(spec.k):
        left, right = _ramps(grid_size, q, t1.a_vec[i], t1.b_vec[i])
        b0 = spec.beta_block(0, e_part, i)
        b1 = spec.beta_block(1, e_part, i)
        stacked.append(left[:, None, None] * b0 + right[:, None, None] * b1)
    return make_element(spec, tuple(stacked), e_part, kappa=_kappa(t1.m), label=t1.label)


def type2_element(
    spec: ComplexSpec,
    t2: Type2Spec,
    grid_size: int = DEFAULT_GRID,
    unit: Optional[np.ndarray] = None,
) -> Element:
    """Tent (1 - dist(t, X)/η)₊ times the unit of F-block i (or a matrix unit)."""
    t2.validate(spec)
    q = _check_grid(grid_size, t2.m)
    k = np.arange(grid_size + 1)
    dist = np.min(
        [np.maximum.reduce([r * q - k, np.zeros_like(k), k - s * q]) for r, s in t2.intervals], axis=0
    )
    tent = np.clip(1.0 - dist / q, 0.0, 1.0)
    stacked = []
    for i, fi in enumerate(spec.f_shape.sizes):
        if i == t2.i:
            value = np.eye(fi, dtype=complex) if unit is None else np.asarray(unit, dtype=complex)
            stacked.append(tent[:, None, None] * value)
        else:
            stacked.append(np.zeros((grid_size + 1, fi, fi), dtype=complex))
    return make_element(spec, tuple(stacked), BlockMatrix.zeros(spec.e_shape), kappa=_kappa(t2.m), label=t2.label)


def _type1_specs(spec: ComplexSpec, m: int) -> list[Type1Spec]:
    pairs = [(a, b) for a in range(m + 1) for b in range(a + 2, m + 1)]
    out = []
    for j in range(spec.l):
        for combo in itertools.product(pairs, repeat=spec.k):
            out.append(Type1Spec(j, tuple(a for a, _ in combo), tuple(b for _, b in combo), m))
    return out


def _merge_units(units: tuple[int, ...]) -> tuple[tuple[int, int], ...]:
    merged: list[list[int]] = []
    for r in units:
        if merged and merged[-1][1] == r:
            merged[-1][1] = r + 1
        else:
            merged.append([r, r + 1])
    return tuple((a, b) for a, b in merged)


def _supports(m: int, mode: str) -> list[tuple[tuple[int, int], ...]]:
    if mode == "contiguous":
        return [((r, s),) for r in range(1, m) for s in range(r + 1, m)]
    if mode == "full":
        units = range(1, m - 1)
        return [
            _merge_units(subset)
            for size in range(1, len(units) + 1)
            for subset in itertools.combinations(units, size)
        ]
    raise FamilyError(f"Unknown H mode '{mode}', expected one of {H_MODES}")


def _family_size(spec: ComplexSpec, m: int, mode: str) -> int:
    pairs = (m - 1) * m // 2
    type1 = spec.l * pairs ** spec.k
    if mode == "full":
        type2 = spec.k * (2 ** max(m - 2, 0) - 1)
    else:
        type2 = spec.k * (m - 1) * (m - 2) // 2
    return type1 + type2


def family_specs(
    spec: ComplexSpec, m: int, mode: str = "contiguous", cap: int = DEFAULT_CAP
) -> tuple[list[Type1Spec], list[Type2Spec]]:
    if mode not in H_MODES:
        raise FamilyError(f"Unknown H mode '{mode}', expected one of {H_MODES}")
    if m < 2:
        raise BadPartition(f"Partition count must be at least 2, got {m}")
    count = _family_size(spec, m, mode)
    if count > cap:
        raise ExplosionGuard(count, cap)
    type2 = [Type2Spec(i, support, m) for i in range(spec.k) for support in _supports(m, mode)]
    return _type1_specs(spec, m), type2


def build_H(
    spec: ComplexSpec,
    m: int,
    mode: str = "contiguous",
    grid_size: int = DEFAULT_GRID,
    cap: int = DEFAULT_CAP,
) -> list[Element]:
    """All type-1 elements followed by all type-2 elements of H(1/m)."""
    _check_grid(grid_size, m)
    type1, type2 = family_specs(spec, m, mode, cap)
    LOGGER.debug(f"H(1/{m}): {len(type1)} type-1 and {len(type2)} type-2 elements")
    return [type1_element(spec, t, grid_size) for t in type1] + [type2_element(spec, t, grid_size) for t in type2]


def _units(n: int, form: str) -> Iterator[tuple[str, np.ndarray]]:
    for p in range(n):
        for q in range(n):
            unit = np.zeros((n, n), dtype=complex)
            unit[p, q] = 1.0
            if form == "raw":
                yield f"e{p + 1}{q + 1}", unit
            elif p == q:
                yield f"e{p + 1}{q + 1}", unit
            elif p < q:
                yield f"re{p + 1}{q + 1}", 0.5 * (unit + unit.T)
                yield f"im{p + 1}{q + 1}", (unit - unit.T) / 2j


def build_H_tilde(
    spec: ComplexSpec,
    m: int,
    mode: str = "contiguous",
    grid_size: int = DEFAULT_GRID,
    cap: int = DEFAULT_CAP,
    form: str = "raw",
) -> list[Element]:
    """
    Matrix-unit variants of H(1/m).

    Args:
        form: "raw" gives one variant per matrix unit e_pq; "hermitian" keeps the
            diagonal units and replaces each off-diagonal pair by its real and
            imaginary hermitian parts
    """
    if form not in ("raw", "hermitian"):
        raise FamilyError(f"Unknown H-tilde form '{form}'")
    _check_grid(grid_size, m)
    type1, type2 = family_specs(spec, m, mode, cap)
    count = sum(spec.e_shape.sizes[t.j] ** 2 for t in type1) + sum(spec.f_shape.sizes[t.i] ** 2 for t in type2)
    if count > cap:
        raise ExplosionGuard(count, cap)
    out = []
    for t in type1:
        for name, unit in _units(spec.e_shape.sizes[t.j], form):
            el = type1_element(spec, t, grid_size, unit=unit)
            out.append(_relabel(el, f"{t.label}:{name}"))
    for t in type2:
        for name, unit in _units(spec.f_shape.sizes[t.i], form):
            el = type2_element(spec, t, grid_size, unit=unit)
            out.append(_relabel(el, f"{t.label}:{name}"))
    return out


def _relabel(el: Element, label: str) -> Element:
    return Element(el.spec, el.f_samples, el.e_part, kappa=el.kappa, label=label)
