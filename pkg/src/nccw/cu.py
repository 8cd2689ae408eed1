"""Rank functions of positive elements, the Cuntz-semigroup invariant of a complex."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from nccw.complex import Element
from nccw.findim import eig_sorted
from nccw.homspec import HomToMatrix
from nccw.standard import StandardMapToComplex

RANK_EPS = 1e-6
TAU_POS = 1e-9


class CuError(Exception):
    """Base class for rank-function failures."""


class NotPositive(CuError):
    """Raised when a rank is requested for a non-positive element."""

    def __init__(self, label: str, min_eig: float):
        super().__init__(f"Element {label or '<unnamed>'} is not positive: smallest eigenvalue {min_eig:.3e}")
        self.min_eig = min_eig


class NotLsc(CuError):
    """Raised when a rank function is not lower semicontinuous at a point."""

    def __init__(self, block: int, point: float):
        super().__init__(f"Rank function {block + 1} is not lower semicontinuous at t={point:g}")
        self.block = block
        self.point = point


class RankBoundaryMismatch(CuError):
    """Raised when endpoint ranks disagree with the E-block ranks through the boundary maps."""


@dataclass(frozen=True)
class StepFunction:
    """
    Integer-valued lower semicontinuous step function on [0,1].

    breaks[r] = (t_r, v_r) gives the value v_r on the open interval
    (t_r, t_{r+1}), with t_0 = 0. At an interior break the value is the
    smaller of the two sides.
    """

    at_zero: int
    breaks: tuple[tuple[float, int], ...]
    at_one: int

    def value_at(self, t: float) -> int:
        if t <= 0.0:
            return self.at_zero
        if t >= 1.0:
            return self.at_one
        for r, (tr, vr) in enumerate(self.breaks):
            nxt = self.breaks[r + 1][0] if r + 1 < len(self.breaks) else 1.0
            if t == tr and r > 0:
                return min(self.breaks[r - 1][1], vr)
            if tr < t < nxt:
                return vr
        return self.breaks[-1][1]

    def jumps(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.breaks[1:])

    def probe_times(self) -> list[float]:
        edges = [t for t, _ in self.breaks] + [1.0]
        mids = [0.5 * (a + b) for a, b in zip(edges, edges[1:])]
        return sorted(set(edges + mids))


def _compress(nodes: np.ndarray, ranks: Sequence[int]) -> StepFunction:
    """Open-interval values take the larger node rank, so each jump sits at the node with the smaller one."""
    breaks: list[tuple[float, int]] = []
    for k in range(len(ranks) - 1):
        v = max(ranks[k], ranks[k + 1])
        if not breaks or breaks[-1][1] != v:
            breaks.append((float(nodes[k]), int(v)))
    return StepFunction(int(ranks[0]), tuple(breaks), int(ranks[-1]))


@dataclass(frozen=True, eq=False)
class CuElement:
    rank_fns: tuple[StepFunction, ...]
    e_ranks: tuple[int, ...]
    eps: float = RANK_EPS

    def __post_init__(self) -> None:
        for i, fn in enumerate(self.rank_fns):
            if not fn.breaks:
                raise CuError(f"Rank function {i + 1} has no interval values")
            if fn.at_zero > fn.breaks[0][1]:
                raise NotLsc(i, 0.0)
            if fn.at_one > fn.breaks[-1][1]:
                raise NotLsc(i, 1.0)

    def __le__(self, other: CuElement) -> bool:
        if any(a > b for a, b in zip(self.e_ranks, other.e_ranks)):
            return False
        for f, g in zip(self.rank_fns, other.rank_fns):
            times = sorted(set(f.probe_times()) | set(g.probe_times()))
            if any(f.value_at(t) > g.value_at(t) for t in times):
                return False
        return True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CuElement):
            return NotImplemented
        return self <= other and other <= self

    def to_json(self) -> dict:
        """Interval values per F-block; endpoint values follow from e_ranks through the boundary maps."""
        return {
            "ranks": [[[t, v] for t, v in fn.breaks] for fn in self.rank_fns],
            "e_ranks": list(self.e_ranks),
            "eps": self.eps,
        }


def _rank(m: np.ndarray, eps: float) -> int:
    return int(np.sum(eig_sorted(m, 1e-8) > eps))


def cu_rank(el: Element, eps: float = RANK_EPS) -> CuElement:
    """
    Pointwise ranks of a positive element, counting eigenvalues above eps.

    Open intervals between nodes take the larger node rank, so every jump
    sits at the node with the smaller rank and interior points are lower
    semicontinuous as sampled. An endpoint rank above the adjacent interval
    value is reported as NotLsc(block, t).

    Raises:
        NotPositive: if some sample has an eigenvalue below -1e-9
        NotLsc: if an endpoint rank exceeds the adjacent interval value
        RankBoundaryMismatch: if endpoint ranks disagree with Σ mult · rank(E-block)
    """
    low = el.min_eigenvalue()
    if low < -TAU_POS:
        raise NotPositive(el.label, low)
    e_ranks = tuple(_rank(b, eps) for b in el.e_part.blocks)
    fns = []
    for i, s in enumerate(el.f_samples):
        ranks = [_rank(s[k], eps) for k in range(s.shape[0])]
        fn = _compress(el.grid(), ranks)
        for side, value in ((0, fn.at_zero), (1, fn.at_one)):
            expected = sum(r * e for r, e in zip(el.spec.mult(side)[i], e_ranks))
            if value != expected:
                raise RankBoundaryMismatch(
                    f"F-block {i + 1} has rank {value} at t={side}, boundary map gives {expected}"
                )
        fns.append(fn)
    return CuElement(tuple(fns), e_ranks, eps)


def hom_rank(h: HomToMatrix, el: Element, eps: float = RANK_EPS) -> int:
    return _rank(h(el), eps)


@dataclass(frozen=True)
class CuComparison:
    left: Union[int, CuElement]
    right: Union[int, CuElement]

    @property
    def equal(self) -> bool:
        return self.left == self.right

    def to_json(self) -> dict:
        def dump(x):
            return x if isinstance(x, int) else x.to_json()

        return {"left": dump(self.left), "right": dump(self.right), "equal": self.equal}


def cu_compare_homs(
    phi: Union[HomToMatrix, StandardMapToComplex],
    psi: Union[HomToMatrix, StandardMapToComplex],
    probe: Element,
    eps: float = RANK_EPS,
) -> CuComparison:
    """Cu(φ)[probe] against Cu(ψ)[probe]; ranks for maps into M_n, rank functions for maps into complexes."""
    if isinstance(phi, HomToMatrix) and isinstance(psi, HomToMatrix):
        return CuComparison(hom_rank(phi, probe, eps), hom_rank(psi, probe, eps))
    if isinstance(phi, StandardMapToComplex) and isinstance(psi, StandardMapToComplex):
        return CuComparison(cu_rank(phi.apply(probe), eps), cu_rank(psi.apply(probe), eps))
    raise CuError("Both maps must have the same kind of target")
