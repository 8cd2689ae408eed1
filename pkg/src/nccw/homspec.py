"""
Homomorphisms A → M_n in spectral normal form.

A homomorphism is stored as u · diag(a(δ₁) ⊗ I_{s₁}, ..., f(w₁), ..., 0) · u*,
never as a raw linear map. DiagonalForm is the shared representation of the
middle factor; standard maps reuse it for their pointwise forms.
"""
from __future__ import annotations

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as sl

from nccw.complex import (
    DEFAULT_GRID,
    ComplexError,
    ComplexSpec,
    Delta,
    Element,
    Endpoint,
    Interior,
    SpecMismatch,
    SpecPoint,
)
from nccw.findim import eig_sorted, is_unitary, matrix_from_json, matrix_to_json, permutation_matrix
from nccw.testfn import build_H

LOGGER = logging.getLogger(__name__)

# Interior points closer than this are the same irreducible representation.
POINT_TOL = 1e-9
DEFAULT_HOM_BOUND = 64
ZONE_SEARCH_LIMIT = 20


class HomSpecError(Exception):
    """Base class for spectral homomorphism failures."""


class MalformedHom(HomSpecError):
    """Raised when spectral data does not describe a map into M_n."""


class HypothesisFailed(HomSpecError):
    """Raised when eigenvalues of φ(h) and ψ(h) cannot be paired within ε."""

    def __init__(self, label: str, gap: float):
        super().__init__(f"Eigenvalue pairing fails on {label or 'test element'}: gap {gap:.3e}")
        self.label = label
        self.gap = gap


class ExtractionFailed(HomSpecError):
    """Raised when no boundary-zone subsets satisfy the pairing conclusions."""

    def __init__(self, i: int):
        super().__init__(f"No admissible pairing of interior points on component {i + 1}")
        self.i = i


class BoundExceeded(HomSpecError):
    """Raised when an enumeration exceeds its configured matrix size bound."""


class NotUnitalHom(HomSpecError):
    """Raised when a unital homomorphism is required."""


class NoMatchingPermutation(HomSpecError):
    """Raised when two diagonal forms are not permutation equivalent."""

    def __init__(self, where: str, left: dict, right: dict):
        super().__init__(f"Diagonal forms do not match at {where}: {left} vs {right}")
        self.where = where
        self.left = left
        self.right = right


def point_key(p: SpecPoint) -> tuple:
    if isinstance(p, Interior):
        return ("p", p.i, round(p.t / POINT_TOL) * POINT_TOL)
    raise ValueError(p)


@dataclass(frozen=True)
class Summand:
    point: SpecPoint
    mult: int = 1


@dataclass(frozen=True, eq=False)
class DiagonalForm:
    spec: ComplexSpec
    summands: tuple[Summand, ...]
    pad: int = 0

    @classmethod
    def of_points(cls, spec: ComplexSpec, points: Iterable[SpecPoint], pad: int = 0) -> DiagonalForm:
        return cls(spec, tuple(Summand(p) for p in points), pad)

    @property
    def size(self) -> int:
        return sum(self.spec.point_size(s.point) * s.mult for s in self.summands) + self.pad

    def evaluate_with(self, value: Callable[[SpecPoint], np.ndarray]) -> np.ndarray:
        parts = [np.kron(value(s.point), np.eye(s.mult)) for s in self.summands]
        if self.pad:
            parts.append(np.zeros((self.pad, self.pad)))
        if not parts:
            return np.zeros((0, 0), dtype=complex)
        return sl.block_diag(*parts).astype(complex)

    def evaluate(self, el: Element) -> np.ndarray:
        return self.evaluate_with(el.evaluate)

    def kron(self, r: int) -> DiagonalForm:
        return DiagonalForm(self.spec, tuple(Summand(s.point, s.mult * r) for s in self.summands), self.pad * r)

    def copies(self) -> list[tuple[tuple, list[int]]]:
        """Irreducible copies as (label, positions); endpoints expand into their fibres."""
        out: list[tuple[tuple, list[int]]] = []
        offset = 0
        for s in self.summands:
            p = s.point
            if isinstance(p, Endpoint):
                row = self.spec.mult(p.side)[p.i]
                perm = self.spec.perm(p.side).perms[p.i]
                inner = 0
                for j, r in enumerate(row):
                    e = self.spec.e_shape.sizes[j]
                    for beta in range(r):
                        positions = [inner + alpha * r + beta for alpha in range(e)]
                        for gamma in range(s.mult):
                            out.append((("d", j), [offset + perm[x] * s.mult + gamma for x in positions]))
                    inner += e * r
            else:
                label = ("d", p.j) if isinstance(p, Delta) else point_key(p)
                dim = self.spec.point_size(p)
                for gamma in range(s.mult):
                    out.append((label, [offset + alpha * s.mult + gamma for alpha in range(dim)]))
            offset += self.spec.point_size(p) * s.mult
        for z in range(self.pad):
            out.append((("z",), [offset + z]))
        return out

    def label_counts(self) -> dict:
        counts: dict = defaultdict(int)
        for label, _ in self.copies():
            counts[label] += 1
        return dict(sorted(counts.items(), key=lambda kv: repr(kv[0])))

    def spectrum(self) -> SpectrumMultiset:
        deltas = [0] * self.spec.l
        points: list[list[float]] = [[] for _ in range(self.spec.k)]
        for s in self.summands:
            p = s.point
            if isinstance(p, Delta):
                deltas[p.j] += s.mult
            elif isinstance(p, Endpoint):
                for j, r in enumerate(self.spec.mult(p.side)[p.i]):
                    deltas[j] += r * s.mult
            else:
                points[p.i].extend([p.t] * s.mult)
        return SpectrumMultiset(tuple(deltas), tuple(tuple(sorted(ps)) for ps in points))


def match_forms(a: DiagonalForm, b: DiagonalForm, where: str = "breakpoint") -> np.ndarray:
    """
    Permutation π with D_b = P D_a P^T, P[π[x], x] = 1.

    Copies are paired by label in order of appearance, which keeps the result
    deterministic.

    Raises:
        NoMatchingPermutation: if the labelled multisets differ
    """
    groups_a: dict = defaultdict(list)
    groups_b: dict = defaultdict(list)
    for label, pos in a.copies():
        groups_a[label].append(pos)
    for label, pos in b.copies():
        groups_b[label].append(pos)
    if a.size != b.size or {k: len(v) for k, v in groups_a.items()} != {k: len(v) for k, v in groups_b.items()}:
        raise NoMatchingPermutation(where, a.label_counts(), b.label_counts())
    perm = np.zeros(a.size, dtype=int)
    for label, positions in groups_a.items():
        for pa, pb in zip(positions, groups_b[label]):
            perm[pa] = pb
    return perm


def match_matrix(a: DiagonalForm, b: DiagonalForm, where: str = "breakpoint") -> np.ndarray:
    return permutation_matrix(match_forms(a, b, where))


@dataclass(frozen=True)
class SpectrumMultiset:
    delta_mults: tuple[int, ...]
    interior_points: tuple[tuple[float, ...], ...]

    def matches(self, other: SpectrumMultiset, tol: float = POINT_TOL) -> bool:
        if self.delta_mults != other.delta_mults:
            return False
        for xs, ys in zip(self.interior_points, other.interior_points):
            if len(xs) != len(ys) or any(abs(x - y) > tol for x, y in zip(xs, ys)):
                return False
        return True

    def to_json(self) -> dict:
        return {"delta": list(self.delta_mults), "interior": [list(ps) for ps in self.interior_points]}


@dataclass(frozen=True, eq=False)
class HomToMatrix:
    spec: ComplexSpec
    n: int
    s_vec: tuple[int, ...]
    points: tuple[SpecPoint, ...] = ()
    pad: int = 0
    conjugator: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "s_vec", tuple(int(s) for s in self.s_vec))
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.s_vec) != self.spec.l or any(s < 0 for s in self.s_vec):
            raise MalformedHom(f"s needs {self.spec.l} nonnegative entries, got {list(self.s_vec)}")
        if self.pad < 0:
            raise MalformedHom("pad must be nonnegative")
        for p in self.points:
            if isinstance(p, Delta):
                raise MalformedHom("Delta points belong in s, not in points")
            try:
                self.spec.check_point(p)
            except ComplexError as exc:
                raise MalformedHom(str(exc)) from exc
        if self.form.size != self.n:
            raise MalformedHom(f"Spectral data fills {self.form.size} rows, target size is {self.n}")
        if self.conjugator is not None:
            u = np.asarray(self.conjugator, dtype=complex)
            if u.shape != (self.n, self.n) or not is_unitary(u, 1e-8):
                raise MalformedHom("Conjugator must be an n×n unitary")
            object.__setattr__(self, "conjugator", u)

    @property
    def unital(self) -> bool:
        return self.pad == 0

    @property
    def u(self) -> np.ndarray:
        return np.eye(self.n, dtype=complex) if self.conjugator is None else self.conjugator

    @property
    def form(self) -> DiagonalForm:
        summands = [Summand(Delta(j), s) for j, s in enumerate(self.s_vec) if s > 0]
        summands += [Summand(p) for p in self.points]
        return DiagonalForm(self.spec, tuple(summands), self.pad)

    def __call__(self, el: Element) -> np.ndarray:
        return eval_hom(self, el)

    def conjugated(self, u: np.ndarray) -> HomToMatrix:
        return HomToMatrix(self.spec, self.n, self.s_vec, self.points, self.pad, np.asarray(u) @ self.u)

    def with_spec(self, spec: ComplexSpec, conjugator: Optional[np.ndarray] = None) -> HomToMatrix:
        return HomToMatrix(spec, self.n, self.s_vec, self.points, self.pad,
                           self.conjugator if conjugator is None else conjugator)

    def to_json(self) -> dict:
        points = []
        for p in self.points:
            if isinstance(p, Interior):
                points.append({"i": p.i + 1, "t": p.t})
            else:
                points.append({"i": p.i + 1, "side": p.side})
        data = {"n": self.n, "s": list(self.s_vec), "points": points, "pad": self.pad}
        if self.conjugator is not None:
            data["u"] = matrix_to_json(self.conjugator)
        return data

    @classmethod
    def from_json(cls, spec: ComplexSpec, data: dict) -> HomToMatrix:
        points: list[SpecPoint] = []
        for p in data.get("points", []):
            if "t" in p:
                points.append(Interior(int(p["i"]) - 1, float(p["t"])))
            else:
                points.append(Endpoint(int(p["i"]) - 1, int(p["side"])))
        u = matrix_from_json(data["u"]) if "u" in data else None
        return cls(spec, int(data["n"]), tuple(data["s"]), tuple(points), int(data.get("pad", 0)), u)


def eval_hom(h: HomToMatrix, el: Element) -> np.ndarray:
    if el.spec != h.spec:
        raise SpecMismatch("Element and homomorphism live on different complexes")
    u = h.u
    return u @ h.form.evaluate(el) @ u.conj().T


def spectrum_of(h: HomToMatrix) -> SpectrumMultiset:
    return h.form.spectrum()


def pair_point_multisets(
    xs: Sequence[float], ys: Sequence[float], eta: float
) -> Optional[list[tuple[float, float]]]:
    """Sorted matching, optimal for points on a line; None if some gap reaches eta."""
    if len(xs) != len(ys):
        return None
    pairs = list(zip(sorted(xs), sorted(ys)))
    if any(abs(x - y) >= eta for x, y in pairs):
        return None
    return pairs


@dataclass(frozen=True)
class BlockPairing:
    i: int
    X: tuple[float, ...]
    X_prime: tuple[float, ...]
    pairs: tuple[tuple[float, float], ...]

    def to_json(self) -> dict:
        return {
            "component": self.i + 1,
            "X": list(self.X),
            "X_prime": list(self.X_prime),
            "pairs": [list(p) for p in self.pairs],
        }


@dataclass(frozen=True)
class PairingResult:
    m: int
    eta: float
    worst_gap: float
    blocks: tuple[BlockPairing, ...]

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "eta": self.eta,
            "worst_gap": self.worst_gap,
            "components": [b.to_json() for b in self.blocks],
        }


def eigen_gap(phi: HomToMatrix, psi: HomToMatrix, h: Element) -> float:
    return float(np.max(np.abs(eig_sorted(phi(h), 1e-8) - eig_sorted(psi(h), 1e-8)), initial=0.0))


def _extract(i: int, points: Sequence[float], points_prime: Sequence[float], eta: float) -> BlockPairing:
    greedy = pair_point_multisets(points, points_prime, 2 * eta)
    if greedy is not None:
        return BlockPairing(i, tuple(sorted(points)), tuple(sorted(points_prime)), tuple(greedy))

    def split(ps: Sequence[float]) -> tuple[list[float], list[float]]:
        core = [p for p in ps if eta <= p <= 1.0 - eta]
        zone = [p for p in ps if not eta <= p <= 1.0 - eta]
        return core, zone

    core, zone = split(points)
    core_p, zone_p = split(points_prime)
    if len(zone) + len(zone_p) > ZONE_SEARCH_LIMIT:
        raise ExtractionFailed(i)
    lo = max(len(core), len(core_p))
    hi = min(len(core) + len(zone), len(core_p) + len(zone_p))
    for size in range(hi, lo - 1, -1):
        for sub in itertools.combinations(zone, size - len(core)):
            xs = sorted(core + list(sub))
            for sub_p in itertools.combinations(zone_p, size - len(core_p)):
                ys = sorted(core_p + list(sub_p))
                pairs = pair_point_multisets(xs, ys, 2 * eta)
                if pairs is not None:
                    return BlockPairing(i, tuple(xs), tuple(ys), tuple(pairs))
    raise ExtractionFailed(i)


def lemma_pairing(
    phi: HomToMatrix,
    psi: HomToMatrix,
    m: int,
    eps: float = 1.0,
    *,
    grid_size: int = DEFAULT_GRID,
    mode: str = "contiguous",
    tests: Optional[Sequence[Element]] = None,
) -> PairingResult:
    """
    Pair interior spectra of two close homomorphisms.

    Checks that Eig(φ(h)) and Eig(ψ(h)) pair within eps on H(1/m), then
    returns per component Xᵢ ⊇ Sp(φ)∩[η,1-η]ᵢ, X'ᵢ ⊇ Sp(ψ)∩[η,1-η]ᵢ and a
    bijection moving no point by 2η or more.

    Raises:
        HypothesisFailed: if some test element separates the eigenvalues
        ExtractionFailed: if no admissible subsets exist
    """
    if phi.spec != psi.spec or phi.n != psi.n:
        raise SpecMismatch("Homomorphisms must share source complex and target size")
    eta = 1.0 / m
    family = build_H(phi.spec, m, mode, grid_size) if tests is None else tests
    worst = 0.0
    for h in family:
        gap = eigen_gap(phi, psi, h)
        if gap >= eps:
            raise HypothesisFailed(h.label, gap)
        worst = max(worst, gap)

    sp, sq = spectrum_of(phi), spectrum_of(psi)
    blocks = []
    for i in range(phi.spec.k):
        block = _extract(i, sp.interior_points[i], sq.interior_points[i], eta)
        if not all(x in block.X for x in sp.interior_points[i] if eta <= x <= 1 - eta):
            raise ExtractionFailed(i)
        if not all(x in block.X_prime for x in sq.interior_points[i] if eta <= x <= 1 - eta):
            raise ExtractionFailed(i)
        if any(abs(x - y) >= 2 * eta for x, y in block.pairs):
            raise ExtractionFailed(i)
        blocks.append(block)
    LOGGER.debug(f"Pairing at m={m}: worst eigenvalue gap {worst:.3e}")
    return PairingResult(m=m, eta=eta, worst_gap=worst, blocks=tuple(blocks))


@dataclass(frozen=True)
class AdmissibleSpectrum:
    s_vec: tuple[int, ...]
    counts: tuple[int, ...]
    pad: int = 0

    def to_json(self) -> dict:
        return {"s": list(self.s_vec), "c": list(self.counts), "pad": self.pad}


def enumerate_admissible_spectra(
    spec: ComplexSpec, n: int, unital: bool = True, bound: int = DEFAULT_HOM_BOUND
) -> list[AdmissibleSpectrum]:
    """All (s, c, pad) with Σ eⱼsⱼ + Σ fᵢcᵢ + pad = n, pad = 0 when unital."""
    if n > bound:
        raise BoundExceeded(f"Target size {n} exceeds the enumeration bound {bound}")
    sizes = list(spec.e_shape.sizes) + list(spec.f_shape.sizes)
    out = []

    def walk(idx: int, remaining: int, chosen: list[int]) -> None:
        if idx == len(sizes):
            if remaining == 0 or not unital:
                out.append(AdmissibleSpectrum(tuple(chosen[: spec.l]), tuple(chosen[spec.l:]), remaining))
            return
        for c in range(remaining // sizes[idx] + 1):
            walk(idx + 1, remaining - c * sizes[idx], chosen + [c])

    walk(0, n, [])
    return sorted(out, key=lambda a: (a.counts, a.s_vec, a.pad))


def hom_from_admissible(spec: ComplexSpec, adm: AdmissibleSpectrum) -> HomToMatrix:
    """A representative with the given spectrum shape; the c_i interior points of block i sit at r/(c_i+1)."""
    points = [Interior(i, (r + 1) / (c + 1)) for i, c in enumerate(adm.counts) for r in range(c)]
    n = sum(e * s for e, s in zip(spec.e_shape.sizes, adm.s_vec))
    n += sum(f * c for f, c in zip(spec.f_shape.sizes, adm.counts)) + adm.pad
    return HomToMatrix(spec, n, adm.s_vec, tuple(points), adm.pad)


def is_maximally_homogeneous_at(h: HomToMatrix) -> bool:
    sp = spectrum_of(h)
    if any(d > 1 for d in sp.delta_mults):
        return False
    return all(b - a > POINT_TOL for ps in sp.interior_points for a, b in zip(ps, ps[1:]))


def is_limit_of_max_homogeneous(h: HomToMatrix) -> bool:
    """
    Whether whole endpoint fibres can be extracted from the delta multiset so
    that every residual delta multiplicity is at most one.
    """
    if not h.unital:
        raise NotUnitalHom("Limit criterion needs a unital homomorphism")
    return _extraction_exists(h.spec, spectrum_of(h).delta_mults)


def _extraction_exists(spec: ComplexSpec, deltas: Sequence[int]) -> bool:
    fibres = [spec.mult(side)[i] for i in range(spec.k) for side in (0, 1)]

    def search(idx: int, residual: tuple[int, ...]) -> bool:
        if all(r <= 1 for r in residual):
            return True
        if idx == len(fibres):
            return False
        row = fibres[idx]
        most = min(residual[j] // r for j, r in enumerate(row) if r > 0)
        for x in range(most, -1, -1):
            if search(idx + 1, tuple(d - x * r for d, r in zip(residual, row))):
                return True
        return False

    return search(0, tuple(deltas))
