"""
Cartan-pair checks and rebasing of inductive sequences.

D_A is the subalgebra of elements with diagonal values in every F- and
E-block. The checks here verify the Cartan hypotheses on a fixed grid, test
whether a stage map preserves the diagonal, and rebase a chain of standard
maps so that every rebased stage is a permuted diagonal map.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sl

from nccw.complex import (
    DEFAULT_GRID,
    BoundaryMismatch,
    ComplexSpec,
    Delta,
    Element,
    Interior,
    build_complex,
    make_element,
    random_element,
    unit_element,
)
from nccw.findim import BlockMatrix, BlockPermutation, UnitaryPath, as_permutation, op_norm
from nccw.homspec import HomToMatrix
from nccw.standard import (
    ComplexDPair,
    RebaseResult,
    StandardMapToComplex,
    StandardMapToMatrix,
    StandardPiece,
    TAU_BREAK,
    eval_standard,
    grid_d_pair,
    rebase_via_theta,
)
from nccw.testfn import build_H_tilde

LOGGER = logging.getLogger(__name__)

TAU_DIAG = 1e-9
TAU_SQUARE = 1e-8
PROBE_M = 4


class CartanError(Exception):
    """Base class for Cartan and rebasing failures."""


class BoundaryBroken(CartanError):
    """Raised when a diagonal truncation leaves the algebra."""


class NotPermutation(CartanError):
    """Raised when a value that must be a permutation matrix is not one."""

    def __init__(self, where: str):
        super().__init__(f"Expected a permutation matrix at {where}")
        self.where = where


class InterpolationConflict(CartanError):
    """Raised when two interpolation knots are closer than the grid step but carry different values."""

    def __init__(self, a: float, b: float):
        super().__init__(f"Knots t={a:g} and t={b:g} are closer than one grid step with different values")
        self.a = a
        self.b = b


class SquareMismatch(CartanError):
    """Raised when the rebased stage does not intertwine with the original one."""

    def __init__(self, residual: float):
        super().__init__(f"Commuting square residual {residual:.3e} exceeds {TAU_SQUARE:g}")
        self.residual = residual


@dataclass(frozen=True)
class HypothesisResult:
    hypothesis: str
    passed: bool
    worst_residual: float
    witness: str = ""

    def to_json(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "pass": self.passed,
            "worst_residual": self.worst_residual,
            "witness": self.witness,
        }


def _off_diagonal(m: np.ndarray) -> float:
    """Largest off-diagonal modulus of a matrix or a stack of matrices."""
    m = np.asarray(m)
    if m.shape[-1] == 0:
        return 0.0
    mask = ~np.eye(m.shape[-1], dtype=bool)
    return float(np.abs(m[..., mask]).max(initial=0.0))


def is_diagonal_member(el: Element, tol: float = TAU_DIAG) -> bool:
    worst = max(
        [_off_diagonal(s) for s in el.f_samples] + [_off_diagonal(b) for b in el.e_part.blocks]
    )
    return worst <= tol


def _diag_part(m: np.ndarray) -> np.ndarray:
    d = np.zeros_like(m)
    idx = np.arange(m.shape[-1])
    d[..., idx, idx] = m[..., idx, idx]
    return d


def expectation(el: Element) -> Element:
    """Diagonal truncation E: A → D_A, applied fibrewise."""
    e_part = BlockMatrix(el.spec.e_shape, tuple(_diag_part(b) for b in el.e_part.blocks))
    try:
        return make_element(
            el.spec, tuple(_diag_part(s) for s in el.f_samples), e_part, kappa=None, label=f"E({el.label})"
        )
    except BoundaryMismatch as exc:
        raise BoundaryBroken(str(exc)) from exc


def is_normalizer(el: Element, probes: Sequence[Element], tol: float = TAU_DIAG) -> bool:
    """n d n* and n* d n are diagonal for every diagonal probe d."""
    for d in probes:
        for s, ds in zip(el.f_samples, d.f_samples):
            sh = np.conj(np.swapaxes(s, 1, 2))
            if _off_diagonal(s @ ds @ sh) > tol or _off_diagonal(sh @ ds @ s) > tol:
                return False
        for b, db in zip(el.e_part.blocks, d.e_part.blocks):
            bh = b.conj().T
            if _off_diagonal(b @ db @ bh) > tol or _off_diagonal(bh @ db @ b) > tol:
                return False
    return True


def diagonal_probes(spec: ComplexSpec, grid_size: int = DEFAULT_GRID) -> list[Element]:
    """Diagonal matrix-unit variants of H(1/4), plus the unit."""
    tilde = build_H_tilde(spec, PROBE_M, "contiguous", grid_size, form="hermitian")
    diag = [el for el in tilde if el.label.rsplit(":", 1)[-1][:1] == "e"]
    return [unit_element(spec, grid_size)] + diag


def _cyclic(n: int, shift: int) -> np.ndarray:
    return np.roll(np.eye(n), shift, axis=0)


def normalizer_probes(spec: ComplexSpec, grid_size: int = DEFAULT_GRID) -> list[Element]:
    """
    Monomial elements: a bump 4t(1-t) times a cyclic shift in one F-block, and
    for each E-block a shift at the boundary fading to zero at t = 1/2.
    """
    grid = np.linspace(0.0, 1.0, grid_size + 1)
    out = [unit_element(spec, grid_size)]
    zero_e = BlockMatrix.zeros(spec.e_shape)
    for i, fi in enumerate(spec.f_shape.sizes):
        for shift in range(fi):
            samples = [np.zeros((grid_size + 1, f, f), dtype=complex) for f in spec.f_shape.sizes]
            samples[i] = (4.0 * grid * (1.0 - grid))[:, None, None] * _cyclic(fi, shift)[None]
            out.append(make_element(spec, tuple(samples), zero_e, kappa=None, label=f"shift:f{i + 1}:{shift}"))
    for j, ej in enumerate(spec.e_shape.sizes):
        for shift in range(ej):
            blocks = [np.zeros((e, e), dtype=complex) for e in spec.e_shape.sizes]
            blocks[j] = _cyclic(ej, shift).astype(complex)
            e_part = BlockMatrix(spec.e_shape, tuple(blocks))
            left = np.clip(1.0 - 2.0 * grid, 0.0, None)
            right = np.clip(2.0 * grid - 1.0, 0.0, None)
            samples = tuple(
                left[:, None, None] * spec.beta_block(0, e_part, i)[None]
                + right[:, None, None] * spec.beta_block(1, e_part, i)[None]
                for i in range(spec.k)
            )
            out.append(make_element(spec, samples, e_part, kappa=None, label=f"shift:e{j + 1}:{shift}"))
    return out


def _commutant_dim(mats: Sequence[np.ndarray]) -> int:
    n = mats[0].shape[0]
    eye = np.eye(n)
    ops = np.vstack([np.kron(eye, m) - np.kron(m.T, eye) for m in mats])
    return sl.null_space(ops).shape[1]


def _span_rank(mats: Sequence[np.ndarray]) -> int:
    return int(np.linalg.matrix_rank(np.array([m.ravel() for m in mats]), tol=1e-9))


def verify_cartan_sample(
    spec: ComplexSpec, grid_size: int = DEFAULT_GRID, trials: int = 4, seed: int = 0
) -> list[HypothesisResult]:
    """
    Sample checks that (D_A, A) is a Cartan pair: maximal abelian, faithful
    conditional expectation, regular, and E a D_A-bimodule contraction.
    """
    diag = diagonal_probes(spec, grid_size)
    norms = normalizer_probes(spec, grid_size)
    fibre_ks = [int(round(grid_size * (c + 0.5) / PROBE_M)) for c in range(PROBE_M)]
    results = []

    worst, witness = 0, ""
    for i, fi in enumerate(spec.f_shape.sizes):
        for k in fibre_ks:
            excess = _commutant_dim([d.f_samples[i][k] for d in diag]) - fi
            if excess > worst:
                worst, witness = excess, f"F-block {i + 1} at t={k / grid_size:g}"
    for j, ej in enumerate(spec.e_shape.sizes):
        excess = _commutant_dim([d.e_part.blocks[j] for d in diag]) - ej
        if excess > worst:
            worst, witness = excess, f"E-block {j + 1}"
    results.append(HypothesisResult("maximal abelian", worst == 0, float(worst), witness))

    elements = [random_element(spec, seed + r, grid_size, hermitian=False) for r in range(trials)]
    dim = max(spec.f_shape.sizes + spec.e_shape.sizes)
    worst_f, witness = 0.0, ""
    for a in elements:
        aa = a.adjoint() @ a
        shortfall = op_norm_sup(aa) / dim - op_norm_sup(expectation(aa))
        if shortfall > worst_f:
            worst_f, witness = shortfall, a.label
    results.append(HypothesisResult("faithful expectation", worst_f <= 1e-9, worst_f, witness))

    worst, witness = 0, ""
    for i, fi in enumerate(spec.f_shape.sizes):
        for k in fibre_ks:
            prods = [n.f_samples[i][k] @ d.f_samples[i][k] for n in norms for d in diag]
            missing = fi * fi - _span_rank(prods)
            if missing > worst:
                worst, witness = missing, f"F-block {i + 1} at t={k / grid_size:g}"
    for j, ej in enumerate(spec.e_shape.sizes):
        prods = [n.e_part.blocks[j] @ d.e_part.blocks[j] for n in norms for d in diag]
        missing = ej * ej - _span_rank(prods)
        if missing > worst:
            worst, witness = missing, f"E-block {j + 1}"
    bad = [n.label for n in norms if not is_normalizer(n, diag)]
    results.append(
        HypothesisResult("regular", worst == 0 and not bad, float(worst), witness or ", ".join(bad[:3]))
    )

    worst_e, witness = 0.0, ""
    d1, d2 = diag[min(1, len(diag) - 1)], diag[-1]
    for a in elements:
        ea = expectation(a)
        checks = (
            op_norm_sup(expectation(ea) - ea),
            op_norm_sup(expectation(d1 @ a @ d2) - d1 @ ea @ d2),
            max(0.0, op_norm_sup(ea) - op_norm_sup(a)),
            max(0.0, -expectation(a.adjoint() @ a).min_eigenvalue()),
        )
        if max(checks) > worst_e:
            worst_e, witness = max(checks), a.label
    results.append(HypothesisResult("expectation properties", worst_e <= 1e-9, worst_e, witness))
    return results


def op_norm_sup(el: Element) -> float:
    """Sup over samples and E-blocks of the operator norm."""
    samples = [float(np.linalg.norm(s, ord=2, axis=(1, 2)).max()) for s in el.f_samples]
    return max(samples + [op_norm(b) for b in el.e_part.blocks])


@dataclass(frozen=True, eq=False)
class StagePair:
    """A validated stage map together with its D-pair."""

    map: StandardMapToComplex
    dpair: ComplexDPair

    @classmethod
    def from_map(cls, phi: StandardMapToComplex, grid_size: int = DEFAULT_GRID, seed: int = 0) -> StagePair:
        return cls(phi, grid_d_pair(phi, grid_size, seed))

    @property
    def source(self) -> ComplexSpec:
        return self.map.source

    @property
    def target(self) -> ComplexSpec:
        return self.map.target


def _stage_map(stage: StagePair | StandardMapToComplex) -> StandardMapToComplex:
    return stage.map if isinstance(stage, StagePair) else stage


def check_diagonal_preservation(
    stage: StagePair | StandardMapToComplex, grid_size: int = DEFAULT_GRID, trials: int = 2, seed: int = 0
) -> list[HypothesisResult]:
    """
    The three preservation hypotheses for a stage: diagonal into diagonal,
    normalizers into normalizers, and E_B ∘ φ = φ ∘ E_A, which gives
    φ(A) ∩ D_B ⊆ φ(D_A).
    """
    stage = _stage_map(stage)
    source_diag = diagonal_probes(stage.source, grid_size)
    target_diag = diagonal_probes(stage.target, grid_size)

    worst, witness = 0.0, ""
    for d in source_diag:
        image = stage.apply(d)
        off = max([_off_diagonal(s) for s in image.f_samples] + [_off_diagonal(b) for b in image.e_part.blocks])
        if off > worst:
            worst, witness = off, d.label
    results = [HypothesisResult("diagonal preserved", worst <= TAU_DIAG, worst, witness)]

    bad = [n.label for n in normalizer_probes(stage.source, grid_size) if not is_normalizer(stage.apply(n), target_diag)]
    results.append(HypothesisResult("normalizers preserved", not bad, float(len(bad)), ", ".join(bad[:3])))

    worst, witness = 0.0, ""
    for r in range(trials):
        a = random_element(stage.source, seed + r, grid_size, hermitian=False)
        residual = op_norm_sup(expectation(stage.apply(a)) - stage.apply(expectation(a)))
        if residual > worst:
            worst, witness = residual, a.label
    results.append(HypothesisResult("expectations intertwined", worst <= TAU_DIAG, worst, witness))
    return results


@dataclass(frozen=True, eq=False)
class VPath:
    """Unitary V(t) ∈ C([0,1], F) with permutation endpoints; None means V ≡ 1."""

    spec: ComplexSpec
    builder: Optional[Callable[[int, float], np.ndarray]] = None

    def at(self, i: int, t: float) -> np.ndarray:
        if self.builder is None:
            return np.eye(self.spec.f_shape.sizes[i])
        return self.builder(i, t)

    def endpoint_perm(self, i: int, side: int) -> tuple[int, ...]:
        perm = as_permutation(self.at(i, float(side)) @ self.spec.perm(side).matrix(i))
        if perm is None:
            raise NotPermutation(f"V(F{i + 1}, t={side})")
        return perm

    def twisted(self) -> ComplexSpec:
        """The complex Ā with boundary maps V(t) β_t(·) V(t)* at t = 0, 1."""
        if self.builder is None:
            return self.spec
        perms = [
            BlockPermutation(self.spec.f_shape, tuple(self.endpoint_perm(i, side) for i in range(self.spec.k)))
            for side in (0, 1)
        ]
        return build_complex(
            self.spec.e_shape.sizes, self.spec.f_shape.sizes, self.spec.mult0, self.spec.mult1,
            perm0=perms[0], perm1=perms[1], name=f"{self.spec.name}~" if self.spec.name else "",
        )


def conjugate_element(el: Element, v: VPath, twisted: ComplexSpec) -> Element:
    """Ad V: A → Ā on sampled elements."""
    grid = el.grid()
    samples = []
    for i, s in enumerate(el.f_samples):
        vs = np.stack([v.at(i, float(t)) for t in grid])
        samples.append(vs @ s @ np.conj(np.swapaxes(vs, 1, 2)))
    return make_element(twisted, tuple(samples), el.e_part, kappa=None, tol_bc=TAU_BREAK, label=el.label)


def _theta_unitary(sm: StandardMapToMatrix, q: np.ndarray, m: int, t: float, v: VPath) -> np.ndarray:
    """θ_t(V, 1) evaluated on piece m: V at F-points, the identity on E-points and padding."""
    spec = sm.spec
    piece = sm.pieces[m]

    def value(p) -> np.ndarray:
        if isinstance(p, Delta):
            return np.eye(spec.e_shape.sizes[p.j])
        if isinstance(p, Interior):
            return v.at(p.i, p.t)
        return v.at(p.i, float(p.side))

    u = piece.form_at(spec, t).evaluate_with(value)
    if piece.pad:
        u[-piece.pad:, -piece.pad:] = np.eye(piece.pad)
    return q @ u @ q.T


def _next_points(next_stage: Optional[StandardMapToComplex], i: int) -> list[float]:
    """Interior points of component i seen by the next stage at t = 0, 1 and by its E-maps."""
    if next_stage is None:
        return []
    points = set()
    for b in next_stage.blocks:
        for side in (0.0, 1.0):
            for s in b.form_at(side).summands:
                if isinstance(s.point, Interior) and s.point.i == i:
                    points.add(s.point.t)
    for h in next_stage.e_maps:
        points |= {p.t for p in h.points if isinstance(p, Interior) and p.i == i}
    return sorted(points)


@dataclass(frozen=True, eq=False)
class RebasedStage:
    original: StandardMapToComplex
    theta_rebased: RebaseResult
    dpair: ComplexDPair
    v_prev: VPath
    v_next: VPath
    c_perms: tuple[tuple[np.ndarray, ...], ...]
    z_paths: tuple[UnitaryPath, ...]
    rebased: StandardMapToComplex
    square_residual: float = 0.0
    extras: dict = field(default_factory=dict)

    def as_stage(self) -> StandardMapToComplex:
        return self.rebased

    def to_json(self) -> dict:
        return {
            "C": [[[x + 1 for x in as_permutation(c)] for c in cs] for cs in self.c_perms],
            "source_perms": [self.rebased.source.perm0.to_one_based(), self.rebased.source.perm1.to_one_based()],
            "target_perms": [self.rebased.target.perm0.to_one_based(), self.rebased.target.perm1.to_one_based()],
            "z_knots": [list(z.knots) for z in self.z_paths],
            "square_residual": self.square_residual,
            **self.theta_rebased.to_json(),
        }


def _twisted_e_map(h: HomToMatrix, v: VPath, twisted: ComplexSpec) -> HomToMatrix:
    """γ̄(ḡ) = γ(g): undo Ad V on the endpoint summands, V ≡ 1 at the interior ones."""
    parts = []
    for s in h.form.summands:
        p = s.point
        if isinstance(p, Delta):
            parts.append(np.eye(h.spec.e_shape.sizes[p.j] * s.mult))
        elif isinstance(p, Interior):
            vx = v.at(p.i, p.t)
            if op_norm(vx - np.eye(vx.shape[0])) > TAU_SQUARE:
                raise CartanError(f"V is not trivial at the E-map point {p.t:g} of component {p.i + 1}")
            parts.append(np.eye(vx.shape[0]))
        else:
            parts.append(v.at(p.i, float(p.side)).T)
    if h.pad:
        parts.append(np.eye(h.pad))
    k = sl.block_diag(*parts)
    return HomToMatrix(twisted, h.n, h.s_vec, h.points, h.pad, h.u @ k)


def rebase_blocks(
    stage: StagePair | StandardMapToComplex,
    prev: Optional[VPath] = None,
    next_stage: Optional[StandardMapToComplex] = None,
    grid_size: int = DEFAULT_GRID,
    trials: int = 2,
    seed: int = 0,
) -> RebasedStage:
    """
    Rebase one stage A_n → A_{n+1}.

    With φ = Wθ W* from the θ-rebase, builds the piecewise-constant
    permutation C, the unitary Z through W(0), C θ(V, 1)(s) at the points the
    next stage evaluates, and W(1), and V_{n+1} = C θ(V_n, 1) Z*. The rebased
    map has the same eigenvalue paths with constant unitaries C_m Q_m.

    Raises:
        NotPermutation: if C or V_{n+1}(0), V_{n+1}(1) are not permutations
        InterpolationConflict: if Z's knots collide
        SquareMismatch: if the rebased stage fails to intertwine
    """
    dp_in = stage.dpair if isinstance(stage, StagePair) else None
    stage = _stage_map(stage)
    rr = rebase_via_theta(stage, dp_in or grid_d_pair(stage, grid_size, seed))
    psi = rr.psi
    dp = grid_d_pair(psi, grid_size, seed)
    v_prev = prev if prev is not None else VPath(stage.source)
    source_bar = v_prev.twisted()

    c_perms, z_paths = [], []
    for i, (sm, pair) in enumerate(zip(psi.blocks, dp.blocks)):
        cs = [np.eye(sm.size)]
        for m in range(1, len(sm.pieces)):
            z = sm.pieces[m].interval[0]
            left = _theta_unitary(sm, pair.q_perms[m - 1], m - 1, z, v_prev)
            right = _theta_unitary(sm, pair.q_perms[m], m, z, v_prev)
            step = cs[-1] @ left @ right.conj().T
            perm = as_permutation(step)
            if perm is None:
                raise NotPermutation(f"C on F-block {i + 1} at t={z:g}")
            cs.append(np.real(step))
        c_perms.append(tuple(cs))

        knots, values = [0.0], [rr.s0[i]]
        for s in _next_points(next_stage, i):
            m = sm.piece_index(s)
            knots.append(s)
            values.append(cs[m] @ _theta_unitary(sm, pair.q_perms[m], m, s, v_prev))
        knots.append(1.0)
        values.append(rr.s1[i])
        for (a, va), (b, vb) in zip(zip(knots, values), zip(knots[1:], values[1:])):
            if b - a < 1.0 / grid_size and op_norm(va - vb) > TAU_SQUARE:
                raise InterpolationConflict(a, b)
        z_paths.append(UnitaryPath.through(knots, values))

    def v_next_at(i: int, t: float) -> np.ndarray:
        sm, pair = psi.blocks[i], dp.blocks[i]
        m = sm.piece_index(t)
        return c_perms[i][m] @ _theta_unitary(sm, pair.q_perms[m], m, t, v_prev) @ z_paths[i].at(t).conj().T

    v_next = VPath(stage.target, v_next_at)
    target_bar = v_next.twisted()

    blocks = []
    for sm, pair, cs in zip(psi.blocks, dp.blocks, c_perms):
        pieces = tuple(
            StandardPiece(p.interval, p.paths, UnitaryPath.constant(c @ q, p.interval), p.pad)
            for p, q, c in zip(sm.pieces, pair.q_perms, cs)
        )
        blocks.append(StandardMapToMatrix(source_bar, sm.size, pieces))
    e_maps = tuple(_twisted_e_map(h, v_prev, source_bar) for h in psi.e_maps)
    rebased = StandardMapToComplex(source_bar, target_bar, tuple(blocks), e_maps, {"rebased": True})

    residual = _square_residual(psi, dp, z_paths, v_prev, v_next, rebased, grid_size, trials, seed)
    if residual > TAU_SQUARE:
        raise SquareMismatch(residual)
    LOGGER.info(f"Rebased stage {stage.source.name or 'A'} → {stage.target.name or 'B'}: residual {residual:.2e}")
    return RebasedStage(
        stage, rr, dp, v_prev, v_next, tuple(c_perms), tuple(z_paths), rebased, residual
    )


def _square_residual(
    psi: StandardMapToComplex,
    dp: ComplexDPair,
    z_paths: Sequence[UnitaryPath],
    v_prev: VPath,
    v_next: VPath,
    rebased: StandardMapToComplex,
    grid_size: int,
    trials: int,
    seed: int,
) -> float:
    """sup ‖(Ad V_{n+1} ∘ Zθ Z*)(g) - ψ̂(Ad V_n g)‖ on probes, plus the E-parts."""
    probes = [unit_element(psi.source, grid_size)]
    probes += [random_element(psi.source, seed + r, grid_size) for r in range(trials)]
    worst = 0.0
    for g in probes:
        g_bar = conjugate_element(g, v_prev, rebased.source)
        for i, (pair, z, hat) in enumerate(zip(dp.blocks, z_paths, rebased.blocks)):
            for t in g.grid():
                zt = z.at(t)
                vt = v_next.at(i, t)
                lhs = vt @ zt @ pair.theta(t, g) @ zt.conj().T @ vt.conj().T
                worst = max(worst, op_norm(lhs - eval_standard(hat, float(t), g_bar)))
        for h, h_bar in zip(psi.e_maps, rebased.e_maps):
            worst = max(worst, op_norm(h(g) - h_bar(g_bar)))
    return worst


def rebase_chain(
    stages: Sequence[StagePair | StandardMapToComplex], grid_size: int = DEFAULT_GRID, trials: int = 2, seed: int = 0
) -> list[RebasedStage]:
    """Rebase A₁ → A₂ → ... in order, starting from V₁ ≡ 1."""
    stages = [_stage_map(s) for s in stages]
    for a, b in zip(stages, stages[1:]):
        if a.target != b.source:
            raise CartanError("Consecutive stages must share the intermediate complex")
    out: list[RebasedStage] = []
    v: Optional[VPath] = None
    for n, stage in enumerate(stages):
        nxt = stages[n + 1] if n + 1 < len(stages) else None
        rs = rebase_blocks(stage, prev=v, next_stage=nxt, grid_size=grid_size, trials=trials, seed=seed)
        out.append(rs)
        v = rs.v_next
    return out
