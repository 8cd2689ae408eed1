from __future__ import annotations

import numpy as np
import pytest

from nccw.complex import Delta, Endpoint, Interior, function_element, random_element, unit_element
from nccw.examples import phi0, phi1
from nccw.findim import BlockMatrix, op_norm, permutation_matrix
from nccw.homspec import (
    AdmissibleSpectrum,
    BlockPairing,
    BoundExceeded,
    DiagonalForm,
    ExtractionFailed,
    HomToMatrix,
    HypothesisFailed,
    MalformedHom,
    NoMatchingPermutation,
    NotUnitalHom,
    eigen_gap,
    enumerate_admissible_spectra,
    hom_from_admissible,
    is_limit_of_max_homogeneous,
    is_maximally_homogeneous_at,
    lemma_pairing,
    match_forms,
    pair_point_multisets,
    spectrum_of,
)


def _hom(spec, *points: float) -> HomToMatrix:
    return HomToMatrix(spec, 6 * len(points), (0, 0), tuple(Interior(0, x) for x in points))


class TestHomToMatrix:
    def test_evaluation_is_block_diagonal(self, z23_spec, grid):
        e_part = BlockMatrix(z23_spec.e_shape, (np.eye(2), np.zeros((3, 3))))
        el = function_element(
            z23_spec, lambda t: BlockMatrix(z23_spec.f_shape, ((1.0 - t) * np.eye(6),)), e_part, grid
        )
        h = HomToMatrix(z23_spec, 10, (2, 0), (Interior(0, 0.5),))
        expected = np.diag([1.0] * 4 + [0.5] * 6)
        assert np.allclose(h(el), expected)

    def test_unital_hom_preserves_unit(self, z23_spec, grid):
        h = HomToMatrix(z23_spec, 10, (2, 0), (Interior(0, 0.5),))
        assert h.unital
        assert np.allclose(h(unit_element(z23_spec, grid)), np.eye(10))

    def test_padding_is_not_unital(self, z23_spec, grid):
        h = HomToMatrix(z23_spec, 5, (1, 1), (), pad=0)
        padded = HomToMatrix(z23_spec, 7, (1, 1), (), pad=2)
        assert h.unital and not padded.unital
        assert np.allclose(padded(unit_element(z23_spec, grid)), np.diag([1.0] * 5 + [0.0] * 2))

    def test_size_mismatch(self, z23_spec):
        with pytest.raises(MalformedHom, match="fills 6 rows"):
            HomToMatrix(z23_spec, 7, (0, 0), (Interior(0, 0.5),))

    def test_delta_in_points(self, z23_spec):
        with pytest.raises(MalformedHom, match="Delta"):
            HomToMatrix(z23_spec, 2, (0, 0), (Delta(0),))

    def test_point_out_of_range(self, z23_spec):
        with pytest.raises(MalformedHom):
            HomToMatrix(z23_spec, 6, (0, 0), (Interior(1, 0.5),))

    def test_conjugator_must_be_unitary(self, z23_spec):
        with pytest.raises(MalformedHom, match="unitary"):
            HomToMatrix(z23_spec, 2, (1, 0), (), conjugator=np.ones((2, 2)))

    def test_conjugated_evaluation(self, example_spec, grid):
        h = HomToMatrix(example_spec, 3, (1, 1, 1))
        u = permutation_matrix((2, 0, 1))
        el = random_element(example_spec, 0, grid)
        assert np.allclose(h.conjugated(u)(el), u @ h(el) @ u.T)

    def test_json_roundtrip(self, example_spec, grid):
        h = HomToMatrix(example_spec, 5, (1, 0, 0), (Interior(0, 0.25), Endpoint(0, 1)))
        h = h.conjugated(permutation_matrix((4, 3, 2, 1, 0)))
        again = HomToMatrix.from_json(example_spec, h.to_json())
        el = random_element(example_spec, 2, grid)
        assert op_norm(h(el) - again(el)) < 1e-12


class TestSpectrum:
    def test_endpoint_resolves_to_deltas(self, z23_spec):
        h = HomToMatrix(z23_spec, 6, (0, 0), (Endpoint(0, 0),))
        sp = spectrum_of(h)
        assert sp.delta_mults == (3, 0)
        assert sp.interior_points == ((),)

    def test_interior_points_sorted(self, z23_spec):
        sp = spectrum_of(_hom(z23_spec, 0.7, 0.2))
        assert sp.interior_points == ((0.2, 0.7),)

    def test_matches_tolerance(self, z23_spec):
        a = spectrum_of(_hom(z23_spec, 0.5))
        b = spectrum_of(_hom(z23_spec, 0.5 + 1e-12))
        c = spectrum_of(_hom(z23_spec, 0.6))
        assert a.matches(b)
        assert not a.matches(c)


class TestMatchForms:
    def test_permutation_intertwines_forms(self, z23_spec, grid):
        a = DiagonalForm.of_points(z23_spec, [Delta(0), Interior(0, 0.5)])
        b = DiagonalForm.of_points(z23_spec, [Interior(0, 0.5), Delta(0)])
        p = permutation_matrix(match_forms(a, b))
        el = random_element(z23_spec, 1, grid)
        assert np.allclose(b.evaluate(el), p @ a.evaluate(el) @ p.T)

    def test_endpoint_matches_its_fibre(self, z23_spec, grid):
        a = DiagonalForm.of_points(z23_spec, [Endpoint(0, 1)])
        b = DiagonalForm.of_points(z23_spec, [Delta(1), Delta(1)])
        p = permutation_matrix(match_forms(a, b))
        el = random_element(z23_spec, 2, grid)
        assert np.allclose(b.evaluate(el), p @ a.evaluate(el) @ p.T)

    def test_different_spectra(self, z23_spec):
        a = DiagonalForm.of_points(z23_spec, [Interior(0, 0.5)])
        b = DiagonalForm.of_points(z23_spec, [Interior(0, 0.6)])
        with pytest.raises(NoMatchingPermutation, match="t=1/2"):
            match_forms(a, b, where="t=1/2")


class TestPairing:
    def test_sorted_matching(self):
        assert pair_point_multisets([0.5, 0.1], [0.12, 0.48], 0.05) == [(0.1, 0.12), (0.5, 0.48)]

    def test_gap_too_large(self):
        assert pair_point_multisets([0.1], [0.2], 0.05) is None

    def test_length_mismatch(self):
        assert pair_point_multisets([0.1, 0.2], [0.1], 0.5) is None

    def test_lemma_pairing_close_homs(self, z23_spec, grid):
        phi = _hom(z23_spec, 0.3, 0.6)
        psi = _hom(z23_spec, 0.31, 0.61)
        result = lemma_pairing(phi, psi, 8, grid_size=grid)
        assert result.eta == pytest.approx(1 / 8)
        assert result.blocks[0].pairs == ((0.3, 0.31), (0.6, 0.61))
        assert result.worst_gap < 1.0

    def test_hypothesis_failure_names_element(self, z23_spec, grid):
        with pytest.raises(HypothesisFailed) as exc:
            lemma_pairing(_hom(z23_spec, 0.3), _hom(z23_spec, 0.7), 8, 0.1, grid_size=grid)
        assert exc.value.gap >= 0.1
        assert exc.value.label.startswith("type")

    def test_extraction_failure(self, z23_spec, grid):
        with pytest.raises(ExtractionFailed):
            lemma_pairing(_hom(z23_spec, 0.3), _hom(z23_spec, 0.7), 8, tests=())

    @pytest.mark.parametrize(
        "block",
        [
            BlockPairing(0, (0.3,), (0.7,), ((0.3, 0.7),)),
            BlockPairing(0, (), (0.7,), ()),
            BlockPairing(0, (0.3,), (), ()),
        ],
    )
    def test_inadmissible_extraction_is_rejected(self, z23_spec, monkeypatch, block):
        monkeypatch.setattr("nccw.homspec._extract", lambda *args: block)
        with pytest.raises(ExtractionFailed, match="component 1"):
            lemma_pairing(_hom(z23_spec, 0.3), _hom(z23_spec, 0.7), 8, tests=())

    def test_points_near_endpoints_may_be_dropped(self, z23_spec):
        result = lemma_pairing(_hom(z23_spec, 0.05, 0.5), _hom(z23_spec, 0.5, 0.97), 8, tests=())
        assert result.blocks[0].X == (0.5,)
        assert result.blocks[0].pairs == ((0.5, 0.5),)

    def test_eigen_gap_of_identical_homs(self, z23_spec, grid):
        h = _hom(z23_spec, 0.4)
        assert eigen_gap(h, h, random_element(z23_spec, 0, grid)) == 0.0


class TestAdmissibleSpectra:
    def test_z23_into_m10(self, z23_spec):
        found = enumerate_admissible_spectra(z23_spec, 10)
        assert found == [
            AdmissibleSpectrum((2, 2), (0,)),
            AdmissibleSpectrum((5, 0), (0,)),
            AdmissibleSpectrum((2, 0), (1,)),
        ]

    def test_none_is_limit_of_max_homogeneous(self, z23_spec):
        for adm in enumerate_admissible_spectra(z23_spec, 10):
            assert not is_limit_of_max_homogeneous(hom_from_admissible(z23_spec, adm))

    def test_non_unital_includes_padding(self, z23_spec):
        found = enumerate_admissible_spectra(z23_spec, 3, unital=False)
        assert AdmissibleSpectrum((0, 1), (0,), 0) in found
        assert AdmissibleSpectrum((1, 0), (0,), 1) in found
        assert AdmissibleSpectrum((0, 0), (0,), 3) in found

    def test_bound(self, z23_spec):
        with pytest.raises(BoundExceeded):
            enumerate_admissible_spectra(z23_spec, 100)

    def test_representative_points(self, z23_spec):
        h = hom_from_admissible(z23_spec, AdmissibleSpectrum((2, 0), (1,)))
        assert h.n == 10
        assert h.points == (Interior(0, 0.5),)


class TestHomogeneity:
    def test_phi0_is_maximally_homogeneous(self):
        assert is_maximally_homogeneous_at(phi0())

    def test_phi1_is_only_a_limit(self):
        assert not is_maximally_homogeneous_at(phi1())
        assert is_limit_of_max_homogeneous(phi1())

    def test_repeated_interior_point(self, z23_spec):
        assert not is_maximally_homogeneous_at(_hom(z23_spec, 0.5, 0.5))
        assert is_maximally_homogeneous_at(_hom(z23_spec, 0.4, 0.5))

    def test_limit_needs_unital(self, z23_spec):
        with pytest.raises(NotUnitalHom):
            is_limit_of_max_homogeneous(HomToMatrix(z23_spec, 3, (1, 0), (), pad=1))
