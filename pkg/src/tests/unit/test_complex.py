from __future__ import annotations

import numpy as np
import pytest

from nccw.complex import (
    BoundaryMismatch,
    ComplexError,
    ComplexSpec,
    Delta,
    DiscontinuitySuspected,
    Endpoint,
    GridMismatch,
    Interior,
    MalformedSpec,
    NotInjectiveBeta,
    NotUnital,
    Element,
    basis_topology_neighborhood,
    build_complex,
    cokernel,
    dimension_drop,
    endpoint_fibre,
    function_element,
    k1_group,
    k1_is_trivial,
    k_matrices,
    make_element,
    random_element,
    sup_norm,
    unit_element,
    zero_element,
)
from nccw.findim import BlockMatrix, op_norm


def _ramp_down(spec: ComplexSpec, grid: int) -> Element:
    """f(t) = (1 - t) I₆ on Z₂,₃ with a = (I₂, 0)."""
    e_part = BlockMatrix(spec.e_shape, (np.eye(2), np.zeros((3, 3))))
    return function_element(
        spec, lambda t: BlockMatrix(spec.f_shape, ((1.0 - t) * np.eye(6),)), e_part, grid
    )


class TestBuildComplex:
    def test_dimension_drop_shape(self, z23_spec):
        assert z23_spec.e_shape.sizes == (2, 3)
        assert z23_spec.f_shape.sizes == (6,)
        assert z23_spec.mult0 == ((3, 0),)
        assert z23_spec.mult1 == ((0, 2),)
        assert z23_spec.name == "Z2,3"

    def test_not_unital_names_row(self):
        with pytest.raises(NotUnital, match="F-block 1") as exc:
            build_complex((1,), (1,), ((0,),), ((1,),))
        assert exc.value.side == 0
        assert exc.value.row == 0

    def test_not_injective_beta(self):
        with pytest.raises(NotInjectiveBeta) as exc:
            build_complex((1, 1), (1,), ((1, 0),), ((1, 0),))
        assert exc.value.index == 1

    def test_wrong_row_count(self):
        with pytest.raises(MalformedSpec, match="rows"):
            build_complex((1,), (1,), ((1,), (1,)), ((1,),))

    def test_negative_multiplicity(self):
        with pytest.raises(MalformedSpec, match="nonnegative"):
            build_complex((1,), (1,), ((-1,),), ((1,),))

    def test_bad_permutation(self):
        with pytest.raises(MalformedSpec):
            build_complex((1,), (2,), ((2,),), ((2,),), perm0=[[1, 1]])

    def test_json_roundtrip(self, bundled_spec):
        again = ComplexSpec.from_json(bundled_spec.to_json())
        assert again == bundled_spec

    def test_name_does_not_affect_equality(self):
        assert dimension_drop(2, 3) == build_complex((2, 3), (6,), ((3, 0),), ((0, 2),), name="other")


class TestBoundaryMaps:
    def test_beta_of_unit_is_unit(self, bundled_spec):
        unit = BlockMatrix.identity(bundled_spec.e_shape)
        for side in (0, 1):
            assert bundled_spec.beta(side, unit).allclose(BlockMatrix.identity(bundled_spec.f_shape))

    def test_dimension_drop_beta1(self, z23_spec):
        b = np.diag([1.0, 2.0, 3.0])
        a = BlockMatrix(z23_spec.e_shape, (np.zeros((2, 2)), b))
        assert np.allclose(z23_spec.beta_block(1, a, 0), np.kron(b, np.eye(2)))

    def test_check_point_rejects_interior_endpoint(self, z23_spec):
        with pytest.raises(MalformedSpec):
            z23_spec.check_point(Interior(0, 1.0))


class TestKTheory:
    def test_k_matrices(self, example_spec):
        data = k_matrices(example_spec)
        assert data.alpha == ((1, 0, 1),)
        assert data.beta == ((0, 1, 1),)

    def test_dimension_drop_trivial(self, z23_spec):
        group = k1_group(z23_spec)
        assert group.free_rank == 0
        assert group.torsion == ()
        assert k1_is_trivial(z23_spec)

    def test_circle_has_free_rank_one(self, circle_spec):
        group = k1_group(circle_spec)
        assert group.free_rank == 1
        assert not k1_is_trivial(circle_spec)

    def test_two_points_one_interval(self):
        assert k1_is_trivial(build_complex((1, 1), (1,), ((1, 0),), ((0, 1),)))

    def test_torsion(self):
        # alpha - beta = [2, -2] has cokernel Z/2
        spec = build_complex((1, 1), (2,), ((2, 0),), ((0, 2),))
        group = k1_group(spec)
        assert group.free_rank == 0
        assert group.torsion == (2,)

    def test_equal_boundary_maps_leave_free_rank(self):
        spec = build_complex((1,), (3,), ((3,),), ((3,),))
        assert k1_group(spec).free_rank == 1

    def test_cokernel_of_plain_matrix(self):
        assert cokernel([[2, 4]]).torsion == (2,)
        assert cokernel([[1, 0], [0, 0]]).free_rank == 1
        assert cokernel([[1, 2], [3, 5]]).trivial


class TestTopology:
    def test_endpoint_fibre(self, z23_spec):
        assert endpoint_fibre(z23_spec, 0, 0) == (Delta(0),) * 3
        assert endpoint_fibre(z23_spec, 0, 1) == (Delta(1),) * 2

    def test_neighborhood_left_only(self, z23_spec):
        nb = basis_topology_neighborhood(z23_spec, 0, 0.1)
        assert nb.arcs == ((0, 0, (0.0, 0.1)),)

    def test_neighborhood_right_only(self, z23_spec):
        nb = basis_topology_neighborhood(z23_spec, 1, 0.1)
        assert [side for _, side, _ in nb.arcs] == [1]

    def test_neighborhood_both_sides(self, example_spec):
        nb = basis_topology_neighborhood(example_spec, 2, 0.25)
        assert [side for _, side, _ in nb.arcs] == [0, 1]

    def test_radius_out_of_range(self, z23_spec):
        with pytest.raises(ComplexError, match="radius"):
            basis_topology_neighborhood(z23_spec, 0, 1.5)


class TestElements:
    def test_ramp_down_element(self, z23_spec, grid):
        el = _ramp_down(z23_spec, grid)
        assert sup_norm(el) == pytest.approx(1.0)
        assert np.allclose(el.at(0.5).blocks[0], 0.5 * np.eye(6))
        assert np.allclose(el.evaluate(Endpoint(0, 0)), np.eye(6))
        assert np.allclose(el.evaluate(Delta(0)), np.eye(2))

    def test_constant_identity_breaks_boundary(self, z23_spec, grid):
        e_part = BlockMatrix(z23_spec.e_shape, (np.eye(2), np.zeros((3, 3))))
        with pytest.raises(BoundaryMismatch) as exc:
            function_element(z23_spec, lambda t: BlockMatrix(z23_spec.f_shape, (np.eye(6),)), e_part, grid)
        assert exc.value.side == 1

    def test_jump_is_rejected(self, z23_spec, grid):
        e_part = BlockMatrix(z23_spec.e_shape, (np.eye(2), np.zeros((3, 3))))
        samples = [
            BlockMatrix(z23_spec.f_shape, ((np.eye(6) if t < 0.5 else np.zeros((6, 6))),))
            for t in np.linspace(0.0, 1.0, grid + 1)
        ]
        with pytest.raises(DiscontinuitySuspected):
            make_element(z23_spec, samples, e_part, kappa=1.0)

    def test_grid_mismatch(self, z23_spec, grid):
        el = unit_element(z23_spec, grid)
        with pytest.raises(GridMismatch):
            make_element(z23_spec, el.f_samples, el.e_part, grid_size=grid * 2)

    def test_interpolation_between_nodes(self, z23_spec):
        el = _ramp_down(z23_spec, 12)
        assert np.allclose(el.block_at(0, 1.0 / 24.0), (1.0 - 1.0 / 24.0) * np.eye(6))

    def test_algebra_operations(self, z23_spec, grid):
        el = _ramp_down(z23_spec, grid)
        square = el @ el
        assert np.allclose(square.at(0.5).blocks[0], 0.25 * np.eye(6))
        diff = el - el
        assert sup_norm(diff) == pytest.approx(0.0)
        assert sup_norm(2.0 * el) == pytest.approx(2.0)

    def test_unit_and_zero(self, bundled_spec, grid):
        assert sup_norm(unit_element(bundled_spec, grid)) == pytest.approx(1.0)
        assert sup_norm(zero_element(bundled_spec, grid)) == 0.0

    def test_random_element_is_seeded(self, example_spec, grid):
        a = random_element(example_spec, 3, grid)
        b = random_element(example_spec, 3, grid)
        assert a.label == "random:3"
        assert sup_norm(a - b) == 0.0
        assert op_norm(a.e_part - random_element(example_spec, 4, grid).e_part) > 0

    def test_random_element_is_hermitian(self, z25_spec, grid):
        a = random_element(z25_spec, 0, grid)
        assert sup_norm(a - a.adjoint()) < 1e-12

    def test_json_roundtrip(self, example_spec):
        a = random_element(example_spec, 1, 12)
        b = Element.from_json(example_spec, a.to_json())
        assert sup_norm(a - b) < 1e-12
        assert b.label == a.label
