from __future__ import annotations

import numpy as np
import pytest

from nccw.cartan import (
    CartanError,
    StagePair,
    VPath,
    check_diagonal_preservation,
    diagonal_probes,
    expectation,
    is_diagonal_member,
    is_normalizer,
    normalizer_probes,
    op_norm_sup,
    rebase_blocks,
    rebase_chain,
    verify_cartan_sample,
)
from nccw.complex import random_element, unit_element
from nccw.examples import z23_z25_map, z25_identity


class TestDiagonal:
    def test_unit_is_diagonal(self, z23_spec, grid):
        assert is_diagonal_member(unit_element(z23_spec, grid))

    def test_random_element_is_not(self, z25_spec, grid):
        assert not is_diagonal_member(random_element(z25_spec, 0, grid))

    def test_probes_are_diagonal(self, example_spec, grid):
        probes = diagonal_probes(example_spec, grid)
        assert probes[0].label == "unit"
        assert all(is_diagonal_member(d) for d in probes)


class TestExpectation:
    def test_idempotent(self, z23_spec, grid):
        a = random_element(z23_spec, 1, grid, hermitian=False)
        ea = expectation(a)
        assert is_diagonal_member(ea)
        assert op_norm_sup(expectation(ea) - ea) < 1e-12

    def test_contractive(self, example_spec, grid):
        for seed in range(3):
            a = random_element(example_spec, seed, grid, hermitian=False)
            assert op_norm_sup(expectation(a)) <= op_norm_sup(a) + 1e-12

    def test_faithful_on_positive(self, z25_spec, grid):
        a = random_element(z25_spec, 2, grid, hermitian=False)
        aa = a.adjoint() @ a
        assert expectation(aa).min_eigenvalue() >= -1e-12
        assert op_norm_sup(expectation(aa)) > 0


class TestNormalizers:
    def test_shift_probes_normalize(self, z23_spec, grid):
        diag = diagonal_probes(z23_spec, grid)
        for n in normalizer_probes(z23_spec, grid):
            assert is_normalizer(n, diag), n.label

    def test_random_element_does_not(self, z23_spec, grid):
        diag = diagonal_probes(z23_spec, grid)
        assert not is_normalizer(random_element(z23_spec, 0, grid), diag)


def test_cartan_pair(bundled_spec, grid):
    results = verify_cartan_sample(bundled_spec, grid, trials=2)
    assert [r.hypothesis for r in results] == [
        "maximal abelian",
        "faithful expectation",
        "regular",
        "expectation properties",
    ]
    failed = [r.to_json() for r in results if not r.passed]
    assert not failed


class TestVPath:
    def test_trivial_path_keeps_complex(self, z23_spec):
        v = VPath(z23_spec)
        assert v.twisted() is z23_spec
        assert np.allclose(v.at(0, 0.3), np.eye(6))
        assert v.endpoint_perm(0, 0) == tuple(range(6))


class TestRebase:
    def test_single_stage(self, grid):
        rs = rebase_blocks(StagePair.from_map(z23_z25_map(), grid), grid_size=grid)
        assert rs.square_residual < 1e-6
        assert rs.rebased.params["rebased"]
        doc = rs.to_json()
        assert len(doc["C"]) == 1
        assert all(r.passed for r in check_diagonal_preservation(rs.rebased, grid))

    def test_chain_preserves_diagonals(self, grid):
        chain = rebase_chain([z23_z25_map(), z25_identity()], grid)
        assert len(chain) == 2
        assert chain[0].rebased.target == chain[1].rebased.source
        for rs in chain:
            assert rs.square_residual < 1e-6
            results = check_diagonal_preservation(rs.rebased, grid)
            assert [r.hypothesis for r in results] == [
                "diagonal preserved",
                "normalizers preserved",
                "expectations intertwined",
            ]
            assert all(r.passed for r in results)

    def test_chain_must_compose(self, grid):
        with pytest.raises(CartanError, match="intermediate"):
            rebase_chain([z25_identity(), z23_z25_map()], grid)
