from __future__ import annotations

import pytest

from nccw.complex import ComplexSpec, unit_element
from nccw.examples import (
    COMPLEXES,
    DATA_FILES,
    UnknownExample,
    c3_m3,
    data_path,
    load_bundled,
    resolve,
    z23,
)
from nccw.homspec import HomToMatrix
from nccw.standard import StandardMapToComplex, StandardMapToMatrix, default_probes, validate_standard


class TestResolve:
    def test_prefix_is_optional(self):
        assert resolve("builtin:z23") == resolve("z23") == z23()

    def test_kinds(self):
        assert isinstance(resolve("builtin:phi0"), HomToMatrix)
        assert isinstance(resolve("builtin:example-map"), StandardMapToMatrix)
        assert isinstance(resolve("builtin:z23-z25"), StandardMapToComplex)

    def test_unknown_lists_known_names(self):
        with pytest.raises(UnknownExample) as exc:
            resolve("builtin:torus")
        assert "torus" in str(exc.value)
        assert "z23" in str(exc.value)


@pytest.mark.parametrize("name", sorted(DATA_FILES))
def test_bundled_file_matches_builtin(name):
    loaded = load_bundled(name)
    if isinstance(loaded, ComplexSpec):
        assert loaded == COMPLEXES[name]()
    else:
        assert isinstance(loaded, StandardMapToMatrix)


def test_data_path_unknown():
    with pytest.raises(UnknownExample):
        data_path("z99")


def test_c3_m3_boundary_maps(grid):
    spec = c3_m3()
    assert spec.mult1 == ((2, 1, 0),)
    assert spec.beta(1, unit_element(spec, grid).e_part).allclose(unit_element(spec, grid).at(1.0))


@pytest.mark.parametrize("name", ["example-map", "c3-m4"])
def test_bundled_maps_validate(name, grid):
    sm = resolve(name)
    result = validate_standard(sm, default_probes(sm.spec, grid))
    assert result.breakpoint_residual < 1e-8
