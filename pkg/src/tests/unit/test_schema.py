from __future__ import annotations

import json

import pytest

from nccw.complex import NotUnital
from nccw.examples import z23_z25_map
from nccw.homspec import HomToMatrix
from nccw.schema import INPUT_ERRORS, SchemaError, check_document, load_document, parse_spec
from nccw.standard import StandardMapToComplex

Z23 = {"name": "Z2,3", "e": [2, 3], "f": [6], "mult0": [[3, 0]], "mult1": [[0, 2]]}


def _write(tmp_path, data, name="input.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


class TestCheckDocument:
    def test_valid_complex(self):
        check_document(Z23, "complex")

    def test_missing_field(self):
        data = {k: v for k, v in Z23.items() if k != "mult1"}
        with pytest.raises(SchemaError, match="mult1") as exc:
            check_document(data, "complex", "z.json")
        assert exc.value.pointer == ""
        assert exc.value.path == "z.json"

    def test_pointer_names_bad_entry(self):
        with pytest.raises(SchemaError) as exc:
            check_document({**Z23, "e": [2, 0]}, "complex")
        assert exc.value.pointer == "/e/1"

    def test_unknown_property(self):
        with pytest.raises(SchemaError, match="colour"):
            check_document({**Z23, "colour": "red"}, "complex")

    def test_point_needs_t_or_side(self):
        doc = {"source": Z23, "hom": {"n": 6, "s": [0, 0], "points": [{"i": 1}]}}
        with pytest.raises(SchemaError) as exc:
            check_document(doc, "hom")
        assert exc.value.pointer == "/hom/points/0"

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            check_document(Z23, "tensor")


class TestLoadDocument:
    def test_file_not_found(self, tmp_path):
        with pytest.raises(SchemaError, match="file not found"):
            load_document(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        with pytest.raises(SchemaError, match="invalid JSON at line 1"):
            load_document(path)


class TestParseSpec:
    def test_complex(self, tmp_path, z23_spec):
        assert parse_spec(_write(tmp_path, Z23), "complex") == z23_spec

    def test_hom(self, tmp_path):
        doc = {"source": Z23, "hom": {"n": 10, "s": [2, 0], "points": [{"i": 1, "t": 0.5}]}}
        h = parse_spec(_write(tmp_path, doc), "hom")
        assert isinstance(h, HomToMatrix)
        assert h.n == 10
        assert h.unital

    def test_complex_map_roundtrip(self, tmp_path):
        doc = z23_z25_map().to_json()
        phi = parse_spec(_write(tmp_path, doc), "standard")
        assert isinstance(phi, StandardMapToComplex)
        assert phi.target == z23_z25_map().target
        assert len(phi.e_maps) == 2

    def test_construction_error_keeps_its_type(self, tmp_path):
        doc = {"e": [1], "f": [1], "mult0": [[0]], "mult1": [[1]]}
        with pytest.raises(NotUnital):
            parse_spec(_write(tmp_path, doc), "complex")

    def test_input_errors_cover_both_stages(self):
        assert SchemaError in INPUT_ERRORS
        assert issubclass(NotUnital, INPUT_ERRORS)
