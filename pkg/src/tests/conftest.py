from __future__ import annotations

import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from nccw.complex import ComplexSpec
from nccw.examples import c3_m3, circle, example_complex, z23, z25

# divisible by 4, 6, 8 and 12 so every H(1/m) used in tests fits the grid
SMALL_GRID = 48


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()

@pytest.fixture()
def grid() -> int:
    return SMALL_GRID

@pytest.fixture()
def z23_spec() -> ComplexSpec:
    return z23()

@pytest.fixture()
def z25_spec() -> ComplexSpec:
    return z25()

@pytest.fixture()
def example_spec() -> ComplexSpec:
    return example_complex()

@pytest.fixture()
def circle_spec() -> ComplexSpec:
    return circle()

@pytest.fixture()
def c3_m3_spec() -> ComplexSpec:
    return c3_m3()

@pytest.fixture(params=["z23", "z25", "example", "circle", "c3-m3"])
def bundled_spec(request) -> ComplexSpec:
    return {"z23": z23, "z25": z25, "example": example_complex, "circle": circle, "c3-m3": c3_m3}[request.param]()

@pytest.fixture()
def write_json(tmp_path):
    """Write a document under tmp_path and return its path."""

    def write(name: str, data) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write
