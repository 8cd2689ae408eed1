from __future__ import annotations

import json

import numpy as np

from nccw.config import RunConfig
from nccw.report import CheckReport, Report, dump_json, library_version, write_report


class TestDumpJson:
    def test_keys_are_sorted(self):
        assert dump_json({"b": 1, "a": 2}, indent=None) == '{"a": 2, "b": 1}\n'

    def test_floats_rounded(self):
        assert json.loads(dump_json({"x": 1 / 3}))["x"] == 0.333333333333

    def test_numpy_values(self):
        data = json.loads(dump_json({"n": np.int64(3), "ok": np.bool_(True), "v": np.array([0.5, 1.0])}))
        assert data == {"n": 3, "ok": True, "v": [0.5, 1.0]}

    def test_complex_matrix_as_pairs(self):
        data = json.loads(dump_json({"m": np.array([[1j, 0], [0, 1]], dtype=complex)}))
        assert data["m"][0][0] == [0.0, 1.0]


class TestCheckReport:
    def test_counts(self):
        report = CheckReport()
        report.ok("unit preserved")
        report.error("boundary broken")
        assert (report.passed, report.errors) == (1, 1)
        assert report.to_json()["checks"][1] == {"ok": False, "message": "boundary broken"}


class TestReport:
    def test_payload(self):
        doc = json.loads(Report("k1", True, {"k1_trivial": True}, RunConfig()).to_json())
        assert doc["command"] == "k1"
        assert doc["pass"] is True
        assert doc["seed"] == 0
        assert doc["config"]["grid"]["size"] == 240
        assert doc["version"] == library_version()

    def test_identical_runs_serialize_identically(self):
        a = Report("pair", False, {"gap": 0.1 + 0.2}, RunConfig())
        b = Report("pair", False, {"gap": 0.3}, RunConfig())
        assert a.to_json() == b.to_json()

    def test_write_creates_parent(self, tmp_path):
        out = tmp_path / "nested" / "report.json"
        write_report(Report("validate", True), out)
        assert json.loads(out.read_text())["command"] == "validate"
