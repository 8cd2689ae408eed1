from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Optional

import numpy as np

from nccw.config import RunConfig
from nccw.findim import matrix_to_json

SIGNIFICANT_DIGITS = 12


def library_version() -> str:
    try:
        return version("nccw")
    except PackageNotFoundError:
        from nccw import __version__

        return __version__


def _normalize(value: Any) -> Any:
    """JSON-ready copy with floats at 12 significant digits and complex matrices as [re, im] pairs."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, np.ndarray):
        if value.ndim == 2 and np.iscomplexobj(value):
            return _normalize(matrix_to_json(value))
        return _normalize(value.tolist())
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if hasattr(value, "to_json"):
        return _normalize(value.to_json())
    return value


def dump_json(data: Any, indent: int = 2) -> str:
    return json.dumps(_normalize(data), indent=indent, sort_keys=True, ensure_ascii=False) + "\n"


@dataclass
class CheckResult:
    ok: bool
    message: str


@dataclass
class CheckReport:
    results: list[CheckResult] = field(default_factory=list)
    passed: int = 0
    errors: int = 0

    def add(self, result: CheckResult) -> None:
        self.results.append(result)
        if result.ok:
            self.passed += 1
        else:
            self.errors += 1

    def ok(self, message: str) -> None:
        self.add(CheckResult(ok=True, message=message))

    def error(self, message: str) -> None:
        self.add(CheckResult(ok=False, message=message))

    def to_json(self) -> dict:
        return {
            "checks": [{"ok": r.ok, "message": r.message} for r in self.results],
            "passed": self.passed,
            "errors": self.errors,
        }


@dataclass
class Report:
    command: str
    passed: bool
    results: dict = field(default_factory=dict)
    config: Optional[RunConfig] = None

    def to_json(self, indent: int = 2) -> str:
        payload = {
            "command": self.command,
            "pass": self.passed,
            "results": self.results,
            "version": library_version(),
        }
        if self.config is not None:
            payload["config"] = self.config.to_json()
            payload["seed"] = self.config.seed
        return dump_json(payload, indent)


def write_report(report: Report, output_path: Path) -> None:
    """Write report to JSON file."""
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(report.to_json(), encoding="utf-8")
