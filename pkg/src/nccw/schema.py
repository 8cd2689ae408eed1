"""JSON Schema validation of input files and conversion into typed objects."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Union

from jsonschema import Draft202012Validator

from nccw.complex import ComplexError, ComplexSpec
from nccw.findim import FindimError
from nccw.homspec import HomSpecError, HomToMatrix
from nccw.standard import HomFamily, StandardMapError, StandardMapToComplex, StandardMapToMatrix

LOGGER = logging.getLogger(__name__)

KINDS = ("complex", "hom", "standard", "family")


class SchemaError(Exception):
    """Raised when an input file does not match its schema."""

    def __init__(self, path: Union[str, Path], pointer: str, message: str):
        super().__init__(f"{path}: {pointer or '/'}: {message}")
        self.path = str(path)
        self.pointer = pointer


_POS_INT = {"type": "integer", "minimum": 1}
_NONNEG_INT = {"type": "integer", "minimum": 0}
_UNIT = {"type": "number", "minimum": 0, "maximum": 1}
_INT_MATRIX = {"type": "array", "items": {"type": "array", "items": _NONNEG_INT}}
_PERMS = {"type": "array", "items": {"type": "array", "items": _POS_INT}}
_ENTRY = {"type": "array", "prefixItems": [{"type": "number"}, {"type": "number"}], "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _ENTRY}}

COMPLEX_SCHEMA: dict = {
    "type": "object",
    "required": ["e", "f", "mult0", "mult1"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "e": {"type": "array", "items": _POS_INT, "minItems": 1},
        "f": {"type": "array", "items": _POS_INT},
        "mult0": _INT_MATRIX,
        "mult1": _INT_MATRIX,
        "perm0": _PERMS,
        "perm1": _PERMS,
    },
}

_POINT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["i"],
    "properties": {"i": _POS_INT, "t": _UNIT, "side": {"enum": [0, 1]}},
    "oneOf": [{"required": ["t"]}, {"required": ["side"]}],
}

HOM_BODY: dict = {
    "type": "object",
    "required": ["n", "s"],
    "additionalProperties": False,
    "properties": {
        "n": _POS_INT,
        "s": {"type": "array", "items": _NONNEG_INT},
        "points": {"type": "array", "items": _POINT},
        "pad": _NONNEG_INT,
        "u": _MATRIX,
    },
}

HOM_SCHEMA: dict = {
    "type": "object",
    "required": ["source", "hom"],
    "additionalProperties": False,
    "properties": {"name": {"type": "string"}, "source": COMPLEX_SCHEMA, "hom": HOM_BODY},
}

_EIGENPATH = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["delta", "path"]},
        "j": _POS_INT,
        "i": _POS_INT,
        "breaks": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "prefixItems": [_UNIT, _UNIT], "minItems": 2, "maxItems": 2},
        },
    },
    "oneOf": [
        {"properties": {"kind": {"const": "delta"}}, "required": ["j"]},
        {"properties": {"kind": {"const": "path"}}, "required": ["i", "breaks"]},
    ],
}

_UNITARY_PATH = {
    "type": "object",
    "required": ["knots", "values"],
    "additionalProperties": False,
    "properties": {
        "knots": {"type": "array", "items": _UNIT, "minItems": 1},
        "values": {"type": "array", "items": _MATRIX, "minItems": 1},
    },
}

_PIECE = {
    "type": "object",
    "required": ["paths", "u"],
    "additionalProperties": False,
    "properties": {"paths": {"type": "array", "items": _EIGENPATH}, "pad": _NONNEG_INT, "u": _UNITARY_PATH},
}

_MATRIX_MAP = {
    "type": "object",
    "required": ["kind", "n", "partition", "pieces"],
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "matrix"},
        "name": {"type": "string"},
        "n": _POS_INT,
        "partition": {"type": "array", "items": _UNIT, "minItems": 2},
        "pieces": {"type": "array", "items": _PIECE, "minItems": 1},
        "source": COMPLEX_SCHEMA,
        "params": {"type": "object"},
    },
}

STANDARD_SCHEMA: dict = {
    "oneOf": [
        {**_MATRIX_MAP, "required": ["kind", "n", "partition", "pieces", "source"]},
        {
            "type": "object",
            "required": ["kind", "source", "target", "blocks", "e_maps"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "complex"},
                "name": {"type": "string"},
                "source": COMPLEX_SCHEMA,
                "target": COMPLEX_SCHEMA,
                "blocks": {"type": "array", "items": _MATRIX_MAP},
                "e_maps": {"type": "array", "items": HOM_BODY},
                "params": {"type": "object"},
            },
        },
    ]
}

FAMILY_SCHEMA: dict = {
    "type": "object",
    "required": ["kind", "source", "target", "blocks", "e_maps"],
    "additionalProperties": False,
    "properties": {
        "kind": {"const": "family"},
        "name": {"type": "string"},
        "source": COMPLEX_SCHEMA,
        "target": COMPLEX_SCHEMA,
        "blocks": {"type": "array", "items": {"type": "array", "items": HOM_BODY, "minItems": 2}},
        "e_maps": {"type": "array", "items": HOM_BODY},
    },
}

SCHEMAS = {"complex": COMPLEX_SCHEMA, "hom": HOM_SCHEMA, "standard": STANDARD_SCHEMA, "family": FAMILY_SCHEMA}


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


def check_document(data: Any, kind: str, path: Union[str, Path] = "<data>") -> None:
    """
    Validate a decoded document against the schema for kind.

    The first error in path order is reported, so repeated runs name the same field.

    Raises:
        SchemaError: if the document does not validate
    """
    if kind not in SCHEMAS:
        raise ValueError(f"Unknown document kind '{kind}'. Must be one of: {', '.join(KINDS)}")
    validator = Draft202012Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(data), key=lambda err: [str(p) for p in err.absolute_path])
    if errors:
        err = errors[0]
        raise SchemaError(path, _pointer(err.absolute_path), err.message)


def load_document(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SchemaError(path, "", "file not found") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(path, "", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def build_object(data: dict, kind: str):
    """
    Turn a schema-valid document into the matching library object.

    Construction errors (a multiplicity row that does not fill its block, a
    non-unitary path) keep their own exception type.
    """
    name = data.get("name", "") if isinstance(data, dict) else ""
    if kind == "complex":
        return ComplexSpec.from_json(data, name=name)
    if kind == "hom":
        return HomToMatrix.from_json(ComplexSpec.from_json(data["source"]), data["hom"])
    if kind == "standard":
        if data["kind"] == "complex":
            return StandardMapToComplex.from_json(data)
        return StandardMapToMatrix.from_json(data)
    return HomFamily.from_json(data)


def parse_spec(path: Path, kind: str):
    """
    Read, validate and construct an input file.

    Raises:
        SchemaError: if the file is missing, not JSON, or fails the schema
        ComplexError, HomSpecError, StandardMapError, FindimError: if the data are
            well-formed but describe an invalid object
    """
    path = Path(path)
    data = load_document(path)
    check_document(data, kind, path)
    LOGGER.debug(f"{path} validated as {kind}")
    return build_object(data, kind)


INPUT_ERRORS = (SchemaError, ComplexError, HomSpecError, StandardMapError, FindimError)
