"""Text serialization: operator documents and JSON reports.

An operator document is JSON of the form::

    {"dims": [2, 2], "matrix": [[[re, im], ...], ...]}

with the matrix stored row-major and each entry as an ``[re, im]`` pair.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from entwit.exceptions import ParseError
from entwit.linops import HermitianOperator
from entwit.states import ProductVector


def operator_to_document(op) -> dict:
    m = np.asarray(op.matrix if isinstance(op, HermitianOperator) else op, dtype=complex)
    dims = list(op.dims) if isinstance(op, HermitianOperator) else [m.shape[0]]
    return {"dims": dims, "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m]}


def _entry(z) -> complex:
    if not (isinstance(z, list) and len(z) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
        raise ParseError(f"matrix entries must be [re, im] number pairs, got {z!r}")
    return complex(z[0], z[1])


def document_to_matrix(doc) -> tuple[np.ndarray, tuple[int, ...]]:
    """Check the document's shape and return (matrix, dims) without numerical validation."""
    if not isinstance(doc, dict) or "dims" not in doc or "matrix" not in doc:
        raise ParseError('operator document needs "dims" and "matrix" fields')
    dims, rows = doc["dims"], doc["matrix"]
    if not (isinstance(dims, list) and dims and all(isinstance(d, int) and not isinstance(d, bool) for d in dims)):
        raise ParseError(f'"dims" must be a non-empty list of integers, got {dims!r}')
    if not (isinstance(rows, list) and rows and all(isinstance(r, list) for r in rows)):
        raise ParseError('"matrix" must be a non-empty list of rows')
    m = np.array([[_entry(z) for z in row] for row in rows], dtype=complex) if len({len(r) for r in rows}) == 1 else None
    if m is None:
        raise ParseError("matrix rows have unequal lengths")
    return m, tuple(dims)


def parse_operator(text: str) -> HermitianOperator:
    """Parse operator-document text. ParseError for malformed text; the
    HermitianOperator constructor raises DimensionError or ValidationError."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    m, dims = document_to_matrix(doc)
    return HermitianOperator(m, dims)


def read_operator(path) -> tuple[HermitianOperator, dict]:
    """Load an operator file; also returns ``{"path", "sha256"}`` for reports."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text") from exc
    return parse_operator(text), {"path": str(path), "sha256": hashlib.sha256(raw).hexdigest()}


def write_operator(path, op) -> None:
    Path(path).write_text(json.dumps(operator_to_document(op)) + "\n", encoding="utf-8")


def _vector(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def to_jsonable(obj):
    """Convert results (operators, product vectors, dataclasses, enums, numpy
    values) into plain JSON types. Non-finite floats become strings."""
    if isinstance(obj, HermitianOperator):
        return operator_to_document(obj)
    if isinstance(obj, ProductVector):
        return {"e": _vector(obj.e), "f": _vector(obj.f)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return operator_to_document(obj) if obj.ndim == 2 else _vector(obj)
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"
