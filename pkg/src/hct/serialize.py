"""JSON encoding of spaces, operators and reports.

Matrix payloads are tagged with ``format``::

    {"format": "dense", "shape": [m, n], "data": [[...], ...]}        # row-major
    {"format": "coo", "shape": [m, n], "row": [...], "col": [...], "data": [...]}

Spaces are ``{"kind": "space", "dim", "label", "gram": <matrix>}`` and
operators ``{"kind": "operator", "domain": <space>, "codomain": <space>,
"matrix": <matrix>}``. Floats in reports are rounded to 12 significant
digits so repeated runs print identical bytes; non-finite values become the
strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .toolbox import BoundedOperator, InnerProductSpace

REPORT_DIGITS = 12


def matrix_to_dict(M, fmt: str | None = None) -> dict:
    if fmt is None:
        fmt = "coo" if sp.issparse(M) else "dense"
    if fmt == "coo":
        C = sp.coo_matrix(M)
        C.sum_duplicates()
        return {"format": "coo", "shape": list(C.shape), "row": C.row.tolist(), "col": C.col.tolist(),
                "data": C.data.astype(float).tolist()}
    if fmt == "dense":
        D = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
        return {"format": "dense", "shape": list(D.shape), "data": D.tolist()}
    raise ValueError(f"unknown matrix format {fmt!r}")


def matrix_from_dict(d: dict):
    shape = tuple(d["shape"])
    if d["format"] == "dense":
        return np.asarray(d["data"], dtype=float).reshape(shape)
    if d["format"] == "coo":
        return sp.coo_matrix((np.asarray(d["data"], float), (d["row"], d["col"])), shape=shape).tocsr()
    raise ValueError(f"unknown matrix format {d['format']!r}")


def space_to_dict(S: InnerProductSpace, fmt: str | None = "dense") -> dict:
    return {"kind": "space", "dim": S.dim, "label": S.label, "gram": matrix_to_dict(S.gram, fmt)}


def space_from_dict(d: dict) -> InnerProductSpace:
    G = matrix_from_dict(d["gram"])
    return InnerProductSpace(int(d["dim"]), G.toarray() if sp.issparse(G) else G, d.get("label", ""))


def operator_to_dict(A: BoundedOperator, fmt: str | None = None) -> dict:
    return {"kind": "operator", "domain": space_to_dict(A.domain, fmt), "codomain": space_to_dict(A.codomain, fmt),
            "matrix": matrix_to_dict(A.matrix, fmt)}


def operator_from_dict(d: dict) -> BoundedOperator:
    return BoundedOperator(space_from_dict(d["domain"]), space_from_dict(d["codomain"]), matrix_from_dict(d["matrix"]))


def round_sig(x: float, digits: int = REPORT_DIGITS):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return 0.0
    return float(f"{x:.{digits}g}")


def to_jsonable(obj, digits: int = REPORT_DIGITS):
    """Recursively convert numpy types, dataclasses and tuples; round floats."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj), digits)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist(), digits)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj), digits)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, digits) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
