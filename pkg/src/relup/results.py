"""Serialisation of results: JSON with 17 significant digits, curve CSV, schemas."""
from __future__ import annotations

import json
import math
from importlib import resources
from typing import Any, Sequence

import numpy as np

from .solvers._common import _plain

__all__ = ["format_number", "dumps", "curve_csv", "load_schema", "validate_document", "CURVE_HEADER"]

CURVE_HEADER = "n,beta_prior,beta_conditional,ci_low,ci_high"


def format_number(v) -> str:
    """17 significant digits; non-finite values as the strings inf, -inf, nan."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _emit(obj, indent: int, level: int, out: list[str]):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, float, np.integer, np.floating)):
        s = format_number(obj)
        out.append(s if s not in ("inf", "-inf", "nan") else json.dumps(s))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _emit(v, indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(items):
            out.append(("," if i else "") + pad)
            _emit(v, indent, level + 1, out)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text; floats carry 17 significant digits, non-finite floats become strings."""
    out: list[str] = []
    _emit(_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def curve_csv(rows: Sequence[Sequence[float]]) -> str:
    lines = [CURVE_HEADER]
    lines += [",".join(format_number(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def load_schema(name: str) -> dict:
    """``name`` is "config" or "results"."""
    text = resources.files("relup").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_document(doc: dict, name: str = "results") -> list[str]:
    """Schema violations as readable strings (empty when valid)."""
    import jsonschema

    validator = jsonschema.Draft202012Validator(load_schema(name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    return [f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors]
