"""Canonical JSON output: sorted keys, 17 significant digits, no whitespace drift."""
from __future__ import annotations

import hashlib
import json
import math

import numpy as np


def _float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if text == "-0":
        text = "0"
    return text


def _encode(obj, indent: int, level: int, out: list) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    close = "\n" + " " * (indent * level) if indent else ""
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(pad + json.dumps(str(key)) + (": " if indent else ":"))
            _encode(obj[key], indent, level + 1, out)
        out.append(close + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not items:
            out.append("[]")
            return
        out.append("[")
        for i, item in enumerate(items):
            if i:
                out.append(",")
            out.append(pad)
            _encode(item, indent, level + 1, out)
        out.append(close + "]")
    elif hasattr(obj, "to_json"):
        _encode(obj.to_json(), indent, level, out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text; non-finite floats become ``null``."""
    out: list = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def digest(obj) -> str:
    """SHA-256 of the compact canonical encoding."""
    return hashlib.sha256(dumps(obj, indent=0).encode("utf-8")).hexdigest()
