"""Deterministic text output: JSON and CSV with 17 significant digits.

The stdlib encoder prints the shortest round-trip repr of floats, while
our file formats pin 17 significant digits, so JSON is written by hand.
"""

from __future__ import annotations

import io
import json
import math
from fractions import Fraction

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj, out, indent, level):
    if obj is None:
        out.write("null")
    elif obj is True:
        out.write("true")
    elif obj is False:
        out.write("false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(fmt_float(obj))
    elif isinstance(obj, Fraction):
        raise TypeError("encode Fractions explicitly as num/den")
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        pad = "\n" + " " * (indent * (level + 1)) if indent else ""
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            out.write(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _encode(v, out, indent, level + 1)
        out.write(("\n" + " " * (indent * level) if indent else "") + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        # flat numeric lists stay on one line
        if not indent or all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            out.write("[")
            for i, v in enumerate(items):
                out.write(", " if i else "")
                _encode(v, out, 0, 0)
            out.write("]")
            return
        pad = "\n" + " " * (indent * (level + 1))
        out.write("[")
        for i, v in enumerate(items):
            out.write(("," if i else "") + pad)
            _encode(v, out, indent, level + 1)
        out.write("\n" + " " * (indent * level) + "]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits; key order preserved."""
    buf = io.StringIO()
    _encode(obj, buf, indent, 0)
    buf.write("\n")
    return buf.getvalue()


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
