"""Deterministic CSV output shared by the command-line tools."""
from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence, TextIO


def fmt_float(x) -> str:
    """15 significant digits, always recognisable as a float (``1.0``, ``2.5e-07``)."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        x = 0.0  # drop the sign of -0.0
    s = f"{x:.15g}"
    if not any(c in s for c in ".e"):
        s += ".0"
    return s


def fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        return fmt_float(v)
    return str(v)


def params_line(params: Mapping) -> str:
    items = "; ".join(f"{k}={fmt_cell(params[k])}" for k in sorted(params))
    return f"# params: {items}"


def write_csv(out: TextIO, header: Sequence[str], rows: Iterable[Sequence], params: Mapping) -> None:
    out.write(params_line(params) + "\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt_cell(v) for v in row) + "\n")
