"""
CSV and JSON rendering of reports.  Reals are always written with 17
significant digits so that files round-trip exactly and are byte-stable.
"""

from __future__ import annotations

import enum
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import BifbmError
from .gram import GramMatrix
from .region import RegionScan
from .sampler import SamplePaths

__all__ = [
    "OutputError",
    "fmt_real",
    "to_json",
    "matrix_csv",
    "paths_csv",
    "region_csv",
    "variation_csv",
    "write_text",
    "emit",
]


class OutputError(BifbmError, OSError):
    """Output destination cannot be written."""


def fmt_real(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(obj, indent: int, level: int) -> str:
    pad = "" if indent <= 0 else "\n" + " " * (indent * (level + 1))
    end = "" if indent <= 0 else "\n" + " " * (indent * level)
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    if isinstance(obj, enum.Enum):
        obj = obj.value
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        # JSON has no NaN/inf
        return fmt_real(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + ",".join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_json_value(v, 0, 0) for v in obj) + "]"
        items = [f"{pad}{_json_value(v, indent, level + 1)}" for v in obj]
        return "[" + ",".join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit reals and a trailing newline."""
    return _json_value(obj, indent, 0) + "\n"


def matrix_csv(values) -> str:
    a = np.atleast_2d(np.asarray(values, dtype=float))
    return "".join(",".join(fmt_real(x) for x in row) + "\n" for row in a)


def paths_csv(paths) -> str:
    """Header row of grid times, then one row per path."""
    header = ",".join(fmt_real(t) for t in paths.grid.times) + "\n"
    return header + matrix_csv(paths.values)


def region_csv(scan) -> str:
    lines = ["H,K,min_eig,verdict\n"]
    lines += [f"{fmt_real(h)},{fmt_real(k)},{fmt_real(m)},{v}\n" for h, k, m, v in scan.rows()]
    return "".join(lines)


def variation_csv(sums) -> str:
    return "level,sum\n" + "".join(f"{i},{fmt_real(s)}\n" for i, s in enumerate(sums))


def write_text(text: str, path: str | Path | None) -> int:
    """Write to ``path`` (stdout for None or '-'); returns bytes written."""
    data = text.encode("utf-8")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return len(data)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return len(data)


def emit(report, fmt: str = "json", path: str | Path | None = None) -> int:
    """Render ``report`` as CSV or JSON and write it; returns bytes written.

    CSV layouts: SamplePaths -> times header + rows, RegionScan ->
    ``H,K,min_eig,verdict``, 2-D arrays and GramMatrix -> bare rows,
    1-D sequences -> ``level,sum``.
    """
    if fmt == "json":
        if isinstance(report, SamplePaths):
            report = {"times": report.grid.times, "values": report.values}
        elif isinstance(report, RegionScan):
            report = [dict(zip(("H", "K", "min_eig", "verdict"), row)) for row in report.rows()]
        elif isinstance(report, GramMatrix):
            report = report.values
        return write_text(to_json(report), path)
    if fmt != "csv":
        raise OutputError(f"unknown format {fmt!r}")
    if isinstance(report, SamplePaths):
        text = paths_csv(report)
    elif isinstance(report, RegionScan):
        text = region_csv(report)
    elif isinstance(report, GramMatrix):
        text = matrix_csv(report.values)
    else:
        try:
            arr = np.asarray(report, dtype=float)
        except (TypeError, ValueError):
            raise OutputError(f"{type(report).__name__} has no CSV layout; use json") from None
        text = matrix_csv(arr) if arr.ndim == 2 else variation_csv(arr)
    return write_text(text, path)
