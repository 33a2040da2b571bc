"""
Report tables and the run manifest.

Every table is written as RFC-4180 CSV with LF line endings, a mandatory
header row whose column names carry their units (``t_gate`` is the time
unit, frequencies are in rad per ``t_gate``), and floats formatted with 12
significant digits.  Writing refuses non-finite numbers.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NonFiniteOutput",
    "Table",
    "format_value",
    "check_finite",
    "write_table",
    "write_manifest",
    "write_diagnostics",
    "MANIFEST_VERSION",
]

MANIFEST_VERSION = 1


class NonFiniteOutput(FloatingPointError):
    """A table about to be written contains NaN or Inf."""


@dataclass
class Table:
    """Named table with a fixed column order.

    Parameters
    ----------
    name : str
        File stem (``sweep`` becomes ``sweep.csv``).
    columns : list of str
        Header entries, units in brackets.
    rows : list of sequences
    """

    name: str
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: row has {len(values)} entries, "
                             f"expected {len(self.columns)}")
        self.rows.append(values)

    def column(self, key: str) -> list:
        """Values of the column whose header starts with ``key``."""
        for i, c in enumerate(self.columns):
            if c == key or c.split(" [")[0] == key:
                return [r[i] for r in self.rows]
        raise KeyError(key)

    def __len__(self):
        return len(self.rows)


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not np.isfinite(x):
            raise NonFiniteOutput(f"non-finite value {x!r}")
        return "0" if x == 0 else "%.12g" % x
    return str(v)


def _render(table: Table):
    try:
        return [[format_value(v) for v in row] for row in table.rows]
    except NonFiniteOutput as exc:
        raise NonFiniteOutput(f"{table.name}.csv: {exc}") from None


def check_finite(tables) -> None:
    """Raise :class:`NonFiniteOutput` if any table holds NaN or Inf."""
    for t in tables:
        _render(t)


def write_table(table: Table, out_dir) -> str:
    """Write ``table`` to ``out_dir/<name>.csv`` and return the path.

    Raises
    ------
    NonFiniteOutput
        Before anything is written, if any entry is NaN or Inf.
    """
    body = _render(table)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{table.name}.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(body)
    return path


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _versions() -> dict:
    import scipy
    import yaml

    from .. import __version__

    return {"analogctl": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "pyyaml": yaml.__version__}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_manifest(out_dir, config: dict, files, *, command: str, summary: dict,
                   timings: dict) -> str:
    """``manifest.json``: full config echo, versions, timings and file hashes.

    The ``config`` entry is a complete, validated configuration, so
    ``analogctl run --config manifest.json`` reproduces the bundle.
    """
    doc = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "versions": _versions(),
        "timings_s": timings,
        "files": {os.path.basename(p): {"sha256": _sha256(p)} for p in files},
        "summary": summary,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def write_diagnostics(out_dir, exc: BaseException, *, stage: str, config: dict | None) -> str:
    """``diagnostics.json`` describing a numerical abort."""
    import traceback

    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "error": type(exc).__name__,
        "message": str(exc),
        "stage": stage,
        "traceback": traceback.format_exception(type(exc), exc, exc.__traceback__),
        "config": config,
        "versions": _versions(),
    }
    path = os.path.join(out_dir, "diagnostics.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2)
        fh.write("\n")
    return path
