"""Deterministic CSV/JSON writers and the staging directory for run outputs."""
from __future__ import annotations

import csv
import json
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import OutputError

EXPECTATION_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["observable", "value_re", "value_im", "grid", "nu", "zeta", "order", "hbar", "t"],
        "properties": {
            "observable": {"type": "string"},
            "value_re": {"type": ["number", "array"]},
            "value_im": {"type": ["number", "array"]},
            "grid": {"type": "object", "required": ["scheme", "nodes"]},
            "nu": {"type": "array", "items": {"type": "integer"}},
            "zeta": {"enum": [1, -1]},
            "order": {"enum": [0, 1]},
            "hbar": {"type": "number"},
            "t": {"type": "number"},
        },
    },
}

RUN_REPORT_SCHEMA = {
    "type": "object",
    "required": ["name", "status", "exit_code", "stages", "outputs", "config"],
    "properties": {
        "name": {"type": "string"},
        "status": {"enum": ["ok", "failed"]},
        "exit_code": {"type": "integer"},
        "stages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "status", "checks"],
                "properties": {
                    "name": {"type": "string"},
                    "status": {"enum": ["ok", "failed"]},
                    "wall_time_s": {"type": ["number", "null"]},
                    "checks": {"type": "object"},
                },
            },
        },
        "outputs": {"type": "array", "items": {"type": "string"}},
        "config": {"type": "object"},
    },
}

VERIFY_REPORT_SCHEMA = {
    "type": "object",
    "required": ["seed", "count", "suites", "verdict", "rows"],
    "properties": {
        "seed": {"type": "integer"},
        "count": {"type": "integer"},
        "suites": {"type": "array", "items": {"type": "string"}},
        "verdict": {"type": "boolean"},
        "rows": {"type": "array"},
    },
}


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")


def write_csv(path, header, rows) -> Path:
    """Header row then one line per row; '.' decimals, ',' separator, '\\n' endings."""
    path = Path(path)
    if isinstance(rows, np.ndarray):
        rows = np.atleast_2d(rows) if rows.size else []
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"{path.name}: {len(r)} columns but {len(header)} header names")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err}") from None
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="\n") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err}") from None
    return path


class StagingDir:
    """Collect outputs in a sibling temp directory and move them into place
    only when the block exits cleanly; on error nothing is left behind."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.path: Path | None = None
        self.files: list[str] = []

    def __enter__(self) -> "StagingDir":
        parent = self.out.resolve().parent
        try:
            parent.mkdir(parents=True, exist_ok=True)
            self.path = Path(tempfile.mkdtemp(prefix=f".{self.out.name}.staging-", dir=parent))
        except OSError as err:
            raise OutputError(f"output location {self.out} is not writable: {err}") from None
        return self

    def file(self, name: str) -> Path:
        self.files.append(name)
        return self.path / name

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self._commit()
        finally:
            if self.path is not None and self.path.exists():
                shutil.rmtree(self.path, ignore_errors=True)
        return False

    def _commit(self):
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            for name in self.files:
                os.replace(self.path / name, self.out / name)
        except OSError as err:
            raise OutputError(f"cannot move outputs into {self.out}: {err}") from None
