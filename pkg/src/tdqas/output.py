"""CSV and JSON emission with a fixed numeric format."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .config import SCHEMA_VERSION

SIG_DIGITS = 12


def fmt(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"  # folds -0.0 as well
    return format(v, f".{SIG_DIGITS}g")


def write_csv(path: Path, columns: Mapping[str, np.ndarray]) -> None:
    names = list(columns)
    rows = zip(*(np.asarray(columns[k], dtype=float) for k in names))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def summary(diagnostics: Mapping, **extra) -> dict:
    """The summary document; required keys first, then everything else."""
    doc = {
        "basis_size": diagnostics["basis_size"],
        "eval_count": diagnostics["eval_count"],
        "cond_E": diagnostics["cond_E"],
        "svd_tol": diagnostics["svd_tol"],
        "schema_version": SCHEMA_VERSION,
        "timings": diagnostics.get("timings", {}),
    }
    for k, v in diagnostics.items():
        doc.setdefault(k, v)
    doc.update(extra)
    return _plain(doc)


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(_plain(doc), indent=2) + "\n")


def complex_matrix(m: np.ndarray) -> dict:
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}
