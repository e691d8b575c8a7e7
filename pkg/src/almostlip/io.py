"""Reading inputs and writing reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .metric_core import NORM_KINDS, FiniteMetricSpace, MetricError, PointSet

INPUT_KINDS = ("auto", "points", "distances")


class InputError(ValueError):
    pass


def _looks_like_distances(A: NDArray) -> bool:
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        return False
    if np.any(np.diag(A) != 0) or np.any(A < 0):
        return False
    return bool(np.allclose(A, A.T, rtol=1e-9, atol=0.0))


def _read_csv(path: Path) -> NDArray:
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise InputError(f"{path}: empty file")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]  # header line
    try:
        A = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if A.ndim != 2:
        raise InputError(f"{path}: rows have different lengths")
    return A


def load_input(path, kind: str = "auto", norm: str = "euclidean"):
    """Load a point cloud or a distance matrix.

    CSV files hold one row per point, or a square distance matrix; with
    ``kind="auto"`` a symmetric nonnegative square matrix with zero diagonal
    is read as distances. JSON files hold ``{"points": [...], "norm": ...}``
    or ``{"distances": [...]}``.

    Returns
    -------
    PointSet or FiniteMetricSpace
    """
    if kind not in INPUT_KINDS:
        raise InputError(f"unknown input kind {kind!r}")
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from None
        if not isinstance(doc, dict):
            raise InputError(f"{path}: expected a JSON object")
        if "distances" in doc:
            A, kind = np.asarray(doc["distances"], dtype=float), "distances"
        elif "points" in doc:
            A, kind = np.asarray(doc["points"], dtype=float), "points"
            norm = doc.get("norm", norm)
        else:
            raise InputError(f"{path}: expected a 'points' or 'distances' key")
    else:
        A = _read_csv(path)
    if not np.all(np.isfinite(A)):
        raise InputError(f"{path}: non-finite entries")
    if kind == "auto":
        kind = "distances" if _looks_like_distances(A) else "points"
    try:
        if kind == "distances":
            return FiniteMetricSpace(A)
        if norm not in NORM_KINDS:
            raise InputError(f"unknown norm {norm!r}")
        return PointSet(A, norm)
    except MetricError as exc:
        raise InputError(f"{path}: {exc}") from None


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    """Canonical JSON: sorted keys, non-finite floats as null."""
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
