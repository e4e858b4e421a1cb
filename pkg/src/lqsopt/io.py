"""CSV datasets and versioned result.json files."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError
from .fits import Dataset

RESULT_SCHEMA_VERSION = 1
RESULT_FIELDS = ("schema_version", "algo", "config", "beta", "objective", "wall_time_s", "seed")
VOLATILE_FIELDS = ("wall_time_s", "init_time_s", "solve_time_s")


def write_csv(data: Dataset, path) -> None:
    """Header ``y,x1..xp``; floats written with ``repr`` so they round-trip."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y"] + [f"x{j + 1}" for j in range(data.p)])
        for yi, xi in zip(data.y, data.X):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])


def read_csv(path) -> Dataset:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    expected = ["y"] + [f"x{j + 1}" for j in range(len(header) - 1)]
    if len(header) < 2 or header != expected:
        raise ValidationError(f"{path}: header must be y,x1..xp, got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValidationError(f"{path} has no data rows")
    try:
        M = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    if M.ndim != 2 or M.shape[1] != len(header):
        raise ValidationError(f"{path}: ragged rows")
    return Dataset(M[:, 0], M[:, 1:])


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def dumps_result(result: dict) -> str:
    missing = [k for k in RESULT_FIELDS if k not in result and k != "schema_version"]
    if missing:
        raise ValidationError(f"result is missing fields {missing}")
    doc = dict(result, schema_version=RESULT_SCHEMA_VERSION)
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


def write_result(result: dict, path) -> None:
    Path(path).write_text(dumps_result(result), encoding="utf-8")


def read_result(path, expected_p: Optional[int] = None) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read result file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != RESULT_SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported result schema version")
    missing = [k for k in RESULT_FIELDS if k not in doc]
    if missing:
        raise ValidationError(f"{path}: missing fields {missing}")
    beta = doc["beta"]
    if not isinstance(beta, list) or not all(isinstance(v, (int, float)) for v in beta):
        raise ValidationError(f"{path}: beta must be a list of numbers")
    if expected_p is not None and len(beta) != expected_p:
        raise ValidationError(f"{path}: beta has length {len(beta)}, data has p={expected_p}")
    return doc


def strip_volatile(doc: dict) -> dict:
    """Copy of a result without timing fields, for reproducibility checks."""
    return {k: v for k, v in doc.items() if k not in VOLATILE_FIELDS}
