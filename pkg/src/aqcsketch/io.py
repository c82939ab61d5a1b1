"""
File formats: target JSON, run-report JSON and the bench CSV rows.

Every float is written with 17 significant digits, which round-trips doubles
exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import build_structure

TARGET_VERSION = "aqcsketch.target/1"
CSV_HEADER = (
    "n", "L", "m", "method", "target_id", "trial_id", "seed", "epochs",
    "final_sketched_objective", "fidelity", "success", "wall_time_s",
)


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with 17-significant-digit floats (NaN allowed, as in :mod:`json`)."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


@dataclass(frozen=True)
class TargetFile:
    n: int
    L: int
    theta_u: tuple[float, ...]
    seed: int
    version: str = TARGET_VERSION

    def __post_init__(self):
        expected = 3 * self.n + 4 * self.L
        if len(self.theta_u) != expected:
            raise ValueError(f"target has {len(self.theta_u)} angles, expected 3n+4L = {expected}")
        if not all(math.isfinite(t) for t in self.theta_u):
            raise ValueError("target angles must be finite")

    @property
    def structure(self):
        return build_structure(self.n, self.L)

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.theta_u, dtype=float)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "n": self.n,
            "L": self.L,
            "seed": self.seed,
            "theta_u": list(self.theta_u),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TargetFile":
        if data.get("version") != TARGET_VERSION:
            raise ValueError(f"unsupported target version {data.get('version')!r}")
        try:
            return cls(
                n=int(data["n"]),
                L=int(data["L"]),
                theta_u=tuple(float(t) for t in data["theta_u"]),
                seed=int(data["seed"]),
            )
        except KeyError as exc:
            raise ValueError(f"target file missing field {exc}") from None

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "TargetFile":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed target file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ValueError(f"malformed target file {path}: expected an object")
        return cls.from_dict(data)


def _csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_rows(path, rows) -> None:
    """Writes the bench CSV: the fixed header then one line per row dict."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([_csv_cell(row[k]) for k in CSV_HEADER])


def read_rows(path) -> list[dict]:
    """Parses a bench CSV back into typed row dicts."""
    ints = {"n", "L", "m", "target_id", "trial_id", "seed", "epochs", "success"}
    floats = {"final_sketched_objective", "fidelity", "wall_time_s"}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        out = []
        for raw in reader:
            row = {}
            for k, v in raw.items():
                row[k] = int(v) if k in ints else float(v) if k in floats else v
            out.append(row)
    return out
