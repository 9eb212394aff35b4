"""CSV ingestion and atomic, round-trippable result writing."""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_FEATURE = re.compile(r"feature_(\d+)$")
FLOAT_FMT = "{:.17g}"


class SchemaError(ValueError):
    pass


@dataclass
class GroupedTable:
    """Parsed dataset.  ``groups`` holds 0-based indices into ``labels``."""

    features: np.ndarray            # (n, p)
    groups: np.ndarray              # (n,) int
    labels: list                    # original label of each group index
    target: np.ndarray | None = None
    prediction: np.ndarray | None = None
    extra: dict = field(default_factory=dict)   # other columns, kept as strings

    @property
    def n_groups(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.groups.size

    def counts(self) -> np.ndarray:
        return np.bincount(self.groups, minlength=self.n_groups)

    def split(self, values: np.ndarray) -> list[np.ndarray]:
        return [values[self.groups == s] for s in range(self.n_groups)]

    def label_map(self) -> dict:
        return {str(lab): i for i, lab in enumerate(self.labels)}


def _parse_float(text: str, col: str, row: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"row {row}: column {col!r} is not a number: {text!r}") from None


def map_labels(raw: list[str], known: list | None = None):
    """Return (indices, labels).

    Without ``known``: all-integer labels are sorted numerically, otherwise
    labels are numbered in first-appearance order.  With ``known`` (a label
    list from calibration), unknown labels raise SchemaError.
    """
    if known is not None:
        lookup = {str(lab): i for i, lab in enumerate(known)}
        missing = sorted({r for r in raw if r not in lookup})
        if missing:
            raise SchemaError(f"unknown group label(s): {', '.join(missing)}")
        return np.array([lookup[r] for r in raw], dtype=int), list(known)
    try:
        ints = [int(r) for r in raw]
    except ValueError:
        labels = list(dict.fromkeys(raw))
        lookup = {lab: i for i, lab in enumerate(labels)}
        return np.array([lookup[r] for r in raw], dtype=int), labels
    labels = sorted(set(ints))
    lookup = {lab: i for i, lab in enumerate(labels)}
    return np.array([lookup[v] for v in ints], dtype=int), labels


def read_table(path, require_target: bool = False, require_prediction: bool = False,
               known_labels: list | None = None) -> GroupedTable:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    if "group" not in header:
        raise SchemaError(f"{path}: missing 'group' column")
    if require_target and "target" not in header:
        raise SchemaError(f"{path}: missing 'target' column")
    if require_prediction and "prediction" not in header:
        raise SchemaError(f"{path}: missing 'prediction' column")
    feat_cols = sorted((int(m.group(1)), i) for i, h in enumerate(header)
                       if (m := _FEATURE.match(h)))
    if [j for j, _ in feat_cols] != list(range(len(feat_cols))):
        raise SchemaError(f"{path}: feature columns must be feature_0 .. feature_(p-1)")
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    for k, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise SchemaError(f"{path}: row {k} has {len(r)} fields, expected {len(header)}")

    col = {h: i for i, h in enumerate(header)}
    features = np.array([[_parse_float(r[i], f"feature_{j}", k) for j, i in feat_cols]
                         for k, r in enumerate(rows, start=2)], dtype=float)
    features = features.reshape(len(rows), len(feat_cols))
    groups, labels = map_labels([r[col["group"]].strip() for r in rows], known_labels)

    def numeric(name):
        if name not in col:
            return None
        return np.array([_parse_float(r[col[name]], name, k)
                         for k, r in enumerate(rows, start=2)], dtype=float)

    reserved = {"group", "target", "prediction"} | {header[i] for _, i in feat_cols}
    extra = {h: [r[i] for r in rows] for h, i in col.items() if h not in reserved}
    return GroupedTable(features, groups, labels, numeric("target"), numeric("prediction"),
                        extra)


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT.format(float(x))
    return str(x)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_table(path, table: GroupedTable) -> None:
    p = table.features.shape[1]
    header = [f"feature_{j}" for j in range(p)] + ["group"]
    cols = [table.features[:, j] for j in range(p)]
    cols.append([table.labels[g] for g in table.groups])
    for name, values in (("target", table.target), ("prediction", table.prediction)):
        if values is not None:
            header.append(name)
            cols.append(values)
    for name, values in table.extra.items():
        header.append(name)
        cols.append(values)
    write_rows(path, header, zip(*cols))


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [r for r in reader if r]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload: dict) -> None:
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n")
