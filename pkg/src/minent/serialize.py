"""CSV and JSON encodings for couplings, instances and reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix_csv(path, M) -> None:
    M = np.asarray(M, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in M:
            w.writerow([fmt(x) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    M = np.array(rows, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got shape {M.shape}")
    return M


def write_blocks_csv(path, matrices) -> None:
    """Several matrices in one file, separated by blank lines."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for k, M in enumerate(matrices):
            if k:
                fh.write("\n")
            for row in np.asarray(M, dtype=float):
                w.writerow([fmt(x) for x in row])


def read_blocks_csv(path) -> list:
    blocks, cur = [], []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                if cur:
                    blocks.append(np.array(cur))
                cur = []
                continue
            cur.append([float(x) for x in line.split(",")])
    if cur:
        blocks.append(np.array(cur))
    return blocks


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
    if isinstance(obj, (float, np.floating)):
        # repr of a float is the shortest string that round-trips
        return float(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def write_json(path, obj) -> None:
    text = dumps(obj) + "\n"
    if str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)
