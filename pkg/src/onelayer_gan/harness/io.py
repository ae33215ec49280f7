"""CSV writers and readers with a pinned schema.

Floats are written with 17 significant digits (``repr``-exact round trip);
integers as plain decimals. Column order is part of the schema.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("trial_id", "iter", "g_emp", "rec_err", "grad_norm", "wall_ms")
SUMMARY_COLUMNS = ("d", "n", "trials", "mean_rec_err", "std_rec_err", "mean_wall_ms")
SCHEMA_VERSION = 1


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _write(path: Path, header, rows) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_trajectory(path, trial_id: int, record) -> None:
    _write(path, TRAJECTORY_COLUMNS, ((trial_id, *row) for row in record.rows()))


def write_summary(path, rows) -> None:
    _write(
        path,
        SUMMARY_COLUMNS,
        ((r.d, r.n, r.trials, r.mean_rec_err, r.std_rec_err, r.mean_wall_ms) for r in rows),
    )


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _write(path, [f"c{j}" for j in range(M.shape[1])], M.tolist())


def read_matrix(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not all(h.startswith("c") for h in rows[0]):
        raise ValueError(f"{path}: not a matrix CSV")
    return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)


def read_table(path, expected) -> list[dict]:
    """Rows of a CSV whose header must equal ``expected`` exactly."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != tuple(expected):
            raise ValueError(f"{path}: header {header} does not match schema {list(expected)}")
        out = []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(expected):
                raise ValueError(f"{path}:{lineno}: expected {len(expected)} fields, got {len(row)}")
            out.append(dict(zip(expected, row)))
    return out
