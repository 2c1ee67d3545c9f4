"""CSV and JSON writers for the command-line outputs.

All floats are serialized at %.17g so written files round-trip float64
exactly and identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .bands import BandResult
from .errors import DataError
from .population import TimeGrid

_FMT = "%.17g"


def write_ids_csv(path, ids) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("id\n")
        for uid in ids:
            fh.write(f"{uid}\n")


def read_ids_csv(path) -> list:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows or rows[0] != "id":
        raise DataError("id file must start with an 'id' header")
    return rows[1:]


def write_pi_csv(path, pi) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("pi\n")
        for v in np.asarray(pi, dtype=float):
            fh.write((_FMT % v) + "\n")


def read_pi_csv(path) -> np.ndarray:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows or rows[0] != "pi":
        raise DataError("pi file must start with a 'pi' header")
    try:
        pi = np.array([float(v) for v in rows[1:]])
    except ValueError as exc:
        raise DataError(f"pi file: {exc}") from None
    if pi.size == 0:
        raise DataError("pi file has no rows")
    return pi


def write_mean_csv(path, grid: TimeGrid, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,mean\n")
        for t, v in zip(grid.points, np.asarray(values, dtype=float)):
            fh.write((_FMT % t) + "," + (_FMT % v) + "\n")


def write_matrix_csv(path, grid: TimeGrid, matrix) -> None:
    """D x D surface with the grid as the header row."""
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(_FMT % t for t in grid.points) + "\n")
        for row in m:
            fh.write(",".join(_FMT % v for v in row) + "\n")


def read_matrix_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [[float(v) for v in rec] for rec in reader if rec]
    grid_pts = np.asarray(rows[0])
    return grid_pts, np.asarray(rows[1:])


def write_band_csv(path, band: BandResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,mean,sigma_hat,lower,upper\n")
        for j, t in enumerate(band.grid.points):
            cells = (t, band.mean[j], band.sigma_hat[j], band.lower[j], band.upper[j])
            fh.write(",".join(_FMT % c for c in cells) + "\n")


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def json_ready(value):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(value, dict):
        return {k: json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_ready(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return value
