"""CSV and JSON serialisation of points, trajectories and closed-form sidecars.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so every file round-trips bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .algebra import DeformationParams, LPlusPoint
from .dynamics import conserved_series
from .trajectory import Trajectory

LPLUS_STATE_COLUMNS = ("a", "x1", "x2", "x3", "y1", "y2", "y3", "mu1", "mu2", "mu3")
LPLUS_EXTRA_COLUMNS = ("c1", "c2", "H", "I1", "I2", "I3", "I4")
COTANGENT_STATE_COLUMNS = ("q-1", "q0", "q1", "q2", "q3", "p-1", "p0", "p1", "p2", "p3")
COTANGENT_EXTRA_COLUMNS = ("d1", "d2", "d3", "delta", "h")


def format_float(v: float) -> str:
    """Shortest round-trip decimal for a double (``repr``)."""
    return repr(float(v))


def csv_columns(kind: str) -> tuple[str, ...]:
    """Header of the trajectory CSV for ``kind`` in ``{"lplus", "cotangent"}``."""
    if kind == "lplus":
        return ("t",) + LPLUS_STATE_COLUMNS + LPLUS_EXTRA_COLUMNS
    if kind == "cotangent":
        return ("t",) + COTANGENT_STATE_COLUMNS + COTANGENT_EXTRA_COLUMNS
    raise ValueError(f"unknown trajectory kind {kind!r}")


def _extras(traj: Trajectory, params: DeformationParams | None):
    names = LPLUS_EXTRA_COLUMNS if traj.kind == "lplus" else COTANGENT_EXTRA_COLUMNS
    if all(n in traj.conserved for n in names):
        return [np.asarray(traj.conserved[n]) for n in names]
    if params is None:
        raise ValueError("params are needed to evaluate the conserved columns")
    if traj.kind == "lplus":
        cons = conserved_series(traj.states, params)
    else:
        from .lift_flow import cotangent_conserved
        cons = cotangent_conserved(traj.states, params)
    return [np.asarray(cons[n]) for n in names]


def write_trajectory_csv(traj: Trajectory, path, params: DeformationParams | None = None) -> Path:
    """Write ``traj`` with the schema of :func:`csv_columns`."""
    path = Path(path)
    extras = _extras(traj, params)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_columns(traj.kind))
        for i, t in enumerate(traj.times):
            row = [t, *traj.states[i], *(e[i] for e in extras)]
            w.writerow([format_float(v) for v in row])
    return path


def read_trajectory_csv(path) -> Trajectory:
    """Read a file written by :func:`write_trajectory_csv`."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = tuple(rows[0])
    if header == csv_columns("lplus"):
        kind, extra_names = "lplus", LPLUS_EXTRA_COLUMNS
    elif header == csv_columns("cotangent"):
        kind, extra_names = "cotangent", COTANGENT_EXTRA_COLUMNS
    else:
        raise ValueError(f"unrecognised trajectory header {header!r}")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    cons = {n: data[:, 11 + i].copy() for i, n in enumerate(extra_names)}
    return Trajectory(data[:, 0], data[:, 1:11], kind=kind, conserved=cons)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text for nested dicts containing numpy values."""
    return json.dumps(_jsonable(obj), indent=indent, sort_keys=True)


def trajectory_to_json(traj: Trajectory) -> dict:
    """Dictionary form of a trajectory (Python floats keep full precision in JSON)."""
    return {"kind": traj.kind, "method": traj.method, "times": traj.times,
            "states": traj.states, "conserved": traj.conserved, "drift": traj.drift,
            "meta": traj.meta}


def trajectory_from_json(d: dict) -> Trajectory:
    return Trajectory(np.array(d["times"], dtype=float), np.array(d["states"], dtype=float),
                      kind=d["kind"], method=d.get("method", "numeric"),
                      conserved={k: np.array(v, dtype=float) for k, v in d["conserved"].items()},
                      drift=dict(d.get("drift", {})), meta=dict(d.get("meta", {})))


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path


def sidecar_path(csv_path) -> Path:
    """``out.csv`` -> ``out.sidecar.json``."""
    return Path(csv_path).with_suffix(".sidecar.json")


def point_from_dict(d: dict):
    """:class:`LPlusPoint` for ``{"a", "x", "y", "mu"}``, :class:`CotangentPoint` for ``{"q", "p"}``."""
    if {"q", "p"} <= set(d):
        from .lift import CotangentPoint
        return CotangentPoint.from_dict(d)
    if {"a", "x", "y", "mu"} <= set(d):
        return LPlusPoint.from_dict(d)
    raise ValueError("a point needs keys {a, x, y, mu} or {q, p}")


def load_point(path):
    """Read a point from a JSON file (see :func:`point_from_dict`)."""
    return point_from_dict(json.loads(Path(path).read_text()))
