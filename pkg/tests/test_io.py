"""Serialisation round trips."""
import json

import numpy as np
import pytest

from deformed_so5.algebra import DeformationParams, LPlusPoint
from deformed_so5.dynamics import integrate
from deformed_so5.io import (
    csv_columns,
    dumps,
    format_float,
    load_point,
    point_from_dict,
    read_trajectory_csv,
    sidecar_path,
    trajectory_from_json,
    trajectory_to_json,
    write_trajectory_csv,
)
from deformed_so5.lift import CotangentPoint, random_cotangent_point
from deformed_so5.lift_flow import integrate_lift

P = DeformationParams(0.9, 1.3, -0.2, 0.7, 0.4)


def test_format_float_round_trips(rng):
    for v in np.concatenate([rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, 200), [0.0, -0.0]]):
        assert float(format_float(v)) == v


def test_lplus_csv_bit_exact(tmp_path, rng):
    tr = integrate(rng.normal(size=10), (0.0, 1.0), P, t_eval=np.linspace(0, 1, 7))
    path = write_trajectory_csv(tr, tmp_path / "lp.csv")
    back = read_trajectory_csv(path)
    assert back.kind == "lplus"
    assert np.array_equal(back.times, tr.times) and np.array_equal(back.states, tr.states)
    assert all(np.array_equal(back.conserved[k], tr.conserved[k]) for k in back.conserved)
    assert path.read_text().splitlines()[0] == ",".join(csv_columns("lplus"))


def test_cotangent_csv_bit_exact(tmp_path, rng):
    tr = integrate_lift(random_cotangent_point(rng), (0.0, 0.5), P, t_eval=np.linspace(0, 0.5, 5))
    back = read_trajectory_csv(write_trajectory_csv(tr, tmp_path / "ct.csv"))
    assert back.kind == "cotangent" and np.array_equal(back.states, tr.states)


def test_csv_unknown_header(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("t,z\n0,1\n")
    with pytest.raises(ValueError):
        read_trajectory_csv(f)


def test_json_trajectory_round_trip(rng):
    tr = integrate(rng.normal(size=10), (0.0, 1.0), P, t_eval=np.linspace(0, 1, 4))
    back = trajectory_from_json(json.loads(dumps(trajectory_to_json(tr))))
    assert np.array_equal(back.states, tr.states) and back.drift == tr.drift


def test_dumps_handles_numpy():
    text = dumps({"a": np.float64(1.5), "b": np.arange(3), "c": np.bool_(True), "d": float("inf")})
    assert json.loads(text) == {"a": 1.5, "b": [0, 1, 2], "c": True, "d": "inf"}


def test_sidecar_path():
    assert sidecar_path("out/run.csv").name == "run.sidecar.json"


def test_points_from_files(tmp_path, rng):
    pt = LPlusPoint.from_vector(rng.normal(size=10))
    f = tmp_path / "p.json"
    f.write_text(json.dumps(pt.to_dict()))
    assert load_point(f) == pt
    cp = random_cotangent_point(rng)
    assert point_from_dict(cp.to_dict()) == cp and isinstance(point_from_dict(cp.to_dict()), CotangentPoint)
    with pytest.raises(ValueError):
        point_from_dict({"q": [0] * 5})
