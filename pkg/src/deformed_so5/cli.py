"""Command-line entry point: ``simulate``, ``verify`` and ``classify``.

Exit codes
----------
0  success (``verify``: every sample passed)
1  ``verify`` found a sample above the threshold
2  configuration, input or parse error
3  solver error
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .algebra import DeformationParams, LPlusPoint
from .exceptions import DegenerateMetric, So5Error
from .io import dumps, point_from_dict, sidecar_path, write_json, write_trajectory_csv
from .lift import CotangentPoint, orbit_report
from .numeric import ToleranceSpec
from .suites import SUITES, run_suite
from .trajectory import Trajectory

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
MODES = ("lp-numeric", "lp-closed-form", "lift-numeric", "lift-closed-form", "geodesic")
_LPLUS_MODES = {"lp-numeric", "lp-closed-form"}


class ConfigError(ValueError):
    """The run configuration is malformed."""


@dataclass(frozen=True)
class RunConfig:
    """A ``simulate`` job parsed from JSON.

    Keys: ``params`` (``lambda, alpha, epsilon, gamma, nu``), ``initial`` (a
    point), ``t_span``, optional ``n_out`` (output grid size, default 101),
    optional ``tol`` (``rtol, atol, max_steps``), ``mode``, ``output`` and
    optional ``seed``.
    """

    params: DeformationParams
    initial: object
    t_span: tuple[float, float]
    tol: ToleranceSpec
    mode: str
    output: Path
    n_out: int = 101
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "RunConfig":
        try:
            params = DeformationParams.from_dict(d["params"])
            initial = point_from_dict(d["initial"])
            t0, t1 = (float(v) for v in d["t_span"])
            tol = ToleranceSpec(**d.get("tol", {}))
            mode = d["mode"]
            output = Path(d["output"])
            n_out = int(d.get("n_out", 101))
            seed = int(d.get("seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if (mode in _LPLUS_MODES) != isinstance(initial, LPlusPoint):
            kind = "an L+(5) point" if mode in _LPLUS_MODES else "a cotangent point {q, p}"
            raise ConfigError(f"mode {mode!r} needs {kind}")
        if not t1 > t0 or n_out < 2:
            raise ConfigError("t_span must be increasing and n_out >= 2")
        if base is not None and not output.is_absolute():
            output = base / output
        return cls(params, initial, (t0, t1), tol, mode, output, n_out, seed)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_span[0], self.t_span[1], self.n_out)


def _max_gap(a: Trajectory, b: Trajectory) -> float:
    return float(np.abs(a.states - b.states).max())


def run_simulation(cfg: RunConfig) -> tuple[Trajectory, dict]:
    """Run the configured solver; returns the trajectory and a summary dictionary."""
    from .dynamics import integrate
    from .lift_flow import (
        cotangent_conserved,
        geodesic_flow,
        integrate_lift,
        reconstruct_trajectory,
    )
    from .quadrature import solve_closed_form

    times = cfg.times
    summary: dict = {"mode": cfg.mode, "points": int(times.size)}
    if cfg.mode == "lp-numeric":
        traj = integrate(cfg.initial, cfg.t_span, cfg.params, tol=cfg.tol, t_eval=times)
    elif cfg.mode == "lp-closed-form":
        traj = solve_closed_form(cfg.initial, cfg.params, times, tol=cfg.tol)
        if traj.method == "closed-form":
            ref = integrate(cfg.initial, cfg.t_span, cfg.params, tol=cfg.tol, t_eval=times)
            summary["max_gap_vs_numeric"] = _max_gap(traj, ref)
    elif cfg.mode == "lift-numeric":
        traj = integrate_lift(cfg.initial, cfg.t_span, cfg.params, tol=cfg.tol, t_eval=times)
    elif cfg.mode == "lift-closed-form":
        traj = reconstruct_trajectory(cfg.initial, times, cfg.params)
        ref = integrate_lift(cfg.initial, cfg.t_span, cfg.params, tol=cfg.tol, t_eval=times)
        summary["max_gap_vs_numeric"] = _max_gap(traj, ref)
    else:
        states = np.array([geodesic_flow(cfg.initial, float(t), cfg.params).vector()
                           for t in times])
        cons = cotangent_conserved(states, cfg.params)
        traj = Trajectory(times, states, kind="cotangent", conserved=cons, method="closed-form",
                          meta={"params": cfg.params.to_dict()})
        d1 = cons["d1"]
        scale = max(1.0, abs(d1[0]))
        summary["quadric_drift"] = float(max(np.abs(d1 - d1[0]).max() / scale,
                                             np.abs(cons["d3"] - cons["d3"][0]).max() / scale))
    summary["method"] = traj.method
    summary["drift"] = dict(sorted(traj.drift.items()))
    if "fallback" in traj.meta:
        summary["fallback"] = traj.meta["fallback"]
    return traj, summary


def cmd_simulate(args) -> int:
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        traj, summary = run_simulation(cfg)
    except DegenerateMetric as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (So5Error, ArithmeticError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        cfg.output.parent.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(traj, cfg.output, cfg.params)
        if traj.method == "closed-form" and "constants" in traj.meta:
            write_json({"params": cfg.params.to_dict(), "constants": traj.meta["constants"]},
                       sidecar_path(cfg.output))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary["output"] = str(cfg.output)
    print(dumps(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        report = run_suite(args.suite, args.seed, args.count)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(dumps(report))
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_classify(args) -> int:
    try:
        d = json.loads(Path(args.point).read_text())
        pt = point_from_dict(d)
        if not isinstance(pt, CotangentPoint):
            raise ValueError("classify needs a cotangent point {q, p}")
        params = DeformationParams(args.lam, args.alpha)
        report = orbit_report(pt, params)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(dumps(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="so5", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="integrate a configured initial condition")
    s.add_argument("--config", required=True, help="JSON run configuration")
    s.set_defaults(func=cmd_simulate)
    v = sub.add_parser("verify", help="run a randomised invariant suite")
    v.add_argument("--suite", required=True, choices=sorted(SUITES))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--count", type=int, default=100)
    v.set_defaults(func=cmd_verify)
    c = sub.add_parser("classify", help="orbit label of a cotangent point")
    c.add_argument("--point", required=True, help="JSON file {\"q\": [5], \"p\": [5]}")
    c.add_argument("--lambda", dest="lam", type=float, required=True)
    c.add_argument("--alpha", type=float, required=True)
    c.set_defaults(func=cmd_classify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
