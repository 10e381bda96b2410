"""Randomised verification suites shared by the command line and the test-suite.

Each suite draws one sample from a ``numpy.random.Generator`` and returns
``(residual, sample)``; :func:`run_suite` spawns one independent child seed
per sample from a :class:`numpy.random.SeedSequence`, so results do not
depend on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import DeformationParams, jacobi_residual, pencil_jacobi_residual
from .dynamics import casimir_c1, casimir_c2, integrate, involution_matrix
from .exceptions import So5Error
from .lift import (
    CotangentPoint,
    I_poisson_residual,
    J_matrix,
    J_poisson_residual,
    action_Phi,
    action_Psi,
    dual_pair_residual,
    make_group_element,
    momentum_I,
    momentum_J,
    plucker_residual,
    random_algebra_element,
)
from .lift_flow import (
    PropagatorEntries,
    lifted_hamiltonian_h,
    linear_block_matrix,
    restrict_to_quadric,
    restricted_hamiltonian_p1,
    scaled_block,
)
from .numeric import ToleranceSpec, ode_solve
from .trajectory import max_relative_drift

WORKERS_ENV = "SO5_WORKERS"
PARAM_GRID = (-1.0, 0.0, 1.0)


def _signed(rng, lo=0.3, hi=2.0):
    return float(rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi))


def random_params(rng, nondegenerate: bool = True, alpha_positive: bool = False) -> DeformationParams:
    """Random ``(lam, alpha, eps, gamma, nu)``; ``alpha lam != 0`` unless ``nondegenerate`` is False."""
    if nondegenerate:
        lam = _signed(rng)
        alpha = float(rng.uniform(0.3, 2.0)) if alpha_positive else _signed(rng)
    else:
        lam, alpha = (float(v) for v in rng.uniform(-2, 2, 2))
    return DeformationParams(lam, alpha, float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                             float(rng.uniform(-1, 1)))


def random_qp(rng) -> CotangentPoint:
    return CotangentPoint(rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5))


def quadric_point(rng, params: DeformationParams) -> CotangentPoint:
    """Random point with ``q.p = 0`` and ``|q_-1|`` bounded away from zero."""
    q = rng.uniform(-1, 1, 5)
    p = rng.uniform(-1, 1, 5)
    q[0] = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.0)
    p[0] = -(q[1:] @ p[1:]) / q[0]
    return CotangentPoint(q, p)


# ---------------------------------------------------------------------------
# suites

def suite_jacobi(rng):
    if rng.uniform() < 0.3:
        lam, alpha = (float(v) for v in rng.choice(PARAM_GRID, 2))
    else:
        lam, alpha = (float(v) for v in rng.uniform(-2, 2, 2))
    return jacobi_residual(DeformationParams(lam, alpha)), {"lambda": lam, "alpha": alpha}


def suite_pencil(rng):
    lam, eps, alpha, b1, b2 = (float(v) for v in rng.uniform(-2, 2, 5))
    return (pencil_jacobi_residual(lam, eps, alpha, b1, b2),
            {"lambda": lam, "epsilon": eps, "alpha": alpha, "b1": b1, "b2": b2})


def suite_casimir(rng, t1: float = 10.0):
    # lam, alpha > 0 make c1 positive definite, so orbits stay bounded up to t1
    lam, alpha = (float(v) for v in rng.uniform(0.3, 2.0, 2))
    params = DeformationParams(lam, alpha, float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                               float(rng.uniform(-1, 1)))
    v0 = rng.uniform(-1, 1, 10)
    tr = integrate(v0, (0.0, t1), params, tol=ToleranceSpec(rtol=1e-10, atol=1e-12))
    c1 = [casimir_c1(s, params) for s in tr.states]
    c2 = [casimir_c2(s, params) for s in tr.states]
    return (max(max_relative_drift(c1), max_relative_drift(c2)),
            {"params": params.to_dict(), "point": v0.tolist()})


def suite_involution(rng):
    params = random_params(rng, nondegenerate=False)
    v = rng.uniform(-1, 1, 10)
    return float(np.abs(involution_matrix(v, params)).max()), {"params": params.to_dict(),
                                                               "point": v.tolist()}


def suite_dual_pair(rng):
    params = random_params(rng)
    pt = random_qp(rng)
    r = max(dual_pair_residual(pt, params), J_poisson_residual(pt, params),
            I_poisson_residual(pt, params))
    return r, {"params": params.to_dict(), "point": pt.to_dict()}


def suite_plucker(rng):
    params = random_params(rng)
    pt = random_qp(rng)
    return plucker_residual(momentum_J(pt, params), params), {"params": params.to_dict(),
                                                               "point": pt.to_dict()}


def suite_equivariance(rng):
    params = random_params(rng)
    pt = random_qp(rng)
    g = make_group_element(random_algebra_element(rng, params), float(rng.uniform(-1, 1)), params)
    G = g.matrix
    rJ = np.abs(J_matrix(action_Phi(g, pt), params) - G @ J_matrix(pt, params) @ G.T).max()
    A = rng.uniform(-1, 1, (2, 2))
    lhs = momentum_I(action_Psi(A, pt, params), params).gram()
    rI = np.abs(lhs - A @ momentum_I(pt, params).gram() @ A.T).max()
    return float(max(rJ, rI)), {"params": params.to_dict(), "point": pt.to_dict(),
                                "g": G.tolist(), "A": A.tolist()}


def suite_propagator(rng, t1: float = 2.0):
    params = random_params(rng, alpha_positive=True)
    pt = random_qp(rng)
    M = linear_block_matrix(pt, params)
    z0 = scaled_block(pt, params)
    sol = ode_solve(lambda t, z: M @ z, z0, (0.0, t1), ToleranceSpec(rtol=1e-12, atol=1e-14))
    prop = PropagatorEntries.from_point(pt, params)
    r = max(np.abs(prop.matrix(t) @ z0 - sol(t)).max() / max(1.0, np.abs(sol(t)).max())
            for t in np.linspace(0.0, t1, 21))
    return float(r), {"params": params.to_dict(), "point": pt.to_dict(), "regime": prop.regime}


def suite_quadric_identity(rng):
    lam = _signed(rng)
    params = DeformationParams(lam, 1.0 / lam, float(rng.uniform(-1, 1)),
                               float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
    pt = quadric_point(rng, params)
    h = lifted_hamiltonian_h(pt, params)
    p1 = restricted_hamiltonian_p1(restrict_to_quadric(pt, params), params)
    return abs(h - p1) / max(abs(h), 1e-300), {"params": params.to_dict(), "point": pt.to_dict()}


@dataclass(frozen=True)
class Suite:
    name: str
    sample: Callable
    threshold: float


SUITES = {s.name: s for s in (
    Suite("jacobi", suite_jacobi, 1e-12),
    Suite("pencil", suite_pencil, 1e-12),
    Suite("casimir", suite_casimir, 1e-8),
    Suite("involution", suite_involution, 1e-10),
    Suite("dual-pair", suite_dual_pair, 1e-11),
    Suite("plucker", suite_plucker, 1e-12),
    Suite("equivariance", suite_equivariance, 1e-10),
    Suite("propagator", suite_propagator, 1e-8),
    Suite("quadric-identity", suite_quadric_identity, 1e-10),
)}


def _run_one(args):
    name, seed_seq = args
    try:
        return SUITES[name].sample(np.random.default_rng(seed_seq))
    except (So5Error, ArithmeticError) as exc:
        return float("inf"), {"error": f"{type(exc).__name__}: {exc}",
                              "entropy": str(seed_seq.entropy), "spawn_key": list(seed_seq.spawn_key)}


def worker_count() -> int:
    """Number of worker processes from ``SO5_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_suite(name: str, seed: int, count: int, workers: int | None = None) -> dict:
    """Run ``count`` samples of a suite; returns ``{suite, samples, max_residual, pass, ...}``."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if count < 1:
        raise ValueError("count must be positive")
    suite = SUITES[name]
    children = np.random.SeedSequence(seed).spawn(count)
    jobs = [(name, c) for c in children]
    workers = workers or worker_count()
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs, chunksize=max(1, count // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    residuals = np.array([r for r, _ in results], dtype=float)
    worst = int(np.nanargmax(np.where(np.isnan(residuals), np.inf, residuals)))
    max_res = float(residuals[worst])
    passed = bool(np.all(residuals <= suite.threshold))
    report = {"suite": name, "samples": count, "seed": seed, "max_residual": max_res,
              "threshold": suite.threshold, "pass": passed}
    if not passed:
        report["worst_sample"] = {"index": worst, "residual": max_res, **results[worst][1]}
    return report
