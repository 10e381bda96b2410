"""Closed-form solution of the L+(5) flow by quadratures."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_rotation
from deformed_so5.algebra import DeformationParams, LPlusPoint, cross3
from deformed_so5.dynamics import integrate, vector_field_specific
from deformed_so5.exceptions import BranchDomainError, DomainError, NotOnStratum
from deformed_so5.numeric import ToleranceSpec, ode_solve
from deformed_so5.quadrature import (
    AZeroData,
    AZeroSolution,
    ClosedFormSolution,
    InvariantCoords,
    a_zero_conserved,
    a_zero_f3_quadrature,
    a_zero_invariants,
    a_zero_rhs,
    a_zero_state,
    closed_form_solution,
    compute_constants,
    invert_quadrature,
    quadrature_time,
    reconstruct_full,
    reconstruct_xyf,
    reduced_rhs,
    rotation_to_e3,
    solve_closed_form,
    to_angle_vars,
    to_invariant_coords,
)

P = DeformationParams(lam=1.3, alpha=0.7, epsilon=0.4, gamma=0.8, nu=1.1)
TIGHT = ToleranceSpec(rtol=1e-12, atol=1e-14)
TS = np.linspace(0.0, 1.0, 21)


def admissible(rng):
    v = rng.normal(size=10)
    v[0] = math.copysign(max(abs(v[0]), 0.2), v[0])
    return LPlusPoint.from_vector(v)


def a_zero_point(rng):
    v = rng.normal(size=10)
    v[0] = 0.0
    return LPlusPoint.from_vector(v)


@pytest.fixture(scope="module")
def cf_case():
    pt = admissible(np.random.default_rng(11))
    sol = ClosedFormSolution(pt, P)
    num = integrate(pt, (0.0, 1.0), P, t_eval=TS, tol=TIGHT)
    return pt, sol, num


# invariant coordinates

def test_invariant_coords_orthogonal():
    ic = to_invariant_coords(LPlusPoint(1.0, [1, 2, 0], [0, -1, 0], [0, 0, 3]))
    assert ic.x == 0.0 and ic.y == 0.0


def test_invariant_coords_example():
    assert to_invariant_coords(LPlusPoint(0.0, [0, 0, 1], [0, 0, 1], [0, 0, 2])) == InvariantCoords(2.0, 2.0, 2.0)


@given(st.integers(0, 2 ** 31))
def test_invariant_coords_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    pt = LPlusPoint.from_vector(rng.normal(size=10))
    a = to_invariant_coords(pt)
    b = to_invariant_coords(pt.rotated(random_rotation(rng)))
    assert max(abs(a.x - b.x), abs(a.y - b.y), abs(a.f - b.f)) <= 1e-13 * max(1.0, abs(a.f), abs(a.x))


def test_rotation_to_e3(rng):
    v = rng.normal(size=3)
    O = rotation_to_e3(v)
    np.testing.assert_allclose(O @ O.T, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(O @ v, [0, 0, np.linalg.norm(v)], atol=1e-14)
    assert np.linalg.det(O) == pytest.approx(1.0)


# constants and the reduced system

@pytest.mark.parametrize("change, pt_change", [
    ({"alpha": -0.7}, None), (None, {0: 0.0}), (None, {7: 0.0, 8: 0.0, 9: 0.0}), ({"nu": 0.0}, None)])
def test_compute_constants_domain(rng, change, pt_change):
    v = admissible(rng).vector()
    for k, val in (pt_change or {}).items():
        v[k] = val
    with pytest.raises(BranchDomainError):
        compute_constants(v, P.replace(**(change or {})))


def test_constants_satisfy_f_bound(rng):
    for _ in range(50):
        pt = admissible(rng)
        qc = compute_constants(pt, P)
        assert qc.C - to_invariant_coords(pt).f ** 2 >= -1e-12 * qc.C


def test_reduced_rhs_matches_full_field(rng):
    worst = 0.0
    for _ in range(100):
        pt = admissible(rng)
        qc = compute_constants(pt, P)
        dv = vector_field_specific(pt, P)
        dx, dy, dmu = dv[1:4], dv[4:7], dv[7:]
        x, y, mu = pt.x, pt.y, pt.mu
        oracle = np.array([mu @ dx + x @ dmu, mu @ dy + y @ dmu, 2 * (dx @ y + x @ dy)])
        got = np.array(reduced_rhs(to_invariant_coords(pt), qc, pt.a, P))
        worst = max(worst, np.abs(got - oracle).max() / max(1.0, np.abs(oracle).max()))
    assert worst <= 1e-10


def test_reduced_rhs_degenerate_cases(rng):
    pt = admissible(rng)
    qc = compute_constants(pt, P)
    assert reduced_rhs(InvariantCoords(0.0, 0.0, 0.3), qc, pt.a, P)[:2] == (0.0, 0.0)
    edge = InvariantCoords(0.4, -0.2, math.sqrt(qc.C))
    assert reduced_rhs(edge, qc, pt.a, P)[2] == 0.0


def test_static_when_eps_is_lam(rng):
    p = P.replace(epsilon=P.lam)
    pt = admissible(rng)
    qc = compute_constants(pt, p)
    assert qc.E == 0.0 and np.isfinite([qc.C, qc.D, qc.K, qc.R]).all()
    assert reduced_rhs(to_invariant_coords(pt), qc, pt.a, p) == (0.0, 0.0, 0.0)
    sol = closed_form_solution(pt, p)
    assert np.abs(sol.trajectory(TS).states - pt.vector()).max() <= 1e-12


# the elliptic quadrature

def test_quadrature_time_at_start(cf_case):
    pt, _, _ = cf_case
    qc = compute_constants(pt, P)
    assert quadrature_time(qc.g0, qc, P, pt.a) == 0.0
    assert invert_quadrature(0.0, qc, P, pt.a) == qc.g0


def test_quadrature_round_trip(rng):
    for _ in range(5):
        pt = admissible(rng)
        qc = compute_constants(pt, P)
        gp = ClosedFormSolution(pt, P).gp
        up = qc.cos_psi0 * qc.psidot0 > 0
        turn = gp.gb if up else gp.ga
        for frac in (0.3, 0.7):
            g_star = qc.g0 + frac * (turn - qc.g0)
            t = abs(quadrature_time(g_star, qc, P, pt.a))
            assert abs(invert_quadrature(t, qc, P, pt.a) - g_star) <= 1e-9


def test_quadrature_time_monotone(cf_case):
    pt, sol, _ = cf_case
    qc = compute_constants(pt, P)
    direction = math.copysign(1.0, qc.psidot0 * qc.cos_psi0) or 1.0
    gs = [invert_quadrature(t, qc, P, pt.a) for t in (0.0, 0.01, 0.02, 0.03)]
    ts = [quadrature_time(g, qc, P, pt.a) for g in gs]
    assert np.all(np.diff(gs) * direction > 0)
    assert np.all(np.diff(ts) * direction > 0)


def test_quadrature_outside_interval(cf_case):
    pt, _, _ = cf_case
    qc = compute_constants(pt, P)
    with pytest.raises(DomainError):
        quadrature_time(1.5, qc, P, pt.a)


def test_inverted_g_satisfies_ode(cf_case):
    pt, _, _ = cf_case
    qc = compute_constants(pt, P)
    h = 1e-5
    for t in (0.13, 0.41, 0.77):
        g = invert_quadrature(t, qc, P, pt.a)
        dg = (invert_quadrature(t + h, qc, P, pt.a) - invert_quadrature(t - h, qc, P, pt.a)) / (2 * h)
        rhs = (1 - g * g) * (4 * qc.kc ** 2 * g * g - qc.E * g + qc.R)
        assert abs(dg * dg - rhs) / max(abs(rhs), 1e-3) <= 1e-6


def test_g_matches_numeric_sin_psi(cf_case):
    pt, sol, num = cf_case
    qc = compute_constants(pt, P)
    worst = 0.0
    for t, s in zip(num.times, num.states):
        g_num = math.sin(to_angle_vars(s, P).psi)
        worst = max(worst, abs(invert_quadrature(t, qc, P, pt.a) - g_num), abs(sol.g(t) - g_num))
    assert worst <= 1e-7


# reconstruction

def test_reconstruct_xyf_start_and_numeric(cf_case):
    pt, sol, num = cf_case
    ic0 = to_invariant_coords(pt)
    assert np.allclose(reconstruct_xyf(0.0, sol), (ic0.x, ic0.y, ic0.f), atol=1e-12)
    worst = 0.0
    for t, s in zip(num.times, num.states):
        ic = to_invariant_coords(s)
        worst = max(worst, np.abs(np.array(reconstruct_xyf(t, sol)) - (ic.x, ic.y, ic.f)).max())
    assert worst <= 1e-6


def test_e2r_definition(cf_case):
    _, sol, _ = cf_case
    for t in TS:
        x, y, _ = reconstruct_xyf(t, sol)
        assert abs(x * x / P.alpha + y * y - sol.e2r(t)) <= 1e-8 * max(1.0, sol.e2r(t))
        assert abs(sol.e2r_algebraic(t) - sol.e2r(t)) <= 1e-8 * max(1.0, sol.e2r(t))


def test_reconstruct_full(cf_case):
    pt, sol, num = cf_case
    assert np.abs(reconstruct_full(0.0, sol, pt).vector() - pt.vector()).max() <= 1e-10
    tr = sol.trajectory(TS)
    assert max(np.abs(sol.m6_residuals(p)).max() for p in tr.points()) <= 1e-8
    assert np.abs(tr.states - num.states).max() <= 1e-5


def test_reconstruct_full_rejects_foreign_start(cf_case):
    _, sol, _ = cf_case
    with pytest.raises(ValueError):
        reconstruct_full(0.5, sol, LPlusPoint.zero())


def test_long_horizon_through_turning_points(rng):
    pt = admissible(rng)
    ts = np.linspace(0.0, 6.0, 13)
    tr = ClosedFormSolution(pt, P).trajectory(ts)
    num = integrate(pt, (0.0, 6.0), P, t_eval=ts, tol=TIGHT)
    assert np.abs(tr.states - num.states).max() <= 1e-5


def test_fallback_outside_domain(rng):
    pt = admissible(rng)
    tr = solve_closed_form(pt, P.replace(alpha=-0.7), TS)
    assert tr.method == "numeric-only" and "alpha" in tr.meta["fallback"]


def test_sidecar_constants(cf_case):
    _, sol, _ = cf_case
    side = sol.sidecar()
    for key in ("C", "D", "K", "E", "R", "B_sign", "branch"):
        assert key in side
    assert side["branch"] == "a!=0"


# a = 0

def test_a_zero_parallel():
    pt = LPlusPoint(0.0, [1.0, 2.0, -1.0], [-0.5, -1.0, 0.5], [0.3, 0.1, 0.7])
    assert a_zero_state(pt, P.alpha)[0] == 0.0
    assert a_zero_invariants(pt)[2] == 0.0


def test_a_zero_requires_stratum():
    with pytest.raises(NotOnStratum):
        a_zero_invariants(LPlusPoint(0.1, [1, 0, 0], [0, 1, 0], [0, 0, 1]))


def test_a_zero_chain_rule(rng):
    worst = 0.0
    for _ in range(50):
        pt = a_zero_point(rng)
        dv = vector_field_specific(pt, P)
        x, y, mu = pt.x, pt.y, pt.mu
        dx, dy = dv[1:4], dv[4:7]
        w = cross3(x, y)
        oracle = np.array([mu @ (cross3(dx, y) + cross3(x, dy)), dx @ y + x @ dy,
                           2 * x @ dx - 2 * P.alpha * y @ dy])
        got = np.array(a_zero_rhs(a_zero_state(pt, P.alpha), a_zero_invariants(pt), P))
        worst = max(worst, np.abs(got - oracle).max() / max(1.0, np.abs(oracle).max()))
        assert abs(w @ w - a_zero_invariants(pt)[2]) <= 1e-12
    assert worst <= 1e-10


def test_a_zero_MN_conserved(rng):
    for _ in range(3):
        pt = a_zero_point(rng)
        num = integrate(pt, (0.0, 3.0), P, tol=TIGHT)
        g = a_zero_invariants(pt)
        MN = np.array([a_zero_conserved(a_zero_state(s, P.alpha), g, P.alpha) for s in num.states])
        assert np.abs(MN - MN[0]).max() / np.abs(MN[0]).max() <= 1e-8


def test_a_zero_quadrature_and_inversion(rng):
    pt = a_zero_point(rng)
    data = AZeroData.from_point(pt, P)
    assert a_zero_f3_quadrature(data.f3, data, P) == 0.0
    sol = AZeroSolution(pt, P)
    num = integrate(pt, (0.0, 1.0), P, t_eval=TS, tol=TIGHT)
    f3_num = np.array([a_zero_state(s, P.alpha)[2] for s in num.states])
    f3_inv = np.array([sol.f3_inverted(t) for t in TS])
    assert np.abs(f3_inv - f3_num).max() <= 1e-6
    assert np.all(f3_inv ** 2 <= data.M * (1 + 1e-12))
    t_small = 0.01
    f3_t = sol.f3_inverted(t_small)
    assert abs(a_zero_f3_quadrature(f3_t, data, P) - t_small) <= 1e-8


def test_a_zero_f3_equation_matches_integration(rng):
    pt = a_zero_point(rng)
    data = AZeroData.from_point(pt, P)
    g = (data.g1, data.g2, data.g3)
    sol = ode_solve(lambda t, f: np.array(a_zero_rhs(f, g, P)), [data.f1, data.f2, data.f3],
                    (0.0, 1.0), TIGHT)
    f3_inv = np.array([AZeroSolution(pt, P).f3_inverted(t) for t in TS])
    assert np.abs(sol(TS)[:, 2] - f3_inv).max() <= 1e-6


def test_a_zero_full_trajectory(rng):
    for _ in range(3):
        pt = a_zero_point(rng)
        sol = closed_form_solution(pt, P)
        assert isinstance(sol, AZeroSolution)
        num = integrate(pt, (0.0, 1.0), P, t_eval=TS, tol=TIGHT)
        assert np.abs(sol.trajectory(TS).states - num.states).max() <= 1e-5
