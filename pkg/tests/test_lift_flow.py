"""The lifted flow on the cotangent bundle, its closed form and the geodesic case."""
import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, strategies as st

from deformed_so5.algebra import DeformationParams
from deformed_so5.dynamics import hamiltonian_H
from deformed_so5.exceptions import BranchDomainError, DomainError, OffConstraint
from deformed_so5.lift import CotangentPoint, momentum_I, momentum_J, random_cotangent_point
from deformed_so5.lift_flow import (
    LinearBlockConstants,
    PropagatorEntries,
    QuadricChart,
    chart_to_point,
    geodesic_flow,
    geodesic_rhs,
    integrate_lift,
    kinetic_energy,
    lifted_hamiltonian_h,
    lifted_rhs,
    linear_block_matrix,
    momentum_velocity_residual,
    propagate_linear_block,
    quadric_residual,
    quartic_residual,
    reconstruct_qp,
    reconstruct_trajectory,
    reduced_integral_gradients,
    reduced_integrals,
    reduced_involution_residual,
    restrict_to_quadric,
    restricted_hamiltonian_p1,
    scaled_block,
    unscale_block,
    vector_block_rhs,
    xy_solution_for,
)
from deformed_so5.numeric import ToleranceSpec, fd_gradient, ode_solve
from deformed_so5.suites import quadric_point

TIGHT = ToleranceSpec(rtol=1e-12, atol=1e-14)
TS = np.linspace(0.0, 1.0, 11)
seeds = st.integers(0, 2 ** 31)


def random_params(rng, alpha_positive=False):
    lam = rng.choice([-1, 1]) * rng.uniform(0.3, 2.0)
    alpha = rng.uniform(0.3, 2.0) * (1 if alpha_positive else rng.choice([-1, 1]))
    return DeformationParams(lam, alpha, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))


def block_params(rng, regime):
    """``alpha > 0`` with ``delta`` of the requested sign at the returned point."""
    while True:
        p = random_params(rng, alpha_positive=True)
        if regime == "trigonometric":
            p = p.replace(lam=abs(p.lam))
        pt = random_cotangent_point(rng)
        prop = PropagatorEntries.from_point(pt, p)
        if prop.regime == regime:
            return p, pt


def a_zero_point(rng, params):
    q, p = rng.uniform(-1, 1, (2, 5))
    q[1] = np.sign(q[1]) * max(abs(q[1]), 0.3)
    p[0] = params.alpha * q[0] * p[1] / q[1]
    return CotangentPoint(q, p)


def geodesic_params(rng, definite=True):
    """``gamma = 1``, ``eps = lam``; ``definite`` makes eta positive definite (bounded flow)."""
    if definite:
        lam, alpha = rng.uniform(0.3, 2.0, 2)
    else:
        lam, alpha = -rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0)
    return DeformationParams(lam, alpha, lam, 1.0, rng.uniform(-1, 1))


# lifted Hamiltonian and vector field

def test_h_is_H_of_J(rng):
    worst = 0.0
    for _ in range(1000):
        params = random_params(rng)
        pt = random_cotangent_point(rng)
        h = lifted_hamiltonian_h(pt, params)
        worst = max(worst, abs(h - hamiltonian_H(momentum_J(pt, params), params)) / max(abs(h), 1e-12))
    assert worst <= 1e-11


@given(seeds)
def test_lifted_rhs_is_hamiltonian(seed):
    rng = np.random.default_rng(seed)
    params = random_params(rng)
    v = rng.uniform(-1, 1, 10)
    grad = fd_gradient(lambda u: lifted_hamiltonian_h(CotangentPoint.from_vector(u), params), v)
    canonical = np.concatenate([grad[5:], -grad[:5]])
    assert np.abs(lifted_rhs(CotangentPoint.from_vector(v), params) - canonical).max() <= 1e-6


def test_J_intertwines_flows(rng):
    worst = max(momentum_velocity_residual(random_cotangent_point(rng), random_params(rng))
                for _ in range(200))
    assert worst <= 1e-9


def test_integrate_lift_conserves(rng):
    params = random_params(rng, alpha_positive=True).replace(lam=0.8)
    tr = integrate_lift(random_cotangent_point(rng), (0.0, 2.0), params, tol=TIGHT)
    assert max(tr.drift[k] for k in ("d1", "d2", "d3", "h")) <= 1e-8


# linear block

def test_block_scaling_round_trip(rng):
    params = random_params(rng, alpha_positive=True)
    pt = random_cotangent_point(rng)
    q, p = pt.q, pt.p
    np.testing.assert_allclose(unscale_block(scaled_block(pt, params), params), [q[0], q[1], p[0], p[1]])


def test_block_needs_alpha_positive(rng):
    with pytest.raises(BranchDomainError):
        propagate_linear_block(random_cotangent_point(rng), 0.5, DeformationParams(1.0, -1.0))


def test_propagator_identity_at_zero(rng):
    params = random_params(rng, alpha_positive=True)
    assert np.array_equal(PropagatorEntries.from_point(random_cotangent_point(rng), params).matrix(0.0),
                          np.eye(4))


def test_propagator_derivative_at_zero(rng):
    params = random_params(rng, alpha_positive=True)
    pt = random_cotangent_point(rng)
    prop = PropagatorEntries.from_point(pt, params)
    z0 = scaled_block(pt, params)
    h = 1e-6
    fd = (prop.matrix(h) @ z0 - prop.matrix(-h) @ z0) / (2 * h)
    assert np.abs(fd - linear_block_matrix(pt, params) @ z0).max() <= 1e-9 * max(1.0, np.abs(fd).max())


def test_block_matrix_matches_lifted_rhs(rng):
    params = random_params(rng, alpha_positive=True)
    pt = random_cotangent_point(rng)
    dz = linear_block_matrix(pt, params) @ scaled_block(pt, params)
    d = lifted_rhs(pt, params)
    sa = np.sqrt(params.alpha)
    np.testing.assert_allclose(dz, [sa * d[0], d[1], d[5], sa * d[6]], atol=1e-12)


@pytest.mark.parametrize("regime", ["hyperbolic", "trigonometric"])
def test_propagator_matches_numeric(rng, regime):
    params, pt = block_params(rng, regime)
    M = linear_block_matrix(pt, params)
    z0 = scaled_block(pt, params)
    sol = ode_solve(lambda t, z: M @ z, z0, (0.0, 2.0), TIGHT)
    prop = PropagatorEntries.from_point(pt, params)
    for t in np.linspace(0.0, 2.0, 21):
        assert np.abs(prop.matrix(t) @ z0 - sol(t)).max() <= 1e-8 * max(1.0, np.abs(sol(t)).max())


def test_vector_part_keeps_d(rng):
    params = random_params(rng, alpha_positive=True).replace(lam=0.9)
    pt0 = random_cotangent_point(rng)
    consts = LinearBlockConstants.from_point(pt0, params)

    def assemble(t, w):
        b = propagate_linear_block(pt0, t, params)
        return CotangentPoint(np.concatenate([b[:2], w[:3]]), np.concatenate([b[2:], w[3:]]))

    w0 = np.concatenate([pt0.q[2:], pt0.p[2:]])
    sol = ode_solve(lambda t, w: vector_block_rhs(assemble(t, w), params, consts), w0, (0.0, 1.0), TIGHT)
    d0 = momentum_I(pt0, params).vector()
    for t in TS:
        d = momentum_I(assemble(t, sol(t)), params).vector()
        assert np.abs(d - d0).max() / np.abs(d0).max() <= 1e-8
    ref = integrate_lift(pt0, (0.0, 1.0), params, tol=TIGHT, t_eval=TS)
    assert np.abs(assemble(1.0, sol(1.0)).vector() - ref.states[-1]).max() <= 1e-8


# reconstruction of (q, p)

def test_reconstruct_at_zero(rng):
    params = random_params(rng, alpha_positive=True)
    pt = random_cotangent_point(rng)
    assert reconstruct_qp(pt, 0.0, params) == pt


def test_reconstruct_nonzero_a(rng):
    for _ in range(3):
        params = random_params(rng, alpha_positive=True)
        pt = random_cotangent_point(rng)
        tr = reconstruct_trajectory(pt, TS, params)
        num = integrate_lift(pt, (0.0, 1.0), params, tol=TIGHT, t_eval=TS)
        assert np.abs(tr.states - num.states).max() <= 1e-5
        xy = xy_solution_for(pt, params)
        J = np.array([momentum_J(s, params).vector() for s in tr.points()])
        Jcf = np.array([xy.point_at(t).vector() for t in TS])
        assert np.abs(J - Jcf).max() <= 1e-7


def test_reconstruct_zero_a(rng):
    for _ in range(3):
        params = random_params(rng, alpha_positive=True)
        pt = a_zero_point(rng, params)
        assert abs(momentum_J(pt, params).a) <= 1e-14
        tr = reconstruct_trajectory(pt, TS, params)
        num = integrate_lift(pt, (0.0, 1.0), params, tol=TIGHT, t_eval=TS)
        assert np.abs(tr.states - num.states).max() <= 1e-5


def test_reconstruct_sidecar(rng):
    params = random_params(rng, alpha_positive=True)
    tr = reconstruct_trajectory(random_cotangent_point(rng), TS, params)
    assert tr.method == "closed-form" and tr.meta["constants"]["branch"] == "a!=0"


# geodesic flow

def test_geodesic_identity(rng):
    params = geodesic_params(rng)
    pt = random_cotangent_point(rng)
    assert np.abs(geodesic_flow(pt, 0.0, params).vector() - pt.vector()).max() == 0.0


@pytest.mark.parametrize("definite, t1", [(True, 5.0), (False, 2.0)])
def test_geodesic_matches_numeric(rng, definite, t1):
    # indefinite eta allows delta < 0 and exponential growth, hence the shorter span
    params = geodesic_params(rng, definite)
    pt = random_cotangent_point(rng)
    sol = scipy.integrate.solve_ivp(lambda t, v: geodesic_rhs(v, params), (0.0, t1), pt.vector(),
                                    method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)
    for t in np.linspace(0.0, t1, 11):
        ref = sol.sol(t)
        assert np.abs(geodesic_flow(pt, t, params).vector() - ref).max() <= 1e-9 * max(1.0, np.abs(ref).max())


def test_geodesic_is_time_scaled_h_flow(rng):
    params = geodesic_params(rng)
    pt = random_cotangent_point(rng)
    num = integrate_lift(pt, (0.0, 0.3), params, tol=TIGHT)
    ref = geodesic_flow(pt, params.alpha * params.lam * 0.3, params).vector()
    assert np.abs(num.states[-1] - ref).max() <= 1e-9


def test_geodesic_stays_on_quadric(rng):
    for _ in range(20):
        params = geodesic_params(rng)
        pt = quadric_point(rng, params)
        d1 = momentum_I(pt, params).d1
        for t in (0.5, 2.0, 5.0):
            assert quadric_residual(geodesic_flow(pt, t, params), d1, params) <= 1e-10 * max(1.0, abs(d1))


# quadric restriction

def test_quadric_chart_trivial_correction():
    params = DeformationParams(2.0, 0.5)
    pt = CotangentPoint([1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.7, 0.0, 0.0, 0.0])
    ch = restrict_to_quadric(pt, params)
    assert ch.pi0 == 0.7 and not ch.pivec.any()


def test_quadric_off_constraint(rng):
    params = DeformationParams(2.0, 0.5)
    with pytest.raises(OffConstraint):
        restrict_to_quadric(CotangentPoint(np.ones(5), np.ones(5)), params)


def test_p1_needs_unit_product():
    ch = QuadricChart(1.0, 0.1, [0.1, 0.2, 0.3], 0.0, [0.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        restricted_hamiltonian_p1(ch, DeformationParams(2.0, 1.0))


def _unit_params(rng):
    lam = rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)
    return DeformationParams(lam, 1 / lam, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))


def test_p1_equals_h(rng):
    worst = 0.0
    for _ in range(500):
        params = _unit_params(rng)
        pt = quadric_point(rng, params)
        h = lifted_hamiltonian_h(pt, params)
        worst = max(worst, abs(h - restricted_hamiltonian_p1(restrict_to_quadric(pt, params), params)) / abs(h))
    assert worst <= 1e-10


def test_chart_round_trip(rng):
    for _ in range(100):
        params = _unit_params(rng)
        pt = quadric_point(rng, params)
        back = chart_to_point(restrict_to_quadric(pt, params), params)
        assert np.abs(back.vector() - pt.vector()).max() <= 1e-11


def test_p1_kinetic_energy(rng):
    worst = 0.0
    for _ in range(500):
        params = _unit_params(rng)
        params = params.replace(gamma=1.0, epsilon=params.lam)
        pt = quadric_point(rng, params)
        p1 = restricted_hamiltonian_p1(restrict_to_quadric(pt, params), params)
        worst = max(worst, abs(p1 - kinetic_energy(pt, params)) / abs(p1))
    assert worst <= 1e-11


# reduced integrals

def test_reduced_integrals_parallel():
    I1, _, I3 = reduced_integrals([1.0, 2.0, 3.0], [-2.0, -4.0, -6.0], DeformationParams(1.0, 1.0, 0.5))
    assert I1 == 0.0 and I3 == 0.0


@given(seeds)
def test_reduced_integral_gradients(seed):
    rng = np.random.default_rng(seed)
    params = random_params(rng)
    j = rng.uniform(-1, 1, 10)
    G = reduced_integral_gradients(j, params)
    for i in range(3):
        fd = fd_gradient(lambda v, i=i: reduced_integrals(v[1:4], v[4:7], params)[i], j)
        assert np.abs(fd - G[i]).max() <= 1e-6


def test_reduced_involution(rng):
    worst = max(reduced_involution_residual(random_cotangent_point(rng), random_params(rng))
                for _ in range(500))
    assert worst <= 1e-10


def test_quartic_along_lifted_trajectory(rng):
    params = random_params(rng, alpha_positive=True).replace(lam=1.1)
    tr = integrate_lift(random_cotangent_point(rng), (0.0, 2.0), params, tol=TIGHT,
                        t_eval=np.linspace(0.0, 2.0, 21))
    assert max(quartic_residual(momentum_J(s, params), params) for s in tr.points()) <= 1e-9
