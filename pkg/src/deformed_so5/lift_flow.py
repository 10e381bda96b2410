"""Dynamics on T*R^5 generated by the pulled-back Hamiltonian ``h = H o J``.

Covers the closed-form linear block for ``(q_-1, q_0, p_-1, p_0)``, the
reconstruction of ``(q, p)`` from an L+(5) trajectory, the geodesic flow of
``delta = d1 d2 - d3^2`` and the reduction to the cotangent bundle of the
quadric ``q.eta q = d1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import DeformationParams, LPlusPoint, as_vector, cross3
from .dynamics import casimir_c1, vector_field_specific
from .exceptions import (
    BranchAmbiguity,
    BranchDomainError,
    DomainError,
    OffConstraint,
    ReconstructionInconsistency,
    SingularSolve,
)
from .lift import CotangentPoint, as_qp, momentum_I, momentum_J
from .numeric import ToleranceSpec, cosh_sinhc, expm2, ode_solve
from .quadrature import closed_form_solution, rotation_to_e3
from .trajectory import Trajectory, max_relative_drift

SOLVE_RTOL = 1e-12
QUADRIC_D3_TOL = 1e-9


# ---------------------------------------------------------------------------
# the lifted Hamiltonian and its vector field

def _parts(pt):
    q, p = as_qp(pt)
    return q[0], q[1], q[2:], p[0], p[1], p[2:]


def lifted_hamiltonian_h(pt, params: DeformationParams) -> float:
    """``h(q, p)`` written out as a polynomial in ``(q, p)``; equals ``H(J(q, p))``."""
    qm, q0, qv, pm, p0, pv = _parts(pt)
    lam, al, eps, gam, nu = params.lam, params.alpha, params.epsilon, params.gamma, params.nu
    qq, pp, qp = qv @ qv, pv @ pv, qv @ pv
    c = cross3(qv, pv)
    A = al * qm * p0 - q0 * pm
    s = qm * pm + q0 * p0
    kin = (al * (al * lam ** 2 * qm ** 2 + lam ** 2 * q0 ** 2 + eps * qq) * pp
           + (pm ** 2 + al * p0 ** 2) * (qq + eps * q0 ** 2 + al * eps * qm ** 2)
           - al * eps * (s + qp) ** 2 - 2 * al * (lam - eps) * s * qp)
    return float(gam * kin + nu * (lam - eps) ** 2 * A ** 2 * (c @ c))


def lifted_rhs(pt, params: DeformationParams) -> np.ndarray:
    """Hamilton's equations of :func:`lifted_hamiltonian_h` as a 10-vector ``(dq, dp)``."""
    qm, q0, qv, pm, p0, pv = _parts(pt)
    lam, al, eps, gam, nu = params.lam, params.alpha, params.epsilon, params.gamma, params.nu
    qq, pp, qp = qv @ qv, pv @ pv, qv @ pv
    c = cross3(qv, pv)
    cr = c @ c
    A = al * qm * p0 - q0 * pm
    L2 = (lam - eps) ** 2
    out = np.empty(10)
    out[0] = 2 * gam * ((qq + eps * q0 ** 2) * pm - al * (eps * q0 * p0 + lam * qp) * qm) \
        - 2 * nu * L2 * A * cr * q0
    out[1] = 2 * gam * al * ((qq + al * eps * qm ** 2) * p0 - (eps * qm * pm + lam * qp) * q0) \
        + 2 * nu * al * L2 * A * cr * qm
    out[5] = -2 * gam * al * ((al * lam ** 2 * pp + al * eps * p0 ** 2) * qm
                              - (eps * q0 * p0 + lam * qp) * pm) - 2 * al * nu * L2 * A * cr * p0
    out[6] = -2 * gam * ((al * lam ** 2 * pp + eps * pm ** 2) * q0
                         - al * (eps * qm * pm + lam * qp) * p0) + 2 * nu * L2 * A * cr * pm
    u = lam * qm * pm + lam * q0 * p0 + eps * qp
    out[2:5] = 2 * gam * al * ((eps * qq + lam ** 2 * q0 ** 2 + al * lam ** 2 * qm ** 2) * pv - u * qv) \
        + 2 * nu * L2 * A ** 2 * (qq * pv - qp * qv)
    out[7:10] = -2 * gam * ((al * eps * pp + al * p0 ** 2 + pm ** 2) * qv - al * u * pv) \
        - 2 * nu * L2 * A ** 2 * (pp * qv - qp * pv)
    return out


def momentum_velocity_residual(pt, params: DeformationParams) -> float:
    """Largest gap between ``dJ/dt`` along :func:`lifted_rhs` and the L+(5) field at ``J(pt)``."""
    from .lift import J_gradients
    dJ = J_gradients(pt, params) @ lifted_rhs(pt, params)
    return float(np.abs(dJ - vector_field_specific(momentum_J(pt, params), params)).max())


def cotangent_conserved(states, params: DeformationParams) -> dict:
    """Series of ``d1, d2, d3, delta, h`` along an array of ``(q, p)`` rows."""
    rows = [momentum_I(s, params) for s in states]
    return {
        "d1": np.array([d.d1 for d in rows]),
        "d2": np.array([d.d2 for d in rows]),
        "d3": np.array([d.d3 for d in rows]),
        "delta": np.array([d.delta for d in rows]),
        "h": np.array([lifted_hamiltonian_h(s, params) for s in states]),
    }


def _cotangent_trajectory(times, states, params, method, meta):
    cons = cotangent_conserved(states, params)
    return Trajectory(times, states, kind="cotangent", conserved=cons,
                      drift={k: max_relative_drift(v) for k, v in cons.items()},
                      method=method, meta=meta)


def integrate_lift(pt0, t_span, params: DeformationParams, tol: ToleranceSpec | None = None,
                   t_eval=None) -> Trajectory:
    """Integrate :func:`lifted_rhs` with Dormand--Prince 5(4); defaults ``rtol=1e-10``."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    tol = tol or ToleranceSpec()
    q, p = as_qp(pt0)
    sol = ode_solve(lambda t, v: lifted_rhs(v, params), np.concatenate([q, p]), (t0, t1), tol)
    if t_eval is None:
        times, states = sol.t, sol.y
    else:
        times = np.asarray(t_eval, dtype=float)
        states = sol(times)
    return _cotangent_trajectory(times, states, params, "numeric",
                                 {"nsteps": sol.nsteps, "nreject": sol.nreject,
                                  "params": params.to_dict()})


# ---------------------------------------------------------------------------
# the linear block (q_-1, q_0, p_-1, p_0)

@dataclass(frozen=True)
class LinearBlockConstants:
    """``B = 2(lam-eps) a (gamma - nu (lam-eps) mu^2)`` and ``C_lift = (lam-eps)(gamma alpha - nu (lam-eps) a^2)``."""

    B: float
    C_lift: float

    @classmethod
    def from_point(cls, pt0, params: DeformationParams) -> "LinearBlockConstants":
        j = momentum_J(pt0, params)
        L = params.lam - params.epsilon
        m2 = float(j.mu @ j.mu)
        return cls(2 * L * j.a * (params.gamma - params.nu * L * m2),
                   L * (params.gamma * params.alpha - params.nu * L * j.a ** 2))


def _require_alpha_positive(params):
    if not params.alpha > 0:
        raise BranchDomainError("the linear-block closed form needs alpha > 0")


def scaled_block(pt, params: DeformationParams) -> np.ndarray:
    """``z = (sqrt(alpha) q_-1, q_0, p_-1, sqrt(alpha) p_0)``."""
    _require_alpha_positive(params)
    q, p = as_qp(pt)
    sa = math.sqrt(params.alpha)
    return np.array([sa * q[0], q[1], p[0], sa * p[1]])


def unscale_block(z, params: DeformationParams) -> np.ndarray:
    """Inverse of :func:`scaled_block`: ``(q_-1, q_0, p_-1, p_0)``."""
    sa = math.sqrt(params.alpha)
    return np.array([z[0] / sa, z[1], z[2], z[3] / sa])


def _n_matrix(d, params):
    lam, al, gam = params.lam, params.alpha, params.gamma
    sa = math.sqrt(al)
    return np.array([[-2 * gam * al * lam * d.d3, 2 * gam * sa * d.d1],
                     [-2 * gam * al * sa * lam ** 2 * d.d2, 2 * gam * al * lam * d.d3]])


def linear_block_matrix(pt0, params: DeformationParams) -> np.ndarray:
    """Constant 4x4 matrix ``M`` with ``dz/dt = M z`` for the scaled block ``z``.

    ``M = N (x) 1_2 + 1_2 (x) [[0, sqrt(alpha) B], [-sqrt(alpha) B, 0]]``.
    """
    _require_alpha_positive(params)
    N = _n_matrix(momentum_I(pt0, params), params)
    b = math.sqrt(params.alpha) * LinearBlockConstants.from_point(pt0, params).B
    return np.kron(N, np.eye(2)) + np.kron(np.eye(2), np.array([[0.0, b], [-b, 0.0]]))


@dataclass(frozen=True)
class PropagatorEntries:
    """Closed-form entries ``D(t), ..., L(t)`` of the linear-block solution operator.

    ``N^2 = -4 gamma^2 alpha^2 lam^2 delta`` times the identity, so
    ``exp(t N) = cosh(t w) + sinh(t w)/w N`` with ``w^2 = -4 gamma^2
    alpha^2 lam^2 delta``; for ``delta > 0`` the pair becomes ``cos, sin``.
    The rotation angle is ``sqrt(alpha) B t``.
    """

    N: np.ndarray
    omega_sq: float
    rot_rate: float

    @classmethod
    def from_point(cls, pt0, params: DeformationParams) -> "PropagatorEntries":
        _require_alpha_positive(params)
        d = momentum_I(pt0, params)
        N = _n_matrix(d, params)
        w2 = -4 * (params.gamma * params.alpha * params.lam) ** 2 * d.delta
        b = math.sqrt(params.alpha) * LinearBlockConstants.from_point(pt0, params).B
        return cls(N, w2, b)

    @property
    def regime(self) -> str:
        """``"hyperbolic"`` for ``delta < 0``, ``"trigonometric"`` for ``delta > 0``."""
        return "hyperbolic" if self.omega_sq > 0 else "trigonometric" if self.omega_sq < 0 else "parabolic"

    def exp_N(self, t: float) -> np.ndarray:
        ch, shc = cosh_sinhc(t * t * self.omega_sq)
        return ch * np.eye(2) + shc * t * self.N

    def entries(self, t: float) -> tuple[float, ...]:
        """``(D, E, F, G, I, J, K, L)`` at time ``t``."""
        e = self.exp_N(t)
        c, s = math.cos(self.rot_rate * t), math.sin(self.rot_rate * t)
        return (e[0, 0] * c, e[0, 0] * s, e[0, 1] * c, e[0, 1] * s,
                e[1, 0] * c, e[1, 0] * s, e[1, 1] * c, e[1, 1] * s)

    def matrix(self, t: float) -> np.ndarray:
        D, E, F, G, I, J, K, L = self.entries(t)
        return np.array([[D, E, F, G], [-E, D, -G, F], [I, J, K, L], [-J, I, -L, K]])


def propagate_linear_block(pt0, t: float, params: DeformationParams) -> np.ndarray:
    """``(q_-1, q_0, p_-1, p_0)(t)`` from the closed-form propagator.

    Raises
    ------
    BranchDomainError
        If ``alpha <= 0``.
    """
    prop = PropagatorEntries.from_point(pt0, params)
    return unscale_block(prop.matrix(t) @ scaled_block(pt0, params), params)


def vector_block_rhs(pt, params: DeformationParams, constants: LinearBlockConstants | None = None
                     ) -> np.ndarray:
    """``(dq/dt, dp/dt)`` of the 3-vector parts written through ``d1, d2, d3`` and ``C_lift``."""
    q, p = as_qp(pt)
    qv, pv = q[2:], p[2:]
    d = momentum_I(pt, params)
    C = (constants or LinearBlockConstants.from_point(pt, params)).C_lift
    k = params.gamma * params.alpha * params.lam
    qq, pp, qp = qv @ qv, pv @ pv, qv @ pv
    dq = 2 * (-k * d.d3 + C * qp) * qv + 2 * (k * d.d1 - C * qq) * pv
    dp = 2 * (-k * d.d2 + C * pp) * qv + 2 * (k * d.d3 - C * qp) * pv
    return np.concatenate([dq, dp])


# ---------------------------------------------------------------------------
# reconstruction of (q, p) from an L+(5) trajectory

def _solve_nonzero_a(block, x, y, params):
    qm, q0, pm, p0 = block
    lam, al = params.lam, params.alpha
    det = lam * (al * qm * p0 - q0 * pm)
    scale = max(abs(lam * q0 * pm), abs(al * lam * qm * p0), 1e-300)
    if abs(det) <= SOLVE_RTOL * scale or det == 0.0:
        raise SingularSolve("the 2x2 reconstruction matrix is singular (lam a = 0)")
    qv = (lam * q0 * x - al * lam * qm * y) / det
    pv = (p0 * x - pm * y) / det
    return np.concatenate([[qm, q0], qv]), np.concatenate([[pm, p0], pv])


def _in_plane_candidates(norm2, cross_z, ref, tol):
    """Vectors ``v`` in the plane ``v3 = 0`` with ``|v|^2 = norm2`` and ``(v x ref)_3 = cross_z``."""
    r = math.hypot(ref[0], ref[1])
    u = np.array([ref[0] / r, ref[1] / r, 0.0])
    n = np.array([-u[1], u[0], 0.0])
    beta = -cross_z / r
    rad = norm2 - beta * beta
    if rad < -tol * max(1.0, abs(norm2)):
        raise ReconstructionInconsistency("no real in-plane solution")
    al = math.sqrt(max(rad, 0.0))
    return [al * u + beta * n, -al * u + beta * n]


def _solve_zero_a(block, x, y, mu, d, params, previous=None):
    """Algebraic solve for ``q, p`` when ``a = 0`` in the frame where ``mu = (0, 0, m)``."""
    qm, q0, pm, p0 = block
    lam, al = params.lam, params.alpha
    O = rotation_to_e3(mu)
    m = float(np.linalg.norm(mu))
    xf, yf = O @ x, O @ y
    scale = max(np.linalg.norm(xf), np.linalg.norm(yf))
    if scale <= 1e-14 * max(1.0, m):
        raise SingularSolve("x and y both vanish; the a = 0 solve is undetermined")
    tol = 1e-8
    # q x x = alpha lam q_-1 mu, q x y = lam q_0 mu, p x x = p_-1 mu, p x y = p_0 mu
    qref, qc = (xf, al * lam * qm * m) if np.linalg.norm(xf[:2]) >= np.linalg.norm(yf[:2]) \
        else (yf, lam * q0 * m)
    pref, pc = (xf, pm * m) if np.linalg.norm(xf[:2]) >= np.linalg.norm(yf[:2]) \
        else (yf, p0 * m)
    qn2 = d.d1 - al * lam * qm ** 2 - lam * q0 ** 2
    pn2 = d.d2 - pm ** 2 / (al * lam) - p0 ** 2 / lam
    qs = _in_plane_candidates(qn2, qc, qref, tol)
    ps = _in_plane_candidates(pn2, pc, pref, tol)
    cands = []
    for qv in qs:
        for pv in ps:
            rx = al * lam * qm * pv - pm * qv - xf
            ry = lam * q0 * pv - p0 * qv - yf
            rmu = cross3(qv, pv)[2] - m
            res = max(np.abs(rx).max(), np.abs(ry).max(), abs(rmu))
            cands.append((res, qv, pv))
    cands.sort(key=lambda c: c[0])
    best = cands[0]
    ref_scale = max(1.0, scale, m)
    if best[0] > 1e-6 * ref_scale:
        raise ReconstructionInconsistency(f"a = 0 solve residual {best[0]:.3e}")
    distinct = [c for c in cands if c[0] <= best[0] + 1e-9 * ref_scale
                and np.abs(np.concatenate([c[1] - best[1], c[2] - best[2]])).max() > 1e-9 * ref_scale]
    if distinct:
        if previous is None:
            raise BranchAmbiguity("several (q, p) fit the a = 0 equations")
        pq, pp_ = previous
        allc = [best] + distinct
        allc.sort(key=lambda c: np.linalg.norm(O.T @ c[1] - pq) + np.linalg.norm(O.T @ c[2] - pp_))
        best = allc[0]
    qv, pv = O.T @ best[1], O.T @ best[2]
    return np.concatenate([[qm, q0], qv]), np.concatenate([[pm, p0], pv])


def _rotation_about(axis, angle):
    k = axis / np.linalg.norm(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


class _XYRotation:
    """L+(5) trajectory with ``a = 0`` on the momentum image: ``x, y`` rotate about ``mu``."""

    def __init__(self, j0: LPlusPoint, params: DeformationParams):
        self.j0 = j0
        self.rate = 2 * (params.epsilon - params.lam) * params.gamma * params.alpha \
            * float(np.linalg.norm(j0.mu))

    def point_at(self, t):
        R = _rotation_about(self.j0.mu, self.rate * t)
        return LPlusPoint(0.0, R @ self.j0.x, R @ self.j0.y, self.j0.mu)


def xy_solution_for(pt0, params: DeformationParams, atol_a: float = 1e-12):
    """L+(5) solution through ``J(pt0)``: the quadrature solver for ``a != 0``, a rotation for ``a = 0``."""
    j0 = momentum_J(pt0, params)
    if not j0.mu @ j0.mu > 0:
        raise BranchDomainError("reconstruction needs mu != 0")
    if abs(j0.a) <= atol_a * max(1.0, np.abs(j0.vector()).max()):
        return _XYRotation(j0, params)
    return closed_form_solution(j0, params)


def _xy_at(xy_solution, t):
    pt = xy_solution.point_at(t) if hasattr(xy_solution, "point_at") else xy_solution(t)
    v = as_vector(pt)
    return v[1:4], v[4:7]


def reconstruct_qp(pt0, t: float, params: DeformationParams, xy_solution=None,
                   previous=None, atol_a: float = 1e-12) -> CotangentPoint:
    """``(q(t), p(t))`` from the linear block and the L+(5) trajectory of ``J(pt0)``.

    Parameters
    ----------
    pt0 : CotangentPoint
    t : float
    params : DeformationParams
    xy_solution : object with ``point_at(t)`` or callable, optional
        L+(5) trajectory through ``J(pt0)``; built by :func:`xy_solution_for`
        when omitted.
    previous : CotangentPoint, optional
        Nearby earlier state used to resolve the sign ambiguity when ``a = 0``.

    Raises
    ------
    SingularSolve
        When ``lam a`` vanishes in the ``a != 0`` branch, or ``x = y = 0``.
    BranchAmbiguity
        When the ``a = 0`` solve has several fits and no ``previous`` is given.
    """
    if t == 0:
        q, p = as_qp(pt0)
        return CotangentPoint(q, p)
    xy_solution = xy_solution or xy_solution_for(pt0, params, atol_a)
    block = propagate_linear_block(pt0, t, params)
    x, y = _xy_at(xy_solution, t)
    j0 = momentum_J(pt0, params)
    if abs(j0.a) > atol_a * max(1.0, np.abs(j0.vector()).max()):
        q, p = _solve_nonzero_a(block, x, y, params)
    else:
        prev = None if previous is None else (as_qp(previous)[0][2:], as_qp(previous)[1][2:])
        q, p = _solve_zero_a(block, x, y, j0.mu, momentum_I(pt0, params), params, prev)
    return CotangentPoint(q, p)


def reconstruct_trajectory(pt0, times, params: DeformationParams, atol_a: float = 1e-12
                           ) -> Trajectory:
    """Closed-form cotangent trajectory on increasing ``times`` (continuity tracked)."""
    times = np.asarray(times, dtype=float)
    xy = xy_solution_for(pt0, params, atol_a)
    prev = CotangentPoint(*as_qp(pt0))
    states = []
    for t in times:
        cur = reconstruct_qp(pt0, float(t), params, xy, previous=prev, atol_a=atol_a)
        states.append(cur.vector())
        prev = cur
    meta = {"params": params.to_dict()}
    if hasattr(xy, "sidecar"):
        meta["constants"] = xy.sidecar()
    return _cotangent_trajectory(times, np.array(states), params, "closed-form", meta)


# ---------------------------------------------------------------------------
# geodesic flow

def geodesic_rhs(pt, params: DeformationParams) -> np.ndarray:
    """Hamilton's equations of ``delta``: ``d/dt (eta q, p) = -2 [[d3, -d1], [d2, -d3]] (eta q, p)``."""
    q, p = as_qp(pt)
    e = np.array([params.alpha * params.lam, params.lam, 1.0, 1.0, 1.0])
    d = momentum_I(pt, params)
    u = e * q
    du = -2 * (d.d3 * u - d.d1 * p)
    dp = -2 * (d.d2 * u - d.d3 * p)
    return np.concatenate([du / e, dp])


def geodesic_generator(pt0, params: DeformationParams) -> np.ndarray:
    """``-2 [[d3, -d1], [d2, -d3]]`` at ``pt0``."""
    d = momentum_I(pt0, params)
    return -2 * np.array([[d.d3, -d.d1], [d.d2, -d.d3]])


def geodesic_flow(pt0, t: float, params: DeformationParams) -> CotangentPoint:
    """Flow of ``delta`` for time ``t``: the SL(2) action of ``exp(t G)``.

    For ``gamma = 1`` and ``eps = lam`` one has ``h = alpha lam delta``, so
    the flow of ``h`` for time ``t`` equals this flow for time ``alpha lam t``.
    """
    A = expm2(t * geodesic_generator(pt0, params))
    q, p = as_qp(pt0)
    e = np.array([params.alpha * params.lam, params.lam, 1.0, 1.0, 1.0])
    u = e * q
    return CotangentPoint((A[0, 0] * u + A[0, 1] * p) / e, A[1, 0] * u + A[1, 1] * p)


def quadric_residual(pt, d1: float, params: DeformationParams) -> float:
    """``max(|q.eta q - d1|, |q.p|)``."""
    d = momentum_I(pt, params)
    return max(abs(d.d1 - d1), abs(d.d3))


# ---------------------------------------------------------------------------
# the quadric q.eta q = d1

@dataclass(frozen=True)
class QuadricChart:
    """Reduced canonical coordinates ``(q_0, q, pi_0, pi)`` on T*Q at level ``d1``."""

    d1: float
    q0: float
    qvec: np.ndarray
    pi0: float
    pivec: np.ndarray
    sheet: int = 1

    def __post_init__(self):
        for name in ("qvec", "pivec"):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")


def restrict_to_quadric(pt, params: DeformationParams, d3_tol: float = QUADRIC_D3_TOL
                        ) -> QuadricChart:
    """Chart coordinates of a point of T*Q (``q.p = 0``).

    Raises
    ------
    OffConstraint
        If ``|d3| > d3_tol`` or ``q_-1 = 0`` (the square root for ``q_-1``
        degenerates and the sheet is undefined).
    """
    q, p = as_qp(pt)
    params.require_nondegenerate()
    d = momentum_I(pt, params)
    if abs(d.d3) > d3_tol:
        raise OffConstraint(f"d3 = {d.d3!r} is not zero")
    lam = params.lam
    rest = d.d1 - lam * q[1] ** 2 - q[2:] @ q[2:]
    if not rest / (params.alpha * lam) > 0 or q[0] == 0.0:
        raise OffConstraint("q_-1 = 0: the quadric chart is singular")
    s = (q[1] * p[1] + q[2:] @ p[2:]) / rest
    return QuadricChart(d.d1, q[1], q[2:], p[1] + lam * s * q[1], p[2:] + s * q[2:],
                        1 if q[0] > 0 else -1)


def chart_to_point(chart: QuadricChart, params: DeformationParams) -> CotangentPoint:
    """Inverse of :func:`restrict_to_quadric`."""
    lam, al = params.lam, params.alpha
    q0, qv, pi0, piv = chart.q0, chart.qvec, chart.pi0, chart.pivec
    rest = chart.d1 - lam * q0 ** 2 - qv @ qv
    if not rest / (al * lam) > 0:
        raise OffConstraint("chart point lies outside the quadric sheet")
    qm = chart.sheet * math.sqrt(rest / (al * lam))
    s = (pi0 * q0 + piv @ qv) / chart.d1
    p0 = pi0 - lam * s * q0
    pv = piv - s * qv
    pm = -(q0 * p0 + qv @ pv) / qm
    return CotangentPoint(np.concatenate([[qm, q0], qv]), np.concatenate([[pm, p0], pv]))


def restricted_hamiltonian_p1(chart: QuadricChart, params: DeformationParams) -> float:
    """The reduced Hamiltonian on T*Q in the chart coordinates; requires ``alpha lam = 1``."""
    lam, al, eps, gam, nu = params.lam, params.alpha, params.epsilon, params.gamma, params.nu
    if abs(al * lam - 1.0) > 1e-12:
        raise DomainError("the reduced polynomial form needs alpha*lambda = 1")
    d1, q0, qv, pi0, piv = chart.d1, chart.q0, chart.qvec, chart.pi0, chart.pivec
    c = cross3(piv, qv)
    cr = c @ c
    proj = pi0 * q0 + piv @ qv
    return float(gam * d1 / lam * pi0 ** 2 + gam / lam * (eps - lam) * cr + gam * d1 * (piv @ piv)
                 - gam * proj ** 2
                 + (lam - eps) / lam ** 2 * (nu * (lam - eps) * cr - gam)
                 * (d1 - lam * q0 ** 2 - qv @ qv) * pi0 ** 2)


def kinetic_energy(pt, params: DeformationParams) -> float:
    """``d1 (p_-1^2/(alpha lam) + p_0^2/lam + p^2) = d1 d2``."""
    d = momentum_I(pt, params)
    return d.d1 * d.d2


# ---------------------------------------------------------------------------
# reduced integrals

def reduced_integrals(xvec, yvec, params: DeformationParams) -> tuple[float, float, float]:
    """``((x cross y)_3, x^2 + alpha y^2, ((lam-eps)/lam)^2 |x cross y|^2)``."""
    x = np.asarray(xvec, dtype=float)
    y = np.asarray(yvec, dtype=float)
    w = cross3(x, y)
    r = (params.lam - params.epsilon) / params.lam
    return float(w[2]), float(x @ x + params.alpha * (y @ y)), float(r * r * (w @ w))


def quartic_coefficients(I2: float, I3: float, c1: float, params: DeformationParams
                         ) -> tuple[float, float, float]:
    """Coefficients of ``lam a^4 + (I2 - c1) a^2 + alpha lam I3/(lam-eps)^2`` in ``a^2``."""
    lam, al = params.lam, params.alpha
    return lam, I2 - c1, al * lam * I3 / (lam - params.epsilon) ** 2


def quartic_residual(jpt, params: DeformationParams) -> float:
    """Relative residual of the quartic relating ``a`` to ``c1`` and the reduced integrals."""
    j = jpt if isinstance(jpt, LPlusPoint) else LPlusPoint.from_vector(jpt)
    _, I2, I3 = reduced_integrals(j.x, j.y, params)
    c4, c2, c0 = quartic_coefficients(I2, I3, casimir_c1(j, params), params)
    a2 = j.a ** 2
    terms = (c4 * a2 * a2, c2 * a2, c0)
    return abs(sum(terms)) / max(max(abs(v) for v in terms), 1e-300)


def reduced_integral_gradients(jpt, params: DeformationParams) -> np.ndarray:
    """Gradients on L+(5) of the three reduced integrals viewed as functions of ``(x, y)``."""
    v = as_vector(jpt)
    x, y = v[1:4], v[4:7]
    w = cross3(x, y)
    r2 = ((params.lam - params.epsilon) / params.lam) ** 2
    G = np.zeros((3, 10))
    G[0, 1:4] = [y[1], -y[0], 0.0]
    G[0, 4:7] = [-x[1], x[0], 0.0]
    G[1, 1:4] = 2 * x
    G[1, 4:7] = 2 * params.alpha * y
    G[2, 1:4] = 2 * r2 * cross3(y, w)
    G[2, 4:7] = 2 * r2 * cross3(w, x)
    return G


def reduced_involution_residual(pt, params: DeformationParams) -> float:
    """Largest pairwise L+(5) bracket of the reduced integrals at ``J(pt)``."""
    from .algebra import bracket_lp
    j = momentum_J(pt, params)
    G = reduced_integral_gradients(j, params)
    return max(abs(bracket_lp(G[i], G[k], j, params)) for i, k in ((0, 1), (0, 2), (1, 2)))
