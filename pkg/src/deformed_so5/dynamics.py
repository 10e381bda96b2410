"""Casimirs, Hamiltonians, integrals of motion and the Hamiltonian flow on L+(5).

All functions accept an :class:`~deformed_so5.algebra.LPlusPoint` or a raw
10-vector.  Gradients are returned as 10-vectors in the storage order of
:mod:`deformed_so5.algebra`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .algebra import (
    DeformationParams,
    as_vector,
    cross3,
    split,
)
from .numeric import ToleranceSpec, numeric_rank, ode_solve
from .trajectory import Trajectory, max_relative_drift


# ---------------------------------------------------------------------------
# Casimir-type functions with a free parameter

def _c1(v, lam, alpha):
    a, x, y, mu = split(v)
    return float(x @ x + alpha * (y @ y) + alpha * lam * (mu @ mu) + lam * a * a)


def _c2(v, lam, alpha):
    a, x, y, mu = split(v)
    r = lam * a * mu - cross3(x, y)
    return float(alpha * lam * (mu @ y) ** 2 + lam * (mu @ x) ** 2 + r @ r)


def _grad_c1(v, lam, alpha):
    a, x, y, mu = split(v)
    return np.concatenate([[2 * lam * a], 2 * x, 2 * alpha * y, 2 * alpha * lam * mu])


def _grad_c2(v, lam, alpha):
    a, x, y, mu = split(v)
    X, Y = mu @ x, mu @ y
    r = lam * a * mu - cross3(x, y)
    return np.concatenate([
        [2 * lam * (r @ mu)],
        2 * lam * X * mu + 2 * cross3(r, y),
        2 * alpha * lam * Y * mu + 2 * cross3(x, r),
        2 * alpha * lam * Y * y + 2 * lam * X * x + 2 * lam * a * r,
    ])


def casimir_c1(pt, params: DeformationParams) -> float:
    """``x^2 + alpha y^2 + alpha lam mu^2 + lam a^2``."""
    return _c1(as_vector(pt), params.lam, params.alpha)


def casimir_c2(pt, params: DeformationParams) -> float:
    """``alpha lam (mu.y)^2 + lam (mu.x)^2 + |lam a mu - x cross y|^2``."""
    return _c2(as_vector(pt), params.lam, params.alpha)


def h1(pt, params: DeformationParams) -> float:
    """``c1`` with ``lam`` replaced by ``epsilon``."""
    return _c1(as_vector(pt), params.epsilon, params.alpha)


def h2(pt, params: DeformationParams) -> float:
    """``c2`` with ``lam`` replaced by ``epsilon``."""
    return _c2(as_vector(pt), params.epsilon, params.alpha)


def hamiltonian_H(pt, params: DeformationParams) -> float:
    """``H = gamma h1 + nu h2``."""
    v = as_vector(pt)
    return params.gamma * _c1(v, params.epsilon, params.alpha) + params.nu * _c2(
        v, params.epsilon, params.alpha)


def grad_c1(pt, params: DeformationParams) -> np.ndarray:
    return _grad_c1(as_vector(pt), params.lam, params.alpha)


def grad_c2(pt, params: DeformationParams) -> np.ndarray:
    return _grad_c2(as_vector(pt), params.lam, params.alpha)


def grad_h1(pt, params: DeformationParams) -> np.ndarray:
    return _grad_c1(as_vector(pt), params.epsilon, params.alpha)


def grad_h2(pt, params: DeformationParams) -> np.ndarray:
    return _grad_c2(as_vector(pt), params.epsilon, params.alpha)


def grad_H(pt, params: DeformationParams) -> np.ndarray:
    v = as_vector(pt)
    return (params.gamma * _grad_c1(v, params.epsilon, params.alpha)
            + params.nu * _grad_c2(v, params.epsilon, params.alpha))


# ---------------------------------------------------------------------------
# vector fields

def vector_field_general(pt, grad_Hv, params: DeformationParams) -> np.ndarray:
    """Hamilton equations ``dv/dt = {v, H}`` for an arbitrary gradient of ``H``.

    Returns the time derivative as a 10-vector ``(da, dx, dy, dmu)``.
    """
    a, x, y, mu = split(as_vector(pt))
    Ha, Hx, Hy, Hm = split(np.asarray(grad_Hv, dtype=float))
    lam, alpha = params.lam, params.alpha
    da = alpha * (y @ Hx) - x @ Hy
    dx = lam * a * Hy + alpha * lam * cross3(Hx, mu) - alpha * Ha * y + cross3(Hm, x)
    dy = -lam * a * Hx + lam * cross3(Hy, mu) + Ha * x + cross3(Hm, y)
    dmu = cross3(Hm, mu) + cross3(Hx, x) + cross3(Hy, y)
    return np.concatenate([[da], dx, dy, dmu])


def vector_field_specific(pt, params: DeformationParams) -> np.ndarray:
    """The flow of ``H = gamma h1 + nu h2`` written out as cubic polynomials.

    ``a`` and ``mu`` are constant; only ``x`` and ``y`` move::

        dx/dt = 2(lam-eps) [gamma alpha (a y + x*mu) + nu (alpha mu*(w*y)
                 + alpha eps a mu^2 y + eps a^2 x*mu + a w*x)]
        dy/dt = 2(lam-eps) [gamma (-a x + alpha y*mu) + nu (mu*((y*x)*x)
                 - eps a mu^2 x + eps a^2 y*mu + a w*y)]

    with ``*`` the cross product and ``w = x*y``.  The double products are
    expanded, so the body works on plain floats for speed.
    """
    v = as_vector(pt)
    a, x1, x2, x3, y1, y2, y3, m1, m2, m3 = v.tolist()
    lam, alpha, eps = params.lam, params.alpha, params.epsilon
    gam, nu = params.gamma, params.nu
    k = 2.0 * (lam - eps)
    w1, w2, w3 = x2 * y3 - x3 * y2, x3 * y1 - x1 * y3, x1 * y2 - x2 * y1
    mm = m1 * m1 + m2 * m2 + m3 * m3
    mx = m1 * x1 + m2 * x2 + m3 * x3
    my = m1 * y1 + m2 * y2 + m3 * y3
    mw = m1 * w1 + m2 * w2 + m3 * w3
    # x*mu, y*mu, w*x, w*y
    xm = (x2 * m3 - x3 * m2, x3 * m1 - x1 * m3, x1 * m2 - x2 * m1)
    ym = (y2 * m3 - y3 * m2, y3 * m1 - y1 * m3, y1 * m2 - y2 * m1)
    wx = (w2 * x3 - w3 * x2, w3 * x1 - w1 * x3, w1 * x2 - w2 * x1)
    wy = (w2 * y3 - w3 * y2, w3 * y1 - w1 * y3, w1 * y2 - w2 * y1)
    x = (x1, x2, x3)
    y = (y1, y2, y3)
    w = (w1, w2, w3)
    out = np.zeros(10)
    for i in range(3):
        # mu*(w*y) = w (mu.y) - y (mu.w);  mu*((y*x)*x) = x (mu.w) - w (mu.x)
        dx = gam * alpha * (a * y[i] + xm[i]) + nu * (
            alpha * (w[i] * my - y[i] * mw) + alpha * eps * a * mm * y[i]
            + eps * a * a * xm[i] + a * wx[i])
        dy = gam * (-a * x[i] + alpha * ym[i]) + nu * (
            (x[i] * mw - w[i] * mx) - eps * a * mm * x[i]
            + eps * a * a * ym[i] + a * wy[i])
        out[1 + i] = k * dx
        out[4 + i] = k * dy
    return out


# ---------------------------------------------------------------------------
# integrals of motion

def integrals_I(pt, params: DeformationParams) -> tuple[float, float, float, float]:
    """Four integrals in involution: ``a``, ``mu3``, ``h1 - c1`` and ``h2 - c2``.

    ``I3`` and ``I4`` are evaluated from their factored forms, which stay
    exact when ``epsilon == lam``.
    """
    a, x, y, mu = split(as_vector(pt))
    s = params.epsilon - params.lam
    m2 = mu @ mu
    I3 = s * (params.alpha * m2 + a * a)
    I4 = (params.alpha * s * (mu @ y) ** 2 + s * (mu @ x) ** 2
          + (params.epsilon ** 2 - params.lam ** 2) * a * a * m2
          - 2 * s * a * (mu @ cross3(x, y)))
    return float(a), float(mu[2]), float(I3), float(I4)


def jacobian_I(pt, params: DeformationParams) -> np.ndarray:
    """Analytic 4x10 Jacobian of :func:`integrals_I`."""
    a, x, y, mu = split(as_vector(pt))
    alpha = params.alpha
    s = params.epsilon - params.lam
    s2 = params.epsilon ** 2 - params.lam ** 2
    X, Y = mu @ x, mu @ y
    w = cross3(x, y)
    W = mu @ w
    J = np.zeros((4, 10))
    J[0, 0] = 1.0
    J[1, 9] = 1.0
    J[2, 0] = 2 * s * a
    J[2, 7:] = 2 * s * alpha * mu
    J[3, 0] = 2 * s2 * a * (mu @ mu) - 2 * s * W
    J[3, 1:4] = 2 * s * X * mu - 2 * s * a * cross3(y, mu)
    J[3, 4:7] = 2 * alpha * s * Y * mu - 2 * s * a * cross3(mu, x)
    J[3, 7:] = 2 * alpha * s * Y * y + 2 * s * X * x + 2 * s2 * a * a * mu - 2 * s * a * w
    return J


INVOLUTION_NAMES = ("a", "mu3", "h1", "h2", "mu_sq", "I3", "I4")


def involution_gradients(pt, params: DeformationParams) -> np.ndarray:
    """Gradients of ``a, mu3, h1, h2, mu^2, I3, I4`` as rows of a 7x10 array."""
    v = as_vector(pt)
    JI = jacobian_I(v, params)
    mu_sq = np.zeros(10)
    mu_sq[7:] = 2 * v[7:]
    return np.array([JI[0], JI[1], grad_h1(v, params), grad_h2(v, params), mu_sq, JI[2], JI[3]])


def involution_matrix(pt, params: DeformationParams) -> np.ndarray:
    """Pairwise Lie--Poisson brackets of the functions in :data:`INVOLUTION_NAMES`."""
    from .algebra import bracket_lp
    G = involution_gradients(pt, params)
    n = len(G)
    B = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            B[i, j] = bracket_lp(G[i], G[j], pt, params)
            B[j, i] = -B[i, j]
    return B


def independence_rank(pt, params: DeformationParams, rel_tol: float = 1e-9) -> int:
    """Numerical rank of the Jacobian of ``(I1, I2, I3, I4)``."""
    return numeric_rank(jacobian_I(pt, params), rel_tol)


def rank_drop_condition(pt, params: DeformationParams, tol: float = 1e-12) -> bool:
    """Evaluate the algebraic condition under which the four integrals are dependent.

    For ``i = 1, 2``: ``mu_i ((mu.x) mu + a mu x y) = 0`` and
    ``mu_i (alpha (mu.y) mu - a mu x x) = 0``.  ``tol`` is relative to the
    magnitude of the point.
    """
    a, x, y, mu = split(as_vector(pt))
    v1 = (mu @ x) * mu + a * cross3(mu, y)
    v2 = params.alpha * (mu @ y) * mu - a * cross3(mu, x)
    scale = max(1.0, float(np.abs(as_vector(pt)).max())) ** 3
    worst = max(np.abs(mu[i] * v).max() for i in (0, 1) for v in (v1, v2))
    return bool(worst <= tol * scale)


# ---------------------------------------------------------------------------
# conserved quantities and integration

@dataclass(frozen=True)
class ConservedSet:
    """All monitored conserved quantities at one point."""

    c1: float
    c2: float
    h1: float
    h2: float
    H: float
    I1: float
    I2: float
    I3: float
    I4: float
    mu_sq: float
    mu3: float

    @classmethod
    def at(cls, pt, params: DeformationParams) -> "ConservedSet":
        v = as_vector(pt)
        hh1 = _c1(v, params.epsilon, params.alpha)
        hh2 = _c2(v, params.epsilon, params.alpha)
        I1, I2, I3, I4 = integrals_I(v, params)
        mu = v[7:10]
        return cls(c1=_c1(v, params.lam, params.alpha), c2=_c2(v, params.lam, params.alpha),
                   h1=hh1, h2=hh2, H=params.gamma * hh1 + params.nu * hh2,
                   I1=I1, I2=I2, I3=I3, I4=I4, mu_sq=float(mu @ mu), mu3=float(mu[2]))

    def as_dict(self) -> dict:
        return asdict(self)


CONSERVED_NAMES = tuple(ConservedSet.__dataclass_fields__)


def conserved_series(states, params: DeformationParams) -> dict:
    """Evaluate :class:`ConservedSet` along an array of 10-vectors."""
    rows = np.array([list(vars(ConservedSet.at(s, params)).values()) for s in states])
    rows = rows.reshape(-1, len(CONSERVED_NAMES))
    return {n: rows[:, i].copy() for i, n in enumerate(CONSERVED_NAMES)}


def casimir_projector(params: DeformationParams, target: tuple[float, float],
                      iterations: int = 3):
    """Return a ``post_step`` hook that projects onto the ``(c1, c2)`` level set.

    Each call applies a few minimum-norm Newton corrections
    ``v += G^T (G G^T)^-1 (target - c(v))`` with ``G`` the 2x10 gradient.
    """
    lam, alpha = params.lam, params.alpha

    def project(t, v):
        v = np.array(v, dtype=float)
        for _ in range(iterations):
            G = np.vstack([_grad_c1(v, lam, alpha), _grad_c2(v, lam, alpha)])
            r = np.array([target[0] - _c1(v, lam, alpha), target[1] - _c2(v, lam, alpha)])
            GG = G @ G.T
            if abs(np.linalg.det(GG)) < 1e-300:
                break
            v = v + G.T @ np.linalg.solve(GG, r)
        return v

    return project


def integrate(pt0, t_span, params: DeformationParams, tol: ToleranceSpec | None = None,
              t_eval=None, project: bool = False) -> Trajectory:
    """Integrate the Hamiltonian flow of ``H`` with Dormand--Prince 5(4).

    Parameters
    ----------
    pt0 : LPlusPoint or array_like
    t_span : (float, float)
        Increasing time interval.
    params : DeformationParams
    tol : ToleranceSpec, optional
        Defaults to ``rtol=1e-10, atol=1e-12``.
    t_eval : array_like, optional
        Output times (increasing, inside ``t_span``) evaluated by dense
        output; by default the accepted steps are returned.
    project : bool
        Project onto the initial ``(c1, c2)`` level set after every step.

    Returns
    -------
    Trajectory
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    tol = tol or ToleranceSpec()
    v0 = as_vector(pt0).copy()
    hook = None
    if project:
        hook = casimir_projector(params, (_c1(v0, params.lam, params.alpha),
                                          _c2(v0, params.lam, params.alpha)))
    sol = ode_solve(lambda t, v: vector_field_specific(v, params), v0, (t0, t1), tol,
                    post_step=hook)
    if t_eval is None:
        times, states = sol.t, sol.y
    else:
        times = np.asarray(t_eval, dtype=float)
        states = sol(times)
    cons = conserved_series(states, params)
    return Trajectory(times, states, kind="lplus", conserved=cons,
                      drift={k: max_relative_drift(v) for k, v in cons.items()},
                      method="numeric",
                      meta={"nsteps": sol.nsteps, "nreject": sol.nreject, "nfev": sol.nfev,
                            "params": params.to_dict()})
