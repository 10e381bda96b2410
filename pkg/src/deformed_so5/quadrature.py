"""Closed-form solution of the flow of ``H`` on L+(5) by quadratures.

``a`` and ``mu`` are constant along the flow and ``H`` is invariant under
simultaneous rotation of ``(x, y, mu)``, so the motion reduces to the three
rotation invariants

    X = mu.x,   Y = mu.y,   F = 2 x.y

plus an azimuth about ``mu``.  For ``a != 0`` the invariants are written in
angle variables ``F = sqrt(C) cos(phi)``, ``X = e^r sqrt(alpha) cos(theta)``,
``Y = e^r sin(theta)`` with ``theta = (psi - phi)/2``; then ``g = sin(psi)``
obeys ``g'^2 = (1 - g^2) q(g)`` with a quadratic ``q`` and is found by
inverting an elliptic quadrature.  The remaining angles follow from integrals
of ``g`` and ``cos(psi)``.  For ``a = 0`` a second family of invariants reduces
to a pendulum.

Evaluation strategy
-------------------
``g`` is parametrized as ``g = m - h cos(u)`` between its turning values, so
``dt/du = 1/sqrt(Q(g))`` is smooth and the sign reflections at turning points
happen at ``u = k pi``.  A single ODE in ``u`` tabulates ``t``, ``int g dt``,
``int cos(psi) dt`` and the azimuth with dense output; a time is located by
Brent's method on the tabulated ``t(u)``.

The invariants fix the components ``xi, eta`` of ``x, y`` orthogonal to
``mu`` (as complex numbers) only up to a common rotation.  The table also
carries a guide copy of ``(xi, eta)`` driven by the vector field; at every
evaluation the algebraically reconstructed pair is rotated onto the guide by
the best-fitting planar rotation, which is well defined unless both vectors
vanish.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .algebra import DeformationParams, LPlusPoint, as_vector, cross3, split
from .dynamics import (
    casimir_c1,
    casimir_c2,
    conserved_series,
    h1,
    h2,
    integrate,
    vector_field_specific,
)
from .exceptions import (
    BranchDomainError,
    ConvergenceError,
    DomainError,
    NotOnStratum,
    ReconstructionInconsistency,
)
from .numeric import ToleranceSpec, ode_solve, quad_adaptive, root_bracketed
from .trajectory import Trajectory

TABLE_TOL = ToleranceSpec(rtol=1e-12, atol=1e-13)
A_ZERO_ATOL = 1e-12


# ---------------------------------------------------------------------------
# invariant coordinates and constants

@dataclass(frozen=True)
class InvariantCoords:
    """Rotation invariants ``x = mu.x``, ``y = mu.y`` and ``f = 2 x.y``."""

    x: float
    y: float
    f: float


def to_invariant_coords(pt) -> InvariantCoords:
    """The three dot products of an L+(5) point."""
    _, x, y, mu = split(as_vector(pt))
    return InvariantCoords(float(mu @ x), float(mu @ y), float(2.0 * (x @ y)))


@dataclass(frozen=True)
class QuadratureConstants:
    """Constants of the reduced ``a != 0`` system.

    Attributes
    ----------
    C, D, K : float
        Coefficients of the reduced equations.
    E, R : float
        Coefficients of ``g'^2 = (1 - g^2)(4 kc^2 g^2 - E g + R)``.
    B_sign : int
        Sign of ``x^2 - alpha y^2`` at ``t = 0``, i.e. of the square root
        ``sqrt(C - f^2)`` in the reduced equations.
    g0, cos_psi0, psidot0 : float
        ``sin(psi)``, ``cos(psi)`` and ``dpsi/dt`` at ``t = 0``.
    kc : float
        ``(lam - eps) nu a sqrt(C)``.
    P, Qc : float
        ``dpsi/dt = 2 kc (g - P - Qc e^{2r})``.
    """

    C: float
    D: float
    K: float
    E: float
    R: float
    B_sign: int
    g0: float = 0.0
    cos_psi0: float = 1.0
    psidot0: float = 0.0
    kc: float = 0.0
    P: float = 0.0
    Qc: float = 0.0

    def as_dict(self) -> dict:
        return {k: (int(v) if k == "B_sign" else float(v)) for k, v in vars(self).items()}


@dataclass(frozen=True)
class AngleVars:
    """Angle variables with ``theta = (psi - phi)/2``."""

    phi: float
    psi: float
    r: float


def _check_closed_form_domain(a, mu, params: DeformationParams):
    if not params.alpha > 0:
        raise BranchDomainError("closed form needs alpha > 0")
    if a == 0.0:
        raise BranchDomainError("a = 0 is handled by the a-zero branch")
    if not mu @ mu > 0:
        raise BranchDomainError("closed form needs mu != 0")
    if params.nu == 0.0:
        raise BranchDomainError("closed form needs nu != 0")


def _raw_constants(pt, params: DeformationParams):
    """C, D, K and the angles at one point (no domain checks beyond sqrt)."""
    a, x, y, mu = split(as_vector(pt))
    lam, eps, alpha = params.lam, params.epsilon, params.alpha
    m2 = float(mu @ mu)
    X, Y = float(mu @ x), float(mu @ y)
    w = cross3(x, y)
    S = float(x @ x + alpha * (y @ y))
    C = S * S / alpha - 4.0 * float(w @ w)
    K = S / alpha + 2 * eps * m2 + 2 * params.gamma / params.nu
    D = (-(alpha * Y * Y + X * X + (lam + eps) * a * a * m2 - 2 * a * float(mu @ w)) / (a * a)
         + (lam - eps) * m2 - 2 * params.gamma / params.nu)
    sa = math.sqrt(alpha)
    f0 = 2.0 * float(x @ y)
    delta = float(x @ x - alpha * (y @ y))
    theta0 = math.atan2(Y, X / sa)
    e2r0 = X * X / alpha + Y * Y
    phi0 = math.atan2(delta / sa, f0)
    return dict(a=a, C=C, D=D, K=K, S=S, X=X, Y=Y, f0=f0, delta=delta,
                theta0=theta0, e2r0=e2r0, phi0=phi0, psi0=2 * theta0 + phi0)


def compute_constants(pt0, params: DeformationParams) -> QuadratureConstants:
    """Constants of the reduced system at ``pt0``.

    Raises
    ------
    BranchDomainError
        If ``alpha <= 0``, ``a == 0``, ``mu == 0``, ``nu == 0``, ``C <= 0`` or
        ``f(0)^2 > C``.
    """
    a, _, _, mu = split(as_vector(pt0))
    _check_closed_form_domain(a, mu, params)
    r = _raw_constants(pt0, params)
    C = r["C"]
    if not C > 0:
        raise BranchDomainError(f"closed form needs C > 0 (C = {C!r})")
    if r["f0"] ** 2 > C * (1 + 1e-12):
        raise BranchDomainError("initial point violates f^2 <= C")
    alpha = params.alpha
    sa, sC = math.sqrt(alpha), math.sqrt(C)
    k = (params.lam - params.epsilon) * params.nu * a
    kc = k * sC
    P = sa * (r["K"] + r["D"]) / sC
    Qc = alpha * sa / (a * a * sC)
    g0, c0 = math.sin(r["psi0"]), math.cos(r["psi0"])
    psidot0 = 2 * kc * (g0 - P - Qc * r["e2r0"])
    E = 8 * kc * kc * P
    R = psidot0 ** 2 + E * g0 - 4 * kc * kc * g0 * g0
    return QuadratureConstants(C=C, D=r["D"], K=r["K"], E=E, R=R,
                               B_sign=1 if r["delta"] >= 0 else -1,
                               g0=g0, cos_psi0=c0, psidot0=psidot0, kc=kc, P=P, Qc=Qc)


def to_angle_vars(pt, params: DeformationParams) -> AngleVars:
    """Angle variables ``(phi, psi, r)`` of a point (``alpha > 0``)."""
    if not params.alpha > 0:
        raise BranchDomainError("angle variables need alpha > 0")
    r = _raw_constants(pt, params)
    rr = 0.5 * math.log(r["e2r0"]) if r["e2r0"] > 0 else -math.inf
    return AngleVars(phi=r["phi0"], psi=r["psi0"], r=rr)


def reduced_rhs(ic: InvariantCoords, qc: QuadratureConstants, a: float,
                params: DeformationParams) -> tuple[float, float, float]:
    """Time derivatives of ``(x, y, f)`` from the reduced linear system.

    The square root ``sqrt(C - f^2)`` carries ``qc.B_sign``.
    """
    alpha = params.alpha
    sa = math.sqrt(alpha)
    k = (params.lam - params.epsilon) * params.nu * a
    root = qc.B_sign * math.sqrt(max(qc.C - ic.f * ic.f, 0.0))
    dx = k * (-ic.f * ic.x + (alpha * qc.K + sa * root) * ic.y)
    dy = k * ((-qc.K + root / sa) * ic.x + ic.f * ic.y)
    df = 2 * k * sa * root * ((ic.x ** 2 + alpha * ic.y ** 2) / (a * a) + qc.D)
    return dx, dy, df


# ---------------------------------------------------------------------------
# the elliptic quadrature for g = sin(psi)

class _GPhase:
    """Motion of ``g`` between turning values, parametrized by ``u``.

    ``g = m - h cos(u)``; ``u`` increases with time and crosses a turning
    value at every multiple of ``pi``.  ``collapsed`` marks data for which
    this parametrization is singular (``g`` constant or asymptotic to a
    double root); callers integrate ``psi`` directly in that case.
    """

    def __init__(self, kc, E, R, g0, c0, psidot0):
        self.A2 = 4.0 * kc * kc
        self.E, self.R = E, R
        self.g0 = g0
        self.collapsed = False
        ga, gb = -1.0, 1.0
        self.ga_unit = self.gb_unit = True
        self.r1 = self.r2 = None
        A2 = self.A2
        if A2 == 0.0:
            self.collapsed = True
        else:
            disc = E * E - 4 * A2 * R
            if disc < 0 and disc > -1e-12 * (E * E + abs(A2 * R)):
                disc = 0.0
            if disc >= 0:
                sq = math.sqrt(disc)
                qq = 0.5 * (E + math.copysign(sq, E))
                if qq == 0.0:
                    r1 = r2 = 0.0
                else:
                    r1, r2 = sorted((qq / A2, R / qq))
                self.r1, self.r2 = r1, r2
                if r2 - r1 < 1e-9 and abs(g0 - r1) < 1e-9:
                    self.collapsed = True
                elif g0 <= r1 + 1e-12 and r1 < 1.0:
                    gb, self.gb_unit = max(r1, g0), False
                elif g0 >= r2 - 1e-12 and r2 > -1.0:
                    ga, self.ga_unit = min(r2, g0), False
                elif r1 < g0 < r2:
                    if g0 - r1 < r2 - g0:
                        gb, self.gb_unit = g0, False
                    else:
                        ga, self.ga_unit = g0, False
        self.ga, self.gb = ga, gb
        self.m = 0.5 * (ga + gb)
        self.h = 0.5 * (gb - ga)
        if self.h < 1e-9:
            self.collapsed = True
        if self.collapsed:
            return
        cu = min(1.0, max(-1.0, (self.m - g0) / self.h))
        u0 = math.acos(cu)
        if c0 * psidot0 < 0:
            u0 = 2 * math.pi - u0
        if u0 >= 2 * math.pi:
            u0 = 0.0
        self.u0 = u0
        self.j0 = int(math.floor(u0 / math.pi))
        want = 1 if self.j0 % 2 == 0 else -1
        sc = 1 if c0 >= 0 else -1
        sp = 1 if psidot0 >= 0 else -1
        if sc * sp != want:
            qscale = math.sqrt(max(self.q(ga), self.q(gb), self.q(g0), 1e-300))
            if abs(c0) < abs(psidot0) / qscale:
                sc = -sc
            else:
                sp = -sp
        self.sc0, self.sp0 = sc, sp

    def q(self, g):
        return self.A2 * g * g - self.E * g + self.R

    def signs(self, j):
        """Signs of ``cos(psi)`` and ``dpsi/dt`` on ``u in (j pi, (j+1) pi)``."""
        j0 = self.j0
        nb = (j + 1) // 2 - (j0 + 1) // 2
        na = j // 2 - j0 // 2
        fc = nb * self.gb_unit + na * self.ga_unit
        fp = nb * (not self.gb_unit) + na * (not self.ga_unit)
        return self.sc0 * (-1) ** fc, self.sp0 * (-1) ** fp

    def g_of_u(self, u):
        return self.m - self.h * math.cos(u)

    def Q(self, u):
        """Regular factor with ``g'^2 = (g - ga)(gb - g) Q(g)``."""
        g = self.g_of_u(u)
        if not self.gb_unit:
            return (1.0 - g) * self.A2 * (self.r2 - g)
        if not self.ga_unit:
            return (1.0 + g) * self.A2 * (g - self.r1)
        return self.q(g)

    def evaluate(self, u, j):
        """``(g, cos psi, dpsi/dt, Q)`` at ``u`` on branch interval ``j``."""
        g = self.g_of_u(u)
        s2 = math.sin(0.5 * u) ** 2
        c2 = math.cos(0.5 * u) ** 2
        one_plus = 2 * self.h * s2 if self.ga_unit else 1.0 + g
        one_minus = 2 * self.h * c2 if self.gb_unit else 1.0 - g
        if not self.gb_unit:
            qv = self.A2 * (2 * self.h * c2) * (self.r2 - g)
        elif not self.ga_unit:
            qv = self.A2 * (g - self.r1) * (2 * self.h * s2)
        else:
            qv = self.q(g)
        sc, sp = self.signs(j)
        cpsi = sc * math.sqrt(max(one_plus * one_minus, 0.0))
        pd = sp * math.sqrt(max(qv, 0.0))
        return g, cpsi, pd, self.Q(u)

    def boundary_label(self, k):
        """Which turning value is reached at ``u = k pi`` and which sign flips."""
        upper = k % 2 == 1
        unit = self.gb_unit if upper else self.ga_unit
        return {"g": float(self.gb if upper else self.ga),
                "turning": "g=+1" if upper and unit else "g=-1" if unit else "root of q",
                "flip": "cos_psi" if unit else "psi_dot"}


def _gphase_from_constants(qc: QuadratureConstants) -> _GPhase:
    gp = _GPhase(qc.kc, qc.E, qc.R, qc.g0, qc.cos_psi0, qc.psidot0)
    if gp.collapsed:
        raise DomainError("g is stationary or asymptotic for these constants")
    return gp


def _kc(qc: QuadratureConstants, params: DeformationParams, a: float) -> float:
    return (params.lam - params.epsilon) * params.nu * a * math.sqrt(qc.C)


def quadrature_time(g: float, qc: QuadratureConstants, params: DeformationParams,
                    a: float) -> float:
    """Signed value of ``int_{g(0)}^{g} dg / sqrt((g^2-1)(E g - 4 kc^2 g^2 - R))``.

    The result increases with ``g``; the first-passage time to ``g`` is its
    absolute value when ``g`` lies ahead of ``g(0)`` in the direction of
    motion.

    Raises
    ------
    DomainError
        If ``g`` lies outside the accessible interval or the radicand changes
        sign in the interior.
    """
    kc = _kc(qc, params, a)
    gp = _GPhase(kc, qc.E, qc.R, qc.g0, qc.cos_psi0, qc.psidot0)
    if gp.collapsed:
        raise DomainError("degenerate quadrature")
    g0 = qc.g0
    if g == g0:
        return 0.0
    tol_g = 1e-12
    if g < gp.ga - tol_g or g > gp.gb + tol_g:
        raise DomainError(f"g = {g!r} outside the accessible interval [{gp.ga}, {gp.gb}]")
    g = min(max(g, gp.ga), gp.gb)
    lo, hi = (g0, g) if g > g0 else (g, g0)

    def radicand(s):
        return (1.0 - s * s) * gp.q(s)

    interior = np.linspace(lo, hi, 35)[1:-1]
    if np.any(np.array([radicand(s) for s in interior]) <= 0):
        raise DomainError("radicand changes sign inside the integration interval")

    def Qg(s):
        if not gp.gb_unit:
            return (1.0 - s) * gp.A2 * (gp.r2 - s)
        if not gp.ga_unit:
            return (1.0 + s) * gp.A2 * (s - gp.r1)
        return gp.q(s)

    def integrand(s):
        s = np.asarray(s, dtype=float)
        val = (s - gp.ga) * (gp.gb - s) * np.vectorize(Qg)(s)
        return 1.0 / np.sqrt(np.maximum(val, 1e-300))

    span = hi - lo
    sing = (abs(lo - gp.ga) <= 1e-12 * max(1.0, span) or abs(lo - gp.gb) <= 1e-12,
            abs(hi - gp.gb) <= 1e-12 * max(1.0, span) or abs(hi - gp.ga) <= 1e-12)
    val = quad_adaptive(integrand, lo, hi, tol=1e-12, endpoint_singularity=sing)
    return val if g > g0 else -val


def _period_u(gp: _GPhase) -> float:
    return quad_adaptive(lambda u: np.array([1.0 / math.sqrt(gp.Q(v)) for v in np.atleast_1d(u)]),
                         0.0, 2 * math.pi, tol=1e-13)


def invert_quadrature(t: float, qc: QuadratureConstants, params: DeformationParams,
                      a: float) -> float:
    """``g(t)``: invert the quadrature by bracketed root finding.

    Reflections at the turning values are handled by the ``u``
    parametrization; ``t`` may be any real number.

    Raises
    ------
    ConvergenceError
        If the root finder does not reach the requested tolerance.
    """
    kc = _kc(qc, params, a)
    gp = _GPhase(kc, qc.E, qc.R, qc.g0, qc.cos_psi0, qc.psidot0)
    if gp.collapsed:
        return qc.g0
    if t == 0:
        return qc.g0

    def dtdu(u):
        return np.array([1.0 / math.sqrt(gp.Q(v)) for v in np.atleast_1d(u)])

    T = _period_u(gp)
    n = math.floor(t / T)
    rem = t - n * T
    u0 = gp.u0

    def resid(u):
        return quad_adaptive(dtdu, u0, u, tol=1e-13) - rem

    try:
        u = root_bracketed(resid, u0, u0 + 2 * math.pi, tol=1e-14)
    except ConvergenceError:
        raise
    except Exception as exc:  # noqa: BLE001 - surface any bracketing failure uniformly
        raise ConvergenceError(f"quadrature inversion failed: {exc}") from exc
    return gp.g_of_u(u)


# ---------------------------------------------------------------------------
# frame handling and in-plane reconstruction

def rotation_to_e3(v) -> np.ndarray:
    """Rotation matrix ``O`` with ``O v/|v| = e3``."""
    v = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise DomainError("cannot align the zero vector")
    n = v / nrm
    flip = np.eye(3)
    if n[2] < 0:
        # rotate by pi about e1 first so the Rodrigues formula stays well conditioned
        flip = np.diag([1.0, -1.0, -1.0])
        n = flip @ n
    kx, ky = n[1], -n[0]      # n x e3
    c = n[2]
    Kmat = np.array([[0.0, 0.0, ky], [0.0, 0.0, -kx], [-ky, kx, 0.0]])
    O = np.eye(3) + Kmat + Kmat @ Kmat / (1.0 + c)
    return O @ flip


class _FrameSolution:
    """Shared machinery: frame rotation, phase table and point reconstruction."""

    method = "closed-form"

    def __init__(self, pt0, params: DeformationParams):
        v0 = as_vector(pt0).copy()
        self.params = params
        self.pt0 = LPlusPoint.from_vector(v0)
        a, x, y, mu = split(v0)
        self.a = float(a)
        self.m = float(np.linalg.norm(mu))
        if self.m == 0.0:
            raise BranchDomainError("closed form needs mu != 0")
        if not params.alpha > 0:
            raise BranchDomainError("closed form needs alpha > 0")
        self.O = rotation_to_e3(mu)
        fr = self.pt0.rotated(self.O)
        self.frame0 = fr
        self.sa = math.sqrt(params.alpha)
        self.Z0 = np.array([fr.x[0], fr.x[1], fr.y[0], fr.y[1]])
        self.c_consts = {"c1": casimir_c1(v0, params), "c2": casimir_c2(v0, params),
                         "h1": h1(v0, params), "h2": h2(v0, params)}
        self._segments = []     # (t_lo, t_hi, s_lo, s_hi, sol, j)
        self.branch_history = []
        self.static = False

    # -- in-plane geometry ------------------------------------------------
    def _frame_vector(self, X, Y, xx, yy, d, c, Z):
        """Frame point with invariants ``(X, Y, xx, yy, d, c)`` aligned with guide ``Z``.

        ``xx = |x|^2``, ``yy = |y|^2``, ``d = x.y``, ``c = (x*y)_3``.
        """
        m, alpha = self.m, self.params.alpha
        x3, y3 = X / m, Y / m
        rx2 = xx - x3 * x3
        ry2 = yy - y3 * y3
        scale = max(abs(xx), abs(yy) * alpha, 1e-300)
        if rx2 < -1e-7 * scale or ry2 < -1e-7 * scale:
            raise ReconstructionInconsistency("negative in-plane norm")
        rx2, ry2 = max(rx2, 0.0), max(ry2, 0.0)
        p = complex(d - x3 * y3, c)
        out = np.zeros(10)
        out[0] = self.a
        out[3], out[6], out[9] = x3, y3, m
        # representative with xi or eta on the positive real axis
        if rx2 >= alpha * ry2:
            if rx2 == 0.0:
                return out
            rx = math.sqrt(rx2)
            xi, eta = complex(rx, 0.0), p / rx
        else:
            ry = math.sqrt(ry2)
            xi, eta = p.conjugate() / ry, complex(ry, 0.0)
        z = complex(Z[0], Z[1]) * xi.conjugate() + alpha * complex(Z[2], Z[3]) * eta.conjugate()
        if abs(z) > 0.0:
            rot = z / abs(z)
            xi, eta = xi * rot, eta * rot
        out[1], out[2] = xi.real, xi.imag
        out[4], out[5] = eta.real, eta.imag
        return out

    def _guide_rate(self, fv):
        dv = vector_field_specific(fv, self.params)
        return dv[[1, 2, 4, 5]]

    # -- phase table -------------------------------------------------------
    def _extend(self, t_target):
        while not self._segments or self._segments[-1][1] < t_target:
            if self._segments:
                _, _, _, s_lo, sol, j = self._segments[-1]
                s_lo, y0, j = sol.t_final, sol.y_final, j + 1
                self._on_break(j, float(y0[0]))
            else:
                s_lo, y0, j = self._phase_start()
            s_hi = self._next_break(s_lo, j)
            sol = ode_solve(self._rhs_for(j), y0, (s_lo, s_hi), TABLE_TOL)
            self._segments.append((float(sol.y[0, 0]), float(sol.y[-1, 0]), s_lo, s_hi, sol, j))
            if len(self._segments) > 200000:
                raise ConvergenceError("phase table grew without reaching the target time")

    def _on_break(self, j, t):
        pass

    def _locate(self, t):
        """Phase ``s``, table row and branch index at time ``t >= 0``."""
        if t < 0:
            raise ValueError("closed-form solutions are tabulated for t >= 0")
        self._extend(t)
        ends = [seg[1] for seg in self._segments]
        i = bisect.bisect_left(ends, t)
        t_lo, t_hi, s_lo, s_hi, sol, j = self._segments[i]
        if self._time_is_phase:
            return t, sol(t), j
        if t <= t_lo:
            return s_lo, sol.y[0], j
        if t >= t_hi:
            return s_hi, sol.y[-1], j
        s = root_bracketed(lambda s_: float(sol(s_)[0]) - t, s_lo, s_hi, tol=1e-15)
        return s, sol(s), j

    def frame_vector_at(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def point_at(self, t: float) -> LPlusPoint:
        """Full L+(5) point at time ``t`` in the original frame."""
        if self.static_point:
            return self.pt0
        fv = self.frame_vector_at(t)
        return LPlusPoint.from_vector(fv).rotated(self.O.T)

    static_point = False

    def trajectory(self, times) -> Trajectory:
        """Evaluate on an increasing grid of times ``>= 0``."""
        times = np.asarray(times, dtype=float)
        states = np.array([self.point_at(float(t)).vector() for t in times])
        cons = conserved_series(states, self.params)
        return Trajectory(times, states, kind="lplus", conserved=cons, method=self.method,
                          meta={"constants": self.sidecar()})

    def sidecar(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# a != 0

class ClosedFormSolution(_FrameSolution):
    """Quadrature solution for ``alpha > 0``, ``a != 0``, ``C > 0``, ``mu != 0``.

    Parameters
    ----------
    pt0 : LPlusPoint or array_like
    params : DeformationParams

    Notes
    -----
    ``lam == eps`` gives a vanishing vector field; the solution is then the
    constant ``pt0``.  When ``X = Y = 0`` (so ``e^r = 0``) or ``g`` sits at a
    stationary value the ``u`` parametrization degenerates and ``psi`` is
    integrated directly in time instead.
    """

    def __init__(self, pt0, params: DeformationParams):
        a, _, _, mu = split(as_vector(pt0))
        _check_closed_form_domain(float(a), mu, params)
        super().__init__(pt0, params)
        if params.lam == params.epsilon:
            self.static_point = True
            self.qc = QuadratureConstants(C=0.0, D=0.0, K=0.0, E=0.0, R=0.0, B_sign=1)
            return
        self.qc = compute_constants(self.frame0, params)
        raw = _raw_constants(self.frame0, params)
        self.raw = raw
        self.k = (params.lam - params.epsilon) * params.nu * self.a
        self.kK = self.k * self.sa * self.qc.K
        self.theta0 = raw["theta0"]
        self.e2r0 = raw["e2r0"]
        self.L0 = raw["X"] ** 2 + params.alpha * raw["Y"] ** 2
        self.W0 = self.m * float(cross3(self.frame0.x, self.frame0.y)[2])
        self.gp = _GPhase(self.qc.kc, self.qc.E, self.qc.R, self.qc.g0,
                          self.qc.cos_psi0, self.qc.psidot0)
        scale = max(self.qc.C, 1.0) / params.alpha
        self._time_is_phase = self.gp.collapsed or self.e2r0 <= 1e-14 * scale
        self.mode = "time" if self._time_is_phase else "u"

    # phase-table hooks: state [t, G, Cc, Z] (u mode) or [t, psi, G, Cc, Z]
    def _phase_start(self):
        if self._time_is_phase:
            return 0.0, np.concatenate([[0.0, self.raw["psi0"], 0.0, 0.0], self.Z0]), 0
        return self.gp.u0, np.concatenate([[0.0, 0.0, 0.0], self.Z0]), self.gp.j0

    def _next_break(self, s, j):
        return s + 1.0 if self._time_is_phase else (j + 1) * math.pi

    def _on_break(self, j, t):
        if not self._time_is_phase:
            ev = self.gp.boundary_label(j)
            ev["t"] = t
            self.branch_history.append(ev)

    def _invariants(self, t, g, cpsi, G, Cc):
        theta = self.theta0 - self.kK * t + self.qc.kc * G
        e2r = self.e2r0 * math.exp(-2.0 * self.qc.kc * Cc)
        er = math.sqrt(e2r)
        X = self.sa * er * math.cos(theta)
        Y = er * math.sin(theta)
        c2t, s2t = math.cos(2 * theta), math.sin(2 * theta)
        cphi = cpsi * c2t + g * s2t
        sphi = g * c2t - cpsi * s2t
        sC = math.sqrt(self.qc.C)
        return X, Y, sC * cphi, self.sa * sC * sphi, e2r, theta

    def _frame_from(self, X, Y, F, Delta, Z):
        alpha, a, m = self.params.alpha, self.a, self.m
        S = self.raw["S"]
        W = self.W0 + (X * X + alpha * Y * Y - self.L0) / (2.0 * a)
        return self._frame_vector(X, Y, 0.5 * (S + Delta), 0.5 * (S - Delta) / alpha,
                                  0.5 * F, W / m, Z)

    def _rhs_for(self, j):
        kc, P, Qc = self.qc.kc, self.qc.P, self.qc.Qc
        if self._time_is_phase:
            def rhs(t, Y):
                psi, G, Cc = Y[1], Y[2], Y[3]
                g, cpsi = math.sin(psi), math.cos(psi)
                X, Yv, F, Dl, e2r, _ = self._invariants(t, g, cpsi, G, Cc)
                zr = self._guide_rate(self._frame_from(X, Yv, F, Dl, Y[4:]))
                return np.concatenate([[1.0, 2 * kc * (g - P - Qc * e2r), g, cpsi], zr])
            return rhs
        gp = self.gp

        def rhs(u, Y):
            t, G, Cc = Y[0], Y[1], Y[2]
            g, cpsi, _, Qv = gp.evaluate(u, j)
            dt = 1.0 / math.sqrt(Qv)
            X, Yv, F, Dl, _, _ = self._invariants(t, g, cpsi, G, Cc)
            zr = self._guide_rate(self._frame_from(X, Yv, F, Dl, Y[3:]))
            return np.concatenate([[dt, g * dt, cpsi * dt], zr * dt])
        return rhs

    def _state(self, t):
        """``(g, cos psi, dpsi/dt, G, Cc, Z)`` at time ``t``."""
        s, Y, j = self._locate(t)
        if self._time_is_phase:
            psi, G, Cc = Y[1], Y[2], Y[3]
            g, cpsi = math.sin(psi), math.cos(psi)
            _, _, _, _, e2r, _ = self._invariants(t, g, cpsi, G, Cc)
            pd = 2 * self.qc.kc * (g - self.qc.P - self.qc.Qc * e2r)
            return g, cpsi, pd, G, Cc, Y[4:]
        G, Cc = Y[1], Y[2]
        g, cpsi, pd, _ = self.gp.evaluate(s, j)
        return g, cpsi, pd, G, Cc, Y[3:]

    # -- public evaluation -------------------------------------------------
    def g(self, t: float) -> float:
        """``sin(psi(t))``."""
        if self.static_point:
            return math.nan
        return self._state(t)[0]

    def e2r(self, t: float) -> float:
        """``e^{2r(t)}`` from the quadrature of ``dr/dt = -kc cos(psi)``."""
        g, cpsi, _, G, Cc, _ = self._state(t)
        return self._invariants(t, g, cpsi, G, Cc)[4]

    def e2r_algebraic(self, t: float) -> float:
        """``e^{2r}`` recovered algebraically from ``g`` and ``dpsi/dt``."""
        g, _, pd, *_ = self._state(t)
        qc = self.qc
        return (g - qc.P - pd / (2 * qc.kc)) / qc.Qc

    def angle_vars(self, t: float) -> AngleVars:
        g, cpsi, _, G, Cc, _ = self._state(t)
        X, Y, F, Dl, e2r, theta = self._invariants(t, g, cpsi, G, Cc)
        psi = math.atan2(g, cpsi)
        r = 0.5 * math.log(e2r) if e2r > 0 else -math.inf
        return AngleVars(phi=psi - 2 * theta, psi=psi, r=r)

    def invariants_at(self, t: float) -> InvariantCoords:
        if self.static_point:
            return to_invariant_coords(self.pt0)
        g, cpsi, _, G, Cc, _ = self._state(t)
        X, Y, F, *_ = self._invariants(t, g, cpsi, G, Cc)
        return InvariantCoords(X, Y, F)

    def frame_vector_at(self, t: float) -> np.ndarray:
        g, cpsi, _, G, Cc, Z = self._state(t)
        X, Y, F, Dl, _, _ = self._invariants(t, g, cpsi, G, Cc)
        return self._frame_from(X, Y, F, Dl, Z)

    def m6_residuals(self, pt) -> np.ndarray:
        """Relative residuals of the four algebraic equations fixing the in-plane components.

        ``pt`` is a point in the original frame on this trajectory.
        """
        p = self.params
        lam, eps, alpha = p.lam, p.epsilon, p.alpha
        fr = LPlusPoint.from_vector(as_vector(pt)).rotated(self.O)
        ic = to_invariant_coords(fr)
        X, Y, F = ic.x, ic.y, ic.f
        a, m = self.a, self.m
        m2 = m * m
        x1, x2, _ = fr.x
        y1, y2, _ = fr.y
        cc = self.c_consts
        lhs = np.array([
            0.5 * F - X * Y / m2,
            cc["h1"] - alpha * eps * m2 - eps * a * a - (X * X + alpha * Y * Y) / m2,
            (x1 * x1 + x2 * x2 + X * X / m2) * (y1 * y1 + y2 * y2 + Y * Y / m2),
            (cc["c2"] - cc["h2"]) / (lam - eps) - alpha * Y * Y - X * X - (eps + lam) * a * a * m2,
        ])
        rhs = np.array([
            x1 * y1 + x2 * y2,
            x1 * x1 + x2 * x2 + alpha * (y1 * y1 + y2 * y2),
            (eps * cc["c2"] - lam * cc["h2"]) / (eps - lam) + eps * lam * a * a * m2 + 0.25 * F * F,
            2 * a * m * (x2 * y1 - x1 * y2),
        ])
        scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)
        return (lhs - rhs) / scale

    def sidecar(self) -> dict:
        d = {"branch": "a!=0", "mode": getattr(self, "mode", "static")}
        d.update(self.qc.as_dict())
        d["M"] = None
        d["N"] = None
        d["branch_history"] = list(self.branch_history)
        return d


def reconstruct_xyf(t: float, solution: ClosedFormSolution) -> tuple[float, float, float]:
    """Invariants ``(mu.x, mu.y, 2 x.y)`` at time ``t``."""
    ic = solution.invariants_at(t)
    return ic.x, ic.y, ic.f


def reconstruct_full(t: float, solution, pt0=None) -> LPlusPoint:
    """Full point at time ``t``; ``pt0`` (if given) must be the solution's start."""
    if pt0 is not None and not np.array_equal(as_vector(pt0), solution.pt0.vector()):
        raise ValueError("pt0 does not match the solution's initial point")
    return solution.point_at(t)


# ---------------------------------------------------------------------------
# a = 0

@dataclass(frozen=True)
class AZeroData:
    """Invariants and state of the ``a = 0`` reduction.

    ``g1 = mu.x``, ``g2 = mu.y``, ``g3 = |x*y|^2`` are constant;
    ``f1 = mu.(x*y)``, ``f2 = x.y``, ``f3 = x^2 - alpha y^2`` move, keeping
    ``M = 4 alpha f2^2 + f3^2`` and
    ``N = f1^2 + (alpha g2^2 - g1^2) f3 / (2 alpha) - 2 g1 g2 f2`` fixed.
    """

    g1: float
    g2: float
    g3: float
    f1: float
    f2: float
    f3: float
    M: float
    N: float

    @classmethod
    def from_point(cls, pt, params: DeformationParams, atol: float = A_ZERO_ATOL) -> "AZeroData":
        g = a_zero_invariants(pt, atol)
        f = a_zero_state(pt, params.alpha)
        M, N = a_zero_conserved(f, g, params.alpha)
        return cls(*g, *f, M, N)


def a_zero_invariants(pt, atol: float = A_ZERO_ATOL) -> tuple[float, float, float]:
    """``(mu.x, mu.y, |x*y|^2)``; raises :class:`NotOnStratum` if ``|a| > atol``."""
    a, x, y, mu = split(as_vector(pt))
    if abs(a) > atol:
        raise NotOnStratum(f"|a| = {abs(a)!r} exceeds {atol!r}")
    w = cross3(x, y)
    return float(mu @ x), float(mu @ y), float(w @ w)


def a_zero_state(pt, alpha: float) -> tuple[float, float, float]:
    """``(mu.(x*y), x.y, x^2 - alpha y^2)``."""
    _, x, y, mu = split(as_vector(pt))
    return float(mu @ cross3(x, y)), float(x @ y), float(x @ x - alpha * (y @ y))


def a_zero_conserved(state, invariants, alpha: float) -> tuple[float, float]:
    """``(M, N)`` from ``(f1, f2, f3)`` and ``(g1, g2, g3)``."""
    f1, f2, f3 = state
    g1, g2, _ = invariants
    M = 4 * alpha * f2 * f2 + f3 * f3
    N = f1 * f1 + (alpha * g2 * g2 - g1 * g1) * f3 / (2 * alpha) - 2 * g1 * g2 * f2
    return float(M), float(N)


def a_zero_rhs(state, invariants, params: DeformationParams) -> tuple[float, float, float]:
    """Time derivatives of ``(f1, f2, f3)`` on the ``a = 0`` stratum."""
    f1, f2, f3 = state
    g1, g2, _ = invariants
    s = 2 * (params.lam - params.epsilon) * params.nu
    alpha = params.alpha
    return (s * ((alpha * g2 * g2 - g1 * g1) * f2 + g1 * g2 * f3),
            s * f1 * f3,
            -4 * alpha * s * f1 * f2)


class _Pendulum:
    """``zeta'^2 = c (N + rho cos zeta)`` with ``zeta = chi - chi*``.

    ``chi`` is the angle with ``f3 = sqrt(M) cos(chi)`` and
    ``2 sqrt(alpha) f2 = sqrt(M) sin(chi)``; ``dchi/dt = kf f1``.
    Libration uses ``sin(zeta/2) = k sin(v)``, rotation uses ``zeta``
    itself as the phase.  Both phases increase with time.
    """

    def __init__(self, data: AZeroData, params: DeformationParams):
        alpha = params.alpha
        sa = math.sqrt(alpha)
        self.sqM = math.sqrt(max(data.M, 0.0))
        self.kf = 4 * (params.lam - params.epsilon) * params.nu * sa
        c = self.kf ** 2
        A = -(alpha * data.g2 ** 2 - data.g1 ** 2) * self.sqM / (2 * alpha)
        B = data.g1 * data.g2 * self.sqM / sa
        self.rho = math.hypot(A, B)
        self.chistar = math.atan2(B, A) if self.rho > 0 else 0.0
        self.N = data.N
        self.c = c
        self.sa = sa
        chi0 = math.atan2(2 * sa * data.f2, data.f3)
        self.chi0 = chi0
        scale = max(abs(data.N), self.rho, 1e-300)
        self.static = c == 0.0 or self.sqM <= 1e-14 or max(abs(data.N), self.rho) <= 1e-28
        self.kind = "static"
        if self.static:
            return
        zeta0 = math.remainder(chi0 - self.chistar, 2 * math.pi)
        zdot0 = self.kf * data.f1
        if self.N < self.rho * (1 - 1e-13):
            self.kind = "libration"
            k2 = 0.5 * (1 + self.N / self.rho)
            self.k = math.sqrt(min(max(k2, 0.0), 1.0))
            self.omega = math.sqrt(c * self.rho / 2)
            sv = 0.0 if self.k == 0 else min(1.0, max(-1.0, math.sin(zeta0 / 2) / self.k))
            v0 = math.asin(sv)
            if zdot0 < 0:
                v0 = math.pi - v0
            self.s0 = v0
        else:
            self.kind = "rotation"
            self.sigma = 1.0 if zdot0 >= 0 else -1.0
            self.s0 = self.sigma * zeta0
        self._scale = scale

    def dtds(self, s):
        if self.kind == "libration":
            return 1.0 / (self.omega * math.sqrt(max(1 - (self.k * math.sin(s)) ** 2, 1e-300)))
        zeta = self.sigma * s
        return 1.0 / math.sqrt(max(self.c * (self.N + self.rho * math.cos(zeta)), 1e-300))

    def chi_f1(self, s):
        """``(chi, f1)`` at phase ``s``."""
        if self.kind == "libration":
            zeta = 2 * math.asin(min(1.0, max(-1.0, self.k * math.sin(s))))
            zdot = 2 * self.k * self.omega * math.cos(s)
        else:
            zeta = self.sigma * s
            zdot = self.sigma * math.sqrt(max(self.c * (self.N + self.rho * math.cos(zeta)), 0.0))
        return zeta + self.chistar, zdot / self.kf

    def f3(self, s):
        return self.sqM * math.cos(self.chi_f1(s)[0])


class AZeroSolution(_FrameSolution):
    """Quadrature solution on the ``a = 0`` stratum (``alpha > 0``, ``mu != 0``)."""

    def __init__(self, pt0, params: DeformationParams, atol: float = A_ZERO_ATOL):
        super().__init__(pt0, params)
        fr = self.frame0
        self.a = 0.0
        self.data = AZeroData.from_point(fr, params, atol)
        self.S = float(fr.x @ fr.x + params.alpha * (fr.y @ fr.y))
        self.pend = _Pendulum(self.data, params)
        self._time_is_phase = self.pend.static
        self.mode = self.pend.kind

    def _phase_start(self):
        if self._time_is_phase:
            return 0.0, np.concatenate([[0.0], self.Z0]), 0
        return self.pend.s0, np.concatenate([[0.0], self.Z0]), 0

    def _next_break(self, s, j):
        return s + (1.0 if self._time_is_phase else math.pi)

    def _frame_at_phase(self, s, Z):
        d, m, alpha = self.data, self.m, self.params.alpha
        if self._time_is_phase:
            chi, f1 = self.pend.chi0, d.f1
        else:
            chi, f1 = self.pend.chi_f1(s)
        sqM = self.pend.sqM
        f3 = sqM * math.cos(chi)
        f2 = sqM * math.sin(chi) / (2 * self.pend.sa)
        return self._frame_vector(d.g1, d.g2, 0.5 * (self.S + f3), 0.5 * (self.S - f3) / alpha,
                                  f2, f1 / m, Z)

    def _rhs_for(self, j):
        if self._time_is_phase:
            return lambda t, Y: np.concatenate([[1.0], self._guide_rate(self._frame_at_phase(t, Y[1:]))])
        pend = self.pend

        def rhs(s, Y):
            dt = pend.dtds(s)
            return np.concatenate([[dt], self._guide_rate(self._frame_at_phase(s, Y[1:])) * dt])
        return rhs

    def frame_vector_at(self, t: float) -> np.ndarray:
        s, Y, _ = self._locate(t)
        return self._frame_at_phase(s, Y[1:])

    def f_state(self, t: float) -> tuple[float, float, float]:
        """``(f1, f2, f3)`` at time ``t``."""
        return a_zero_state(self.frame_vector_at(t), self.params.alpha)

    def f3_inverted(self, t: float) -> float:
        """``f3(t)`` by inverting the pendulum quadrature with Brent's method."""
        return a_zero_invert_f3(t, self.data, self.params)

    def sidecar(self) -> dict:
        d = {"branch": "a=0", "mode": self.mode, "M": self.data.M, "N": self.data.N,
             "g1": self.data.g1, "g2": self.data.g2, "g3": self.data.g3,
             "C": None, "D": None, "K": None, "E": None, "R": None,
             "branch_history": []}
        return d


def _f3_signs(data: AZeroData, params: DeformationParams):
    rate = a_zero_rhs((data.f1, data.f2, data.f3), (data.g1, data.g2, data.g3), params)[2]
    return (1.0 if data.f1 >= 0 else -1.0), (1.0 if data.f2 >= 0 else -1.0), rate


def a_zero_f3_quadrature(f3_target: float, data: AZeroData, params: DeformationParams) -> float:
    """Time for ``f3`` to move from ``data.f3`` to ``f3_target``.

    Integrates ``dt = df3 / f3'`` with ``f3' = -8 (lam-eps) alpha nu f1 f2``,
    ``f2 = +-sqrt((M - f3^2)/(4 alpha))`` and
    ``f1 = +-sqrt(N - (alpha g2^2 - g1^2) f3/(2 alpha) + 2 g1 g2 f2)``; the
    signs are those at ``t = 0`` and stay valid up to the first turning
    point.

    Raises
    ------
    DomainError
        If ``f3_target`` is not reached monotonically from ``data.f3`` or a
        radicand changes sign inside the interval.
    """
    f30 = data.f3
    if f3_target == f30:
        return 0.0
    alpha = params.alpha
    if not alpha > 0:
        raise DomainError("a = 0 quadrature needs alpha > 0")
    s1, s2, rate = _f3_signs(data, params)
    if rate == 0 or (f3_target - f30) * rate < 0:
        raise DomainError("f3_target is not ahead of f3(0) in the direction of motion")
    pref = -8 * (params.lam - params.epsilon) * alpha * params.nu

    def rad2(f3):
        return (data.M - f3 * f3) / (4 * alpha)

    def f2_of(f3):
        return s2 * math.sqrt(max(rad2(f3), 0.0))

    def rad1(f3):
        return data.N - (alpha * data.g2 ** 2 - data.g1 ** 2) * f3 / (2 * alpha) \
            + 2 * data.g1 * data.g2 * f2_of(f3)

    lo, hi = sorted((f30, f3_target))
    interior = np.linspace(lo, hi, 35)[1:-1]
    if any(rad2(v) <= 0 or rad1(v) <= 0 for v in interior):
        raise DomainError("radicand changes sign inside the f3 interval")

    def integrand(f3s):
        out = []
        for f3 in np.atleast_1d(f3s):
            r1, r2 = max(rad1(f3), 1e-300), max(rad2(f3), 1e-300)
            out.append(1.0 / abs(pref * math.sqrt(r1) * math.sqrt(r2)))
        return np.array(out)

    span = hi - lo

    def at_root(v):
        return min(abs(rad1(v)), abs(rad2(v))) <= 1e-12 * max(1.0, data.M, abs(data.N)) * max(span, 1.0)

    return quad_adaptive(integrand, lo, hi, tol=1e-12,
                         endpoint_singularity=(at_root(lo), at_root(hi)))


def a_zero_invert_f3(t: float, data: AZeroData, params: DeformationParams) -> float:
    """``f3(t)`` by bracketed inversion of the pendulum quadrature."""
    pend = _Pendulum(data, params)
    if pend.static or t == 0:
        return data.f3

    def dtds(s):
        return np.array([pend.dtds(v) for v in np.atleast_1d(s)])

    T = quad_adaptive(dtds, 0.0, 2 * math.pi, tol=1e-13)
    n = math.floor(t / T)
    rem = t - n * T
    s0 = pend.s0

    def resid(s):
        return quad_adaptive(dtds, s0, s, tol=1e-13) - rem

    s = root_bracketed(resid, s0, s0 + 2 * math.pi, tol=1e-14)
    return pend.f3(s)


# ---------------------------------------------------------------------------
# dispatch

def closed_form_solution(pt0, params: DeformationParams, atol_a: float = A_ZERO_ATOL):
    """Build the closed-form solution appropriate to ``pt0``.

    Raises
    ------
    BranchDomainError
        Outside the closed-form domain (``alpha <= 0``, ``mu = 0``, ``C <= 0``
        or ``nu = 0`` with ``a != 0``).
    """
    a, _, _, mu = split(as_vector(pt0))
    if not params.alpha > 0:
        raise BranchDomainError("closed form needs alpha > 0")
    if not mu @ mu > 0:
        raise BranchDomainError("closed form needs mu != 0")
    if abs(a) <= atol_a:
        v = as_vector(pt0).copy()
        v[0] = 0.0
        return AZeroSolution(v, params, atol_a)
    return ClosedFormSolution(pt0, params)


def solve_closed_form(pt0, params: DeformationParams, times, tol: ToleranceSpec | None = None,
                      atol_a: float = A_ZERO_ATOL) -> Trajectory:
    """Closed-form trajectory on ``times``; falls back to numerical integration.

    The fallback result carries ``method == "numeric-only"`` and the reason
    in ``meta["fallback"]``.
    """
    times = np.asarray(times, dtype=float)
    try:
        sol = closed_form_solution(pt0, params, atol_a)
    except BranchDomainError as exc:
        t1 = float(times[-1]) if times[-1] > times[0] else float(times[0]) + 1.0
        traj = integrate(pt0, (float(times[0]), t1), params, tol=tol, t_eval=times)
        traj.method = "numeric-only"
        traj.meta["fallback"] = str(exc)
        return traj
    return sol.trajectory(times)
