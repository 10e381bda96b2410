"""Small numerical kernels used throughout the package.

Everything here targets state dimensions of at most a few dozen, so clarity
is preferred over vectorised cleverness.  The kernels are:

* :func:`ode_solve` -- Dormand--Prince 5(4) with PI step control and a
  4th-order continuous extension,
* :func:`quad_adaptive` -- globally adaptive Gauss--Kronrod (7, 15) quadrature
  with an optional square-root substitution at either endpoint,
* :func:`root_bracketed` -- Brent's method,
* :func:`expm` / :func:`expm2` -- matrix exponentials,
* :func:`singular_values` / :func:`numeric_rank` -- one-sided Jacobi SVD,
* :func:`fd_gradient` -- central finite differences.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import (
    ConvergenceError,
    NoSignChange,
    NonConvergence,
    NonFiniteState,
    StepSizeUnderflow,
)

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ToleranceSpec:
    """Error tolerances for adaptive integration.

    Parameters
    ----------
    rtol, atol : float
        Relative and absolute local error tolerance.
    max_steps : int
        Upper bound on attempted steps before giving up.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


# ---------------------------------------------------------------------------
# Dormand--Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# continuous extension: y(t + th*h) = y + h * K^T @ _P @ [th, th^2, th^3, th^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class OdeSolution:
    """Accepted steps of :func:`ode_solve` plus dense interpolation.

    Attributes
    ----------
    t : ndarray, shape (n,)
        Step times, monotone in the integration direction.
    y : ndarray, shape (n, d)
        States at ``t``.
    nfev, nsteps, nreject : int
        Work counters.
    """

    def __init__(self, t, y, q, nfev, nsteps, nreject):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self._q = q
        self.nfev = nfev
        self.nsteps = nsteps
        self.nreject = nreject

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1].copy()

    def __call__(self, tq):
        """Evaluate the continuous extension at ``tq`` (scalar or array)."""
        tq = np.asarray(tq, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        ts = self.t
        forward = ts[-1] >= ts[0]
        lo, hi = (ts[0], ts[-1]) if forward else (ts[-1], ts[0])
        span = abs(ts[-1] - ts[0])
        slack = 1e-12 * max(span, abs(lo), abs(hi), 1.0)
        if np.any(tq < lo - slack) or np.any(tq > hi + slack):
            raise ValueError("requested time outside the integrated interval")
        out = np.empty((tq.size, self.y.shape[1]))
        if ts.size == 1:
            out[:] = self.y[0]
            return out[0] if scalar else out
        key = ts if forward else -ts
        tk = tq if forward else -tq
        idx = np.clip(np.searchsorted(key, tk, side="right") - 1, 0, ts.size - 2)
        for n, (i, tt) in enumerate(zip(idx, tq)):
            h = ts[i + 1] - ts[i]
            th = (tt - ts[i]) / h
            powers = np.array([th, th * th, th ** 3, th ** 4])
            out[n] = self.y[i] + h * (self._q[i] @ powers)
        return out[0] if scalar else out


def _rms(v):
    return math.sqrt(float(np.mean(v * v)))


def _initial_step(rhs, t0, y0, f0, direction, tol):
    sc = tol.atol + tol.rtol * np.abs(y0)
    d0 = _rms(y0 / sc)
    d1 = _rms(f0 / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(rhs(t0 + direction * h0, y1), dtype=float)
    d2 = _rms((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _stages(rhs, t, y, f, h, K):
    K[0] = f
    for i in range(1, 7):
        dy = K[:i].T @ np.asarray(_A[i])
        K[i] = rhs(t + _C[i] * h, y + h * dy)
    return y + h * (K[:6].T @ _B5[:6])


def ode_solve(rhs: Callable, y0, t_span: Sequence[float], tol: ToleranceSpec | None = None,
              h: float | None = None, post_step: Callable | None = None,
              first_step: float | None = None) -> OdeSolution:
    """Integrate ``y' = rhs(t, y)`` with the Dormand--Prince 5(4) pair.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt`` on 1-d float arrays.
    y0 : array_like
        Initial state.
    t_span : (t0, t1)
        Integration interval; ``t1 < t0`` integrates backwards.
    tol : ToleranceSpec, optional
        Local error tolerances; ignored in fixed-step mode.  The embedded
        error estimate is controlled per unit step (divided by
        ``min(1, |h|)``), which keeps the local error of every step below
        ``tol`` and makes the accumulated drift roughly independent of the
        number of steps.
    h : float, optional
        If given, take uniform steps of (at most) this size without error
        control.  Used for order verification.
    post_step : callable, optional
        ``post_step(t, y) -> y`` applied after every accepted step, e.g. a
        projection onto an invariant set.
    first_step : float, optional
        Initial step size for the adaptive mode.

    Returns
    -------
    OdeSolution

    Raises
    ------
    StepSizeUnderflow
        If the step size collapses or ``tol.max_steps`` is exhausted.
    NonFiniteState
        If the state overflows.
    """
    tol = tol or ToleranceSpec()
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("non-finite initial state")
    d = y.size
    f = np.asarray(rhs(t0, y), dtype=float)
    nfev = 1
    ts, ys, qs = [t0], [y.copy()], []
    if t1 == t0:
        return OdeSolution(ts, ys, qs, nfev, 0, 0)
    direction = 1.0 if t1 > t0 else -1.0
    K = np.empty((7, d))
    t = t0

    if h is not None:
        n = max(1, int(math.ceil(abs(t1 - t0) / abs(h) - 1e-12)))
        step = (t1 - t0) / n
        for i in range(n):
            y_new = _stages(rhs, t, y, f, step, K)
            t_new = t0 + (i + 1) * step if i < n - 1 else t1
            K[6] = rhs(t_new, y_new)
            nfev += 6
            if not np.all(np.isfinite(y_new)):
                raise NonFiniteState(f"state overflow at t={t_new!r}")
            qs.append(K.T @ _P)
            t, y, f = t_new, y_new, K[6].copy()
            if post_step is not None:
                y = np.asarray(post_step(t, y), dtype=float)
                f = np.asarray(rhs(t, y), dtype=float)
                nfev += 1
            ts.append(t)
            ys.append(y.copy())
        return OdeSolution(ts, np.array(ys), qs, nfev, n, 0)

    # Hairer's PI controller constants
    beta, expo1, safe = 0.04, 0.2 - 0.04 * 0.75, 0.9
    facc1, facc2 = 1 / 0.2, 1 / 10.0
    facold = 1e-4
    hmag = abs(first_step) if first_step else _initial_step(rhs, t0, y, f, direction, tol)
    nfev += 1
    hmag = min(hmag, abs(t1 - t0))
    nsteps = nreject = 0
    last_rejected = False
    while direction * (t1 - t) > 0:
        if nsteps + nreject >= tol.max_steps:
            raise StepSizeUnderflow(f"max_steps={tol.max_steps} exhausted at t={t!r}")
        if hmag < 16 * EPS * max(abs(t), 1e-300):
            raise StepSizeUnderflow(f"step size underflow at t={t!r}")
        last = direction * (t + direction * hmag - t1) >= 0
        hs = (t1 - t) if last else direction * hmag
        with np.errstate(over="ignore", invalid="ignore"):
            y_new = _stages(rhs, t, y, f, hs, K)
            t_new = t1 if last else t + hs
            K[6] = rhs(t_new, y_new)
            nfev += 6
            err = hs * (K.T @ _E)
            sc = tol.atol + tol.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = _rms(err / sc) / min(1.0, abs(hs))
        if not math.isfinite(err_norm) or not np.all(np.isfinite(y_new)):
            nreject += 1
            hmag *= 0.1
            if hmag < 16 * EPS * max(abs(t), 1e-300):
                raise NonFiniteState(f"state overflow near t={t!r}")
            last_rejected = True
            continue
        fac11 = err_norm ** expo1 if err_norm > 0 else 0.0
        if err_norm <= 1.0:
            fac = fac11 / facold ** beta
            fac = max(facc2, min(facc1, fac / safe))
            hnew = abs(hs) / fac
            if last_rejected:
                hnew = min(hnew, abs(hs))
            facold = max(err_norm, 1e-4)
            qs.append(K.T @ _P)
            t, y, f = t_new, y_new, K[6].copy()
            if post_step is not None:
                y = np.asarray(post_step(t, y), dtype=float)
                f = np.asarray(rhs(t, y), dtype=float)
                nfev += 1
            ts.append(t)
            ys.append(y.copy())
            nsteps += 1
            hmag = hnew
            last_rejected = False
        else:
            hmag = abs(hs) / min(facc1, fac11 / safe)
            nreject += 1
            last_rejected = True
    return OdeSolution(ts, np.array(ys), qs, nfev, nsteps, nreject)


# ---------------------------------------------------------------------------
# Gauss--Kronrod quadrature

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    if fx.shape != _NODES.shape:
        fx = np.broadcast_to(fx, _NODES.shape)
    k = half * float(fx @ _WK)
    g = half * float(fx @ _WG15)
    return k, abs(k - g)


def quad_adaptive(f: Callable, a: float, b: float, tol: float = 1e-10,
                  endpoint_singularity: tuple[bool, bool] = (False, False),
                  max_intervals: int = 5000, full_output: bool = False):
    """Integrate ``f`` over ``[a, b]`` by adaptive Gauss--Kronrod (7, 15).

    Parameters
    ----------
    f : callable
        Vectorised integrand, called with 1-d arrays of abscissae.
    a, b : float
        Limits; ``b < a`` gives the negated integral.
    tol : float
        Target absolute error.
    endpoint_singularity : (bool, bool)
        Flags for integrable ``1/sqrt`` behaviour at ``a`` and ``b``.  A
        flagged endpoint is removed by the substitution ``x = a + u**2``
        (resp. ``x = b - u**2``); both flags split the interval at the middle.
    max_intervals : int
        Subdivision budget.
    full_output : bool
        Also return the error estimate.

    Returns
    -------
    value : float
    err : float, only if ``full_output``

    Raises
    ------
    NonConvergence
        If the error estimate is still above ``tol`` after the budget.
    """
    a, b = float(a), float(b)
    if a == b:
        return (0.0, 0.0) if full_output else 0.0
    if b < a:
        res = quad_adaptive(f, b, a, tol, endpoint_singularity[::-1], max_intervals, True)
        return (-res[0], res[1]) if full_output else -res[0]
    left, right = endpoint_singularity
    if left and right:
        m = 0.5 * (a + b)
        v1, e1 = quad_adaptive(f, a, m, tol / 2, (True, False), max_intervals, True)
        v2, e2 = quad_adaptive(f, m, b, tol / 2, (False, True), max_intervals, True)
        return (v1 + v2, e1 + e2) if full_output else v1 + v2
    if left:
        g = lambda u: 2.0 * u * np.asarray(f(a + u * u), dtype=float)  # noqa: E731
        return quad_adaptive(g, 0.0, math.sqrt(b - a), tol, (False, False),
                             max_intervals, full_output)
    if right:
        g = lambda u: 2.0 * u * np.asarray(f(b - u * u), dtype=float)  # noqa: E731
        return quad_adaptive(g, 0.0, math.sqrt(b - a), tol, (False, False),
                             max_intervals, full_output)

    v, e = _gk15(f, a, b)
    heap = [(-e, a, b, v)]
    total_v, total_e = v, e
    n = 1
    while total_e > tol:
        if n >= max_intervals:
            raise NonConvergence(
                f"quadrature error estimate {total_e:.3g} above tol {tol:.3g}")
        neg_e, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            # interval at round-off resolution; accept what we have
            heapq.heappush(heap, (neg_e, lo, hi, val))
            if total_e <= max(tol, 1e3 * EPS * abs(total_v)):
                break
            raise NonConvergence("quadrature interval collapsed to round-off width")
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total_v += v1 + v2 - val
        total_e += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        n += 1
    # re-sum to shed accumulated update round-off
    total_v = math.fsum(item[3] for item in heap)
    total_e = math.fsum(-item[0] for item in heap)
    return (total_v, total_e) if full_output else total_v


# ---------------------------------------------------------------------------
# Brent root finder

def root_bracketed(f: Callable[[float], float], lo: float, hi: float,
                   tol: float = 1e-14, maxiter: int = 200,
                   full_output: bool = False):
    """Find a root of ``f`` inside ``[lo, hi]`` with Brent's method.

    Parameters
    ----------
    f : callable
        Scalar function.
    lo, hi : float
        Bracket with ``f(lo) * f(hi) <= 0``.
    tol : float
        Absolute tolerance on the root location.
    maxiter : int
        Iteration budget.
    full_output : bool
        Also return the number of iterations used.

    Raises
    ------
    NoSignChange
        If the bracket does not straddle a root.
    ConvergenceError
        If ``maxiter`` is exhausted.
    """
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return (a, 0) if full_output else a
    if fb == 0.0:
        return (b, 0) if full_output else b
    if fa * fb > 0:
        raise NoSignChange(f"f({a!r})={fa!r} and f({b!r})={fb!r} share a sign")
    c, fc = a, fa
    d = e = b - a
    for it in range(1, maxiter + 1):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2 * EPS * abs(b) + 0.5 * tol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return (b, it) if full_output else b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p, q = 2 * xm * s, 1 - s
            else:
                q, r = fa / fc, fb / fc
                p = s * (2 * xm * q * (q - r) - (b - a) * (r - 1))
                q = (q - 1) * (r - 1) * (s - 1)
            if p > 0:
                q = -q
            p = abs(p)
            if 2 * p < min(3 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b = b + d if abs(d) > tol1 else b + math.copysign(tol1, xm)
        fb = float(f(b))
    raise ConvergenceError(f"Brent iteration did not converge in {maxiter} steps")


# ---------------------------------------------------------------------------
# matrix exponentials

_PADE6 = [1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280]


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [6/6] Pade approximant."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    norm = np.abs(M).sum(axis=0).max() if M.size else 0.0
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    A = M / 2.0 ** s
    ident = np.eye(n)
    num = _PADE6[0] * ident
    den = _PADE6[0] * ident
    Ak = ident
    for k in range(1, 7):
        Ak = Ak @ A
        num = num + _PADE6[k] * Ak
        den = den + (-1) ** k * _PADE6[k] * Ak
    E = np.linalg.solve(den, num)
    for _ in range(s):
        E = E @ E
    return E


def cosh_sinhc(s: float) -> tuple[float, float]:
    """Return ``(cosh(sqrt(s)), sinh(sqrt(s))/sqrt(s))`` for real ``s`` of any sign.

    For ``s < 0`` these are ``cos(sqrt(-s))`` and ``sin(sqrt(-s))/sqrt(-s)``.
    """
    if abs(s) < 1e-8:
        return 1 + s / 2 + s * s / 24, 1 + s / 6 + s * s / 120
    if s > 0:
        r = math.sqrt(s)
        return math.cosh(r), math.sinh(r) / r
    r = math.sqrt(-s)
    return math.cos(r), math.sin(r) / r


def expm2(M) -> np.ndarray:
    """Closed-form exponential of a real 2x2 matrix (trig/hyperbolic split)."""
    M = np.asarray(M, dtype=float)
    tau = 0.5 * (M[0, 0] + M[1, 1])
    N = M - tau * np.eye(2)
    s = N[0, 0] ** 2 + N[0, 1] * N[1, 0]  # N @ N = s * I
    ch, shc = cosh_sinhc(s)
    return math.exp(tau) * (ch * np.eye(2) + shc * N)


# ---------------------------------------------------------------------------
# rank and derivatives

def singular_values(M, max_sweeps: int = 60) -> np.ndarray:
    """Singular values in descending order via one-sided Jacobi rotations."""
    A = np.array(M, dtype=float)
    if A.ndim != 2:
        raise ValueError("expected a 2-d array")
    if A.shape[1] > A.shape[0]:
        A = A.T.copy()
    n = A.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for j in range(n - 1):
            for k in range(j + 1, n):
                alpha = float(A[:, j] @ A[:, j])
                beta = float(A[:, k] @ A[:, k])
                gamma = float(A[:, j] @ A[:, k])
                if abs(gamma) <= EPS * math.sqrt(alpha) * math.sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1 / math.sqrt(1 + t * t)
                s = c * t
                aj = A[:, j].copy()
                A[:, j] = c * aj - s * A[:, k]
                A[:, k] = s * aj + c * A[:, k]
        if not rotated:
            break
    return np.sort(np.linalg.norm(A, axis=0))[::-1]


def numeric_rank(M, rel_tol: float = 1e-10) -> int:
    """Number of singular values above ``rel_tol * sigma_max``."""
    sv = singular_values(M)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def fd_gradient(f: Callable, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient with step ``cbrt(eps) * max(1, |x_i|)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    base = EPS ** (1 / 3)
    for i in range(x.size):
        hi = h if h is not None else base * max(1.0, abs(x.flat[i]))
        xp, xm = x.copy(), x.copy()
        xp.flat[i] += hi
        xm.flat[i] -= hi
        g.flat[i] = (f(xp) - f(xm)) / (xp.flat[i] - xm.flat[i])
    return g
