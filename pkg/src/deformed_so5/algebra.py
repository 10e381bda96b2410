"""The deformed algebra so_{lam,alpha}(5), its dual L+(5) and the Lie--Poisson bracket.

Storage conventions
-------------------
A point of L+(5) is stored as the 10-vector ``(a, x1, x2, x3, y1, y2, y3,
mu1, mu2, mu3)``; gradients use the same order.  The 5x5 matrices use the
block index order ``(-1, 0, 1, 2, 3)`` mapped to storage indices
``(0, 1, 2, 3, 4)``.  The strictly upper-triangular matrix of a point is::

    kappa[0, 1] = a        kappa[0, 2:] = x     kappa[1, 2:] = y
    kappa[2, 3] = mu3      kappa[2, 4] = -mu2   kappa[3, 4] = mu1

An algebra element ``(b, u, w, omega)`` embeds as::

    X[0, 1] = alpha*b      X[0, 2:] = alpha*lam*u
    X[1, 0] = -b           X[1, 2:] = lam*w
    X[2:, 0] = -u          X[2:, 1] = -w          X[2:, 2:] = hat(omega)

with ``hat(omega) @ v = omega x v``.  Under these conventions
``Tr(kappa X) = -a b - x.u - y.w + mu.omega``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DegenerateMetric

A_IDX = 0
X_IDX = slice(1, 4)
Y_IDX = slice(4, 7)
MU_IDX = slice(7, 10)
COORD_NAMES = ("a", "x1", "x2", "x3", "y1", "y2", "y3", "mu1", "mu2", "mu3")


def _finite(v, name):
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class DeformationParams:
    """Bracket parameters ``(lam, alpha)`` and the Hamiltonian data ``(epsilon, gamma, nu)``.

    ``lam`` stands for the bracket parameter lambda (a Python keyword).
    The Hamiltonian is ``H = gamma*h1 + nu*h2`` where ``h1, h2`` are the
    Casimirs of the bracket with ``lam`` replaced by ``epsilon``.
    """

    lam: float
    alpha: float
    epsilon: float = 0.0
    gamma: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        for name in ("lam", "alpha", "epsilon", "gamma", "nu"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))

    def replace(self, **changes) -> "DeformationParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "alpha": self.alpha, "epsilon": self.epsilon,
                "gamma": self.gamma, "nu": self.nu}

    @classmethod
    def from_dict(cls, d: dict) -> "DeformationParams":
        lam = d["lambda"] if "lambda" in d else d["lam"]
        return cls(lam=lam, alpha=d["alpha"], epsilon=d.get("epsilon", 0.0),
                   gamma=d.get("gamma", 1.0), nu=d.get("nu", 1.0))

    def require_nondegenerate(self):
        """Raise :class:`DegenerateMetric` unless ``alpha*lam != 0``."""
        if self.alpha * self.lam == 0.0:
            raise DegenerateMetric(f"alpha*lambda = 0 (lambda={self.lam}, alpha={self.alpha})")


def _vec3(v, name):
    arr = np.array(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class LPlusPoint:
    """A point ``(a, x, y, mu)`` of L+(5)."""

    a: float
    x: np.ndarray
    y: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _finite(self.a, "a"))
        for name in ("x", "y", "mu"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    def __eq__(self, other):
        if not isinstance(other, LPlusPoint):
            return NotImplemented
        return bool(np.array_equal(self.vector(), other.vector()))

    def __repr__(self):
        return (f"LPlusPoint(a={self.a!r}, x={self.x.tolist()!r}, "
                f"y={self.y.tolist()!r}, mu={self.mu.tolist()!r})")

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.a], self.x, self.y, self.mu])

    @classmethod
    def from_vector(cls, v) -> "LPlusPoint":
        v = np.asarray(v, dtype=float).reshape(10)
        return cls(v[0], v[X_IDX], v[Y_IDX], v[MU_IDX])

    @classmethod
    def zero(cls) -> "LPlusPoint":
        return cls.from_vector(np.zeros(10))

    def kappa(self) -> np.ndarray:
        """Strictly upper-triangular 5x5 matrix of the point."""
        K = np.zeros((5, 5))
        K[0, 1] = self.a
        K[0, 2:] = self.x
        K[1, 2:] = self.y
        K[2, 3] = self.mu[2]
        K[2, 4] = -self.mu[1]
        K[3, 4] = self.mu[0]
        return K

    @classmethod
    def from_kappa(cls, K) -> "LPlusPoint":
        K = np.asarray(K, dtype=float)
        return cls(K[0, 1], K[0, 2:], K[1, 2:], [K[3, 4], -K[2, 4], K[2, 3]])

    def rotated(self, O) -> "LPlusPoint":
        """Apply a 3x3 rotation to ``x``, ``y`` and ``mu`` simultaneously."""
        O = np.asarray(O, dtype=float)
        return LPlusPoint(self.a, O @ self.x, O @ self.y, O @ self.mu)

    def to_dict(self) -> dict:
        return {"a": self.a, "x": self.x.tolist(), "y": self.y.tolist(),
                "mu": self.mu.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LPlusPoint":
        return cls(d["a"], d["x"], d["y"], d["mu"])


def as_vector(pt) -> np.ndarray:
    """Return the 10-vector of an :class:`LPlusPoint` or array-like."""
    if isinstance(pt, LPlusPoint):
        return pt.vector()
    v = np.asarray(pt, dtype=float)
    if v.shape != (10,):
        raise ValueError(f"expected a 10-vector, got shape {v.shape}")
    return v


def split(v):
    """Split a 10-vector into ``(a, x, y, mu)``."""
    return v[A_IDX], v[X_IDX], v[Y_IDX], v[MU_IDX]


def cross3(u, v) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` at this size)."""
    return np.array([u[1] * v[2] - u[2] * v[1],
                     u[2] * v[0] - u[0] * v[2],
                     u[0] * v[1] - u[1] * v[0]])


def hat(omega) -> np.ndarray:
    """Antisymmetric matrix of the cross product with ``omega``."""
    w1, w2, w3 = omega
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]])


def vee(D) -> np.ndarray:
    """Inverse of :func:`hat`."""
    D = np.asarray(D, dtype=float)
    return np.array([D[2, 1], D[0, 2], D[1, 0]])


@dataclass(frozen=True, eq=False)
class DeformedAlgebraElement:
    """An element ``(b, u, w, delta)`` of so_{lam,alpha}(5); ``delta = hat(omega)``."""

    b: float
    u: np.ndarray
    w: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", _finite(self.b, "b"))
        for name in ("u", "w", "omega"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    @property
    def delta(self) -> np.ndarray:
        return hat(self.omega)

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.b], self.u, self.w, self.omega])

    @classmethod
    def from_vector(cls, v) -> "DeformedAlgebraElement":
        v = np.asarray(v, dtype=float).reshape(10)
        return cls(v[0], v[1:4], v[4:7], v[7:10])

    def matrix(self, params: DeformationParams) -> np.ndarray:
        return embed(self.b, self.u, self.w, self.delta, params)

    @classmethod
    def from_matrix(cls, X, params: DeformationParams) -> "DeformedAlgebraElement":
        """Read ``(b, u, w, omega)`` back from the lower-left blocks of ``X``."""
        X = np.asarray(X, dtype=float)
        return cls(-X[1, 0], -X[2:, 0], -X[2:, 1], vee(X[2:, 2:]))


def embed(b, u, w, delta, params: DeformationParams) -> np.ndarray:
    """5x5 matrix of the algebra element ``(b, u, w, delta)``."""
    lam, alpha = params.lam, params.alpha
    X = np.zeros((5, 5))
    X[0, 1] = alpha * b
    X[0, 2:] = alpha * lam * np.asarray(u, dtype=float)
    X[1, 0] = -b
    X[1, 2:] = lam * np.asarray(w, dtype=float)
    X[2:, 0] = -np.asarray(u, dtype=float)
    X[2:, 1] = -np.asarray(w, dtype=float)
    X[2:, 2:] = delta
    return X


def element_from_gradient(grad) -> DeformedAlgebraElement:
    """Algebra element ``X_f`` with ``Tr(kappa X_f) = grad . point`` for all points."""
    g = np.asarray(grad, dtype=float).reshape(10)
    return DeformedAlgebraElement(-g[0], -g[X_IDX], -g[Y_IDX], g[MU_IDX])


def pairing(X, kappa) -> float:
    """``Tr(kappa X)``; ``kappa`` may be an :class:`LPlusPoint` or a 5x5 matrix."""
    K = kappa.kappa() if isinstance(kappa, LPlusPoint) else np.asarray(kappa, dtype=float)
    return float(np.trace(K @ np.asarray(X, dtype=float)))


def bracket_lp(grad_f, grad_g, pt, params: DeformationParams) -> float:
    """Lie--Poisson bracket ``{f, g}_{lam,alpha}`` at ``pt`` from two gradients."""
    a, x, y, mu = split(as_vector(pt))
    lam, alpha = params.lam, params.alpha
    fa, fx, fy, fm = split(np.asarray(grad_f, dtype=float))
    ga, gx, gy, gm = split(np.asarray(grad_g, dtype=float))
    return float(
        lam * a * (fx @ gy - fy @ gx)
        + mu @ (alpha * lam * cross3(fx, gx) + lam * cross3(fy, gy) + cross3(fm, gm))
        + ga * (x @ fy) - fa * (x @ gy)
        - alpha * ga * (y @ fx) + alpha * fa * (y @ gx)
        + x @ (cross3(fx, gm) + cross3(fm, gx))
        + y @ (cross3(fy, gm) + cross3(fm, gy))
    )


def poisson_tensor(pt, params: DeformationParams) -> np.ndarray:
    """10x10 matrix ``Pi`` with ``{f, g} = grad_f @ Pi @ grad_g``."""
    v = as_vector(pt)
    c = structure_constants(params)
    return np.einsum("ijk,k->ij", c, v)


def structure_constants(params: DeformationParams) -> np.ndarray:
    """Tensor ``c[i, j, k]`` with ``{e_i, e_j}(pt) = sum_k c[i, j, k] pt_k``.

    The bracket of two coordinate functions is linear in the point, so the
    coefficients are read off at the ten basis points.
    """
    eye = np.eye(10)
    origin = np.zeros(10)
    c = np.zeros((10, 10, 10))
    for i in range(10):
        for j in range(i + 1, 10):
            base = bracket_lp(eye[i], eye[j], origin, params)
            for k in range(10):
                c[i, j, k] = bracket_lp(eye[i], eye[j], eye[k], params) - base
            c[j, i] = -c[i, j]
    return c


def _jacobi_from_constants(c: np.ndarray) -> float:
    # {{e_i, e_j}, e_k} = sum_m c[i,j,m] c[m,k,n] pt_n
    t = np.einsum("ijm,mkn->ijkn", c, c)
    cyc = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
    return float(np.abs(cyc).max())


def jacobi_residual(params: DeformationParams) -> float:
    """Largest Jacobiator coefficient over all coordinate triples."""
    return _jacobi_from_constants(structure_constants(params))


def pencil_jacobi_residual(lam: float, epsilon: float, alpha: float, b1: float, b2: float,
                           beta: float | None = None) -> float:
    """Jacobi residual of ``b1*{,}_{lam,alpha} + b2*{,}_{epsilon,beta}``.

    ``beta`` defaults to ``alpha`` (shared second parameter); passing a
    different value probes combinations outside the known compatible set.
    """
    beta = alpha if beta is None else beta
    c = (b1 * structure_constants(DeformationParams(lam, alpha))
         + b2 * structure_constants(DeformationParams(epsilon, beta)))
    return _jacobi_from_constants(c)


def commutator_structure_constants(params: DeformationParams) -> np.ndarray:
    """Structure constants from matrix commutators, transported through the pairing.

    ``c[i, j, k] = Tr(kappa_k [X_i, X_j])`` where ``X_i`` is the algebra
    element dual to the coordinate function ``e_i`` and ``kappa_k`` the
    matrix of the ``k``-th basis point.
    """
    eye = np.eye(10)
    Xs = [element_from_gradient(e).matrix(params) for e in eye]
    Ks = [LPlusPoint.from_vector(e).kappa() for e in eye]
    c = np.zeros((10, 10, 10))
    for i in range(10):
        for j in range(10):
            comm = Xs[i] @ Xs[j] - Xs[j] @ Xs[i]
            for k in range(10):
                c[i, j, k] = np.trace(Ks[k] @ comm)
    return c


# ---------------------------------------------------------------------------
# metric, so(5) realisation and iota

@dataclass(frozen=True, eq=False)
class MetricEta:
    """The diagonal metric ``diag(alpha*lam, lam, 1, 1, 1)``."""

    lam: float
    alpha: float
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.diag([self.alpha * self.lam, self.lam, 1.0, 1.0, 1.0])
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def of(cls, params: DeformationParams) -> "MetricEta":
        return cls(params.lam, params.alpha)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    @property
    def invertible(self) -> bool:
        return self.alpha * self.lam != 0.0

    def inverse(self) -> np.ndarray:
        if not self.invertible:
            raise DegenerateMetric("eta is singular when alpha*lambda = 0")
        return np.diag(1.0 / self.diagonal)

    def negative_directions(self) -> int:
        return int(np.sum(self.diagonal < 0))


@dataclass(frozen=True, eq=False)
class So5Matrix:
    """An antisymmetric 5x5 matrix, stored through its 10 upper entries."""

    entries: np.ndarray

    _IU = np.triu_indices(5, 1)

    def __post_init__(self):
        e = np.array(self.entries, dtype=float).reshape(10)
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def matrix(self) -> np.ndarray:
        M = np.zeros((5, 5))
        M[self._IU] = self.entries
        return M - M.T

    @classmethod
    def from_matrix(cls, M, atol: float = 1e-12) -> "So5Matrix":
        M = np.asarray(M, dtype=float)
        if np.abs(M + M.T).max() > atol * max(1.0, np.abs(M).max()):
            raise ValueError("matrix is not antisymmetric")
        return cls(M[cls._IU])


def iota_to_so5(kappa, params: DeformationParams) -> So5Matrix:
    """``rho = eta^-1 kappa - (eta^-1 kappa)^T``."""
    eta = MetricEta.of(params)
    K = kappa.kappa() if isinstance(kappa, LPlusPoint) else LPlusPoint.from_vector(kappa).kappa()
    EK = eta.inverse() @ K
    return So5Matrix.from_matrix(EK - EK.T)


def iota_inverse(rho, params: DeformationParams) -> LPlusPoint:
    """Inverse of :func:`iota_to_so5`: ``kappa`` is the upper triangle of ``eta rho``."""
    eta = MetricEta.of(params)
    eta.inverse()  # raises on degenerate metric
    R = rho.matrix if isinstance(rho, So5Matrix) else np.asarray(rho, dtype=float)
    return LPlusPoint.from_kappa(np.triu(eta.matrix @ R, 1))


def so5_pairing(Y, rho, params: DeformationParams) -> float:
    """``(1/2) Tr(eta Y rho)`` between so~_{lam,alpha}(5) and so(5)."""
    R = rho.matrix if isinstance(rho, So5Matrix) else np.asarray(rho, dtype=float)
    return 0.5 * float(np.trace(MetricEta.of(params).matrix @ np.asarray(Y) @ R))


def to_eta_form(X, params: DeformationParams) -> np.ndarray:
    """``Y = eta^-1 X eta``."""
    eta = MetricEta.of(params)
    return eta.inverse() @ np.asarray(X, dtype=float) @ eta.matrix


# ---------------------------------------------------------------------------
# sl(2, R)

def sl2_bracket(grad_f, grad_g, d) -> float:
    """Lie--Poisson bracket on sl(2,R)* in coordinates ``(d1, d2, d3)``.

    ``{d1, d2} = 2 d3``, ``{d1, d3} = d1``, ``{d3, d2} = d2``.
    """
    d1, d2, d3 = (d.d1, d.d2, d.d3) if hasattr(d, "d1") else np.asarray(d, dtype=float)
    f1, f2, f3 = np.asarray(grad_f, dtype=float)
    g1, g2, g3 = np.asarray(grad_g, dtype=float)
    return float(2 * d3 * (f1 * g2 - f2 * g1) + d1 * (f1 * g3 - f3 * g1)
                 + d2 * (f3 * g2 - f2 * g3))


# ---------------------------------------------------------------------------
# classification table

class AlgebraName(str, enum.Enum):
    """Isomorphism type of so_{lam,alpha}(5) by the signs of ``(lam, alpha)``."""

    SO5 = "so(5)"
    SO32 = "so(3,2)"
    SO14 = "so(1,4)"
    POINCARE = "p(1,3)"
    GALILEAN = "galilean"
    EUCLIDEAN = "e(4)"
    SEMIDIRECT_SO2 = "(so(2) x so(3)) |x Mat_3x2"
    SEMIDIRECT_SO11 = "(so(1,1) x so(3)) |x Mat_3x2"

    def __str__(self):
        return self.value


def classify_algebra(lam: float, alpha: float) -> AlgebraName:
    """Name the algebra for the given parameters.

    ``lam > 0, alpha < 0`` gives a metric with one negative direction and is
    therefore reported as so(1,4); ``lam > 0, alpha = 0`` is e(4) and
    ``lam < 0, alpha = 0`` is the Poincare algebra.
    """
    lam = _finite(lam, "lam")
    alpha = _finite(alpha, "alpha")
    sl, sa = np.sign(lam), np.sign(alpha)
    if sl > 0:
        return {1: AlgebraName.SO5, 0: AlgebraName.EUCLIDEAN, -1: AlgebraName.SO14}[sa]
    if sl < 0:
        return {1: AlgebraName.SO32, 0: AlgebraName.POINCARE, -1: AlgebraName.SO14}[sa]
    return {1: AlgebraName.SEMIDIRECT_SO2, 0: AlgebraName.GALILEAN,
            -1: AlgebraName.SEMIDIRECT_SO11}[sa]
