"""The cotangent bundle of R^5: group actions, the dual pair of momentum maps, orbit labels.

A cotangent point is ``(q, p)`` with ``q = (q_-1, q_0, q1, q2, q3)`` and
``p`` in the same index order.  The metric is ``eta = diag(alpha lam, lam,
1, 1, 1)``.  Two commuting Hamiltonian actions live on the bundle:

* ``Phi_g(q, p) = (g q, g^-T p)`` for ``g`` preserving ``eta``;
* ``Psi_A(q, p) = (a q + b eta^-1 p, c eta q + d p)`` for ``A`` in GL(2).

Their momentum maps are ``J`` (into L+(5)) and ``I`` (into sl(2)*), the
latter stored as ``d = (d1, d2, d3) = (q.eta q, p.eta^-1 p, q.p)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    DeformationParams,
    LPlusPoint,
    MetricEta,
    bracket_lp,
    classify_algebra,
    cross3,
    sl2_bracket,
)
from .exceptions import DegenerateMetric, InconsistentInput, SingularA, SingularPoint
from .numeric import expm, singular_values

REGULAR_RTOL = 1e-10
GROUP_DEFECT_TOL = 1e-10
SIGNATURE_RTOL = 1e-10
EPS_MATRIX = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _vec5(v, name):
    arr = np.array(v, dtype=float).reshape(5)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


def _eta_diag(params: DeformationParams) -> np.ndarray:
    return np.array([params.alpha * params.lam, params.lam, 1.0, 1.0, 1.0])


def _eta_inv_diag(params: DeformationParams) -> np.ndarray:
    params.require_nondegenerate()
    return 1.0 / _eta_diag(params)


# ---------------------------------------------------------------------------
# value types

@dataclass(frozen=True, eq=False)
class CotangentPoint:
    """A point ``(q, p)`` of T*R^5."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _vec5(self.q, "q"))
        object.__setattr__(self, "p", _vec5(self.p, "p"))

    def __eq__(self, other):
        if not isinstance(other, CotangentPoint):
            return NotImplemented
        return bool(np.array_equal(self.vector(), other.vector()))

    def __repr__(self):
        return f"CotangentPoint(q={self.q.tolist()!r}, p={self.p.tolist()!r})"

    def vector(self) -> np.ndarray:
        """The 10-vector ``(q, p)``."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, v) -> "CotangentPoint":
        v = np.asarray(v, dtype=float).reshape(10)
        return cls(v[:5], v[5:])

    def to_dict(self) -> dict:
        return {"q": self.q.tolist(), "p": self.p.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "CotangentPoint":
        return cls(d["q"], d["p"])

    def regular(self, params: DeformationParams) -> bool:
        """True when ``q`` and ``eta^-1 p`` are linearly independent."""
        return is_regular(self, params)


def as_qp(pt) -> tuple[np.ndarray, np.ndarray]:
    """``(q, p)`` arrays of a :class:`CotangentPoint` or a 10-vector."""
    if isinstance(pt, CotangentPoint):
        return np.array(pt.q), np.array(pt.p)
    v = np.asarray(pt, dtype=float).reshape(10)
    return v[:5].copy(), v[5:].copy()


@dataclass(frozen=True)
class Sl2Moment:
    """Value ``(d1, d2, d3)`` of the sl(2)* momentum map."""

    d1: float
    d2: float
    d3: float

    @property
    def delta(self) -> float:
        """``d1 d2 - d3^2``."""
        return self.d1 * self.d2 - self.d3 ** 2

    @property
    def c(self) -> float:
        return self.delta

    def vector(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3])

    def matrix(self) -> np.ndarray:
        """``I = [[d3, -d1], [d2, -d3]]``."""
        return np.array([[self.d3, -self.d1], [self.d2, -self.d3]])

    def gram(self) -> np.ndarray:
        """``I eps = [[d1, d3], [d3, d2]]``."""
        return self.matrix() @ EPS_MATRIX


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A 5x5 matrix ``g`` with ``g^T eta g = eta``; checked on construction."""

    matrix: np.ndarray
    params: DeformationParams
    defect: float = field(init=False)

    def __post_init__(self):
        g = np.array(self.matrix, dtype=float).reshape(5, 5)
        eta = np.diag(_eta_diag(self.params))
        d = float(np.abs(g.T @ eta @ g - eta).max())
        if not d <= GROUP_DEFECT_TOL:
            raise ValueError(f"matrix does not preserve eta (defect {d:.3e})")
        g.flags.writeable = False
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "defect", d)

    def inverse(self) -> "GroupElement":
        """``g^-1 = eta^-1 g^T eta``."""
        e = _eta_diag(self.params)
        return GroupElement((self.matrix.T * e) / e[:, None], self.params)


def make_group_element(Y, t: float, params: DeformationParams) -> GroupElement:
    """``exp(t Y)`` for ``Y`` with ``eta Y`` antisymmetric."""
    Y = np.asarray(Y, dtype=float).reshape(5, 5)
    EY = np.diag(_eta_diag(params)) @ Y
    scale = max(1.0, float(np.abs(EY).max()))
    if np.abs(EY + EY.T).max() > 1e-12 * scale:
        raise ValueError("eta Y is not antisymmetric")
    return GroupElement(expm(t * Y), params)


def random_algebra_element(rng: np.random.Generator, params: DeformationParams) -> np.ndarray:
    """``Y = eta^-1 A`` with ``A`` antisymmetric, upper entries uniform in [-1, 1]."""
    A = np.zeros((5, 5))
    A[np.triu_indices(5, 1)] = rng.uniform(-1.0, 1.0, 10)
    A = A - A.T
    return _eta_inv_diag(params)[:, None] * A


# ---------------------------------------------------------------------------
# momentum maps

def momentum_J(pt, params: DeformationParams) -> LPlusPoint:
    """``(a, x, y, mu) = (alpha q_-1 p_0 - q_0 p_-1, alpha lam q_-1 p - p_-1 q, lam q_0 p - p_0 q, q x p)``."""
    params.require_nondegenerate()
    q, p = as_qp(pt)
    lam, alpha = params.lam, params.alpha
    a = alpha * q[0] * p[1] - q[1] * p[0]
    x = alpha * lam * q[0] * p[2:] - p[0] * q[2:]
    y = lam * q[1] * p[2:] - p[1] * q[2:]
    return LPlusPoint(a, x, y, cross3(q[2:], p[2:]))


def J_matrix(pt, params: DeformationParams) -> np.ndarray:
    """Antisymmetric matrix ``q (eta^-1 p)^T - (eta^-1 p) q^T``."""
    q, p = as_qp(pt)
    r = _eta_inv_diag(params) * p
    return np.outer(q, r) - np.outer(r, q)


def momentum_I(pt, params: DeformationParams) -> Sl2Moment:
    """``(d1, d2, d3) = (q.eta q, p.eta^-1 p, q.p)``."""
    q, p = as_qp(pt)
    einv = _eta_inv_diag(params)
    return Sl2Moment(float(q @ (_eta_diag(params) * q)), float(p @ (einv * p)), float(q @ p))


def plucker_residual(jpt, params: DeformationParams) -> float:
    """Max of ``|lam a mu - x cross y|``, ``|mu.x|``, ``|mu.y|``."""
    a, x, y, mu = jpt.a, jpt.x, jpt.y, jpt.mu
    r = params.lam * a * mu - cross3(x, y)
    return float(max(np.abs(r).max(), abs(mu @ x), abs(mu @ y)))


def delta_identity_residual(pt, params: DeformationParams) -> float:
    """Relative gap between ``d1 d2 - d3^2`` and ``c1(J(pt)) / (alpha lam)``."""
    from .dynamics import casimir_c1
    d = momentum_I(pt, params)
    rhs = casimir_c1(momentum_J(pt, params), params) / (params.alpha * params.lam)
    scale = max(abs(d.d1 * d.d2), d.d3 ** 2, 1e-300)
    return abs(d.delta - rhs) / scale


# ---------------------------------------------------------------------------
# group actions

def action_Phi(g, pt) -> CotangentPoint:
    """``(g q, g^-T p)``."""
    G = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    q, p = as_qp(pt)
    return CotangentPoint(G @ q, np.linalg.solve(G.T, p))


def action_Psi(A, pt, params: DeformationParams) -> CotangentPoint:
    """``(a q + b eta^-1 p, c eta q + d p)`` for ``A = [[a, b], [c, d]]``."""
    A = np.asarray(A, dtype=float).reshape(2, 2)
    if A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] == 0.0:
        raise SingularA("det A = 0")
    einv = _eta_inv_diag(params)
    q, p = as_qp(pt)
    return CotangentPoint(A[0, 0] * q + A[0, 1] * einv * p,
                          A[1, 0] * q / einv + A[1, 1] * p)


# ---------------------------------------------------------------------------
# canonical bracket and the dual pair

def _bilinear_forms(params: DeformationParams) -> np.ndarray:
    """``B[k]`` with ``J_k = q^T B[k] p`` in the storage order of L+(5)."""
    lam, alpha = params.lam, params.alpha
    B = np.zeros((10, 5, 5))
    B[0, 0, 1], B[0, 1, 0] = alpha, -1.0
    for i in range(3):
        B[1 + i, 0, 2 + i], B[1 + i, 2 + i, 0] = alpha * lam, -1.0
        B[4 + i, 1, 2 + i], B[4 + i, 2 + i, 1] = lam, -1.0
    # mu = q x p
    for k, (i, j) in enumerate(((1, 2), (2, 0), (0, 1))):
        B[7 + k, 2 + i, 2 + j], B[7 + k, 2 + j, 2 + i] = 1.0, -1.0
    return B


def J_gradients(pt, params: DeformationParams) -> np.ndarray:
    """Rows ``(dJ_k/dq, dJ_k/dp)`` for the ten components, shape (10, 10)."""
    q, p = as_qp(pt)
    B = _bilinear_forms(params)
    return np.concatenate([B @ p, np.einsum("kij,i->kj", B, q)], axis=1)


def I_gradients(pt, params: DeformationParams) -> np.ndarray:
    """Rows ``(dd_k/dq, dd_k/dp)`` for ``k = 1, 2, 3``, shape (3, 10)."""
    q, p = as_qp(pt)
    z = np.zeros(5)
    return np.array([
        np.concatenate([2 * _eta_diag(params) * q, z]),
        np.concatenate([z, 2 * _eta_inv_diag(params) * p]),
        np.concatenate([p, q]),
    ])


def canonical_bracket(grad_f, grad_g) -> float:
    """``df/dq . dg/dp - df/dp . dg/dq`` from 10-vectors ``(d/dq, d/dp)``."""
    f = np.asarray(grad_f, dtype=float)
    g = np.asarray(grad_g, dtype=float)
    return float(f[:5] @ g[5:] - f[5:] @ g[:5])


def _bracket_matrix(F, G) -> np.ndarray:
    F, G = np.asarray(F), np.asarray(G)
    return F[:, :5] @ G[:, 5:].T - F[:, 5:] @ G[:, :5].T


def dual_pair_residual(pt, params: DeformationParams) -> float:
    """Largest ``|{d_k, J_j}|`` over the 3 x 10 canonical brackets."""
    return float(np.abs(_bracket_matrix(I_gradients(pt, params), J_gradients(pt, params))).max())


def J_poisson_residual(pt, params: DeformationParams) -> float:
    """Largest gap between ``{J_i, J_j}`` and the L+(5) bracket of coordinates at ``J(pt)``."""
    G = J_gradients(pt, params)
    can = _bracket_matrix(G, G)
    jp = momentum_J(pt, params)
    eye = np.eye(10)
    lp = np.array([[bracket_lp(eye[i], eye[j], jp, params) for j in range(10)]
                   for i in range(10)])
    return float(np.abs(can - lp).max())


def I_poisson_residual(pt, params: DeformationParams) -> float:
    """Largest gap between ``{d_i, d_j}`` and twice the sl(2)* bracket at ``I(pt)``.

    The canonical brackets are ``{d1, d2} = 4 d3``, ``{d1, d3} = 2 d1``,
    ``{d3, d2} = 2 d2``, i.e. the sl(2)* bracket scaled by 2.
    """
    G = I_gradients(pt, params)
    can = _bracket_matrix(G, G)
    d = momentum_I(pt, params)
    eye = np.eye(3)
    sl = np.array([[2 * sl2_bracket(eye[i], eye[j], d) for j in range(3)] for i in range(3)])
    return float(np.abs(can - sl).max())


# ---------------------------------------------------------------------------
# regularity, signatures and orbits

def _span_matrix(pt, params):
    q, p = as_qp(pt)
    return np.column_stack([q, _eta_inv_diag(params) * p])


def is_regular(pt, params: DeformationParams, rtol: float = REGULAR_RTOL) -> bool:
    """``q`` and ``eta^-1 p`` independent: smallest singular value above ``rtol`` times the largest."""
    s = singular_values(_span_matrix(pt, params))
    return bool(s[0] > 0.0 and s[-1] > rtol * s[0])


SIGNATURES = ("++", "+-", "--", "+0", "-0", "00")


def _sign_pattern(eigs, thresh) -> str:
    signs = ["+" if e > thresh else "-" if e < -thresh else "0" for e in eigs]
    order = {"+": 0, "-": 1, "0": 2}
    return "".join(sorted(signs, key=order.__getitem__))


def _gram_scale(pt, params) -> float:
    """``|eta| |[q, eta^-1 p]|^2``, an upper bound for the Gram norm free of cancellation."""
    return float(np.abs(_eta_diag(params)).max() * singular_values(_span_matrix(pt, params))[0] ** 2)


def signature_of_V(pt, params: DeformationParams) -> str:
    """Signature of ``eta`` restricted to ``span{q, eta^-1 p}``.

    The Gram matrix of the restriction in the basis ``(q, eta^-1 p)`` is
    ``[[d1, d3], [d3, d2]]``.  Eigenvalues below ``1e-10`` times
    ``|eta| |[q, eta^-1 p]|^2`` count as zero; that scale bounds the Gram
    norm and stays meaningful when the plane is null and the Gram vanishes.
    """
    if not is_regular(pt, params):
        raise SingularPoint("q and eta^-1 p are linearly dependent")
    eigs = np.linalg.eigvalsh(momentum_I(pt, params).gram())
    return _sign_pattern(eigs, SIGNATURE_RTOL * _gram_scale(pt, params))


@dataclass(frozen=True)
class OrbitLabel:
    """A coadjoint orbit together with the Grassmannian it is isomorphic to."""

    signature: str
    grassmannian: str
    orbit: str
    dimension: int
    anti_de_sitter_only: bool = False

    def __str__(self):
        return self.grassmannian


SINGULAR_LABEL = "J^-1(0) stratum"

_ALLOWED = {
    0: {"++"},
    1: {"++", "+-", "+0"},
    2: set(SIGNATURES),
}
_GROUP_NAMES = {0: "SO(5)", 1: "SO(1,4)", 2: "SO(2,3)"}


def group_name(lam: float, alpha: float) -> str:
    """Isometry group of ``eta`` for ``alpha lam != 0``."""
    if alpha * lam == 0.0:
        raise DegenerateMetric("alpha*lambda = 0")
    return _GROUP_NAMES[MetricEta(lam, alpha).negative_directions()]


def classify_orbit(s: float, sig: str, lam: float, alpha: float) -> OrbitLabel:
    """Orbit through a regular point with level ``s = delta`` and signature ``sig``.

    Raises
    ------
    InconsistentInput
        If ``sig`` is not a signature, contradicts the sign of ``s``, or is
        not realised by the isometry group of ``eta``.
    DegenerateMetric
        If ``alpha lam = 0``.
    """
    if sig not in SIGNATURES:
        raise InconsistentInput(f"unknown signature {sig!r}")
    neg = MetricEta(lam, alpha).negative_directions() if alpha * lam != 0.0 else None
    if neg is None:
        raise DegenerateMetric("alpha*lambda = 0")
    expected = "+-" if s < 0 else ("++", "--") if s > 0 else ("+0", "-0", "00")
    if sig not in expected:
        raise InconsistentInput(f"signature ({sig}) contradicts s = {s!r}")
    if sig not in _ALLOWED[neg]:
        raise InconsistentInput(f"signature ({sig}) does not occur for {_GROUP_NAMES[neg]}")
    if sig == "00":
        return OrbitLabel(sig, "G_+^{00}(2,5)", "J(I^-1(0))", 4, anti_de_sitter_only=True)
    level = "0" if s == 0 else "s"
    return OrbitLabel(sig, f"G_+^{{{sig}}}(2,5)", f"Omega_{level}^{{{sig}}}", 6)


def orbit_report(pt, params: DeformationParams) -> dict:
    """JSON-ready ``{algebra, group, regular, s, signature, orbit_label}`` for a cotangent point."""
    algebra = classify_algebra(params.lam, params.alpha)
    out = {"algebra": str(algebra), "group": group_name(params.lam, params.alpha)}
    if not is_regular(pt, params):
        out.update(regular=False, s=0.0, signature=None, orbit_label=SINGULAR_LABEL)
        return out
    d = momentum_I(pt, params)
    sig = signature_of_V(pt, params)
    s = d.delta
    if "0" in sig and abs(s) <= SIGNATURE_RTOL * _gram_scale(pt, params) ** 2:
        s_eff = 0.0
    else:
        s_eff = s
    label = classify_orbit(s_eff, sig, params.lam, params.alpha)
    out.update(regular=True, s=s, signature=f"({sig})", orbit_label=label.grassmannian,
               orbit=label.orbit, dimension=label.dimension,
               anti_de_sitter_only=label.anti_de_sitter_only)
    return out


def random_cotangent_point(rng: np.random.Generator, scale: float = 1.0) -> CotangentPoint:
    """Entries uniform in ``[-scale, scale]``."""
    return CotangentPoint(rng.uniform(-scale, scale, 5), rng.uniform(-scale, scale, 5))


__all__ = [
    "CotangentPoint", "GroupElement", "OrbitLabel", "SIGNATURES", "SINGULAR_LABEL",
    "Sl2Moment", "action_Phi", "action_Psi", "as_qp", "canonical_bracket", "classify_orbit",
    "delta_identity_residual", "dual_pair_residual", "group_name", "I_gradients",
    "I_poisson_residual", "is_regular", "J_gradients", "J_matrix", "J_poisson_residual",
    "make_group_element", "momentum_I", "momentum_J", "orbit_report", "plucker_residual",
    "random_algebra_element", "random_cotangent_point", "signature_of_V",
]
