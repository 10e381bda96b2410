"""The deformed algebra, its Lie--Poisson bracket and the so(5) realisation."""
import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deformed_so5.algebra import (
    COORD_NAMES,
    AlgebraName,
    DeformationParams,
    DeformedAlgebraElement,
    LPlusPoint,
    MetricEta,
    bracket_lp,
    classify_algebra,
    commutator_structure_constants,
    element_from_gradient,
    iota_inverse,
    iota_to_so5,
    jacobi_residual,
    pairing,
    pencil_jacobi_residual,
    poisson_tensor,
    sl2_bracket,
    so5_pairing,
    structure_constants,
    to_eta_form,
)
from deformed_so5.exceptions import DegenerateMetric
from deformed_so5.lift import Sl2Moment

finite = st.floats(-2.0, 2.0, allow_nan=False)
E = np.eye(10)
IDX = {n: i for i, n in enumerate(COORD_NAMES)}


def coord(name):
    return E[IDX[name]]


def trace_oracle(K, X):
    return sum(K[i, j] * X[j, i] for i in range(5) for j in range(5))


# parameters and points

def test_params_reject_nonfinite():
    with pytest.raises(ValueError):
        DeformationParams(float("nan"), 1.0)


def test_params_dict_round_trip():
    p = DeformationParams(0.5, -2.0, 0.25, 1.5, -0.75)
    assert DeformationParams.from_dict(p.to_dict()) == p


def test_require_nondegenerate():
    with pytest.raises(DegenerateMetric):
        DeformationParams(0.0, 1.0).require_nondegenerate()


def test_point_kappa_round_trip(rng):
    pt = LPlusPoint.from_vector(rng.normal(size=10))
    assert LPlusPoint.from_kappa(pt.kappa()) == pt
    assert np.allclose(np.tril(pt.kappa()), 0.0)


def test_point_immutable():
    pt = LPlusPoint.zero()
    with pytest.raises(ValueError):
        pt.x[0] = 1.0


# classification table

@pytest.mark.parametrize("lam, alpha, name", [
    (1.0, 1.0, AlgebraName.SO5),
    (-1.0, 0.0, AlgebraName.POINCARE),
    (0.0, 0.0, AlgebraName.GALILEAN),
    (-1.0, 1.0, AlgebraName.SO32),
    (-1.0, -1.0, AlgebraName.SO14),
    (1.0, 0.0, AlgebraName.EUCLIDEAN),
    (0.0, 1.0, AlgebraName.SEMIDIRECT_SO2),
    (0.0, -1.0, AlgebraName.SEMIDIRECT_SO11),
])
def test_classify_algebra(lam, alpha, name):
    assert classify_algebra(lam, alpha) is name


def test_classification_matches_metric_signature():
    neg = {AlgebraName.SO5: 0, AlgebraName.SO14: 1, AlgebraName.SO32: 2}
    for lam, alpha in itertools.product((-1.5, 0.7), (-0.3, 2.0)):
        assert MetricEta(lam, alpha).negative_directions() == neg[classify_algebra(lam, alpha)]


# pairing

def test_pairing_zero(rng):
    assert pairing(np.zeros((5, 5)), LPlusPoint.from_vector(rng.normal(size=10))) == 0.0


def test_pairing_a_b():
    params = DeformationParams(1.0, 2.0)
    K = LPlusPoint.from_vector(E[0])
    X = DeformedAlgebraElement(1.0, np.zeros(3), np.zeros(3), np.zeros(3)).matrix(params)
    assert pairing(X, K) == trace_oracle(K.kappa(), X) == -1.0


@given(st.integers(0, 2 ** 31), finite, finite)
def test_pairing_matches_trace_and_is_bilinear(seed, lam, alpha):
    rng = np.random.default_rng(seed)
    params = DeformationParams(lam, alpha)
    K = LPlusPoint.from_vector(rng.normal(size=10))
    X = DeformedAlgebraElement.from_vector(rng.normal(size=10)).matrix(params)
    assert abs(pairing(X, K) - trace_oracle(K.kappa(), X)) <= 1e-12
    assert abs(pairing(2 * X, K) - 2 * pairing(X, K)) <= 1e-12


@given(st.integers(0, 2 ** 31), finite, finite)
def test_element_from_gradient_represents_linear_function(seed, lam, alpha):
    rng = np.random.default_rng(seed)
    g, v = rng.normal(size=(2, 10))
    X = element_from_gradient(g).matrix(DeformationParams(lam, alpha))
    assert abs(pairing(X, LPlusPoint.from_vector(v)) - g @ v) <= 1e-12


# bracket

@pytest.mark.parametrize("lam, alpha", [(1.0, 1.0), (-0.7, 2.3), (0.0, 0.0), (1.9, -0.4)])
def test_bracket_coordinate_values(rng, lam, alpha):
    params = DeformationParams(lam, alpha)
    pt = LPlusPoint.from_vector(rng.normal(size=10))
    v = pt.vector()
    b = lambda f, g: bracket_lp(coord(f), coord(g), pt, params)  # noqa: E731
    assert b("x1", "y1") == pytest.approx(lam * pt.a, abs=1e-14)
    for f, g, k in (("mu1", "mu2", "mu3"), ("mu2", "mu3", "mu1"), ("mu3", "mu1", "mu2")):
        assert b(f, g) == pytest.approx(v[IDX[k]], abs=1e-14)
    assert b("a", "x1") == pytest.approx(alpha * pt.y[0], abs=1e-14)
    assert b("a", "y1") == pytest.approx(-pt.x[0], abs=1e-14)


@given(st.integers(0, 2 ** 31), finite, finite)
def test_bracket_antisymmetric(seed, lam, alpha):
    rng = np.random.default_rng(seed)
    params = DeformationParams(lam, alpha)
    f, g, v = rng.normal(size=(3, 10))
    assert bracket_lp(f, f, v, params) == 0.0
    assert abs(bracket_lp(f, g, v, params) + bracket_lp(g, f, v, params)) <= 1e-13


def test_poisson_tensor_matches_bracket(rng):
    params = DeformationParams(0.8, -1.3)
    f, g, v = rng.normal(size=(3, 10))
    assert abs(f @ poisson_tensor(v, params) @ g - bracket_lp(f, g, v, params)) <= 1e-12


# structure constants and Jacobi

def test_structure_constants_basic():
    c = structure_constants(DeformationParams(0.6, 1.7))
    assert c[IDX["mu1"], IDX["mu2"], IDX["mu3"]] == 1.0
    assert np.all(c[np.arange(10), np.arange(10)] == 0.0)
    assert np.allclose(c, -c.transpose(1, 0, 2))


@given(finite, finite)
def test_structure_constants_match_matrix_commutators(lam, alpha):
    params = DeformationParams(lam, alpha)
    assert np.abs(structure_constants(params) - commutator_structure_constants(params)).max() <= 1e-12


@pytest.mark.parametrize("lam, alpha", [(1.0, 1.0), (0.0, 0.0), (-1.0, 1.0), (1.0, -1.0), (0.0, 1.0)])
def test_jacobi_grid(lam, alpha):
    assert jacobi_residual(DeformationParams(lam, alpha)) <= 1e-12


def test_pencil_examples():
    assert pencil_jacobi_residual(2.0, 1.0, 1.0, 1.0, 1.0) <= 1e-12
    for lam, alpha in ((0.3, -1.2), (1.5, 0.4)):
        assert pencil_jacobi_residual(lam, 0.9, alpha, 1.0, 0.0) == jacobi_residual(
            DeformationParams(lam, alpha))


def test_pencil_mixed_alpha_is_reported():
    r = pencil_jacobi_residual(2.0, 1.0, 1.0, 1.0, 1.0, beta=3.0)
    assert np.isfinite(r) and r >= 0.0


# the so(5) realisation

def test_iota_zero():
    assert np.all(iota_to_so5(LPlusPoint.zero(), DeformationParams(1.0, 1.0)).entries == 0.0)


@given(st.integers(0, 2 ** 31), finite.filter(lambda v: abs(v) > 0.1),
       finite.filter(lambda v: abs(v) > 0.1))
def test_iota_round_trip(seed, lam, alpha):
    params = DeformationParams(lam, alpha)
    pt = LPlusPoint.from_vector(np.random.default_rng(seed).normal(size=10))
    back = iota_inverse(iota_to_so5(pt, params), params)
    assert np.abs(back.vector() - pt.vector()).max() <= 1e-12 * max(1.0, 1 / abs(alpha * lam))


def test_iota_intertwines_pairing(rng):
    worst = 0.0
    for _ in range(100):
        lam, alpha = rng.choice([-1, 1], 2) * rng.uniform(0.3, 2.0, 2)
        params = DeformationParams(lam, alpha)
        pt = LPlusPoint.from_vector(rng.normal(size=10))
        X = DeformedAlgebraElement.from_vector(rng.normal(size=10)).matrix(params)
        lhs = so5_pairing(to_eta_form(X, params), iota_to_so5(pt, params), params)
        worst = max(worst, abs(lhs - trace_oracle(pt.kappa(), X)))
    assert worst <= 1e-12


def test_iota_degenerate_raises():
    with pytest.raises(DegenerateMetric):
        iota_to_so5(LPlusPoint.zero(), DeformationParams(0.0, 1.0))


# sl(2, R)

def test_sl2_structure():
    d = Sl2Moment(0.3, -1.1, 0.7)
    e = np.eye(3)
    assert sl2_bracket(e[0], e[1], d) == pytest.approx(2 * d.d3)
    assert sl2_bracket(e[0], e[2], d) == pytest.approx(d.d1)
    assert sl2_bracket(e[2], e[1], d) == pytest.approx(d.d2)


@given(st.integers(0, 2 ** 31))
def test_sl2_casimir(seed):
    rng = np.random.default_rng(seed)
    d1, d2, d3 = rng.normal(size=3)
    grad_c = np.array([d2, d1, -2 * d3])
    g = rng.normal(size=3)
    assert abs(sl2_bracket(grad_c, g, (d1, d2, d3))) <= 1e-13
    assert sl2_bracket(g, g, (d1, d2, d3)) == 0.0
