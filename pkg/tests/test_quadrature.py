import math

import numpy as np
import pytest

from convexft.errors import QuadratureBudgetExceeded
from convexft.geometry import Rotation, make_ball, make_box, make_ellipsoid, make_pball, make_polytope_v, rotate
from convexft.quadrature import boundary_rule, composite01, gauss_legendre01, simplex_rule, tensor_rule


def test_gauss_legendre_is_exact_for_polynomials():
    x, w = gauss_legendre01(5)
    for k in range(10):
        assert np.sum(w * x**k) == pytest.approx(1 / (k + 1), abs=1e-15)


def test_composite_rule():
    x, w = composite01(7, 4)
    assert len(x) == 28
    assert np.sum(w * np.sin(math.pi * x)) == pytest.approx(2 / math.pi, abs=1e-12)


def test_tensor_rule_integrates_products():
    p, w = tensor_rule([gauss_legendre01(4), gauss_legendre01(3)])
    assert np.sum(w * p[:, 0] ** 3 * p[:, 1] ** 2) == pytest.approx(1 / 12, abs=1e-15)


def test_simplex_rule():
    V = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    p, w = simplex_rule(V, 2, 6)
    assert w.sum() == pytest.approx(1.0)
    # int x y over the triangle = 1/6
    assert np.sum(w * p[:, 0] * p[:, 1]) == pytest.approx(1 / 6, abs=1e-13)
    seg = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    p, w = simplex_rule(seg, 1, 4)
    assert w.sum() == pytest.approx(math.sqrt(3))


BODIES = [
    make_ball(2, 1.3),
    make_ball(3, 0.8),
    make_ellipsoid([1.0, 0.5, 0.3]),
    make_box([0.5, 0.3, 0.2]),
    make_pball(2, 4.0, 1.0),
    make_pball(3, 3.0, 1.0),
    make_polytope_v([[0, 0], [1, 0], [0, 1]]),
    rotate(make_box([0.5, 0.2]), Rotation.planar(0.7)),
]


@pytest.mark.parametrize("body", BODIES, ids=lambda b: type(b).__name__)
def test_rule_closes_and_measures_area(body):
    rule = boundary_rule(body, 0.05, 8)
    # the closed surface has zero vector area
    assert np.abs(rule.normal_weights.sum(axis=0)).max() <= 1e-10
    # divergence theorem for x: int x.n = d |B|
    flux = np.sum(np.einsum("ij,ij->i", rule.points - body.center, rule.normal_weights))
    assert flux == pytest.approx(body.dim * body.volume, rel=1e-9)
    assert np.allclose(np.linalg.norm(rule.normal_weights, axis=1), rule.area_weights)
    # nodes lie on the boundary
    assert np.abs(body.boundary_residual(rule.points)).max() <= 1e-9


def test_ball_area_is_exact():
    rule = boundary_rule(make_ball(3, 2.0), 0.1, 8)
    assert rule.area_weights.sum() == pytest.approx(16 * math.pi, rel=1e-11)


def test_budget_exceeded():
    with pytest.raises(QuadratureBudgetExceeded):
        boundary_rule(make_ball(3, 1.0), 1e-4, 8, max_nodes=10_000)
