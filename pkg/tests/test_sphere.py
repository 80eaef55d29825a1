import math

import numpy as np
import pytest

from convexft.fourier import ft_many
from convexft.geometry import Rotation, make_ball, make_box, make_pball, make_polytope_v, rotate, sphere_area
from convexft.sphere import (
    GAUSS_MAP,
    MC,
    SOBOL,
    UNIFORM_ANGLE,
    SphereScheme,
    is_radial,
    l2_average,
    l2_average_surface,
    sample_directions,
)


def test_scheme_validation():
    with pytest.raises(ValueError):
        SphereScheme(3, UNIFORM_ANGLE)
    with pytest.raises(ValueError):
        SphereScheme(2, "grid")
    with pytest.raises(ValueError):
        SphereScheme(2, SOBOL, n=4)
    with pytest.raises(ValueError):
        SphereScheme(1)


def test_uniform_angle_integrates_trig_polynomials():
    dirs, w = sample_directions(SphereScheme(2, UNIFORM_ANGLE, 16))
    assert w.sum() == pytest.approx(2 * math.pi)
    assert np.sum(w * dirs[:, 0] ** 2) == pytest.approx(math.pi)
    assert np.sum(w * dirs[:, 0] ** 4) == pytest.approx(3 * math.pi / 4)


@pytest.mark.parametrize("kind", [SOBOL, MC])
def test_uniform_kinds_are_unit_and_balanced(kind):
    dirs, w = sample_directions(SphereScheme(3, kind, 1 << 12, seed=2))
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert w.sum() == pytest.approx(sphere_area(3))
    assert np.linalg.norm(dirs.mean(axis=0)) < 0.05
    # second moment of a uniform direction is I/d
    assert np.allclose(dirs.T @ dirs / len(dirs), np.eye(3) / 3, atol=0.03)


def test_gauss_map_weights_are_unbiased():
    cube = make_box([0.5, 0.5, 0.5])
    s = SphereScheme.focused(cube, 40.0, 1 << 14, seed=0)
    assert s.kind == GAUSS_MAP
    dirs, w = sample_directions(s)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert w.sum() == pytest.approx(sphere_area(3), rel=0.02)
    # integral of w_3^2 over S^2 is 4 pi / 3
    assert np.sum(w * dirs[:, 2] ** 2) == pytest.approx(4 * math.pi / 3, rel=0.03)


def test_default_scheme_choice():
    assert SphereScheme.default(2, 100.0).n == 4096
    assert SphereScheme.default(2, 1000.0).n == 8000
    assert SphereScheme.default(3, 10.0, body=make_ball(3, 1.0)).kind == SOBOL
    assert SphereScheme.default(3, 10.0, body=make_box([0.5] * 3)).kind == GAUSS_MAP


def test_directions_are_reproducible():
    a = sample_directions(SphereScheme(3, SOBOL, 256, seed=5))[0]
    b = sample_directions(SphereScheme(3, SOBOL, 256, seed=5))[0]
    c = sample_directions(SphereScheme(3, SOBOL, 256, seed=6))[0]
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_ball_average_is_radial():
    b = make_ball(3, 1.0)
    assert is_radial(b)
    assert is_radial(rotate(make_ball(2, 1.0), Rotation.planar(0.2)))
    R = 17.0
    v, se = l2_average(b, R)
    assert se == 0.0
    ref = abs(ft_many(b, [[R, 0, 0]])[0][0]) * math.sqrt(4 * math.pi)
    assert v == pytest.approx(ref, rel=1e-14)
    sobol, sse = l2_average(b, R, SphereScheme(3, SOBOL, 1 << 10))
    assert sobol == pytest.approx(v, rel=1e-12)


def test_average_at_zero():
    b = make_box([0.5, 0.5])
    assert l2_average(b, 0.0)[0] == pytest.approx(math.sqrt(2 * math.pi))
    assert l2_average_surface(b, 0.0)[0] == pytest.approx(4 * math.sqrt(2 * math.pi))
    with pytest.raises(ValueError):
        l2_average(b, -1.0)


def test_average_is_rotation_invariant():
    tri = make_polytope_v([[0, 0], [1, 0], [0, 1]])
    a, se = l2_average(tri, 30.0)
    b, se2 = l2_average(rotate(tri, Rotation.planar(0.9)), 30.0)
    assert abs(a - b) <= 1e-6 * a


def test_average_bounded_by_volume():
    for body in (make_box([0.5, 0.5, 0.5]), make_pball(2, 4.0, 1.0)):
        v, _ = l2_average(body, 10.0)
        assert v <= body.volume * math.sqrt(sphere_area(body.dim))


def test_cube_average_schemes_agree():
    cube = make_box([0.5, 0.5, 0.5])
    R = 40.0
    focused, fse = l2_average(cube, R, SphereScheme.focused(cube, R, 1 << 14))
    plain, pse = l2_average(cube, R, SphereScheme(3, SOBOL, 1 << 17))
    assert abs(focused - plain) <= 4 * math.hypot(fse, pse)


def test_sobol_mean_is_small():
    dirs, _ = sample_directions(SphereScheme(3, SOBOL, 10_000, seed=0))
    assert np.linalg.norm(dirs.mean(axis=0)) <= 0.05
    dirs, _ = sample_directions(SphereScheme(3, MC, 10_000, seed=0))
    assert np.linalg.norm(dirs.mean(axis=0)) <= 3 / math.sqrt(10_000)


def test_square_average_stable_under_doubling():
    sq = make_box([0.5, 0.5])
    a, _ = l2_average(sq, 64.0, SphereScheme(2, SOBOL, 1 << 12))
    b, _ = l2_average(sq, 64.0, SphereScheme(2, SOBOL, 1 << 13))
    assert abs(a - b) <= 0.01 * b


def test_sphere_surface_average():
    for R in (5.0, 33.0):
        v, _ = l2_average_surface(make_ball(3, 1.0), R)
        assert v == pytest.approx(abs(4 * math.pi * math.sin(R) / R) * math.sqrt(4 * math.pi), rel=1e-12)
