import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexft.errors import (
    BodySpecError,
    DegeneratePatch,
    EmptyInterior,
    NonSmoothPoint,
    UnboundedBody,
)
from convexft.geometry import (
    Rotation,
    check_c32,
    check_secant_property,
    cone_patch,
    cube_sphere_cells,
    decompose_boundary,
    facet_patch,
    make_ball,
    make_box,
    make_ellipsoid,
    make_pball,
    make_polytope_h,
    make_polytope_v,
    normal_at,
    parse_body,
    random_rotation,
    read_polytope_file,
    rotate,
    sphere_family_rotation,
    support,
)
from convexft.rng import substream


def all_bodies():
    return [
        make_ball(2, 1.0),
        make_ball(3, 0.7, [0.1, -0.2, 0.3]),
        make_ellipsoid([1.0, 0.5, 0.3]),
        make_ellipsoid([1.2, 0.4], [0.3, 0.1]),
        make_box([0.5, 0.5]),
        make_box([0.5, 0.3, 0.2]),
        make_pball(2, 4.0, 1.0),
        make_pball(3, 3.0, 1.0),
        make_pball(3, 1.0, 1.0),
        make_polytope_v([[0, 0], [1, 0], [0, 1]]),
        rotate(make_box([0.5, 0.2]), Rotation.planar(0.4)),
    ]


def test_ball_support_and_volume():
    b = make_ball(3, 2.0, [1.0, 0.0, 0.0])
    assert support(b, np.array([1.0, 0, 0])) == pytest.approx(3.0)
    assert support(b, np.array([-2.0, 0, 0])) == pytest.approx(2.0)
    assert b.volume == pytest.approx(4 / 3 * math.pi * 8)
    assert b.surface_area == pytest.approx(16 * math.pi)


def test_box_support():
    b = make_box([0.5, 0.25])
    assert support(b, np.array([1.0, 1.0])) == pytest.approx(0.75)
    assert b.volume == pytest.approx(0.5)
    assert b.surface_area == pytest.approx(3.0)


@pytest.mark.parametrize(
    "d,p,expected",
    [(2, 2.0, math.pi), (2, 1.0, 2.0), (3, 1.0, 4 / 3), (2, 4.0, 3.7081493546027438)],
)
def test_pball_volume(d, p, expected):
    assert make_pball(d, p, 1.0).volume == pytest.approx(expected, rel=1e-13)


def test_ellipsoid_volume_and_area():
    e = make_ellipsoid([1.0, 0.5, 0.3])
    assert e.volume == pytest.approx(4 / 3 * math.pi * 0.15)
    # Knud Thomsen's approximation is good to about 1 percent
    p = 1.6075
    a, b, c = 1.0, 0.5, 0.3
    approx = 4 * math.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3) ** (1 / p)
    assert e.surface_area == pytest.approx(approx, rel=0.012)


def test_polytope_face_lattice_of_cube():
    cube = make_box([1.0, 1.0, 1.0]).as_polytope()
    assert len(cube.vertices) == 8
    assert len(cube.facets) == 6
    assert len(cube.faces_of_dim(1)) == 12
    assert cube.volume == pytest.approx(8.0)
    assert cube.surface_area == pytest.approx(24.0)


def test_triangle_from_vertices():
    t = make_polytope_v([[0, 0], [1, 0], [0, 1]])
    assert t.volume == pytest.approx(0.5)
    assert t.surface_area == pytest.approx(2 + math.sqrt(2))
    assert t.inradius == pytest.approx(1 - 1 / math.sqrt(2))


def test_redundant_facets_are_dropped():
    p = make_polytope_h([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1]], [1, 1, 1, 1, 5])
    assert len(p.normals_) == 4
    assert p.volume == pytest.approx(4.0)


def test_polytope_errors():
    with pytest.raises(EmptyInterior):
        make_polytope_h([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, -1, 1, 1])
    with pytest.raises(UnboundedBody):
        make_polytope_h([[1, 0], [0, 1], [0, -1]], [1, 1, 1])
    with pytest.raises(EmptyInterior):
        make_polytope_h([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, -2, 1, 1])


def test_body_errors():
    with pytest.raises(BodySpecError):
        make_ball(1, 1.0)
    with pytest.raises(BodySpecError):
        make_ball(2, 0.0)
    with pytest.raises(BodySpecError):
        make_pball(2, 0.5, 1.0)
    with pytest.raises(BodySpecError):
        make_box([0.5, -1.0])


def test_parse_body_language(tmp_path):
    assert parse_body("ball:d=2,r=1").volume == pytest.approx(math.pi)
    box = parse_body("box:d=3,h=0.5,0.5,0.5")
    assert box.volume == pytest.approx(1.0)
    assert parse_body("pball:d=2,p=4,r=1").p == 4.0
    assert parse_body("ellipsoid:d=2,a=1,0.5").volume == pytest.approx(math.pi / 2)
    f = tmp_path / "tri.txt"
    f.write_text("# right triangle\n0 -1 0\n-1 0 0\n1 1 1  # hypotenuse\n")
    assert parse_body(f"poly:file={f}").volume == pytest.approx(0.5)
    assert read_polytope_file(f).volume == pytest.approx(0.5)


@pytest.mark.parametrize(
    "spec",
    ["ball:d=1,r=1", "ball:d=2.5", "ball:r=1", "cone:d=2", "box:d=2,h=1,2,3", "ball:d=2,r=x", "poly:"],
)
def test_parse_body_rejects(spec):
    with pytest.raises(BodySpecError):
        parse_body(spec)


def test_parse_error_names_rule():
    with pytest.raises(BodySpecError, match="integer >= 2"):
        parse_body("ball:d=1")


@pytest.mark.parametrize("body", all_bodies(), ids=lambda b: type(b).__name__)
def test_support_is_positively_homogeneous_and_subadditive(body):
    rng = substream(0, "test", "support")
    u = rng.normal(size=(50, body.dim))
    v = rng.normal(size=(50, body.dim))
    assert np.allclose(body.support(3.0 * u), 3.0 * body.support(u))
    assert np.all(body.support(u + v) <= body.support(u) + body.support(v) + 1e-12)


@pytest.mark.parametrize("body", all_bodies(), ids=lambda b: type(b).__name__)
def test_support_matches_contained_points(body):
    rng = substream(1, "test", "contain")
    lo, hi = body.bounding_box()
    x = lo + (hi - lo) * rng.random((4000, body.dim))
    inside = x[body.contains(x)]
    u = rng.normal(size=(20, body.dim))
    assert np.all(inside @ u.T <= body.support(u)[None, :] + 1e-12)


@pytest.mark.parametrize("body", all_bodies(), ids=lambda b: type(b).__name__)
def test_decomposition_satisfies_secant_property(body):
    patches = decompose_boundary(body)
    assert patches
    worst = max(check_secant_property(p, 2000) for p in patches)
    assert worst <= 1 / math.sqrt(2) - 1e-6
    assert all(p.lipschitz < 1 for p in patches)


def test_cube_sphere_cover():
    cells2 = cube_sphere_cells(2)
    cells3 = cube_sphere_cells(3)
    assert len(cells2) == 8
    assert len(cells3) == 96
    assert max(c.half_aperture for c in cells3) <= math.pi / 8 + 1e-12
    u = substream(0, "test", "cover").normal(size=(2000, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    covered = np.zeros(len(u), bool)
    for c in cells3:
        covered |= c.contains_direction(u)
    assert covered.all()


def test_invalid_half_circle_patch_fails_secant():
    patch = cone_patch(make_ball(2, 1.0), [0.0, 1.0], math.pi / 2 - 1e-9)
    assert check_secant_property(patch, 10_000) > 1 / math.sqrt(2)


def test_degenerate_patch():
    patch = cone_patch(make_ball(2, 1.0), [0.0, 1.0], 0.0)
    with pytest.raises(DegeneratePatch):
        check_secant_property(patch, 10)


def test_c32_sphere_and_flat_facet():
    b = make_ball(3, 1.0)
    assert max(check_c32(b, p, 500) for p in decompose_boundary(b)) <= 1.05
    cube = make_box([0.5, 0.5, 0.5])
    for p in decompose_boundary(cube):
        assert check_c32(cube, p, 200) <= 1e-12


def test_c32_blows_up_across_cube_edge():
    cube = make_box([0.5, 0.5, 0.5])
    poly = cube.as_polytope()
    f0 = poly.facets[0]
    f1 = next(f for f in poly.facets if len(f.key & f0.key) == 2)
    patch = facet_patch(cube, [f0, f1])
    assert check_c32(cube, patch, 2000, scale=1e-4) > 10


def test_normal_at():
    assert np.allclose(normal_at(make_ball(2, 2.0), np.array([0.0, 2.0])), [0, 1])
    e = make_ellipsoid([2.0, 1.0])
    assert np.allclose(normal_at(e, np.array([2.0, 0.0])), [1, 0])
    box = make_box([0.5, 0.5])
    assert np.allclose(normal_at(box, np.array([0.5, 0.1])), [1, 0])
    with pytest.raises(NonSmoothPoint):
        normal_at(box, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        normal_at(box, np.array([0.1, 0.1]))


@given(st.floats(0, 2 * math.pi), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_rotation_preserves_volume_and_rotates_support(angle, u1, u2):
    rot = Rotation.planar(angle)
    for body in (make_box([0.5, 0.2]), make_polytope_v([[0, 0], [1, 0], [0, 1]]), make_pball(2, 3.0, 1.0)):
        rb = rotate(body, rot)
        assert rb.volume == pytest.approx(body.volume, rel=1e-12)
        u = np.array([u1, u2])
        assert rb.support(u) == pytest.approx(body.support(rot.matrix.T @ u), abs=1e-12)


def test_identity_rotation_returns_same_body():
    b = make_box([0.5, 0.5])
    assert rotate(b, Rotation.identity(2)) is b


def test_rotation_validation():
    with pytest.raises(ValueError):
        Rotation(np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        Rotation(np.diag([1.0, -1.0]))


def test_random_rotations_are_orthogonal():
    rng = substream(0, "test", "rot")
    for d in (2, 3, 4):
        m = random_rotation(d, rng).matrix
        assert np.allclose(m.T @ m, np.eye(d), atol=1e-12)
        assert np.linalg.det(m) == pytest.approx(1.0)


def test_sphere_family_rotation_maps_last_axis():
    w = np.array([0.3, -0.4, 0.5])
    w /= np.linalg.norm(w)
    m = sphere_family_rotation(w).matrix
    assert np.allclose(m @ np.array([0, 0, 1.0]), w)
    assert np.allclose(sphere_family_rotation(np.array([0, 0, -1.0])).matrix @ [0, 0, 1.0], [0, 0, -1])


def test_line_interval_closed_forms():
    lo, hi = make_ball(2, 1.0).line_interval([0.0, 0.5], [1.0, 0.0])
    assert lo[0] == pytest.approx(-math.sqrt(0.75))
    assert hi[0] == pytest.approx(math.sqrt(0.75))
    lo, hi = make_box([0.5, 0.5]).line_interval([2.0, 0.0], [0.0, 1.0])
    assert np.isnan(lo[0]) and np.isnan(hi[0])
    lo, hi = make_pball(2, 4.0, 1.0).line_interval([0.0, 0.5], [1.0, 0.0])
    assert hi[0] == pytest.approx((1 - 0.5**4) ** 0.25, abs=1e-12)


def test_cross_polytope_support():
    w = np.array([1.0, 1.0]) / math.sqrt(2)
    assert support(make_pball(2, 1.0, 1.0), w) == pytest.approx(1 / math.sqrt(2))


def test_rotated_square_support():
    sq = rotate(make_box([0.5, 0.5]), Rotation.planar(math.pi / 4))
    assert support(sq, np.array([1.0, 0.0])) == pytest.approx(math.sqrt(2) / 2)


def test_disk_cover_and_arc_secant():
    patches = decompose_boundary(make_ball(2, 1.0))
    assert len(patches) >= 8
    assert all(p.half_aperture <= math.pi / 8 + 1e-12 for p in patches)
    assert all(p.lipschitz <= math.tan(math.pi / 8) + 1e-12 for p in patches)
    arc = cone_patch(make_ball(2, 1.0), [0.0, 1.0], math.pi / 8)
    assert check_secant_property(arc, 10_000) <= math.sin(math.pi / 8) + 1e-9
