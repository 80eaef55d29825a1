"""Convex bodies in R^d and the geometry of their boundaries.

Bodies are immutable.  Every variant knows its support function, a
membership test, the Minkowski gauge about an interior reference point,
outward normals, line intersections (used by the lattice scanner) and its
exact volume.  The boundary is cut into patches that are Lipschitz graphs
with constant < 1 by pulling back a fixed cube-sphere cover of the unit
sphere through the Gauss map.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import itertools
import math
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaln

from convexft.errors import (
    BodySpecError,
    DegeneratePatch,
    EmptyInterior,
    NonSmoothPoint,
    UnboundedBody,
)
from convexft.rng import substream

BOUNDARY_TOL = 1e-9
RIDGE_TOL = 1e-9
_VERTEX_TOL = 1e-9


def sphere_area(d):
    """Surface measure of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d, r=1.0):
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _unit(v, axis=-1):
    return v / np.linalg.norm(v, axis=axis, keepdims=True)


def orthonormal_complement(a):
    """Rows spanning the hyperplane orthogonal to the unit vector ``a``."""
    a = np.asarray(a, dtype=float)
    d = a.size
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(d)]))
    basis = q[:, 1:d].T
    return basis


def _line_interval_generic(gauge, p0, v, reach):
    """Parameters s with gauge(p0 + s v) <= 1, for a convex gauge.

    Ternary search for the minimum along each line, then bisection on both
    sides.  ``reach`` bounds |s| for any hit.
    """
    p0 = np.atleast_2d(p0)
    v = np.atleast_2d(v)
    n = max(len(p0), len(v))
    p0 = np.broadcast_to(p0, (n, p0.shape[1]))
    v = np.broadcast_to(v, (n, v.shape[1]))
    lo = np.full(n, -reach, dtype=float)
    hi = np.full(n, reach, dtype=float)

    def phi(s):
        return gauge(p0 + s[:, None] * v)

    a, b = lo.copy(), hi.copy()
    for _ in range(90):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        left = phi(m1) < phi(m2)
        b = np.where(left, m2, b)
        a = np.where(left, a, m1)
    smin = 0.5 * (a + b)
    hit = phi(smin) <= 1.0
    out_lo = np.full(n, np.nan)
    out_hi = np.full(n, np.nan)
    if hit.any():
        # inside at smin, outside at +-reach
        a_in, a_out = smin.copy(), hi.copy()
        b_in, b_out = smin.copy(), lo.copy()
        for _ in range(80):
            m = 0.5 * (a_in + a_out)
            inside = phi(m) <= 1.0
            a_in = np.where(inside, m, a_in)
            a_out = np.where(inside, a_out, m)
            m = 0.5 * (b_in + b_out)
            inside = phi(m) <= 1.0
            b_in = np.where(inside, m, b_in)
            b_out = np.where(inside, b_out, m)
        out_lo[hit] = b_in[hit]
        out_hi[hit] = a_in[hit]
    return out_lo, out_hi


def _quadratic_interval(q0, w):
    """Parameters s with |q0 + s w| <= 1 (rows)."""
    a = np.einsum("ij,ij->i", w, w)
    b = np.einsum("ij,ij->i", q0, w)
    c = np.einsum("ij,ij->i", q0, q0) - 1.0
    disc = b * b - a * c
    lo = np.full(len(a), np.nan)
    hi = np.full(len(a), np.nan)
    ok = disc >= 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    lo[ok] = (-b[ok] - root[ok]) / a[ok]
    hi[ok] = (-b[ok] + root[ok]) / a[ok]
    return lo, hi


def _slab_interval(A, b, p0, v):
    """Clip the lines p0 + s v against {A x <= b}."""
    p0 = np.atleast_2d(p0)
    v = np.atleast_2d(v)
    num = b[None, :] - p0 @ A.T
    den = np.broadcast_to(v @ A.T, num.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    upper = np.where(den > 0, ratio, np.inf).min(axis=1)
    lower = np.where(den < 0, ratio, -np.inf).max(axis=1)
    parallel_out = ((den == 0) & (num < 0)).any(axis=1)
    empty = (lower > upper) | parallel_out
    lower = np.where(empty, np.nan, lower)
    upper = np.where(empty, np.nan, upper)
    return lower, upper


class ConvexBody:
    """Common interface of every body variant.

    Vector arguments may be a single point of shape (d,) or a stack (..., d).
    """

    smooth = True

    @property
    def dim(self):
        return len(self.center)

    # -- interface implemented by the variants ---------------------------
    def support(self, u):
        raise NotImplementedError

    def gauge(self, y):
        """Minkowski functional of ``B - center`` (positively homogeneous)."""
        raise NotImplementedError

    def gauge_grad(self, y):
        raise NotImplementedError

    @property
    def volume(self):
        raise NotImplementedError

    def translate(self, a):
        raise NotImplementedError

    def scale(self, s):
        raise NotImplementedError

    def rotate(self, rot):
        return Rotated(self, _rotation_matrix(rot))

    # -- defaults ----------------------------------------------------------
    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return self.gauge(x - self.center) <= 1.0 + tol

    def boundary_residual(self, x):
        x = np.asarray(x, dtype=float)
        return self.gauge(x - self.center) - 1.0

    def normals(self, x):
        """Outward unit normals at boundary points (rows) and a ridge mask.

        Smooth variants never report ridges.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = self.gauge_grad(x - self.center)
        return _unit(g), np.zeros(len(x), dtype=bool)

    def normal_at(self, x):
        x = np.asarray(x, dtype=float)
        if abs(float(self.boundary_residual(x))) > BOUNDARY_TOL:
            raise ValueError(f"point {x} is not on the boundary (tolerance {BOUNDARY_TOL})")
        n, ridge = self.normals(x[None, :])
        if ridge[0]:
            raise NonSmoothPoint(f"point {x} lies on a ridge; the normal is not unique")
        return n[0]

    def support_point(self, n):
        """Boundary point(s) whose outward normal is ``n`` (strictly convex smooth bodies)."""
        raise NotImplementedError(f"{type(self).__name__} has no unique support points")

    @property
    def circumradius(self):
        """Radius of a ball about ``center`` containing the body."""
        d = self.dim
        u = np.vstack([np.eye(d), -np.eye(d)])
        h = self.support(u) - u @ self.center
        return float(np.sqrt(d) * h.max())

    def bounding_box(self):
        d = self.dim
        eye = np.eye(d)
        return -self.support(-eye), self.support(eye)

    def line_interval(self, p0, v):
        """Range of s with p0 + s v inside the body, NaN where the line misses."""
        p0 = np.atleast_2d(np.asarray(p0, dtype=float)) - self.center
        v = np.atleast_2d(np.asarray(v, dtype=float))
        vn = np.linalg.norm(v, axis=1).min()
        reach = (np.linalg.norm(p0, axis=1).max() + self.circumradius) / vn * 1.01 + 1e-12
        return _line_interval_generic(self.gauge, p0, v, reach)

    def radial_projection(self, p):
        """Central projection of points onto the boundary."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        y = p - self.center
        return self.center + y / self.gauge(y)[:, None]

    def flat_normals(self):
        """Normals of boundary regions where the Gaussian curvature vanishes."""
        return np.zeros((0, self.dim))

    def as_polytope(self):
        raise NotImplementedError(f"{type(self).__name__} is not polyhedral")

    @property
    def surface_area(self):
        from convexft.quadrature import boundary_rule

        rule = boundary_rule(self, spacing=0.1 * self.circumradius, order=12)
        return float(rule.area_weights.sum())


def _rotation_matrix(rot):
    return rot.matrix if isinstance(rot, Rotation) else np.asarray(rot, dtype=float)


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    radius: float
    center: np.ndarray

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return self.radius * np.linalg.norm(u, axis=-1) + u @ self.center

    def gauge(self, y):
        return np.linalg.norm(y, axis=-1) / self.radius

    def gauge_grad(self, y):
        return _unit(np.asarray(y, dtype=float)) / self.radius

    def support_point(self, n):
        return self.center + self.radius * _unit(np.asarray(n, dtype=float))

    def line_interval(self, p0, v):
        p0 = np.atleast_2d(np.asarray(p0, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        p0, v = np.broadcast_arrays(p0, v)
        return _quadratic_interval((p0 - self.center) / self.radius, v / self.radius)

    @property
    def circumradius(self):
        return float(self.radius)

    @property
    def volume(self):
        return ball_volume(self.dim, self.radius)

    @property
    def surface_area(self):
        return sphere_area(self.dim) * self.radius ** (self.dim - 1)

    def translate(self, a):
        return Ball(self.radius, _frozen(self.center + np.asarray(a, dtype=float)))

    def scale(self, s):
        return Ball(self.radius * s, _frozen(self.center * s))

    def rotate(self, rot):
        return Ball(self.radius, _frozen(_rotation_matrix(rot) @ self.center))


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """{center + Q diag(a) y : |y| <= 1} with Q orthogonal."""

    semi_axes: np.ndarray
    center: np.ndarray
    orientation: np.ndarray

    @cached_property
    def _A(self):
        return self.orientation * self.semi_axes[None, :]

    @cached_property
    def _Ainv(self):
        return (self.orientation / self.semi_axes[None, :]).T

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return np.linalg.norm(u @ self._A, axis=-1) + u @ self.center

    def gauge(self, y):
        return np.linalg.norm(np.asarray(y) @ self._Ainv.T, axis=-1)

    def gauge_grad(self, y):
        z = np.asarray(y) @ self._Ainv.T
        return (z / np.linalg.norm(z, axis=-1, keepdims=True)) @ self._Ainv

    def support_point(self, n):
        n = np.asarray(n, dtype=float)
        w = n @ self._A
        return self.center + (w / np.linalg.norm(w, axis=-1, keepdims=True)) @ self._A.T

    def line_interval(self, p0, v):
        p0 = np.atleast_2d(np.asarray(p0, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        p0, v = np.broadcast_arrays(p0, v)
        return _quadratic_interval((p0 - self.center) @ self._Ainv.T, v @ self._Ainv.T)

    @property
    def circumradius(self):
        return float(self.semi_axes.max())

    @property
    def volume(self):
        return ball_volume(self.dim) * float(np.prod(self.semi_axes))

    def translate(self, a):
        return Ellipsoid(self.semi_axes, _frozen(self.center + np.asarray(a)), self.orientation)

    def scale(self, s):
        return Ellipsoid(_frozen(self.semi_axes * s), _frozen(self.center * s), self.orientation)

    def rotate(self, rot):
        m = _rotation_matrix(rot)
        return Ellipsoid(self.semi_axes, _frozen(m @ self.center), _frozen(m @ self.orientation))


@dataclass(frozen=True, eq=False)
class AxisBox(ConvexBody):
    half_widths: np.ndarray
    center: np.ndarray

    smooth = False

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return np.abs(u) @ self.half_widths + u @ self.center

    def gauge(self, y):
        return np.max(np.abs(y) / self.half_widths, axis=-1)

    def normals(self, x):
        return self.as_polytope().normals(x)

    def line_interval(self, p0, v):
        poly = self.as_polytope()
        return _slab_interval(poly.normals_, poly.offsets, p0, v)

    @property
    def volume(self):
        return float(np.prod(2.0 * self.half_widths))

    @property
    def surface_area(self):
        w = 2.0 * self.half_widths
        total = float(np.prod(w))
        return float(sum(2.0 * total / wi for wi in w))

    @property
    def circumradius(self):
        return float(np.linalg.norm(self.half_widths))

    def flat_normals(self):
        d = self.dim
        return np.vstack([np.eye(d), -np.eye(d)])

    @cached_property
    def _polytope(self):
        d = self.dim
        n = np.vstack([np.eye(d), -np.eye(d)])
        b = np.concatenate([self.half_widths, self.half_widths]) + n @ self.center
        return make_polytope_h(n, b)

    def as_polytope(self):
        return self._polytope

    def translate(self, a):
        return AxisBox(self.half_widths, _frozen(self.center + np.asarray(a)))

    def scale(self, s):
        return AxisBox(_frozen(self.half_widths * s), _frozen(self.center * s))


@dataclass(frozen=True, eq=False)
class PBall(ConvexBody):
    """{x : ||x - center||_p <= radius}, p >= 1."""

    p: float
    radius: float
    center: np.ndarray

    @property
    def smooth(self):
        return self.p > 1.0

    @property
    def q(self):
        return math.inf if self.p == 1.0 else self.p / (self.p - 1.0)

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return self.radius * np.linalg.norm(u, ord=self.q, axis=-1) + u @ self.center

    def gauge(self, y):
        return np.linalg.norm(np.asarray(y, dtype=float), ord=self.p, axis=-1) / self.radius

    def gauge_grad(self, y):
        y = np.asarray(y, dtype=float)
        if self.p == 1.0:
            return np.sign(y) / self.radius
        norm = np.linalg.norm(y, ord=self.p, axis=-1, keepdims=True)
        return np.sign(y) * (np.abs(y) / norm) ** (self.p - 1.0) / self.radius

    def normals(self, x):
        if self.p == 1.0:
            return self.as_polytope().normals(x)
        return super().normals(x)

    def support_point(self, n):
        if self.p == 1.0:
            return super().support_point(n)
        n = np.asarray(n, dtype=float)
        q = self.q
        norm = np.linalg.norm(n, ord=q, axis=-1, keepdims=True)
        return self.center + self.radius * np.sign(n) * (np.abs(n) / norm) ** (q - 1.0)

    @property
    def circumradius(self):
        d = self.dim
        return float(self.radius * max(1.0, d ** (0.5 - 1.0 / self.p)))

    @property
    def volume(self):
        d, p = self.dim, self.p
        return float(np.exp(d * (math.log(2.0 * self.radius) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + d / p)))

    def flat_normals(self):
        d = self.dim
        if self.p == 1.0:
            return self.as_polytope().normals_
        if self.p > 2.0:
            return np.vstack([np.eye(d), -np.eye(d)])
        return np.zeros((0, d))

    @cached_property
    def _polytope(self):
        if self.p != 1.0:
            raise NotImplementedError("only the p = 1 ball is polyhedral")
        d = self.dim
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=d)))
        n = signs / math.sqrt(d)
        b = self.radius / math.sqrt(d) + n @ self.center
        return make_polytope_h(n, b)

    def as_polytope(self):
        return self._polytope

    def line_interval(self, p0, v):
        if self.p == 1.0:
            poly = self.as_polytope()
            return _slab_interval(poly.normals_, poly.offsets, p0, v)
        return super().line_interval(p0, v)

    def translate(self, a):
        return PBall(self.p, self.radius, _frozen(self.center + np.asarray(a)))

    def scale(self, s):
        return PBall(self.p, self.radius * s, _frozen(self.center * s))


@dataclass(frozen=True, eq=False)
class Face:
    """A face of a polytope: its vertex indices and its facets.

    ``subfaces`` pairs each facet G of this face with the index of a body
    facet whose hyperplane cuts G out of this face.
    """

    key: frozenset
    dim: int
    subfaces: tuple


@dataclass(frozen=True, eq=False)
class PolytopeH(ConvexBody):
    """{x : normals_ @ x <= offsets} with its vertices and face lattice."""

    normals_: np.ndarray
    offsets: np.ndarray
    vertices: np.ndarray
    faces: dict
    center: np.ndarray
    inradius: float

    smooth = False

    @property
    def top(self):
        return self.faces[frozenset(range(len(self.vertices)))]

    def faces_of_dim(self, k):
        return [f for f in self.faces.values() if f.dim == k]

    @property
    def facets(self):
        return self.faces_of_dim(self.dim - 1)

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return np.max(u @ self.vertices.T, axis=-1)

    def gauge(self, y):
        slack = self.offsets - self.normals_ @ self.center
        return np.max((np.asarray(y) @ self.normals_.T) / slack, axis=-1)

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return np.all(x @ self.normals_.T <= self.offsets + tol, axis=-1)

    def boundary_residual(self, x):
        return np.max(np.asarray(x) @ self.normals_.T - self.offsets, axis=-1)

    def normals(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        gap = self.offsets[None, :] - x @ self.normals_.T
        active = np.abs(gap) <= RIDGE_TOL
        ridge = active.sum(axis=1) > 1
        idx = np.argmin(np.abs(gap), axis=1)
        return self.normals_[idx], ridge

    def line_interval(self, p0, v):
        return _slab_interval(self.normals_, self.offsets, p0, v)

    def flat_normals(self):
        return np.array([self.facet_normal(f) for f in self.facets])

    def as_polytope(self):
        return self

    # -- face geometry -----------------------------------------------------
    def face_points(self, face):
        return self.vertices[sorted(face.key)]

    def face_basis(self, face):
        """Orthonormal rows spanning the direction space of ``face``."""
        return self._face_cache(face)[0]

    def face_measure(self, face):
        return self._face_cache(face)[1]

    def facet_index(self, face):
        """Index of a body facet whose hyperplane contains a (d-1)-face."""
        pts = self.face_points(face)
        gap = np.abs(pts @ self.normals_.T - self.offsets).max(axis=0)
        return int(np.argmin(gap))

    def facet_normal(self, face):
        return self.normals_[self.facet_index(face)]

    def inner_normal(self, face, facet_idx):
        """Outward normal, inside the affine hull of ``face``, of its facet cut by ``facet_idx``."""
        basis = self.face_basis(face)
        n = basis.T @ (basis @ self.normals_[facet_idx])
        return n / np.linalg.norm(n)

    @cached_property
    def _geometry(self):
        return {}

    def _face_cache(self, face):
        cache = self._geometry
        if face.key not in cache:
            pts = self.face_points(face)
            if face.dim == 0:
                basis = np.zeros((0, self.dim))
                measure = 1.0
            else:
                _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
                basis = vt[: face.dim]
                ref = pts.mean(axis=0)
                measure = 0.0
                for sub, fi in face.subfaces:
                    n = basis.T @ (basis @ self.normals_[fi])
                    n /= np.linalg.norm(n)
                    h = float(n @ (self.face_points(sub)[0] - ref))
                    measure += h * self.face_measure(sub)
                measure /= face.dim
            cache[face.key] = (basis, measure)
        return cache[face.key]

    def simplices(self, face):
        """Fan triangulation of ``face`` as a list of vertex-index tuples."""
        if face.dim == 0:
            return [tuple(face.key)]
        apex = min(face.key)
        out = []
        for sub, _ in face.subfaces:
            if apex in sub.key:
                continue
            for s in self.simplices(sub):
                out.append((apex,) + s)
        return out

    @property
    def volume(self):
        return self.face_measure(self.top)

    @property
    def surface_area(self):
        return float(sum(self.face_measure(f) for f in self.facets))

    @property
    def circumradius(self):
        return float(np.linalg.norm(self.vertices - self.center, axis=1).max())

    def _transformed(self, normals, offsets, vertices, center, inradius):
        return PolytopeH(_frozen(normals), _frozen(offsets), _frozen(vertices), self.faces, _frozen(center), inradius)

    def translate(self, a):
        a = np.asarray(a, dtype=float)
        return self._transformed(self.normals_, self.offsets + self.normals_ @ a, self.vertices + a, self.center + a, self.inradius)

    def scale(self, s):
        return self._transformed(self.normals_, self.offsets * s, self.vertices * s, self.center * s, self.inradius * s)

    def rotate(self, rot):
        m = _rotation_matrix(rot)
        return self._transformed(self.normals_ @ m.T, self.offsets, self.vertices @ m.T, m @ self.center, self.inradius)


@dataclass(frozen=True, eq=False)
class Rotated(ConvexBody):
    """The image ``matrix @ base`` of a body under a rotation about the origin."""

    base: ConvexBody
    matrix: np.ndarray

    @property
    def center(self):
        return self.matrix @ self.base.center

    @property
    def smooth(self):
        return self.base.smooth

    def _back(self, x):
        return np.asarray(x, dtype=float) @ self.matrix

    def _fwd(self, y):
        return np.asarray(y, dtype=float) @ self.matrix.T

    def support(self, u):
        return self.base.support(self._back(u))

    def contains(self, x, tol=0.0):
        return self.base.contains(self._back(x), tol)

    def boundary_residual(self, x):
        return self.base.boundary_residual(self._back(x))

    def gauge(self, y):
        return self.base.gauge(self._back(y))

    def gauge_grad(self, y):
        return self._fwd(self.base.gauge_grad(self._back(y)))

    def normals(self, x):
        n, ridge = self.base.normals(self._back(x))
        return self._fwd(n), ridge

    def support_point(self, n):
        return self._fwd(self.base.support_point(self._back(n)))

    def line_interval(self, p0, v):
        return self.base.line_interval(self._back(p0), self._back(v))

    def flat_normals(self):
        return self._fwd(self.base.flat_normals())

    def as_polytope(self):
        return self.base.as_polytope().rotate(self.matrix)

    @property
    def circumradius(self):
        return self.base.circumradius

    @property
    def volume(self):
        return self.base.volume

    @property
    def surface_area(self):
        return self.base.surface_area

    def rotate(self, rot):
        return Rotated(self.base, _frozen(_rotation_matrix(rot) @ self.matrix))

    def translate(self, a):
        return Rotated(self.base.translate(self._back(a)), self.matrix)

    def scale(self, s):
        return Rotated(self.base.scale(s), self.matrix)


@dataclass(frozen=True, eq=False)
class Rotation:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("rotation must be a square matrix")
        if not np.allclose(m.T @ m, np.eye(len(m)), atol=1e-12, rtol=0):
            raise ValueError("rotation matrix columns are not orthonormal within 1e-12")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self):
        return len(self.matrix)

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @classmethod
    def planar(cls, angle):
        c, s = math.cos(angle), math.sin(angle)
        return cls(np.array([[c, -s], [s, c]]))


def random_rotation(d, rng):
    """Haar-distributed rotation: uniform angle (d=2), uniform quaternion (d=3),
    sign-corrected QR of a Gaussian matrix otherwise."""
    if d == 2:
        return Rotation.planar(rng.uniform(0.0, 2.0 * math.pi))
    if d == 3:
        w, x, y, z = _unit(rng.standard_normal(4))
        m = np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
            ]
        )
        return Rotation(_reorthonormalize(m))
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))[None, :]
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return Rotation(_reorthonormalize(q))


def sphere_family_rotation(omega):
    """Rotation in the plane of e_d and ``omega`` carrying e_d to ``omega``.

    This realizes a point of S^{d-1} as an element of SO(d).
    """
    omega = _unit(np.asarray(omega, dtype=float))
    d = omega.size
    e = np.zeros(d)
    e[-1] = 1.0
    c = float(omega @ e)
    w = omega - c * e
    s = np.linalg.norm(w)
    if s < 1e-15:
        if c > 0:
            return Rotation.identity(d)
        m = np.eye(d)
        m[0, 0] = m[-1, -1] = -1.0
        return Rotation(m)
    w /= s
    m = np.eye(d) + s * (np.outer(w, e) - np.outer(e, w)) + (c - 1.0) * (np.outer(e, e) + np.outer(w, w))
    return Rotation(_reorthonormalize(m))


def _reorthonormalize(m):
    u, _, vt = np.linalg.svd(m)
    return u @ vt


# -- constructors --------------------------------------------------------------


def _center(center, d):
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if c.shape != (d,):
        raise BodySpecError(f"center must have {d} coordinates")
    return _frozen(c)


def _check_dim(d):
    if int(d) != d or d < 2:
        raise BodySpecError(f"dimension d must be an integer >= 2, got {d}")
    return int(d)


def make_ball(d, r, center=None):
    d = _check_dim(d)
    if not r > 0:
        raise BodySpecError(f"radius r must be > 0, got {r}")
    return Ball(float(r), _center(center, d))


def make_ellipsoid(semi_axes, center=None, orientation=None):
    a = np.asarray(semi_axes, dtype=float)
    d = _check_dim(a.size)
    if np.any(a <= 0):
        raise BodySpecError("semi-axes must be > 0")
    q = np.eye(d) if orientation is None else _rotation_matrix(orientation)
    Rotation(q)
    return Ellipsoid(_frozen(a), _center(center, d), _frozen(q))


def make_box(half_widths, center=None):
    h = np.asarray(half_widths, dtype=float)
    d = _check_dim(h.size)
    if np.any(h <= 0):
        raise BodySpecError("half-widths must be > 0")
    return AxisBox(_frozen(h), _center(center, d))


def make_pball(d, p, r, center=None):
    d = _check_dim(d)
    if not p >= 1:
        raise BodySpecError(f"exponent p must be >= 1 for convexity, got {p}")
    if not math.isfinite(p):
        raise BodySpecError("p = inf is an axis box; use make_box")
    if not r > 0:
        raise BodySpecError(f"radius r must be > 0, got {r}")
    return PBall(float(p), float(r), _center(center, d))


def _affine_rank(pts, tol=1e-9):
    if len(pts) <= 1:
        return 0
    s = np.linalg.svd(pts[1:] - pts[0], compute_uv=False)
    return int((s > tol * max(1.0, s[0])).sum())


def make_polytope_h(normals, offsets):
    """Polytope {x : n_i . x <= b_i} with its vertices and face lattice.

    Vertices are found by intersecting every d-subset of facet hyperplanes,
    which is exact and adequate for the small polytopes used here.
    """
    A = np.atleast_2d(np.asarray(normals, dtype=float))
    b = np.asarray(offsets, dtype=float).ravel()
    if A.shape[0] != b.size:
        raise BodySpecError("need one offset per facet normal")
    d = _check_dim(A.shape[1])
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        raise BodySpecError("facet normals must be nonzero")
    A = A / norms[:, None]
    b = b / norms

    # Chebyshev center: max r with n_i.x + r <= b_i
    res = linprog(
        c=np.r_[np.zeros(d), -1.0],
        A_ub=np.hstack([A, np.ones((len(b), 1))]),
        b_ub=b,
        bounds=[(None, None)] * (d + 1),
        method="highs",
    )
    if res.status == 2:
        raise EmptyInterior("half-space system is infeasible")
    if res.status == 3:
        raise UnboundedBody("half-space system is unbounded")
    for k in range(d):
        for sgn in (1.0, -1.0):
            u = np.zeros(d)
            u[k] = sgn
            r = linprog(c=-u, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
            if r.status == 3:
                raise UnboundedBody(f"support in direction {u} is infinite")
    center, radius = res.x[:d], float(res.x[d])
    if radius <= 1e-12:
        raise EmptyInterior(f"Chebyshev radius {radius:.3g} <= 0")

    scale = max(1.0, float(np.abs(b).max()))
    verts = []
    for idx in itertools.combinations(range(len(b)), d):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[list(idx)])
        if np.all(A @ v <= b + _VERTEX_TOL * scale):
            if not any(np.linalg.norm(v - w) <= 1e-9 * scale for w in verts):
                verts.append(v)
    V = np.array(verts)
    on = np.abs(V @ A.T - b[None, :]) <= _VERTEX_TOL * scale

    # drop redundant and duplicated facets
    keep = []
    seen = set()
    for i in range(len(b)):
        vi = np.flatnonzero(on[:, i])
        key = frozenset(vi.tolist())
        if _affine_rank(V[vi]) == d - 1 and key not in seen:
            keep.append(i)
            seen.add(key)
    A, b, on = A[keep], b[keep], on[:, keep]

    faces = {}

    def build(key, k):
        if key in faces:
            return faces[key]
        subs = []
        if k > 0:
            found = {}
            for i in range(len(b)):
                sub = frozenset(v for v in key if on[v, i])
                if len(sub) < k or sub == key or sub in found:
                    continue
                if _affine_rank(V[sorted(sub)]) == k - 1:
                    found[sub] = i
            subs = [(build(s, k - 1), i) for s, i in found.items()]
        face = Face(key, k, tuple(subs))
        faces[key] = face
        return face

    build(frozenset(range(len(V))), d)
    return PolytopeH(_frozen(A), _frozen(b), _frozen(V), faces, _frozen(center), radius)


def make_polytope_v(vertices):
    """Convex hull of points given as vertices (d = 2 or 3).

    Facets are found by testing every d-subset of points for a supporting
    hyperplane.
    """
    P = np.atleast_2d(np.asarray(vertices, dtype=float))
    d = _check_dim(P.shape[1])
    if d > 3:
        raise BodySpecError("vertex input is supported for d <= 3 only")
    scale = max(1.0, float(np.abs(P).max()))
    normals, offsets = [], []
    for idx in itertools.combinations(range(len(P)), d):
        Q = P[list(idx)]
        E = Q[1:] - Q[0]
        if d == 2:
            n = np.array([E[0, 1], -E[0, 0]])
        else:
            n = np.cross(E[0], E[1])
        nn = np.linalg.norm(n)
        if nn < 1e-12 * scale:
            continue
        n = n / nn
        off = float(n @ Q[0])
        side = P @ n - off
        if np.all(side <= 1e-9 * scale):
            pass
        elif np.all(side >= -1e-9 * scale):
            n, off = -n, -off
        else:
            continue
        if not any(np.allclose(n, m, atol=1e-9) and abs(off - o) <= 1e-9 * scale for m, o in zip(normals, offsets)):
            normals.append(n)
            offsets.append(off)
    if not normals:
        raise EmptyInterior("points are affinely degenerate")
    return make_polytope_h(np.array(normals), np.array(offsets))


def read_polytope_file(path):
    """H-representation text file: one facet per line, d normal components then offset."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(t) for t in line.split()])
    if not rows:
        raise BodySpecError(f"{path}: no facets")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise BodySpecError(f"{path}: rows have differing lengths {sorted(widths)}")
    arr = np.array(rows)
    return make_polytope_h(arr[:, :-1], arr[:, -1])


def parse_body(spec):
    """Build a body from the CLI mini-language.

    ``ball:d=2,r=1``, ``box:d=3,h=0.5,0.5,0.5``, ``pball:d=2,p=4,r=1``,
    ``ellipsoid:d=2,a=1,0.5``, ``poly:file=PATH``.  ``c=...`` sets a center.
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    params = {}
    last = None
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        if "=" in tok:
            key, val = tok.split("=", 1)
            last = key.strip()
            params[last] = [val.strip()]
        elif last is None:
            raise BodySpecError(f"cannot parse {tok!r} in body spec {spec!r}")
        else:
            params[last].append(tok)

    def num(key, default=None):
        if key not in params:
            if default is None:
                raise BodySpecError(f"body spec {spec!r} is missing {key}=")
            return default
        try:
            return float(params[key][0])
        except ValueError:
            raise BodySpecError(f"{key}= must be a number in {spec!r}") from None

    def vec(key, d):
        vals = params[key]
        try:
            out = [float(v) for v in vals]
        except ValueError:
            raise BodySpecError(f"{key}= must be numbers in {spec!r}") from None
        if len(out) == 1:
            out = out * d
        if len(out) != d:
            raise BodySpecError(f"{key}= needs {d} values in {spec!r}")
        return out

    if kind == "poly":
        if "file" not in params:
            raise BodySpecError("poly: needs file=PATH")
        try:
            return read_polytope_file(",".join(params["file"]))
        except OSError as exc:
            raise BodySpecError(str(exc)) from None

    d_val = num("d")
    if d_val != int(d_val) or d_val < 2:
        raise BodySpecError(f"dimension d must be an integer >= 2, got {params['d'][0]}")
    d = int(d_val)
    center = vec("c", d) if "c" in params else None
    if kind == "ball":
        return make_ball(d, num("r", 1.0), center)
    if kind == "box":
        return make_box(vec("h", d) if "h" in params else [0.5] * d, center)
    if kind == "pball":
        return make_pball(d, num("p"), num("r", 1.0), center)
    if kind == "ellipsoid":
        return make_ellipsoid(vec("a", d), center)
    raise BodySpecError(f"unknown body kind {kind!r} (ball, box, pball, ellipsoid, poly)")


def support(body, direction):
    return body.support(direction)


def normal_at(body, x):
    return body.normal_at(x)


def rotate(body, rot):
    m = _rotation_matrix(rot)
    if np.allclose(m, np.eye(len(m)), atol=0, rtol=0):
        return body
    return body.rotate(rot)


def translate(body, a):
    return body.translate(a)


# -- cube-sphere cover of S^{d-1} ----------------------------------------------


@dataclass(frozen=True)
class SphereCell:
    """Cell of the cube-sphere cover: directions proportional to p with
    p[axis] = sign and the other coordinates in the box [lo, hi]."""

    axis: int
    sign: float
    lo: tuple
    hi: tuple
    cap_axis: tuple
    half_aperture: float

    def embed(self, s):
        """Cube-surface points p for free coordinates s (..., d-1)."""
        s = np.asarray(s, dtype=float)
        d = s.shape[-1] + 1
        p = np.empty(s.shape[:-1] + (d,))
        free = [i for i in range(d) if i != self.axis]
        p[..., free] = s
        p[..., self.axis] = self.sign
        return p

    def corners(self):
        box = np.array(list(itertools.product(*zip(self.lo, self.hi))))
        return _unit(self.embed(box))

    def contains_direction(self, u, tol=1e-12):
        u = np.atleast_2d(u)
        d = u.shape[1]
        free = [i for i in range(d) if i != self.axis]
        lead = u[:, self.axis] * self.sign
        ok = lead > 0
        s = u[:, free] / np.where(ok, lead, 1.0)[:, None]
        ok &= np.all(np.abs(u[:, free]) <= lead[:, None] + tol, axis=1)
        ok &= np.all((s >= np.array(self.lo) - tol) & (s <= np.array(self.hi) + tol), axis=1)
        return ok


def _cap_of(axis, sign, lo, hi, d):
    tmp = SphereCell(axis, sign, tuple(lo), tuple(hi), (), 0.0)
    c = tmp.corners()
    a = _unit(c.sum(axis=0))
    ap = float(np.arccos(np.clip(c @ a, -1.0, 1.0)).max())
    return tuple(a), ap


def cube_sphere_cells(d, max_half_aperture=math.pi / 8):
    """The fixed cover: 2d cube faces bisected until every cell's
    circumscribed cap has half-aperture <= ``max_half_aperture``."""
    cells = []
    for axis in range(d):
        for sign in (1.0, -1.0):
            queue = [(np.full(d - 1, -1.0), np.full(d - 1, 1.0))]
            while queue:
                lo, hi = queue.pop(0)
                cap, ap = _cap_of(axis, sign, lo, hi, d)
                if ap <= max_half_aperture + 1e-12:
                    cells.append(SphereCell(axis, sign, tuple(lo), tuple(hi), cap, ap))
                    continue
                mid = 0.5 * (lo + hi)
                for pick in itertools.product((0, 1), repeat=d - 1):
                    pick = np.array(pick)
                    queue.append((np.where(pick, mid, lo), np.where(pick, hi, mid)))
    return cells


# -- boundary patches ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryPatch:
    """A piece of the boundary that is a Lipschitz graph over a hyperplane.

    The graph lives over {x : x . base_normal = base_offset} with in-plane
    coordinates ``basis @ x``; ``domain_lo``/``domain_hi`` bound them.  The
    patch is either a group of polytope facets (``facets``) or the set of
    smooth boundary points with normals in ``cell`` (or in the normal cone
    when no cell is given).
    """

    body: ConvexBody
    base_normal: np.ndarray
    base_offset: float
    basis: np.ndarray
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    lipschitz: float
    cone_axis: np.ndarray
    half_aperture: float
    facets: tuple = ()
    cell: SphereCell | None = None

    @property
    def polyhedral(self):
        return bool(self.facets)

    def sample_normals(self, rng, n):
        d = self.body.dim
        if self.cell is not None:
            lo, hi = np.array(self.cell.lo), np.array(self.cell.hi)
            s = lo + (hi - lo) * rng.random((n, d - 1))
            return _unit(self.cell.embed(s))
        basis = orthonormal_complement(self.cone_axis)
        t = rng.standard_normal((n, d - 1))
        t = _unit(t) * (rng.random((n, 1)) ** (1.0 / (d - 1)))
        return _unit(self.cone_axis + math.tan(self.half_aperture) * t @ basis)

    def sample_points(self, rng, n):
        """Points on the patch (not area-uniform for smooth patches)."""
        if self.polyhedral:
            return _sample_facets(self.body.as_polytope(), self.facets, rng, n)
        return self.body.support_point(self.sample_normals(rng, n))

    def contains_points(self, x):
        x = np.atleast_2d(x)
        if self.polyhedral:
            poly = self.body.as_polytope()
            gap = np.abs(x @ poly.normals_.T - poly.offsets)
            idx = np.argmin(gap, axis=1)
            return np.isin(idx, [poly.facet_index(f) for f in self.facets])
        n, _ = self.body.normals(x)
        if self.cell is not None:
            return self.cell.contains_direction(n)
        return n @ self.cone_axis >= math.cos(self.half_aperture) - 1e-12

    def ridge_points(self, rng, n):
        """Points on ridges shared by two facets of the patch (empty if none)."""
        if len(self.facets) < 2:
            return np.zeros((0, self.body.dim))
        poly = self.body.as_polytope()
        keys = [f.key for f in self.facets]
        ridges = []
        for a, b in itertools.combinations(keys, 2):
            common = a & b
            if common and _affine_rank(poly.vertices[sorted(common)]) == poly.dim - 2:
                ridges.append(poly.faces[frozenset(common)])
        if not ridges:
            return np.zeros((0, poly.dim))
        return _sample_faces(poly, ridges, rng, n)


def _sample_simplex(verts, rng, n):
    k = len(verts) - 1
    e = rng.exponential(size=(n, k + 1))
    w = e / e.sum(axis=1, keepdims=True)
    return w @ verts


def _sample_faces(poly, faces, rng, n):
    simp, wts = [], []
    for f in faces:
        for s in poly.simplices(f):
            pts = poly.vertices[list(s)]
            simp.append(pts)
            if f.dim == 0:
                wts.append(1.0)
            else:
                E = pts[1:] - pts[0]
                wts.append(math.sqrt(max(np.linalg.det(E @ E.T), 0.0)))
    wts = np.array(wts) / sum(wts)
    which = rng.choice(len(simp), size=n, p=wts)
    out = np.empty((n, poly.dim))
    for j in range(len(simp)):
        m = which == j
        if m.any():
            out[m] = _sample_simplex(simp[j], rng, int(m.sum()))
    return out


def _sample_facets(poly, facets, rng, n):
    return _sample_faces(poly, facets, rng, n)


def _patch(body, axis, points, lipschitz, half_aperture, facets=(), cell=None):
    axis = _unit(np.asarray(axis, dtype=float))
    basis = orthonormal_complement(axis)
    u = points @ basis.T
    return BoundaryPatch(
        body=body,
        base_normal=_frozen(axis),
        base_offset=float(body.support(axis)),
        basis=_frozen(basis),
        domain_lo=_frozen(u.min(axis=0)),
        domain_hi=_frozen(u.max(axis=0)),
        lipschitz=float(lipschitz),
        cone_axis=_frozen(axis),
        half_aperture=float(half_aperture),
        facets=tuple(facets),
        cell=cell,
    )


def smooth_patch(body, cell, n_edge=64):
    """Patch of a smooth body whose normals fall in a cube-sphere cell."""
    d = body.dim
    lo, hi = np.array(cell.lo), np.array(cell.hi)
    grid = np.linspace(0.0, 1.0, n_edge)
    pts = []
    for k in range(d - 1):
        for other in itertools.product(*[(0.0, 1.0)] * (d - 2)):
            s = np.empty((n_edge, d - 1))
            s[:, k] = lo[k] + (hi[k] - lo[k]) * grid
            rest = [j for j in range(d - 1) if j != k]
            for j, o in zip(rest, other):
                s[:, j] = lo[j] + (hi[j] - lo[j]) * o
            pts.append(s)
    s = np.vstack(pts)
    x = body.support_point(_unit(cell.embed(s)))
    ap = cell.half_aperture
    return _patch(body, cell.cap_axis, x, math.tan(ap), ap, cell=cell)


def cone_patch(body, axis, half_aperture):
    """Patch of a smooth body whose normals lie in an arbitrary cone."""
    axis = _unit(np.asarray(axis, dtype=float))
    tmp = BoundaryPatch(body, axis, 0.0, orthonormal_complement(axis), None, None, 0.0, axis, half_aperture)
    x = body.support_point(tmp.sample_normals(substream(0, "cone-patch"), 4096))
    k = math.tan(half_aperture) if half_aperture < math.pi / 2 else math.inf
    return _patch(body, axis, x, k, half_aperture)


def facet_patch(body, facets):
    """Patch made of one or more facets of a polyhedral body."""
    poly = body.as_polytope()
    normals = np.array([poly.facet_normal(f) for f in facets])
    pts = np.vstack([poly.face_points(f) for f in facets])
    if len(facets) == 1:
        return _patch(body, normals[0], pts, 0.0, 0.0, facets=facets)
    axis = _unit(normals.sum(axis=0))
    ap = float(np.arccos(np.clip(normals @ axis, -1.0, 1.0)).max())
    k = math.tan(ap) if ap < math.pi / 2 else math.inf
    return _patch(body, axis, pts, k, ap, facets=facets)


def decompose_boundary(body, max_half_aperture=math.pi / 8):
    """Cover the boundary by patches with Lipschitz constant < 1.

    Smooth bodies get one patch per cell of the cube-sphere cover of the
    normal sphere.  Polyhedral bodies get their facets grouped by the cell
    holding the facet normal; a lone facet is its own flat patch.
    """
    if not 0 < max_half_aperture < math.pi / 4:
        raise ValueError("half-aperture must lie in (0, pi/4) for the secant property")
    cells = cube_sphere_cells(body.dim, max_half_aperture)
    if body.smooth:
        return [smooth_patch(body, c) for c in cells]
    poly = body.as_polytope()
    groups = {}
    for f in poly.facets:
        n = poly.facet_normal(f)
        for j, c in enumerate(cells):
            if c.contains_direction(n)[0]:
                groups.setdefault(j, []).append(f)
                break
    patches = []
    for j in sorted(groups):
        fs = groups[j]
        if len(fs) == 1:
            patches.append(facet_patch(body, fs))
        else:
            cell = cells[j]
            normals = np.array([poly.facet_normal(f) for f in fs])
            axis = np.array(cell.cap_axis)
            ap = float(np.arccos(np.clip(normals @ axis, -1.0, 1.0)).max())
            pts = np.vstack([poly.face_points(f) for f in fs])
            patches.append(_patch(body, axis, pts, math.tan(ap), ap, facets=fs))
    return patches


def check_secant_property(patch, n_pairs, seed=0):
    """Largest |(x - y) . a| / |x - y| over sampled pairs of patch points.

    ``a`` is the patch's base normal.  The patch passes when this is at most
    K / sqrt(1 + K^2) < 1/sqrt(2), i.e. every chord is within pi/4 of the
    base hyperplane.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if patch.polyhedral:
        poly = patch.body.as_polytope()
        if sum(poly.face_measure(f) for f in patch.facets) <= 0:
            raise DegeneratePatch("patch facets have zero measure")
    elif patch.half_aperture <= 0:
        raise DegeneratePatch("a smooth patch with a degenerate normal cone is a single point")
    rng = substream(seed, "secant")
    x = patch.sample_points(rng, n_pairs)
    y = patch.sample_points(rng, n_pairs)
    diff = x - y
    norm = np.linalg.norm(diff, axis=1)
    ok = norm > 1e-12 * max(1.0, patch.body.circumradius)
    if not ok.any():
        raise DegeneratePatch("all sampled pairs coincide")
    return float(np.max(np.abs(diff[ok] @ patch.base_normal) / norm[ok]))


def c32_ratios(body, P, Q):
    """|(P - Q) . n(Q)| / |P - Q|^{3/2}, NaN where n(Q) is not unique."""
    n, ridge = body.normals(Q)
    diff = np.atleast_2d(P) - np.atleast_2d(Q)
    dist = np.linalg.norm(diff, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(np.einsum("ij,ij->i", diff, n)) / dist**1.5
    r[ridge | (dist == 0)] = np.nan
    return r


def check_c32(body, patch, n_pairs, seed=0, scale=None, retries=8):
    """Empirical constant in |(P - Q) . n(Q)| <= C |P - Q|^{3/2} on a patch.

    Pairs are independent patch points, or, when ``scale`` is given, pairs
    at distance about ``scale`` around a common point (biased towards the
    patch's internal ridges, where the condition can fail).  Points whose
    normal is not unique are resampled.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = substream(seed, "c32")
    best = 0.0
    got = 0
    for _ in range(retries):
        need = n_pairs - got
        if need <= 0:
            break
        if scale is None:
            P = patch.sample_points(rng, need)
            Q = patch.sample_points(rng, need)
        else:
            Z = patch.sample_points(rng, need)
            R = patch.ridge_points(rng, need)
            if len(R):
                pick = rng.random(need) < 0.5
                Z[pick] = R[pick]
            d = body.dim
            jitter = _unit(rng.standard_normal((2, need, d))) * scale
            P = body.radial_projection(Z + jitter[0])
            Q = body.radial_projection(Z + jitter[1])
            keep = patch.contains_points(P) & patch.contains_points(Q)
            P, Q = P[keep], Q[keep]
        r = c32_ratios(body, P, Q)
        r = r[np.isfinite(r)]
        got += len(r)
        if len(r):
            best = max(best, float(r.max()))
    if got == 0:
        raise NonSmoothPoint("no usable pairs after resampling")
    return best
