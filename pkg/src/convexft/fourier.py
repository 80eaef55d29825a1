"""Fourier transforms of convex indicators and of boundary surface measure.

Convention: chi_B^(xi) = int_B exp(-i x.xi) dx, no 2 pi in the exponent.

Every evaluator has a batched form taking a stack of frequencies (m, d)
and returning complex values with absolute error estimates; the scalar
public functions wrap these in :class:`FtValue`.
"""

from dataclasses import dataclass
import math

import numpy as np

from convexft.geometry import (
    AxisBox,
    Ball,
    Ellipsoid,
    PBall,
    PolytopeH,
    Rotated,
    sphere_area,
)
from convexft.quadrature import MAX_NODES, boundary_rule, simplex_rule
from convexft.rng import substream
from convexft.specfun import bessel_jinc, sinc

CLOSED = "closed-form"
POLYTOPE = "polytope-exact"
QUADRATURE = "boundary-quadrature"
MONTE_CARLO = "monte-carlo"
POLAR = "polar-oracle"

_EPS = np.finfo(float).eps
_CHUNK = 2_000_000


@dataclass(frozen=True)
class FtValue:
    value: complex
    method: str
    error: float

    def __abs__(self):
        return abs(self.value)


@dataclass(frozen=True)
class QuadratureSpec:
    """Boundary quadrature controls.

    ``h`` caps the panel length; ``c`` is the number of nodes per
    wavelength of the integrand, so panels shrink like 2 pi order / (c R).
    """

    h: float = 0.05
    c: float = 8.0
    mc_samples: int = 1_000_000
    seed: int = 0
    order: int = 8
    max_nodes: int = MAX_NODES

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"node spacing h must be > 0, got {self.h}")
        if not self.c >= 4:
            raise ValueError(f"oscillation factor c must be >= 4, got {self.c}")
        if self.mc_samples < 1:
            raise ValueError("Monte Carlo sample count must be >= 1")
        if self.order < 1:
            raise ValueError("quadrature order must be >= 1")

    def spacing(self, R):
        if R <= 0:
            return self.h
        return min(self.h, 2.0 * math.pi * self.order / (self.c * R))


def _stack(xi):
    X = np.asarray(xi, dtype=float)
    return np.atleast_2d(X), X.ndim == 1


def _phase(center, X):
    if not np.any(center):
        return np.ones(len(X), dtype=complex)
    return np.exp(-1j * (X @ center))


def _sum_exp(X, points, weights):
    """sum_k weights[k] exp(-i X . points[k]) for each row of X, chunked."""
    out = np.empty(len(X), dtype=complex)
    step = max(1, _CHUNK // max(1, len(points)))
    for a in range(0, len(X), step):
        ph = X[a : a + step] @ points.T
        out[a : a + step] = np.cos(ph) @ weights - 1j * (np.sin(ph) @ weights)
    return out


def _sum_exp_rows(X, points, rowweights):
    """sum_k rowweights[j, k] exp(-i X[j] . points[k])."""
    out = np.empty(len(X), dtype=complex)
    step = max(1, _CHUNK // max(1, len(points)))
    for a in range(0, len(X), step):
        ph = X[a : a + step] @ points.T
        w = rowweights[a : a + step]
        out[a : a + step] = np.einsum("ij,ij->i", np.cos(ph), w) - 1j * np.einsum("ij,ij->i", np.sin(ph), w)
    return out


# -- closed forms ---------------------------------------------------------------


def _ball_many(ball, X):
    d = ball.dim
    r = np.linalg.norm(X, axis=1) * ball.radius
    return ball.volume * bessel_jinc(d / 2.0, r) * _phase(ball.center, X)


def _ellipsoid_many(ell, X):
    d = ell.dim
    r = np.linalg.norm(X @ ell._A, axis=1)
    return ell.volume * bessel_jinc(d / 2.0, r) * _phase(ell.center, X)


def _box_many(box, X):
    h = box.half_widths
    return np.prod(2.0 * h * sinc(X * h), axis=1) * _phase(box.center, X)


def _ball_surface_many(ball, X):
    d = ball.dim
    r = np.linalg.norm(X, axis=1) * ball.radius
    area = sphere_area(d) * ball.radius ** (d - 1)
    return area * bessel_jinc(d / 2.0 - 1.0, r) * _phase(ball.center, X)


def _box_surface_many(box, X):
    h = box.half_widths
    f = 2.0 * h * sinc(X * h)
    total = np.zeros(len(X))
    for j in range(box.dim):
        others = np.prod(np.delete(f, j, axis=1), axis=1)
        total = total + 2.0 * np.cos(h[j] * X[:, j]) * others
    return total * _phase(box.center, X)


def ft_closed_ball(ball, xi):
    X, single = _stack(xi)
    v = _ball_many(ball, X)
    return _wrap(v, CLOSED, _closed_err(v, ball), single)


def ft_closed_ellipsoid(ell, xi):
    X, single = _stack(xi)
    v = _ellipsoid_many(ell, X)
    return _wrap(v, CLOSED, _closed_err(v, ell), single)


def ft_closed_box(box, xi):
    X, single = _stack(xi)
    v = _box_many(box, X)
    return _wrap(v, CLOSED, _closed_err(v, box), single)


def _closed_err(v, body):
    return np.full(len(v), 1e-13 * body.volume)


def _wrap(values, method, errors, single):
    if single:
        return FtValue(complex(values[0]), method, float(errors[0]))
    return [FtValue(complex(v), method, float(e)) for v, e in zip(values, errors)]


# -- polytope recursion --------------------------------------------------------


def _face_quadrature(poly, face, X):
    """Direct integral of exp(-i x.xi) over a face, for near-resonant rows."""
    basis = poly.face_basis(face)
    span = np.linalg.norm(X @ basis.T, axis=1).max() if face.dim else 0.0
    out = np.zeros(len(X), dtype=complex)
    for simplex in poly.simplices(face):
        V = poly.vertices[list(simplex)]
        diam = max((np.linalg.norm(a - b) for a in V for b in V), default=0.0)
        panels = max(1, math.ceil(span * diam / 10.0))
        pts, w = simplex_rule(V, panels, 32)
        out += _sum_exp(X, pts, w)
    return out


def _polytope_faces(poly, X, resonance_eps):
    """Integrals of exp(-i x.xi) over every face, with roundoff magnitudes.

    Uses the face-wise divergence theorem
        int_F e = (i / |xi_F|^2) sum_G (xi . n_G) int_G e,
    where xi_F is xi projected onto the direction space of F and n_G is the
    outward normal of the facet G of F inside F.
    """
    xn = np.linalg.norm(X, axis=1)
    memo = {}

    def walk(face):
        if face.key in memo:
            return memo[face.key]
        if face.dim == 0:
            (v,) = face.key
            val = np.exp(-1j * (X @ poly.vertices[v]))
            mag = np.ones(len(X))
        else:
            basis = poly.face_basis(face)
            nf2 = np.sum((X @ basis.T) ** 2, axis=1)
            V = poly.vertices[sorted(face.key)]
            diam = max(np.linalg.norm(a - b) for a in V for b in V)
            # low in-face frequency: the recursion cancels, a direct rule does not
            res = (np.sqrt(nf2) <= resonance_eps * xn) | (np.sqrt(nf2) * diam < 1.0)
            val = np.empty(len(X), dtype=complex)
            mag = np.empty(len(X))
            if (~res).any():
                acc = np.zeros(len(X), dtype=complex)
                accm = np.zeros(len(X))
                for sub, fi in face.subfaces:
                    proj = X @ poly.inner_normal(face, fi)
                    iv, im = walk(sub)
                    acc += proj * iv
                    accm += np.abs(proj) * im
                ok = ~res
                val[ok] = 1j * acc[ok] / nf2[ok]
                mag[ok] = accm[ok] / nf2[ok]
            if res.any():
                val[res] = _face_quadrature(poly, face, X[res])
                mag[res] = poly.face_measure(face)
        memo[face.key] = (val, mag)
        return memo[face.key]

    walk(poly.top)
    return memo


def _polytope_many(poly, X, resonance_eps=1e-6):
    zero = ~np.any(X, axis=1)
    vals = np.full(len(X), poly.volume, dtype=complex)
    errs = np.zeros(len(X))
    if (~zero).any():
        memo = _polytope_faces(poly, X[~zero], resonance_eps)
        v, m = memo[poly.top.key]
        vals[~zero] = v
        errs[~zero] = 64.0 * _EPS * m + 1e-14 * poly.volume
    return vals, errs


def _polytope_surface_many(poly, X, resonance_eps=1e-6):
    zero = ~np.any(X, axis=1)
    vals = np.full(len(X), poly.surface_area, dtype=complex)
    errs = np.zeros(len(X))
    if (~zero).any():
        memo = _polytope_faces(poly, X[~zero], resonance_eps)
        acc = np.zeros(int((~zero).sum()), dtype=complex)
        accm = np.zeros(len(acc))
        for f in poly.facets:
            v, m = memo[f.key]
            acc += v
            accm += m
        vals[~zero] = acc
        errs[~zero] = 64.0 * _EPS * accm + 1e-14 * poly.surface_area
    return vals, errs


def ft_polytope_exact(poly, xi, resonance_eps=1e-6):
    """Exact transform of a polytope by recursion down its face lattice.

    Faces whose in-face frequency satisfies |xi_F| <= resonance_eps |xi|, or
    is below one radian across the face, are integrated directly with a
    Gauss-Legendre rule instead.
    """
    if not resonance_eps > 0:
        raise ValueError("resonance_eps must be > 0")
    X, single = _stack(xi)
    v, e = _polytope_many(poly.as_polytope(), X, resonance_eps)
    return _wrap(v, POLYTOPE, e, single)


# -- boundary quadrature -----------------------------------------------------------


def boundary_divergence_many(body, R, omegas, spec=None, error=True):
    """chi_B^(R w) = (i/R) int_{dB} exp(-i x.R w) (w . n) dsigma, batched over w.

    The error estimate compares the rule at the target spacing with the
    rule at twice the spacing, plus a roundoff floor.
    """
    spec = spec or QuadratureSpec()
    if not R > 0:
        raise ValueError("R must be > 0 for the boundary form")
    W = np.atleast_2d(np.asarray(omegas, dtype=float))
    X = R * W
    fine = boundary_rule(body, spec.spacing(R), spec.order, spec.max_nodes)
    val = (1j / R) * _sum_exp_rows(X, fine.points, W @ fine.normal_weights.T)
    floor = 64.0 * _EPS * fine.area_weights.sum() / R
    if not error:
        return val, np.full(len(W), floor)
    coarse = boundary_rule(body, 2.0 * spec.spacing(R), spec.order, spec.max_nodes)
    val2 = (1j / R) * _sum_exp_rows(X, coarse.points, W @ coarse.normal_weights.T)
    return val, np.abs(val - val2) + floor


def ft_boundary_divergence(body, R, omega, spec=None):
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    v, e = boundary_divergence_many(body, R, omega[None, :], spec)
    return FtValue(complex(v[0]), QUADRATURE, float(e[0]))


def _surface_quadrature_many(body, X, spec, error=True):
    spec = spec or QuadratureSpec()
    R = float(np.linalg.norm(X, axis=1).max())
    fine = boundary_rule(body, spec.spacing(R), spec.order, spec.max_nodes)
    val = _sum_exp(X, fine.points, fine.area_weights)
    floor = 64.0 * _EPS * fine.area_weights.sum()
    if not error:
        return val, np.full(len(X), floor)
    coarse = boundary_rule(body, 2.0 * spec.spacing(R), spec.order, spec.max_nodes)
    val2 = _sum_exp(X, coarse.points, coarse.area_weights)
    return val, np.abs(val - val2) + floor


# -- dispatch -----------------------------------------------------------------


def ft_many(body, X, spec=None, resonance_eps=1e-6, error=True):
    """Transform at each row of X by the most exact method available.

    Returns (values, errors, method tag).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(body, Rotated):
        return ft_many(body.base, X @ body.matrix, spec, resonance_eps, error)
    if isinstance(body, Ball):
        v = _ball_many(body, X)
        return v, _closed_err(v, body), CLOSED
    if isinstance(body, Ellipsoid):
        v = _ellipsoid_many(body, X)
        return v, _closed_err(v, body), CLOSED
    if isinstance(body, AxisBox):
        v = _box_many(body, X)
        return v, _closed_err(v, body), CLOSED
    if isinstance(body, PolytopeH) or (isinstance(body, PBall) and body.p == 1.0):
        v, e = _polytope_many(body.as_polytope(), X, resonance_eps)
        return v, e, POLYTOPE
    norms = np.linalg.norm(X, axis=1)
    vals = np.full(len(X), body.volume, dtype=complex)
    errs = np.zeros(len(X))
    for R in np.unique(norms[norms > 0]):
        rows = norms == R
        v, e = boundary_divergence_many(body, R, X[rows] / R, spec, error)
        vals[rows] = v
        errs[rows] = e
    return vals, errs, QUADRATURE


def ft(body, xi, spec=None, resonance_eps=1e-6):
    """chi_B^(xi) with an absolute error estimate; exact volume at xi = 0."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (body.dim,):
        raise ValueError(f"xi must have {body.dim} components")
    v, e, method = ft_many(body, xi[None, :], spec, resonance_eps)
    if not np.any(xi):
        return FtValue(complex(body.volume, 0.0), method, 0.0)
    return FtValue(complex(v[0]), method, float(e[0]))


def ft_surface_many(body, X, spec=None, method="auto", resonance_eps=1e-6, error=True):
    """sigma^(xi) = int_{dB} exp(-i x.xi) dsigma for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if method not in ("auto", "quadrature"):
        raise ValueError("method must be 'auto' or 'quadrature'")
    if isinstance(body, Rotated):
        if method == "auto":
            return ft_surface_many(body.base, X @ body.matrix, spec, method, resonance_eps, error)
    elif method == "auto":
        if isinstance(body, Ball):
            v = _ball_surface_many(body, X)
            return v, np.full(len(X), 1e-13 * body.surface_area), CLOSED
        if isinstance(body, AxisBox):
            v = _box_surface_many(body, X)
            return v, np.full(len(X), 1e-13 * body.surface_area), CLOSED
        if isinstance(body, PolytopeH) or (isinstance(body, PBall) and body.p == 1.0):
            v, e = _polytope_surface_many(body.as_polytope(), X, resonance_eps)
            return v, e, POLYTOPE
    v, e = _surface_quadrature_many(body, X, spec, error)
    return v, e, QUADRATURE


def ft_surface_measure(body, xi, spec=None, method="auto"):
    xi = np.asarray(xi, dtype=float)
    v, e, tag = ft_surface_many(body, xi[None, :], spec, method)
    return FtValue(complex(v[0]), tag, float(e[0]))


# -- oracles ----------------------------------------------------------------------


def ft_mc_oracle(body, xi, n, seed=0, stream=0):
    """Monte Carlo over the bounding box; error is one standard error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xi = np.asarray(xi, dtype=float)
    lo, hi = body.bounding_box()
    box_vol = float(np.prod(hi - lo))
    rng = substream(seed, "mc", stream)
    s_re = s_im = q_re = q_im = 0.0
    done = 0
    while done < n:
        k = min(1 << 20, n - done)
        x = lo + (hi - lo) * rng.random((k, body.dim))
        inside = body.contains(x)
        ph = x @ xi
        re = np.where(inside, np.cos(ph), 0.0)
        im = np.where(inside, -np.sin(ph), 0.0)
        s_re += re.sum()
        s_im += im.sum()
        q_re += (re * re).sum()
        q_im += (im * im).sum()
        done += k
    m_re, m_im = s_re / n, s_im / n
    var = max(q_re / n - m_re**2, 0.0) + max(q_im / n - m_im**2, 0.0)
    se = box_vol * math.sqrt(var / max(n - 1, 1))
    return FtValue(complex(m_re, m_im) * box_vol, MONTE_CARLO, se)


def _radial_moment(a, rho):
    """int_0^rho exp(-i a r) r dr, stable for small a rho."""
    out = np.empty(len(a), dtype=complex)
    x = a * rho
    small = np.abs(x) < 0.5
    if small.any():
        z = -1j * x[small]
        term = np.ones(int(small.sum()), dtype=complex)
        total = term / 2.0
        for k in range(1, 30):
            term = term * z / k
            total = total + term / (k + 2)
        out[small] = total * rho[small] ** 2
    big = ~small
    if big.any():
        ab, rb = a[big], rho[big]
        out[big] = np.exp(-1j * ab * rb) * (1j * rb / ab + 1.0 / ab**2) - 1.0 / ab**2
    return out


def ft_polar_oracle(body, xi, n=None):
    """Volume transform of a planar body star-shaped about its center.

    chi^(xi) = int_0^{2 pi} int_0^{rho(t)} exp(-i r u(t).xi) r dr dt with the
    radial integral in closed form and the periodic angular integral by the
    trapezoid rule; the error is the change from n/2 to n nodes.
    """
    if body.dim != 2:
        raise ValueError("the polar oracle is planar only")
    xi = np.asarray(xi, dtype=float)
    R = float(np.linalg.norm(xi)) * body.circumradius
    if n is None:
        n = max(1024, 2 ** math.ceil(math.log2(8.0 * R + 64.0)))

    def rule(m):
        t = 2.0 * math.pi * np.arange(m) / m
        u = np.column_stack([np.cos(t), np.sin(t)])
        rho = 1.0 / body.gauge(u)
        return (2.0 * math.pi / m) * np.sum(_radial_moment(u @ xi, rho)) * np.exp(-1j * (body.center @ xi))

    v, v2 = rule(n), rule(n // 2)
    return FtValue(complex(v), POLAR, float(abs(v - v2)) + 1e-14 * body.volume)
