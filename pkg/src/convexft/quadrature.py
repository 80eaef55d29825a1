"""Quadrature rules on intervals, simplices and convex boundaries."""

from dataclasses import dataclass
from functools import lru_cache
import itertools
import math

import numpy as np

from convexft.errors import QuadratureBudgetExceeded
from convexft.geometry import Rotated, cube_sphere_cells

MAX_NODES = 4_000_000


@lru_cache(maxsize=64)
def gauss_legendre01(n):
    """n-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def composite01(panels, order):
    """Composite Gauss-Legendre rule on [0, 1] with equal panels."""
    x, w = gauss_legendre01(order)
    left = np.arange(panels)[:, None] / panels
    return (left + x[None, :] / panels).ravel(), np.tile(w / panels, panels)


def tensor_rule(rules):
    """Tensor product of 1-D rules: points (n, k) and weights (n,)."""
    xs = [r[0] for r in rules]
    ws = [r[1] for r in rules]
    pts = np.stack(np.meshgrid(*xs, indexing="ij"), axis=-1).reshape(-1, len(rules))
    wts = np.ones(1)
    for w in ws:
        wts = np.multiply.outer(wts, w).ravel()
    return pts, wts


def simplex_rule(vertices, panels, order):
    """Collapsed-coordinate (Duffy) product rule on a k-simplex in R^d.

    ``vertices`` has shape (k+1, d).  Returns points (n, d) and weights
    summing to the k-volume of the simplex.
    """
    V = np.asarray(vertices, dtype=float)
    k = len(V) - 1
    if k == 0:
        return V.copy(), np.ones(1)
    E = V[1:] - V[:-1]
    gram = (V[1:] - V[0]) @ (V[1:] - V[0]).T
    vol = math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(k)
    u, w = tensor_rule([composite01(panels, order)] * k)
    s = np.cumprod(u, axis=1)
    pts = V[0] + s @ E
    jac = np.prod(u ** np.arange(k - 1, -1, -1)[None, :], axis=1)
    return pts, w * jac * vol * math.factorial(k)


@dataclass(frozen=True)
class BoundaryRule:
    """Nodes on the boundary with vector weights n dsigma and scalar weights dsigma."""

    points: np.ndarray
    normal_weights: np.ndarray
    area_weights: np.ndarray

    def __len__(self):
        return len(self.points)


def _polytope_rule(poly, spacing, order, max_nodes):
    pts, nw, aw = [], [], []
    total = 0
    for f in poly.facets:
        n = poly.facet_normal(f)
        for s in poly.simplices(f):
            V = poly.vertices[list(s)]
            diam = max(np.linalg.norm(a - b) for a, b in itertools.combinations(V, 2))
            panels = max(1, math.ceil(diam / spacing))
            total += (panels * order) ** (poly.dim - 1)
            if total > max_nodes:
                raise QuadratureBudgetExceeded(f"boundary rule needs more than {max_nodes} nodes")
            p, w = simplex_rule(V, panels, order)
            pts.append(p)
            aw.append(w)
            nw.append(w[:, None] * n[None, :])
    return BoundaryRule(np.vstack(pts), np.vstack(nw), np.concatenate(aw))


def _radial_map(body, cell, s):
    p = cell.embed(s)
    return body.center + p / body.gauge(p)[..., None]


def _cell_lengths(body, cell, n=9):
    """Upper estimates of the boundary length swept along each cell coordinate."""
    d = body.dim
    lo, hi = np.array(cell.lo), np.array(cell.hi)
    grid = np.linspace(0.0, 1.0, n)
    s = lo + tensor_rule([(grid, grid)] * (d - 1))[0] * (hi - lo)
    s = s.reshape((n,) * (d - 1) + (d - 1,))
    x = _radial_map(body, cell, s)
    out = []
    for k in range(d - 1):
        seg = np.linalg.norm(np.diff(x, axis=k), axis=-1).sum(axis=k)
        out.append(1.1 * float(seg.max()))
    return out


def _radial_rule(body, spacing, order, max_nodes):
    """Central projection of the cube-sphere cells onto the boundary.

    With x = c + p / G(p) for p on a face of the cube [-1, 1]^d, the
    oriented area element is grad G(p) / G(p)^d ds.
    """
    d = body.dim
    cells = cube_sphere_cells(d)
    counts = [
        [max(1, math.ceil(length / spacing)) for length in _cell_lengths(body, cell)]
        for cell in cells
    ]
    total = sum(int(np.prod(c)) * order ** (d - 1) for c in counts)
    if total > max_nodes:
        raise QuadratureBudgetExceeded(f"boundary rule needs {total} nodes (> {max_nodes})")
    pts, nw, aw = [], [], []
    for cell, cnt in zip(cells, counts):
        lo, hi = np.array(cell.lo), np.array(cell.hi)
        s, w = tensor_rule([composite01(m, order) for m in cnt])
        s = lo + s * (hi - lo)
        w = w * np.prod(hi - lo)
        p = cell.embed(s)
        g = body.gauge(p)
        grad = body.gauge_grad(p)
        x = body.center + p / g[:, None]
        vec = grad * (w / g**d)[:, None]
        pts.append(x)
        nw.append(vec)
        aw.append(np.linalg.norm(vec, axis=1))
    return BoundaryRule(np.vstack(pts), np.vstack(nw), np.concatenate(aw))


def boundary_rule(body, spacing, order=8, max_nodes=MAX_NODES):
    """Quadrature for integrals over the boundary of ``body``.

    ``spacing`` is the physical panel length; each panel carries an
    ``order``-point Gauss-Legendre rule per dimension.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    if isinstance(body, Rotated):
        r = boundary_rule(body.base, spacing, order, max_nodes)
        m = body.matrix
        return BoundaryRule(r.points @ m.T, r.normal_weights @ m.T, r.area_weights)
    if body.smooth:
        return _radial_rule(body, spacing, order, max_nodes)
    return _polytope_rule(body.as_polytope(), spacing, order, max_nodes)
