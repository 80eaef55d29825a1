"""Direction sampling on S^{d-1} and spherical L2 averages of transforms.

A(R) = ( int_{S^{d-1}} |chi_B^(R w)|^2 dw )^{1/2} with the unnormalized
surface measure dw.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from convexft.fourier import ft_many, ft_surface_many
from convexft.geometry import Ball, Rotated, orthonormal_complement, sphere_area
from convexft.rng import sub_seed, substream

UNIFORM_ANGLE = "uniform-angle"
SOBOL = "sobol"
MC = "mc"
GAUSS_MAP = "gauss-map"
KINDS = (UNIFORM_ANGLE, SOBOL, MC, GAUSS_MAP)

JACKKNIFE_BLOCKS = 10


@dataclass(frozen=True)
class SphereScheme:
    """Direction rule on S^{d-1}.

    ``uniform-angle`` is the equispaced trapezoid rule (d = 2 only);
    ``sobol`` maps a scrambled Sobol sequence through the Gaussian inverse
    CDF; ``mc`` uses seeded Gaussian vectors; ``gauss-map`` mixes uniform
    Sobol directions with heavy-tailed caps around the body's flat normals
    and reweights by the mixture density, which stays unbiased while
    resolving the narrow peaks that flat faces produce.
    """

    d: int
    kind: str = SOBOL
    n: int = 1 << 14
    seed: int = 0
    focus: np.ndarray | None = field(default=None, compare=False)
    focus_scale: float = 0.1

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be >= 2")
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}; choose from {KINDS}")
        if self.n < 8:
            raise ValueError("need at least 8 directions")
        if self.kind == UNIFORM_ANGLE and self.d != 2:
            raise ValueError("the uniform-angle rule exists for d = 2 only")

    @classmethod
    def default(cls, d, R=0.0, seed=0, n=None, body=None):
        """Equispaced angles with max(4096, 8R) nodes in the plane; 2^14
        directions otherwise, focused on flat normals when the body has any."""
        if d == 2:
            return cls(2, UNIFORM_ANGLE, n or max(4096, int(math.ceil(8 * R))), seed)
        n = n or (1 << 14)
        if body is not None:
            return cls.focused(body, R, n, seed)
        return cls(d, SOBOL, n, seed)

    @classmethod
    def focused(cls, body, R, n=1 << 14, seed=0):
        normals = body.flat_normals()
        if len(normals) == 0:
            return cls(body.dim, SOBOL, n, seed)
        scale = min(1.0, math.pi / (max(R, 1e-12) * body.circumradius))
        return cls(body.dim, GAUSS_MAP, n, seed, np.asarray(normals, dtype=float), scale)

    @property
    def total_measure(self):
        return sphere_area(self.d)


def _sobol(dim, n, seed, *names):
    eng = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng(sub_seed(seed, *names)))
    m = int(math.log2(n))
    if 2**m == n:
        return eng.random_base2(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return eng.random(n)


def _normalize(g):
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _uniform_dirs(scheme, n, tag):
    if scheme.kind == MC:
        return _normalize(substream(scheme.seed, "sphere", tag).standard_normal((n, scheme.d)))
    u = _sobol(scheme.d, n, scheme.seed, "sphere", tag)
    return _normalize(ndtri(np.clip(u, 1e-16, 1 - 1e-16)))


def _cap_density(scheme, w):
    """Mixture density of the cap components at directions w (rows)."""
    d = scheme.d
    s = scheme.focus_scale
    const = math.gamma(d / 2.0) / (math.pi ** (d / 2.0) * s ** (d - 1))
    total = np.zeros(len(w))
    for nrm in scheme.focus:
        c = w @ nrm
        pos = c > 0
        t2 = np.where(pos, 1.0 / np.where(pos, c, 1.0) ** 2 - 1.0, 0.0)
        f = const * (1.0 + t2 / s**2) ** (-d / 2.0)
        total += np.where(pos, f * (1.0 + t2) ** (d / 2.0), 0.0)
    return total / len(scheme.focus)


def _gauss_map_nodes(scheme):
    d, n = scheme.d, scheme.n
    n_cap = n // 2
    uni = _uniform_dirs(scheme, n - n_cap, "uniform")
    k = len(scheme.focus)
    u = _sobol(d, n_cap, scheme.seed, "sphere", "caps")
    z = ndtri(np.clip(u, 1e-16, 1 - 1e-16))
    t = scheme.focus_scale * z[:, : d - 1] / np.abs(z[:, d - 1 :])
    which = np.arange(n_cap) % k
    caps = np.empty((n_cap, d))
    for j, nrm in enumerate(scheme.focus):
        rows = which == j
        basis = orthonormal_complement(nrm)
        caps[rows] = _normalize(nrm + t[rows] @ basis)
    dirs = np.empty((n, d))
    dirs[0::2][: n - n_cap] = uni
    dirs[1::2][:n_cap] = caps
    p = 0.5 / sphere_area(d) + 0.5 * _cap_density(scheme, dirs)
    return dirs, 1.0 / (n * p)


def sample_directions(scheme):
    """Directions (N, d) and weights (N,) summing to about |S^{d-1}|."""
    if scheme.kind == UNIFORM_ANGLE:
        theta = 2.0 * math.pi * np.arange(scheme.n) / scheme.n
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        return dirs, np.full(scheme.n, 2.0 * math.pi / scheme.n)
    if scheme.kind == GAUSS_MAP:
        if scheme.focus is None or len(scheme.focus) == 0:
            raise ValueError("gauss-map scheme needs focus normals")
        return _gauss_map_nodes(scheme)
    dirs = _uniform_dirs(scheme, scheme.n, "uniform")
    return dirs, np.full(scheme.n, sphere_area(scheme.d) / scheme.n)


def _jackknife(f2, weights):
    """Value and standard error of sqrt(sum w f2) by blocks i mod 10."""
    total = float(np.sum(weights * f2))
    n = len(f2)
    nb = min(JACKKNIFE_BLOCKS, n)
    parts = np.array([np.sum((weights * f2)[b::nb]) for b in range(nb)])
    loo = (total - parts) * nb / (nb - 1)
    var = (nb - 1) / nb * np.sum((loo - loo.mean()) ** 2)
    value = math.sqrt(max(total, 0.0))
    se = math.sqrt(var) / (2.0 * value) if value > 0 else 0.0
    return value, se


def is_radial(body):
    while isinstance(body, Rotated):
        body = body.base
    return isinstance(body, Ball)


def _average(evaluate, body, R, scheme):
    if is_radial(body):
        e1 = np.zeros(body.dim)
        e1[0] = 1.0
        v = evaluate(R * e1[None, :])
        return float(abs(v[0])) * math.sqrt(sphere_area(body.dim)), 0.0
    dirs, w = sample_directions(scheme)
    f2 = np.abs(evaluate(R * dirs)) ** 2
    if scheme.kind == UNIFORM_ANGLE:
        value = math.sqrt(float(np.sum(w * f2)))
        half = math.sqrt(float(np.sum(2.0 * w[::2] * f2[::2])))
        return value, abs(value - half)
    return _jackknife(f2, w)


def l2_average(body, R, scheme=None, spec=None):
    """A(R) and its directional sampling error.

    Balls use the radial closed form with zero sampling error.  For the
    planar trapezoid rule the error is the change from N/2 to N nodes;
    otherwise it is a 10-block jackknife.
    """
    if R < 0:
        raise ValueError("R must be >= 0")
    if R == 0:
        return body.volume * math.sqrt(sphere_area(body.dim)), 0.0
    scheme = scheme or SphereScheme.default(body.dim, R, body=body)
    return _average(lambda X: ft_many(body, X, spec, error=False)[0], body, R, scheme)


def l2_average_surface(body, R, scheme=None, spec=None):
    """Same average with the surface-measure transform."""
    if R < 0:
        raise ValueError("R must be >= 0")
    if R == 0:
        return body.surface_area * math.sqrt(sphere_area(body.dim)), 0.0
    scheme = scheme or SphereScheme.default(body.dim, R, body=body)
    return _average(lambda X: ft_surface_many(body, X, spec, error=False)[0], body, R, scheme)
