"""Invariant suite run by ``convexft check``."""

from dataclasses import dataclass
import math
import time

import numpy as np

from convexft.decay import DecaySeries, fit_exponent, geometric_grid
from convexft.fourier import (
    QuadratureSpec,
    boundary_divergence_many,
    ft_many,
    ft_mc_oracle,
    ft_polar_oracle,
)
from convexft.geometry import (
    check_c32,
    check_secant_property,
    decompose_boundary,
    make_ball,
    make_box,
    make_ellipsoid,
    make_pball,
    make_polytope_v,
    random_rotation,
    sphere_area,
)
from convexft.lattice import count_points, count_points_brute
from convexft.rng import substream
from convexft.specfun import bessel_j, sinc
from convexft.sphere import SphereScheme, l2_average, sample_directions


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _bessel_recurrence(quick):
    xs = np.array([0.5] + [2.0**k for k in range(0, 10)])
    worst = 0.0
    for nu2 in range(2, 11):
        nu = nu2 / 2.0
        lhs = bessel_j(nu - 1.0, xs) + bessel_j(nu + 1.0, xs)
        rhs = 2.0 * nu / xs * bessel_j(nu, xs)
        scale = np.maximum.reduce([np.abs(bessel_j(nu - 1.0, xs)), np.abs(bessel_j(nu + 1.0, xs)), np.abs(rhs)])
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    return worst <= 1e-8, f"max relative residual {worst:.2e} (tol 1e-8)"


def _bessel_derivative(quick):
    xs = np.array([0.5] + [2.0**k for k in range(0, 10)])
    h = 1e-5
    worst = 0.0
    for nu2 in range(2, 11):
        nu = nu2 / 2.0

        def f(x):
            return x**nu * bessel_j(nu, x)

        fd = (f(xs + h) - f(xs - h)) / (2.0 * h)
        exact = xs**nu * bessel_j(nu - 1.0, xs)
        worst = max(worst, float(np.max(np.abs(fd - exact) / np.maximum(1.0, xs**nu))))
    return worst <= 1e-6, f"max scaled error {worst:.2e} (tol 1e-6)"


def _bessel_bounded(quick):
    x = np.linspace(0.0, 200.0, 20001)
    worst = max(float(np.abs(bessel_j(n2 / 2.0, x)).max()) for n2 in range(0, 12))
    return worst <= 1.0, f"max |J| {worst:.6f}"


def _bessel_envelope(quick):
    starts = geometric_grid(32.0, 4096.0, 4)
    worst = 0.0
    for nu in (0.0, 1.5, 3.0):
        peaks = []
        for x in starts:
            grid = np.linspace(x, 2.0 * x, 4096)
            peaks.append(float(np.abs(bessel_j(nu, grid)).max()))
        s = DecaySeries(starts, peaks, np.zeros(len(starts)), np.ones(len(starts), bool))
        worst = max(worst, abs(fit_exponent(s, "direct").exponent + 0.5))
    return worst <= 0.05, f"max |slope + 1/2| {worst:.4f} (tol 0.05)"


def _sinc_values(quick):
    ok = sinc(0.0) == 1.0 and abs(sinc(math.pi)) <= 1e-15 and abs(sinc(1.0) - 0.8414709848078965) <= 1e-15
    return ok, f"sinc(0)={sinc(0.0)}, sinc(pi)={sinc(math.pi):.1e}, sinc(1)={sinc(1.0):.10f}"


def _test_bodies():
    return [
        make_ball(2, 1.0),
        make_ball(3, 0.8, [0.1, 0.0, -0.2]),
        make_box([0.5, 0.3]),
        make_box([0.5, 0.4, 0.3], [0.2, 0.0, 0.1]),
        make_ellipsoid([1.0, 0.5, 0.4]),
        make_polytope_v([[0, 0], [1, 0], [0.2, 0.9]]),
    ]


def _random_xi(d, n, seed, scale=20.0):
    return substream(seed, "check", "xi", d).normal(size=(n, d)) * scale


def _conjugate_symmetry(quick):
    worst = 0.0
    for b in _test_bodies():
        X = _random_xi(b.dim, 20, 1)
        v, e, _ = ft_many(b, X)
        w, f, _ = ft_many(b, -X)
        worst = max(worst, float(np.max(np.abs(w - np.conj(v)) - e - f)))
    return worst <= 0.0, f"max excess over error estimates {worst:.2e}"


def _scaling(quick):
    worst = 0.0
    for b in _test_bodies()[:5]:
        X = _random_xi(b.dim, 20, 2)
        for s in (0.5, 2.0, 3.0):
            lhs = np.abs(ft_many(b.scale(s), X)[0])
            rhs = s**b.dim * np.abs(ft_many(b, s * X)[0])
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst <= 1e-12, f"max deviation {worst:.2e} (tol 1e-12)"


def _translation(quick):
    worst = 0.0
    for b in _test_bodies()[:5]:
        X = _random_xi(b.dim, 20, 3)
        a = substream(0, "check", "shift").normal(size=b.dim)
        lhs = np.abs(ft_many(b.translate(a), X)[0])
        rhs = np.abs(ft_many(b, X)[0])
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst <= 1e-12, f"max deviation {worst:.2e} (tol 1e-12)"


def _trivial_bound(quick):
    worst = -math.inf
    for b in _test_bodies():
        X = _random_xi(b.dim, 50, 4, scale=3.0)
        v, e, _ = ft_many(b, X)
        worst = max(worst, float(np.max(np.abs(v) - e - b.volume)))
    return worst <= 0.0, f"max |ft| - |B| = {worst:.2e}"


def _method_agreement(quick):
    sq = make_box([0.5, 0.5])
    bodies = [make_ball(2, 1.0), sq, sq.as_polytope(), make_polytope_v([[0, 0], [1, 0], [0, 1]])]
    spec = QuadratureSpec()
    rng = substream(0, "check", "agreement")
    worst = -math.inf
    for R in (1.0, 10.0, 40.0) if quick else (1.0, 5.0, 10.0, 50.0, 100.0):
        W = rng.normal(size=(5, 2))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        for b in bodies:
            v, e, _ = ft_many(b, R * W)
            q, qe = boundary_divergence_many(b, R, W, spec)
            worst = max(worst, float(np.max(np.abs(v - q) - np.maximum(e, qe) - 1e-8)))
    return worst <= 0.0, f"max excess {worst:.2e}"


def _divergence_vs_mc(quick):
    bodies = [make_pball(2, 3.0, 1.0), make_ellipsoid([1.0, 0.6]), make_polytope_v([[0, 0], [1, 0], [0.3, 0.8]])]
    n = 200_000 if quick else 2_000_000
    worst = -math.inf
    for k, b in enumerate(bodies):
        for R in (1.0, 10.0, 50.0):
            w = np.array([math.cos(0.3 + k), math.sin(0.3 + k)])
            q, qe = boundary_divergence_many(b, R, w[None, :])
            mc = ft_mc_oracle(b, R * w, n, seed=k)
            worst = max(worst, float(abs(q[0] - mc.value) - 3.0 * mc.error - qe[0]))
    return worst <= 0.0, f"max excess over 3 SE + quadrature error {worst:.2e}"


def _weights(quick):
    d2 = sample_directions(SphereScheme(2, "uniform-angle", 4096))[1].sum()
    d3 = sample_directions(SphereScheme(3, "sobol", 1024))[1].sum()
    ok = abs(d2 - 2 * math.pi) <= 1e-12 and abs(d3 - 4 * math.pi) <= 1e-12
    return ok, f"sum of weights d=2 {d2:.15f}, d=3 {d3:.15f}"


def _rotation_invariance(quick):
    b = make_box([0.5, 0.3])
    rng = substream(0, "check", "rotation")
    worst = 0.0
    for R in (8.0, 64.0) if quick else (8.0, 64.0, 512.0):
        base = l2_average(b, R)[0]
        for _ in range(3):
            rb = b.rotate(random_rotation(2, rng))
            worst = max(worst, abs(l2_average(rb, R)[0] - base) / base)
    return worst <= 1e-3, f"max relative change {worst:.2e} (tol 1e-3)"


def _average_bound(quick):
    worst = -math.inf
    for b in (make_box([0.5, 0.5]), make_box([0.5, 0.5, 0.5]), make_ellipsoid([1.0, 0.5, 0.4])):
        top = b.volume * math.sqrt(sphere_area(b.dim))
        for R in (0.5, 4.0, 32.0):
            worst = max(worst, l2_average(b, R)[0] - top)
    return worst <= 0.0, f"max A(R) - |B||S|^1/2 = {worst:.2e}"


def _power_law(quick):
    R = geometric_grid(32.0, 4096.0, 8)
    fit = fit_exponent(DecaySeries(R, R**-1.5, 0 * R, R > 0), "direct")
    scaled = fit_exponent(DecaySeries(R, 7.0 * R**-1.5, 0 * R, R > 0), "direct")
    ok = abs(fit.exponent + 1.5) <= 1e-12 and fit.residual_rms <= 1e-12
    ok &= abs(scaled.exponent - fit.exponent) <= 1e-12
    return ok, f"exponent {fit.exponent:.15f}, residual {fit.residual_rms:.1e}"


def _envelope_recovery(quick):
    R = geometric_grid(32.0, 4096.0, 16)
    worst = 0.0
    for a in (0.5, 1.0, 1.5, 2.0):
        s = DecaySeries(R, np.abs(np.cos(R)) * R**-a, 0 * R, R > 0)
        worst = max(worst, abs(fit_exponent(s, "envelope").exponent + a))
    return worst <= 0.03, f"max |fitted - planted| {worst:.4f} (tol 0.03)"


def _count_oracle(quick):
    rng = substream(0, "check", "lattice")
    bodies = [make_ball(2, 1.0), make_box([0.5, 0.35]), make_pball(2, 4.0, 1.0), make_polytope_v([[0, 0], [1, 0], [0, 1]])]
    n = 12 if quick else 50
    bad = 0
    for k in range(n):
        b = bodies[k % len(bodies)]
        t = rng.uniform(1.0, 30.0)
        r = random_rotation(2, rng)
        bad += count_points(b, t, r) != count_points_brute(b, t, r)
    return bad == 0, f"{n - bad}/{n} counts equal the brute-force oracle"


def _volume_consistency(quick):
    c = count_points(make_ball(2, 1.0), 512.0)
    err = abs(c / 512.0**2 - math.pi)
    return err <= 0.01, f"|count/t^2 - pi| = {err:.2e} at t = 512"


def _secant(quick):
    bodies = [make_ball(3, 1.0), make_box([0.5, 0.4, 0.3]), make_pball(2, 4.0, 1.0), make_ellipsoid([1.0, 0.5, 0.4])]
    worst = 0.0
    for b in bodies:
        for p in decompose_boundary(b):
            worst = max(worst, check_secant_property(p, 500 if quick else 10_000))
    return worst <= 1 / math.sqrt(2) - 1e-6, f"max chord slope {worst:.4f} (tol {1 / math.sqrt(2) - 1e-6:.4f})"


def _c32_sphere(quick):
    b = make_ball(3, 1.0)
    worst = max(check_c32(b, p, 200 if quick else 2000) for p in decompose_boundary(b))
    return worst <= 1.05, f"max empirical constant {worst:.4f} (tol 1.05)"


def _polar_oracle(quick):
    b = make_pball(2, 4.0, 1.0)
    xi = np.array([7.0, 3.0])
    q, qe = boundary_divergence_many(b, float(np.linalg.norm(xi)), (xi / np.linalg.norm(xi))[None, :])
    p = ft_polar_oracle(b, xi)
    gap = abs(q[0] - p.value)
    return gap <= qe[0] + p.error + 1e-10, f"boundary vs polar gap {gap:.2e}"


CHECKS = [
    ("bessel recurrence", _bessel_recurrence),
    ("bessel derivative identity", _bessel_derivative),
    ("bessel bounded by 1", _bessel_bounded),
    ("bessel envelope slope", _bessel_envelope),
    ("sinc values", _sinc_values),
    ("conjugate symmetry", _conjugate_symmetry),
    ("scaling", _scaling),
    ("translation modulus", _translation),
    ("trivial bound", _trivial_bound),
    ("method agreement", _method_agreement),
    ("divergence identity vs monte carlo", _divergence_vs_mc),
    ("polar oracle agreement", _polar_oracle),
    ("sphere weights", _weights),
    ("rotation invariance of A(R)", _rotation_invariance),
    ("A(R) upper bound", _average_bound),
    ("power-law fit recovery", _power_law),
    ("envelope fit recovery", _envelope_recovery),
    ("lattice count oracle", _count_oracle),
    ("lattice volume consistency", _volume_consistency),
    ("secant property", _secant),
    ("C^{3/2} constant on sphere", _c32_sphere),
]


def run_suite(quick=True, only=None):
    out = []
    for name, fn in CHECKS:
        if only and not any(o.lower() in name.lower() for o in only):
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn(quick)
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return out


def format_table(results):
    width = max((len(r.name) for r in results), default=5)
    lines = [f"{'check':<{width}}  result  seconds  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.2f}  {r.detail}")
    return "\n".join(lines)
