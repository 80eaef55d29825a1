"""Decay series on geometric grids and power-law exponent fits."""

from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np

from convexft.errors import AllZeros, ConvexFTError, InsufficientData
from convexft.fourier import QuadratureSpec, ft_many, ft_surface_many
from convexft.geometry import sphere_area
from convexft.sphere import SphereScheme, is_radial, l2_average, l2_average_surface

L2_AVERAGE = "l2-average"
POINTWISE = "pointwise"
SURFACE_AVERAGE = "surface-average"
QUANTITIES = (L2_AVERAGE, POINTWISE, SURFACE_AVERAGE)

MIN_POINTS = 8
ZERO_FLOOR = 1e-14


def geometric_grid(r_min, r_max, ppo):
    """R_k = r_min 2^(k/ppo) for every k with R_k <= r_max."""
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < R_min < R_max")
    if ppo < 1:
        raise ValueError("points per octave must be >= 1")
    k = int(math.floor(ppo * math.log2(r_max / r_min) + 1e-9))
    return r_min * 2.0 ** (np.arange(k + 1) / ppo)


@dataclass
class DecaySeries:
    R: np.ndarray
    value: np.ndarray
    se: np.ndarray
    ok: np.ndarray
    quantity: str = L2_AVERAGE
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        self.ok = np.asarray(self.ok, dtype=bool)
        if np.any(np.diff(self.R) <= 0):
            raise ValueError("R must be strictly increasing")
        if np.any(self.value[self.ok] < 0):
            raise ValueError("series values must be >= 0")

    def __len__(self):
        return len(self.R)

    def to_csv(self, header=None):
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "value", "se", "ok"])
        for r, v, s, o in zip(self.R, self.value, self.se, self.ok):
            w.writerow([f"{r:.17g}", f"{v:.17g}", f"{s:.17g}", int(o)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, quantity=L2_AVERAGE, scale=1.0):
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        data = list(csv.DictReader(rows))
        return cls(
            [float(r["R"]) for r in data],
            [float(r["value"]) for r in data],
            [float(r["se"]) for r in data],
            [r["ok"] in ("1", "True", "true") for r in data],
            quantity,
            scale,
        )


@dataclass(frozen=True)
class SlopeFit:
    exponent: float
    intercept: float
    residual_rms: float
    r_min: float
    r_max: float
    method: str
    n_points: int
    stderr: float

    def summary(self):
        return (
            f"exponent={self.exponent:.4f} stderr={self.stderr:.4f} residual={self.residual_rms:.4f} "
            f"method={self.method} points={self.n_points} window=[{self.r_min:g},{self.r_max:g}]"
        )


def _evaluate_point(body, quantity, R, omega, scheme_for, spec):
    if quantity == POINTWISE:
        v, e, _ = ft_many(body, (R * omega)[None, :], spec)
        return float(abs(v[0])), float(e[0])
    scheme = scheme_for(R)
    if quantity == L2_AVERAGE:
        return l2_average(body, R, scheme, spec)
    return l2_average_surface(body, R, scheme, spec)


def scan(
    body,
    quantity,
    r_min,
    r_max,
    ppo=8,
    *,
    omega=None,
    scheme=None,
    spec=None,
    n_dir=None,
    seed=0,
    jobs=1,
):
    """Evaluate a decay quantity on the geometric grid.

    ``scheme`` may be a fixed :class:`SphereScheme` or a callable R -> scheme;
    by default each R gets :meth:`SphereScheme.default`.  Points whose
    evaluator fails are kept with ok = False.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    if ppo < 4:
        raise ValueError("points per octave must be >= 4")
    grid = geometric_grid(r_min, r_max, ppo)
    spec = spec or QuadratureSpec(seed=seed)
    if quantity == POINTWISE:
        if omega is None:
            omega = np.eye(body.dim)[0]
        omega = np.asarray(omega, dtype=float)
        omega = omega / np.linalg.norm(omega)
    if callable(scheme):
        scheme_for = scheme
    elif scheme is not None:
        scheme_for = lambda R: scheme  # noqa: E731
    else:
        scheme_for = lambda R: SphereScheme.default(body.dim, R, seed, n_dir, body)  # noqa: E731

    def one(R):
        try:
            return _evaluate_point(body, quantity, R, omega, scheme_for, spec) + (True,)
        except ConvexFTError:
            return (math.nan, math.nan, False)

    batch = _batched(body, quantity, grid, omega, spec)
    if batch is not None:
        out = batch
    elif jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as pool:
            out = list(pool.map(one, grid))
    else:
        out = [one(R) for R in grid]
    scale = body.surface_area if quantity == SURFACE_AVERAGE else body.volume
    return DecaySeries(
        grid,
        [o[0] for o in out],
        [o[1] for o in out],
        [o[2] for o in out],
        quantity,
        scale,
    )


def _batched(body, quantity, grid, omega, spec):
    """Whole-grid evaluation for pointwise values and radial averages.

    Returns None when the per-point path is needed.
    """
    if quantity == POINTWISE:
        X = grid[:, None] * omega[None, :]
    elif is_radial(body):
        X = grid[:, None] * np.eye(body.dim)[0][None, :]
    else:
        return None
    try:
        if quantity == SURFACE_AVERAGE:
            v, e, _ = ft_surface_many(body, X, spec)
        else:
            v, e, _ = ft_many(body, X, spec)
    except ConvexFTError:
        return None
    if quantity == POINTWISE:
        return [(float(abs(a)), float(b), True) for a, b in zip(v, e)]
    root = math.sqrt(sphere_area(body.dim))
    return [(float(abs(a)) * root, 0.0, True) for a in v]


def resolving_ppo(body, r_max, per_period=8, cap=16384):
    """Points per octave that sample the transform's oscillation in R.

    Phases grow like R times the body's width, so the period in R is at
    least pi / circumradius; ``per_period`` samples per period at r_max.
    """
    period = math.pi / body.circumradius
    need = math.log(2.0) * r_max * per_period / period
    return int(min(cap, max(8, math.ceil(need))))


def _local_maxima(v):
    idx = [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]
    return np.array(idx, dtype=int)


def _lstsq(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    n = len(x)
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        stderr = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    else:
        stderr = math.inf
    return float(coef[0]), float(coef[1]), rms, stderr


def default_method(quantity, d, radial=False):
    """Envelope for oscillating series (pointwise, planar or radial averages)."""
    if quantity == POINTWISE or d == 2 or radial:
        return "envelope"
    return "direct"


def fit_exponent(series, method="direct", floor=None, window=None):
    """Least-squares slope of log(value) against log(R).

    ``direct`` uses every usable point; ``envelope`` uses only strict local
    maxima of the series.  Points below ``floor`` (default 1e-14 times the
    series scale) are treated as zeros and dropped.
    """
    if method not in ("direct", "envelope"):
        raise ValueError("method must be 'direct' or 'envelope'")
    R, v, ok = series.R, series.value, series.ok.copy()
    if window is not None:
        ok &= (R >= window[0]) & (R <= window[1])
    floor = ZERO_FLOOR * series.scale if floor is None else floor
    if ok.sum() >= 1 and np.all(v[ok] <= floor):
        raise AllZeros("every value in the window is below the zero floor")
    usable = ok & (v > floor)
    Ru, vu = R[usable], v[usable]
    if method == "envelope":
        peaks = _local_maxima(vu)
        Ru, vu = Ru[peaks], vu[peaks]
        if len(Ru) < MIN_POINTS:
            raise InsufficientData(f"envelope fit needs {MIN_POINTS} local maxima, found {len(Ru)}")
    if len(Ru) < MIN_POINTS:
        raise InsufficientData(f"fit needs {MIN_POINTS} usable points, found {len(Ru)}")
    slope, icpt, rms, stderr = _lstsq(np.log(Ru), np.log(vu))
    return SlopeFit(slope, icpt, rms, float(Ru[0]), float(Ru[-1]), method, len(Ru), stderr)
