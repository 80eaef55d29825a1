"""Lattice-point counts of dilated rotated bodies and their discrepancy."""

from dataclasses import dataclass
import csv
import io
import json
import math

import numpy as np

from convexft.decay import DecaySeries, fit_exponent, geometric_grid
from convexft.errors import DimensionUnsupported
from convexft.geometry import random_rotation, sphere_family_rotation
from convexft.rng import substream

HAAR = "haar"
SPHERE = "sphere"
FAMILIES = (HAAR, SPHERE)
LATTICE_FLOOR = 1e-9


def _dilate(body, t, rot):
    b = body if rot is None else body.rotate(rot)
    return b.scale(t)


def _column_counts(body, base, axis_vec):
    """Closed-membership counts of integers k with base + k e in body, per row of base."""
    lo, hi = body.line_interval(base, axis_vec)
    hit = np.isfinite(lo)
    if not hit.any():
        return np.zeros(len(base), dtype=np.int64)
    base, lo, hi = base[hit], lo[hit], hi[hit]
    klo = np.ceil(lo)
    khi = np.floor(hi)
    # the interval ends are computed in floating point; settle the integers
    # next to each end with the membership test
    for _ in range(2):
        below = body.contains(base + (klo - 1.0)[:, None] * axis_vec)
        klo = np.where(below, klo - 1.0, klo)
        above = body.contains(base + (khi + 1.0)[:, None] * axis_vec)
        khi = np.where(above, khi + 1.0, khi)
    for _ in range(2):
        bad = (klo <= khi) & ~body.contains(base + klo[:, None] * axis_vec)
        klo = np.where(bad, klo + 1.0, klo)
        bad = (klo <= khi) & ~body.contains(base + khi[:, None] * axis_vec)
        khi = np.where(bad, khi - 1.0, khi)
    out = np.zeros(len(hit), dtype=np.int64)
    out[hit] = np.maximum(khi - klo + 1.0, 0.0).astype(np.int64)
    return out


def _integer_range(body, axis):
    e = np.zeros(body.dim)
    e[axis] = 1.0
    return int(math.ceil(-body.support(-e) - 1e-9)), int(math.floor(body.support(e) + 1e-9))


def count_points(body, t, rot=None):
    """#{ x in Z^d : x in t rot(B) }, boundary points included.

    The last coordinate is resolved by one chord per integer column; the
    other coordinates run over the support-function bounding box.
    """
    if not t > 0:
        raise ValueError("dilation t must be > 0")
    d = body.dim
    if d not in (2, 3):
        raise DimensionUnsupported(f"exact counting is implemented for d = 2, 3, not d = {d}")
    B = _dilate(body, t, rot)
    ranges = [_integer_range(B, k) for k in range(d - 1)]
    axes = [np.arange(a, b + 1, dtype=float) for a, b in ranges]
    if any(len(a) == 0 for a in axes):
        return 0
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d - 1)
    base = np.column_stack([grid, np.zeros(len(grid))])
    e = np.zeros(d)
    e[-1] = 1.0
    total = 0
    step = 1 << 16
    for a in range(0, len(base), step):
        total += int(_column_counts(B, base[a : a + step], e).sum())
    return total


def count_points_brute(body, t, rot=None):
    """Reference count by membership tests over the whole bounding box."""
    B = _dilate(body, t, rot)
    ranges = [_integer_range(B, k) for k in range(body.dim)]
    axes = [np.arange(a, b + 1, dtype=float) for a, b in ranges]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, body.dim)
    return int(B.contains(pts).sum())


def rotation_ensemble(d, n_rot, seed=0, family=HAAR):
    """Seeded rotations; rotation j depends only on (seed, j)."""
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    out = []
    for j in range(n_rot):
        rng = substream(seed, "lattice", family, j)
        if family == HAAR:
            out.append(random_rotation(d, rng))
        else:
            w = rng.standard_normal(d)
            out.append(sphere_family_rotation(w / np.linalg.norm(w)))
    return out


@dataclass
class DiscrepancyEnsemble:
    t: np.ndarray
    rotations: list
    counts: np.ndarray
    volume: float
    dim: int

    @property
    def discrepancy(self):
        return self.counts - (self.t**self.dim * self.volume)[:, None]

    @property
    def rms(self):
        return np.sqrt(np.mean(self.discrepancy**2, axis=1))

    @property
    def se(self):
        """Standard error of the RMS over rotations (delta method)."""
        D2 = self.discrepancy**2
        n = D2.shape[1]
        ms = D2.mean(axis=1)
        sd = D2.std(axis=1, ddof=1) if n > 1 else np.zeros(len(ms))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(ms > 0, sd / math.sqrt(n) / (2.0 * np.sqrt(ms)), 0.0)

    def series(self):
        return DecaySeries(self.t, self.rms, self.se, np.ones(len(self.t), bool), "lattice-rms", 1.0)

    def fit(self, floor=LATTICE_FLOOR):
        return fit_exponent(self.series(), "direct", floor=floor)

    def to_csv(self, header=None):
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "rot_index", "count", "discrepancy"])
        D = self.discrepancy
        for i, t in enumerate(self.t):
            for j in range(len(self.rotations)):
                w.writerow([f"{t:.17g}", j, int(self.counts[i, j]), f"{D[i, j]:.17g}"])
        return buf.getvalue()

    def summary_csv(self, header=None):
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "rms", "se"])
        for t, r, s in zip(self.t, self.rms, self.se):
            w.writerow([f"{t:.17g}", f"{r:.17g}", f"{s:.17g}"])
        return buf.getvalue()


def discrepancy_ensemble(body, ts, n_rot, seed=0, family=HAAR, jobs=1):
    """Counts for every (t, rotation) pair, assembled in grid order."""
    ts = np.asarray(ts, dtype=float)
    rots = rotation_ensemble(body.dim, n_rot, seed, family)
    pairs = [(i, j) for i in range(len(ts)) for j in range(n_rot)]

    def one(pair):
        i, j = pair
        return count_points(body, ts[i], rots[j])

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as pool:
            flat = list(pool.map(one, pairs))
    else:
        flat = [one(p) for p in pairs]
    counts = np.array(flat, dtype=np.int64).reshape(len(ts), n_rot)
    return DiscrepancyEnsemble(ts, rots, counts, body.volume, body.dim)


def rotational_l2(body, t, n_rot, seed=0, family=HAAR, rotations=None):
    """RMS over a rotation ensemble of count(t rho B) - t^d |B|.

    Returns the RMS and the per-rotation discrepancies.
    """
    if rotations is None:
        if n_rot < 16:
            raise ValueError("n_rot must be >= 16")
        rotations = rotation_ensemble(body.dim, n_rot, seed, family)
    vol = body.volume * t**body.dim
    D = np.array([count_points(body, t, r) - vol for r in rotations])
    return float(np.sqrt(np.mean(D**2))), D.tolist()


def lattice_exponent_fit(body, t_min, t_max, ppo=8, n_rot=64, seed=0, family=HAAR, jobs=1):
    """Fit log RMS discrepancy against log t; returns (fit, ensemble)."""
    if t_max / t_min < 16:
        raise ValueError("need t_max / t_min >= 16")
    ens = discrepancy_ensemble(body, geometric_grid(t_min, t_max, ppo), n_rot, seed, family, jobs)
    return ens.fit(), ens

