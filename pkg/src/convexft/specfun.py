"""Bessel functions of the first kind for integer and half-integer order,
and the sinc kernel.

Only the orders needed by closed-form transforms of balls and spheres are
covered: nu = nu2/2 with nu2 a non-negative integer.  Small arguments use
the ascending series, large ones the Hankel expansion for the two lowest
orders followed by upward recurrence (stable while nu < x).
"""

from dataclasses import dataclass
import math

import numpy as np

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class BesselOrder:
    nu2: int

    def __post_init__(self):
        if int(self.nu2) != self.nu2 or self.nu2 < 0:
            raise ValueError(f"twice-order must be a non-negative integer, got {self.nu2}")

    @property
    def nu(self):
        return self.nu2 / 2.0

    @classmethod
    def of(cls, nu):
        nu2 = 2.0 * float(nu)
        if abs(nu2 - round(nu2)) > 1e-12:
            raise ValueError(f"only integer and half-integer orders are supported, got {nu}")
        return cls(int(round(nu2)))


def _order(order):
    return order if isinstance(order, BesselOrder) else BesselOrder.of(order)


def seam(order):
    """Argument where the series hands over to the asymptotic branch."""
    return max(12.0, 2.0 * _order(order).nu)


def _series_scaled(nu, x):
    """sum_k (-(x/2)^2)^k / (k! Gamma(k+nu+1)) * Gamma(nu+1).

    Equals Gamma(nu+1) (2/x)^nu J_nu(x); 1 at x = 0.
    """
    q = -(0.5 * x) ** 2
    term = np.ones_like(x)
    total = np.ones_like(x)
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)) or k > 400:
            break
    return total


def _hankel(nu, x):
    """Large-argument expansion of J_nu, truncated at the smallest term."""
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = np.ones_like(x)
    last = np.full_like(x, np.inf)
    live = np.ones(x.shape, dtype=bool)
    for k in range(1, 120):
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(a)
        live &= mag < last
        if not live.any():
            break
        last = np.where(live, mag, last)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q = q + np.where(live, sign * a, 0.0)
        else:
            p = p + np.where(live, sign * a, 0.0)
        if np.all(mag[live] < 1e-17):
            break
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _large(nu2, x):
    """J_nu for x above the seam: two starting orders, then upward recurrence."""
    if nu2 % 2:
        s = _SQRT_2_OVER_PI / np.sqrt(x)
        prev, cur, mu = s * np.cos(x), s * np.sin(x), 0.5
    else:
        prev, cur, mu = _hankel(0.0, x), _hankel(1.0, x), 1.0
        if nu2 == 0:
            return prev
    target = nu2 / 2.0
    while mu < target:
        prev, cur = cur, (2.0 * mu / x) * cur - prev
        mu += 1.0
    return cur


def bessel_j(order, x):
    """J_nu(x) for x >= 0.  Accepts scalars or arrays."""
    order = _order(order)
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("bessel_j is defined here for x >= 0 only")
    nu = order.nu
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat <= seam(order)
    if small.any():
        xs = flat[small]
        out[small] = _series_scaled(nu, xs) * (0.5 * xs) ** nu / math.gamma(nu + 1.0)
    if (~small).any():
        out[~small] = _large(order.nu2, flat[~small])
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(x) == 0 else out


def bessel_jinc(order, x):
    """Gamma(nu+1) (2/x)^nu J_nu(x), continuous through x = 0 where it is 1.

    The Fourier transform of the unit ball in R^d is |B| times this at
    order d/2, which avoids the 0/0 of the textbook form.
    """
    order = _order(order)
    arr = np.asarray(x, dtype=float)
    nu = order.nu
    flat = np.abs(np.atleast_1d(arr).ravel())
    out = np.empty_like(flat)
    small = flat <= seam(order)
    if small.any():
        out[small] = _series_scaled(nu, flat[small])
    if (~small).any():
        xl = flat[~small]
        out[~small] = math.gamma(nu + 1.0) * (2.0 / xl) ** nu * _large(order.nu2, xl)
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(x) == 0 else out


def sinc(x):
    """sin(x)/x with the removable singularity filled."""
    arr = np.asarray(x, dtype=float)
    x2 = arr * arr
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(np.abs(arr) < 1e-4, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(arr) / arr)
    return float(out) if np.ndim(x) == 0 else out
