"""Smooth non-negative potentials that vanish on ``q <= 0``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import InvalidParameterError

# Value and slope a smooth potential may still have at the origin.
ORIGIN_TOL = 1e-12
# Gaussian bumps are treated as zero beyond this many widths from their centre.
BUMP_WIDTHS = 9.0


@dataclass(frozen=True)
class SmoothPotential:
    """``V(q)`` with its derivative, zero for ``q <= 0`` and for ``q >= support_end``."""

    evaluate: Callable
    derivative: Callable
    support_end: float
    description: str = ""
    peak: float | None = None

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        inside = (q > 0.0) & (q < self.support_end)
        out = np.zeros(q.shape)
        out[inside] = self.evaluate(q[inside])
        return out if out.ndim else float(out)

    def slope(self, q):
        q = np.asarray(q, dtype=float)
        inside = (q > 0.0) & (q < self.support_end)
        out = np.zeros(q.shape)
        out[inside] = self.derivative(q[inside])
        return out if out.ndim else float(out)

    @property
    def is_zero(self):
        return self.support_end <= 0.0

    def breakpoints(self, a, b):
        """Points inside ``(a, b)`` where the formula switches on or off."""
        return [v for v in (0.0, self.support_end) if a < v < b]

    def max_on(self, a, b):
        """``max V`` on ``[min(a,b), max(a,b)]``."""
        a, b = sorted((float(a), float(b)))
        lo, hi = max(a, 0.0), min(b, self.support_end)
        if self.is_zero or lo >= hi:
            return 0.0
        q = np.linspace(lo, hi, 4097)
        v = self(q)
        k = int(np.argmax(v))
        left, right = q[max(k - 1, 0)], q[min(k + 1, q.size - 1)]
        if right > left:
            res = minimize_scalar(lambda s: -self(s), bounds=(left, right), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, hi)})
            return float(max(v[k], -res.fun))
        return float(v[k])

    @property
    def maximum(self):
        if self.peak is not None:
            return self.peak
        return self.max_on(0.0, self.support_end)


def zero_potential():
    return SmoothPotential(lambda q: np.zeros_like(q), lambda q: np.zeros_like(q), 0.0, "zero", 0.0)


def gaussian_bump(height, width, center):
    """``height * exp(-(q - center)^2 / (2 width^2))`` on ``q > 0``.

    Raises:
        InvalidParameterError: if the bump is not negligible at the origin
            (value or slope above ``ORIGIN_TOL``).
    """
    if not (np.isfinite(height) and height >= 0):
        raise InvalidParameterError(f"bump height must be non-negative, got {height}")
    if not (np.isfinite(width) and width > 0):
        raise InvalidParameterError(f"bump width must be positive, got {width}")
    u0 = center / width
    v0 = height * math.exp(-0.5 * u0 * u0)
    if v0 > ORIGIN_TOL or v0 * abs(u0) / width > ORIGIN_TOL:
        raise InvalidParameterError(
            f"bump of width {width} centred at {center} is not negligible at the origin; "
            f"use center >= {BUMP_WIDTHS} * width or more"
        )
    if height == 0:
        return zero_potential()

    def value(q):
        return height * np.exp(-0.5 * ((q - center) / width) ** 2)

    def slope(q):
        return -(q - center) / width**2 * value(q)

    end = center + BUMP_WIDTHS * width
    return SmoothPotential(value, slope, end, f"gaussian_bump(height={height}, width={width}, center={center})",
                           float(height))


def tabulated_potential(q, v):
    """Cubic interpolant of samples ``v(q)`` on ``0 <= q``.

    Both end samples must be zero, so the potential switches on and off
    continuously. A clamped cubic spline (zero slope at both ends) is used,
    which keeps the force continuous and ``V''`` continuous inside; fourth-order
    trajectory integration needs that to conserve energy tightly. If the
    spline dips below zero, the shape-preserving (PCHIP) interpolant is used
    instead; it stays non-negative but is only once differentiable.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if q.ndim != 1 or q.shape != v.shape or q.size < 3:
        raise InvalidParameterError("tabulated potential needs matching 1-D arrays with at least 3 samples")
    if np.any(np.diff(q) <= 0) or q[0] < 0:
        raise InvalidParameterError("tabulated positions must be increasing and non-negative")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise InvalidParameterError("tabulated potential must be finite and non-negative")
    if abs(v[0]) > ORIGIN_TOL or abs(v[-1]) > ORIGIN_TOL:
        raise InvalidParameterError("tabulated potential must vanish at both ends")
    spline = CubicSpline(q, v, bc_type="clamped")
    dense = np.linspace(q[0], q[-1], 64 * q.size)
    if np.min(spline(dense)) < 0.0:
        spline = PchipInterpolator(q, v)
    dspline = spline.derivative()

    def value(x):
        return np.where(x >= q[0], spline(x), 0.0)

    def slope(x):
        return np.where(x >= q[0], dspline(x), 0.0)

    return SmoothPotential(value, slope, float(q[-1]), f"tabulated({q.size} samples)", float(v.max()))
