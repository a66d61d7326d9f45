"""Numerical kernels: momentum quadrature, time grids, phase unwrapping,
finite differences and root finding.

All amplitude integrals in the package are written as momentum integrals of
the form ``sum_j w_j c_j exp(-i E_j t)``; :func:`energy_transform` evaluates
them on a whole time grid at once.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .errors import AliasingError, BracketError, InvalidParameterError, ResolutionError

PANEL_ORDER = 8
POINTS_PER_PERIOD = 16
RULES = ("composite-gauss", "trapezoid")


@lru_cache(maxsize=8)
def _gauss_legendre(order):
    return leggauss(order)


@dataclass(frozen=True)
class QuadratureSpec:
    """A fixed quadrature rule on a finite momentum window.

    ``composite-gauss`` splits the window into equal panels of
    ``PANEL_ORDER`` Gauss-Legendre points; its nodes never touch the window
    edges, which keeps integrable ``sqrt(p)`` endpoint behaviour harmless.
    ``trapezoid`` uses ``points`` equally spaced nodes including the edges.
    """

    window: tuple[float, float]
    points: int = 256
    rule: str = "composite-gauss"

    def __post_init__(self):
        lo, hi = self.window
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
            raise InvalidParameterError(f"quadrature window must satisfy lower < upper, got {self.window}")
        if self.points < PANEL_ORDER:
            raise InvalidParameterError(f"quadrature needs at least {PANEL_ORDER} points, got {self.points}")
        if self.rule not in RULES:
            raise InvalidParameterError(f"unknown quadrature rule {self.rule!r}; expected one of {RULES}")

    @property
    def width(self):
        return self.window[1] - self.window[0]

    def nodes(self):
        """Return ``(nodes, weights)`` as float arrays."""
        lo, hi = self.window
        if self.rule == "trapezoid":
            p = np.linspace(lo, hi, self.points)
            w = np.full(self.points, (hi - lo) / (self.points - 1))
            w[0] *= 0.5
            w[-1] *= 0.5
            return p, w
        panels = math.ceil(self.points / PANEL_ORDER)
        x, w = _gauss_legendre(PANEL_ORDER)
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        p = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return p, weights


def required_points(width, max_frequency):
    """Points needed for ``POINTS_PER_PERIOD`` samples per oscillation period."""
    periods = abs(width) * abs(max_frequency) / (2.0 * math.pi)
    return int(math.ceil(POINTS_PER_PERIOD * periods))


def resolved_spec(window, max_frequency, minimum=256, rule="composite-gauss"):
    """Smallest rule on ``window`` that meets the resolution requirement."""
    lo, hi = window
    points = max(minimum, required_points(hi - lo, max_frequency))
    if rule == "composite-gauss":
        points = PANEL_ORDER * math.ceil(points / PANEL_ORDER)
    return QuadratureSpec((lo, hi), points, rule)


def check_resolution(spec, max_frequency):
    need = required_points(spec.width, max_frequency)
    if spec.points < need:
        raise ResolutionError(
            f"quadrature on {spec.window} with {spec.points} points cannot resolve phase frequency "
            f"{max_frequency:.6g}; at least {need} points are required",
            required_points=need,
        )


def oscillatory_integral(integrand, spec, max_frequency=0.0):
    """Integrate a complex function of ``p`` over ``spec.window``.

    ``max_frequency`` is the caller's bound on ``|d phase / dp|`` of the
    integrand inside the window (in radians per unit momentum).

    Raises:
        ResolutionError: if ``spec`` has fewer than 16 points per period of
            the fastest oscillation.
    """
    check_resolution(spec, max_frequency)
    p, w = spec.nodes()
    return complex(np.sum(w * np.asarray(integrand(p), dtype=complex)))


def energy_transform(times, energies, coefficients, chunk_elements=4_000_000):
    """Evaluate ``sum_j coefficients[j] * exp(-1j * energies[j] * t)`` for each t."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    energies = np.asarray(energies, dtype=float)
    coefficients = np.asarray(coefficients, dtype=complex)
    out = np.empty(times.shape, dtype=complex)
    rows = max(1, chunk_elements // max(1, energies.size))
    for start in range(0, times.size, rows):
        block = times[start:start + rows]
        out[start:start + rows] = np.exp(-1j * np.outer(block, energies)) @ coefficients
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``count`` instants covering ``[t_min, t_max]``."""

    t_min: float
    t_max: float
    count: int = 2001

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise InvalidParameterError(f"time grid needs t_min < t_max, got {self.t_min}, {self.t_max}")
        if self.count < 2:
            raise InvalidParameterError(f"time grid needs at least 2 points, got {self.count}")

    @property
    def times(self):
        return np.linspace(self.t_min, self.t_max, self.count)

    @property
    def spacing(self):
        return (self.t_max - self.t_min) / (self.count - 1)

    def refined(self, factor=2):
        return TimeGrid(self.t_min, self.t_max, factor * (self.count - 1) + 1)

    @classmethod
    def spanning(cls, t_min, t_max, max_spacing, minimum=801):
        count = max(minimum, int(math.ceil((t_max - t_min) / max_spacing)) + 1)
        return cls(float(t_min), float(t_max), count)


def time_integral(grid, values):
    return float(trapezoid(values, dx=grid.spacing))


def band_limited_spacing(energies):
    """Time step that samples ``|sum c_j exp(-i E_j t)|^2`` four times per Nyquist period.

    The squared modulus only contains frequencies up to ``max E - min E``,
    so trapezoidal time integrals on this grid are spectrally accurate.
    """
    spread = float(np.ptp(energies)) if np.size(energies) > 1 else 0.0
    if spread <= 0.0:
        return 1.0
    return math.pi / (2.0 * spread)


def spectral_time_grid(energies, weights, delays, pad_sigmas=10.0, tail=1e-9):
    """Time window spanning the per-energy arrival times of a weighted spectrum.

    ``delays`` are the stationary-phase arrival times of each node. The window
    covers the ``tail`` to ``1 - tail`` weighted quantiles of the delays,
    padded by ``pad_sigmas`` times the intrinsic width ``1 / (2 dE)`` of the
    weighted energy spread ``dE``.
    """
    energies = np.asarray(energies, dtype=float)
    weights = np.asarray(weights, dtype=float)
    delays = np.asarray(delays, dtype=float)
    total = weights.sum()
    e_mean = np.sum(weights * energies) / total
    e_spread = math.sqrt(max(np.sum(weights * (energies - e_mean) ** 2) / total, 1e-300))
    order = np.argsort(delays)
    cdf = np.cumsum(weights[order]) / total
    lo = float(delays[order][np.searchsorted(cdf, tail)])
    hi = float(delays[order][min(np.searchsorted(cdf, 1.0 - tail), cdf.size - 1)])
    pad = pad_sigmas / (2.0 * e_spread)
    keep = weights >= 1e-12 * weights.max()
    return TimeGrid.spanning(lo - pad, hi + pad, band_limited_spacing(energies[keep]))


def unwrap_phase(samples, max_jump=0.75 * math.pi):
    """Continuous phase of a sequence of complex samples.

    The first phase lies in ``(-pi, pi]``; each later phase is the previous
    one plus the principal argument of the ratio of consecutive samples, so
    the output differs from ``np.angle`` by exact multiples of ``2 pi``.

    Raises:
        AliasingError: if any step between consecutive samples exceeds
            ``max_jump`` (the grid is too coarse to trust the branch choice).
    """
    z = np.asarray(samples, dtype=complex)
    if z.size == 0:
        return np.zeros(0)
    mag = np.abs(z)
    # Unit-modulus samples keep the ratios from underflowing for tiny amplitudes.
    z = np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), z)
    first = np.angle(z[0])
    if first == -math.pi:
        first = math.pi
    steps = np.angle(z[1:] * np.conj(z[:-1]))
    if steps.size and np.max(np.abs(steps)) > max_jump:
        k = int(np.argmax(np.abs(steps)))
        raise AliasingError(
            f"phase step {steps[k]:.4g} rad between samples {k} and {k + 1} exceeds {max_jump:.4g}; "
            "sample the amplitude more densely"
        )
    return first + np.concatenate(([0.0], np.cumsum(steps)))


def derivative(f, at, h):
    """Central difference ``(f(at + h) - f(at - h)) / (2 h)``."""
    if h <= 0:
        raise InvalidParameterError(f"step must be positive, got {h}")
    return (f(at + h) - f(at - h)) / (2.0 * h)


def find_root(f, bracket, tol=1e-12):
    """Root of ``f`` inside ``bracket`` (Brent's bisection/secant hybrid)."""
    a, b = bracket
    fa, fb = f(a), f(b)
    if fa == 0:
        return float(a)
    if fb == 0:
        return float(b)
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"no sign change on [{a}, {b}]: f(a)={fa:.6g}, f(b)={fb:.6g}")
    return float(brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200))


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get("TOA_THREADS", 1)
    try:
        threads = int(threads)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"thread count must be an integer, got {threads!r}") from None
    return max(1, threads)


def parallel_map(func, items, threads=None):
    """Ordered map, run on a thread pool when more than one thread is requested."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) < 2:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
