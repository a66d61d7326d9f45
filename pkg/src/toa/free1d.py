"""Time of arrival of a free particle in one dimension.

The arrival amplitude for mover channel ``s`` (``+1`` right, ``-1`` left) is

    A_s(t, x) = (2 pi)^(-1/2) int_0^inf dp sqrt(p/m) exp(-i p^2 t / 2m + i s p x) psi(s p)

and ``sum_s |A_s|^2`` is the (unnormalized) arrival-time density at ``x``.
Its time integral is ``int |psi|^2 dp``; its first moment is the mean
arrival time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidParameterError, WindowTruncationError
from .numerics import (
    QuadratureSpec,
    TimeGrid,
    band_limited_spacing,
    check_resolution,
    energy_transform,
    resolved_spec,
    time_integral,
)
from .wavepacket import AMPLITUDE_SIGMAS, UnitsConfig

TRUNCATION_TOL = 1e-4
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Mover(Enum):
    """Sign-of-momentum label: right movers map ``p -> +p``, left movers ``p -> -p``."""

    RIGHT = 1
    LEFT = -1

    @property
    def sign(self):
        return self.value


@dataclass(frozen=True, eq=False)
class ArrivalDistribution:
    """Normalized arrival-time density at ``x`` sampled on ``grid``."""

    x: float
    grid: TimeGrid
    density: np.ndarray = field(repr=False)
    arrival_probability: float
    mean_time: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def times(self):
        return self.grid.times

    @property
    def peak_time(self):
        return float(self.times[int(np.argmax(self.density))])


def channel_window(packet, mover, n_sigma=AMPLITUDE_SIGMAS):
    """Positive-momentum interval ``[lo, hi]`` where ``psi(s p)`` is non-negligible, or None."""
    lo, hi = packet.window(n_sigma)
    if mover is Mover.LEFT:
        lo, hi = -hi, -lo
    lo = max(lo, 0.0)
    if hi <= lo:
        return None
    return lo, hi


def _max_phase_rate(window, offset, times, mass):
    # |d/dp (offset p - p^2 t / 2m)| is largest at a window edge and an extreme time.
    t = np.array([np.min(times), np.max(times)])
    edges = np.array(window)
    return float(np.max(np.abs(offset - np.outer(t, edges) / mass)))


def _channel_terms(packet, x, mover, times, units, spec=None):
    """Quadrature nodes, energies and weighted coefficients of ``A_s``."""
    window = channel_window(packet, mover)
    if window is None:
        return None
    s = mover.sign
    offset = s * (x - packet.center)
    freq = _max_phase_rate(window, offset, times, units.mass)
    if spec is None:
        spec = resolved_spec(window, freq)
    else:
        check_resolution(spec, freq)
    p, w = spec.nodes()
    coef = w * np.sqrt(p / units.mass) * np.exp(1j * s * p * x) * packet(s * p) / _SQRT_2PI
    return p, p * p / (2.0 * units.mass), coef


def arrival_amplitude(packet, x, mover, t, units=UnitsConfig(), spec=None):
    """Arrival amplitude ``<t x s 0|psi>``; ``t`` may be a scalar or an array.

    Raises:
        ResolutionError: if an explicit ``spec`` under-resolves the phase.
    """
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    terms = _channel_terms(packet, x, Mover(mover), times, units, spec)
    if terms is None:
        out = np.zeros(times.shape, dtype=complex)
    else:
        _, energies, coef = terms
        out = energy_transform(times, energies, coef)
    return complex(out[0]) if scalar else out


def _classical_time_range(packet, x, units, tail):
    """``tail`` and ``1 - tail`` weighted quantiles of ``m s (x - q0) / p`` over both channels."""
    delays, weights = [], []
    for mover in Mover:
        window = channel_window(packet, mover)
        if window is None:
            continue
        p, w = QuadratureSpec(window, 2048).nodes()
        delays.append(units.mass * mover.sign * (x - packet.center) / p)
        weights.append(w * np.abs(packet(mover.sign * p)) ** 2)
    delays, weights = np.concatenate(delays), np.concatenate(weights)
    order = np.argsort(delays)
    cdf = np.cumsum(weights[order]) / weights.sum()
    lo = delays[order][np.searchsorted(cdf, tail)]
    hi = delays[order][min(np.searchsorted(cdf, 1.0 - tail), cdf.size - 1)]
    return float(lo), float(hi)


def default_time_grid(packet, x, units=UnitsConfig(), tail=1e-6):
    """Window ``t_cl +- 10 sigma_t`` around the classical arrival time.

    ``sigma_t = m |x - q0| sigma_p / p0^2 + m / (p0 sigma_p)``. The window is
    widened where needed to hold the ``tail`` quantiles of the classical
    arrival times ``m (x - q0) / p``, which matters for the slow tail of
    packets with ``p0`` only a few ``sigma_p``. Packets whose mean momentum is
    within ``3 sigma_p`` of zero get a symmetric window covering both channels.
    """
    m = units.mass
    p0, sp, q0 = packet.mean_momentum, packet.momentum_spread, packet.center
    d = x - q0
    if abs(p0) >= 3.0 * sp:
        t_cl = m * d / p0
        sigma_t = m * abs(d) * sp / p0**2 + m / (abs(p0) * sp)
        lo, hi = t_cl - 10.0 * sigma_t, t_cl + 10.0 * sigma_t
        c_lo, c_hi = _classical_time_range(packet, x, units, tail)
        lo, hi = min(lo, c_lo), max(hi, c_hi)
    else:
        half = 10.0 * (m * abs(d) / sp + m / sp**2)
        lo, hi = -half, half
    energies = []
    for mover in Mover:
        window = channel_window(packet, mover)
        if window is not None:
            energies.extend(np.square(window) / (2.0 * m))
    return TimeGrid.spanning(lo, hi, band_limited_spacing(energies))


def channel_densities(packet, x, grid, units=UnitsConfig()):
    """``{Mover: |A_s(t)|^2}`` on ``grid`` (unnormalized)."""
    times = grid.times
    return {mover: np.abs(arrival_amplitude(packet, x, mover, times, units)) ** 2 for mover in Mover}


def truncation_estimate(grid, density):
    """Mass a density would carry if it stayed at its edge values over the whole window."""
    return float(max(density[0], density[-1]) * (grid.t_max - grid.t_min))


def distribution_from_density(x, grid, raw, truncation_tol=TRUNCATION_TOL, diagnostics=None):
    """Normalize a raw density and take its first moment."""
    total = time_integral(grid, raw)
    diagnostics = dict(diagnostics or {})
    trunc = truncation_estimate(grid, raw) / total if total > 0 else 0.0
    diagnostics["window_truncation"] = trunc
    if truncation_tol is not None and trunc > truncation_tol:
        raise WindowTruncationError(
            f"density at the edges of [{grid.t_min:.6g}, {grid.t_max:.6g}] implies a truncated fraction "
            f"~{trunc:.3g} > {truncation_tol:.3g}; widen the time grid"
        )
    if total <= 0:
        density = np.zeros_like(raw)
        mean = float("nan")
    else:
        density = raw / total
        mean = time_integral(grid, grid.times * density)
    return ArrivalDistribution(float(x), grid, density, total, mean, diagnostics)


def arrival_distribution(packet, x, grid=None, units=UnitsConfig(), truncation_tol=TRUNCATION_TOL):
    """Normalized density ``sum_s |A_s|^2 / P(x)`` with its arrival probability and mean.

    Raises:
        WindowTruncationError: if the density at the grid edges suggests
            more than ``truncation_tol`` of the mass lies outside the grid.
    """
    if grid is None:
        grid = default_time_grid(packet, x, units)
    raw = sum(channel_densities(packet, x, grid, units).values())
    return distribution_from_density(x, grid, raw, truncation_tol)


def arrival_probability(packet, x, units=UnitsConfig(), grid=None, truncation_tol=TRUNCATION_TOL):
    """Time-integrated arrival probability ``sum_s int dt |A_s(t, x)|^2``."""
    return arrival_distribution(packet, x, grid, units, truncation_tol).arrival_probability


def channel_probabilities(packet, x, units=UnitsConfig(), grid=None):
    """Time-integrated arrival probability of each mover channel separately."""
    if grid is None:
        grid = default_time_grid(packet, x, units)
    return {mover: time_integral(grid, d) for mover, d in channel_densities(packet, x, grid, units).items()}


def momentum_side_probability(packet):
    """``sum_s int_0^inf |psi(s p)|^2 dp``, the value the time integral must reproduce."""
    total = 0.0
    for mover in Mover:
        window = channel_window(packet, mover)
        if window is None:
            continue
        p, w = QuadratureSpec(window, 1024).nodes()
        total += float(np.sum(w * np.abs(packet(mover.sign * p)) ** 2))
    return total


def mean_arrival_time(packet, x, units=UnitsConfig(), grid=None):
    """First moment of the normalized arrival-time density."""
    return arrival_distribution(packet, x, grid, units).mean_time


def mean_arrival_time_phase(packet, x, units=UnitsConfig()):
    """Mean arrival time from the energy derivative of the amplitude phase.

    ``sum_s int dp |psi(sp)|^2 (m/p) d/dp[s p x + arg psi(s p)]`` divided by
    the arrival probability; for phase-convention Gaussians this is the
    classical average of ``m (x - q0) / p``.
    """
    num = den = 0.0
    for mover in Mover:
        window = channel_window(packet, mover)
        if window is None:
            continue
        s = mover.sign
        p, w = QuadratureSpec(window, 2048).nodes()
        rho = w * np.abs(packet(s * p)) ** 2
        rate = s * x + s * packet.arg_derivative(s * p)
        num += float(np.sum(rho * units.mass / p * rate))
        den += float(np.sum(rho))
    return num / den


def completeness_window(packet, x, units=UnitsConfig()):
    """Half-width ``T_half`` that covers the default time grid, so the POVM mass is complete there."""
    grid = default_time_grid(packet, x, units)
    return max(abs(grid.t_min), abs(grid.t_max))


def povm_completeness(packet, x, T_half, units=UnitsConfig(), max_spacing=None):
    """``<psi| P(-T_half, T_half) |psi> / P(x)`` for the arrival-time POVM.

    ``P(x)`` is the momentum-side arrival probability. The value is
    non-decreasing in ``T_half`` and tends to 1.
    """
    if T_half < 0:
        raise InvalidParameterError(f"T_half must be non-negative, got {T_half}")
    if T_half == 0:
        return 0.0
    if max_spacing is None:
        energies = []
        for mover in Mover:
            window = channel_window(packet, mover)
            if window is not None:
                energies.extend(np.square(window) / (2.0 * units.mass))
        max_spacing = band_limited_spacing(energies)
    grid = TimeGrid.spanning(-T_half, T_half, max_spacing, minimum=3)
    raw = sum(channel_densities(packet, x, grid, units).values())
    return time_integral(grid, raw) / momentum_side_probability(packet)


def eigenstate_overlap(t1, t2, units=UnitsConfig()):
    """``<t1 x s 0 | t2 x s 0>`` for ``t1 != t2``.

    ``(1/2pi) int_0^inf dE exp(-i E (t1 - t2))`` taken as a distribution,
    i.e. ``-i / (2 pi (t1 - t2))``; nonzero, so the eigenstates are not
    orthogonal. The mass drops out.
    """
    dt = float(t1) - float(t2)
    if dt == 0:
        raise InvalidParameterError("overlap is singular at t1 == t2")
    return -1j / (2.0 * math.pi * dt)
