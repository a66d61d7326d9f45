"""Arrival beyond a square barrier: transmission amplitude, far-side arrival
amplitude and density, Wigner-time averages and the advancement scan.

The barrier of height ``V`` occupies ``[start, start + width]``. With
``p' = sqrt(p^2 - p_V^2)`` and ``p_V = sqrt(2 m V)`` the transmission
amplitude (coefficient of ``exp(i p x)`` beyond the barrier) is

    T(p) = exp(-i p a) / (cos p'a - i (p^2 + p'^2) / (2 p p') sin p'a)

written here through the entire functions ``C(z) = cos(sqrt(z) a)`` and
``S(z) = sin(sqrt(z) a) / sqrt(z)`` of ``z = p'^2`` so that both sides of the
threshold are real arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError
from .free1d import TRUNCATION_TOL, distribution_from_density
from .numerics import (
    check_resolution,
    energy_transform,
    parallel_map,
    required_points,
    resolved_spec,
    spectral_time_grid,
    unwrap_phase,
)
from .wavepacket import AMPLITUDE_SIGMAS, UnitsConfig, negative_momentum_fraction

RIGHT_MOVER_THRESHOLD = 1e-6
THRESHOLD_EPS = 1e-8
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SquareBarrier:
    height: float
    width: float
    start: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.height) and self.height >= 0):
            raise InvalidParameterError(f"barrier height must be >= 0, got {self.height}")
        if not (np.isfinite(self.width) and self.width > 0):
            raise InvalidParameterError(f"barrier width must be > 0, got {self.width}")

    @property
    def end(self):
        return self.start + self.width

    def threshold_momentum(self, units=UnitsConfig()):
        return math.sqrt(2.0 * units.mass * self.height)


@dataclass(frozen=True)
class TransmissionResult:
    T: complex
    R: complex
    phase: float
    wigner_phase_derivative: float


def _cs(z, a, pv):
    """``C(z)`` and ``S(z)`` with the hyperbolic branch below threshold."""
    z = np.asarray(z, dtype=float)
    C = np.empty_like(z)
    S = np.empty_like(z)
    near = np.abs(z) < 2.0 * THRESHOLD_EPS * pv * pv
    above = (z > 0) & ~near
    below = (z < 0) & ~near
    k = np.sqrt(z[above])
    C[above] = np.cos(k * a)
    S[above] = np.sin(k * a) / k
    kappa = np.sqrt(-z[below])
    with np.errstate(over="ignore"):
        C[below] = np.cosh(kappa * a)
        S[below] = np.sinh(kappa * a) / kappa
    y = z[near] * a * a
    C[near] = 1.0 - y / 2.0 + y * y / 24.0 - y**3 / 720.0
    S[near] = a * (1.0 - y / 6.0 + y * y / 120.0 - y**3 / 5040.0)
    return C, S


def transmission_amplitudes(p, barrier, units=UnitsConfig()):
    """Vectorized ``(T(p), R(p))``; ``R`` refers to ``exp(-i p x)`` left of the barrier."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise DomainError("transmission amplitude needs p > 0")
    a = barrier.width
    pv = barrier.threshold_momentum(units)
    if pv == 0.0:
        return np.ones(p.shape, dtype=complex), np.zeros(p.shape, dtype=complex)
    z = p * p - pv * pv
    C, S = _cs(z, a, pv)
    with np.errstate(over="ignore", invalid="ignore"):
        D = C - 1j * (p * p + z) / (2.0 * p) * S
        T = np.exp(-1j * p * a) / D
        R = -1j * pv * pv / (2.0 * p) * (S / D) * np.exp(2j * p * barrier.start)
    # cosh overflow: |T| underflows to 0 and S/D tends to its tanh limit.
    bad = ~np.isfinite(R)
    if np.any(bad):
        kappa = np.sqrt(-z[bad])
        ratio = 1.0 / (kappa + 0.5j * (kappa * kappa - p[bad] ** 2) / p[bad])
        R[bad] = -1j * pv * pv / (2.0 * p[bad]) * ratio * np.exp(2j * p[bad] * barrier.start)
        T[bad] = 0.0
    return T, R


def _phase_branch(p, barrier, units):
    """``-arg D`` on the branch within ``pi/2`` of ``p'a`` (above threshold) or of 0 (below)."""
    p = np.asarray(p, dtype=float)
    a = barrier.width
    pv = barrier.threshold_momentum(units)
    if pv == 0.0:
        return p * a
    z = p * p - pv * pv
    C, S = _cs(z, a, pv)
    with np.errstate(over="ignore", invalid="ignore"):
        principal = np.arctan2((p * p + z) / (2.0 * p) * S, C)
    # Below threshold C = cosh > 0, so the tanh form is exact and never overflows.
    below = (z < 0) & ~(np.abs(z) < 2.0 * THRESHOLD_EPS * pv * pv)
    if np.any(below):
        kappa = np.sqrt(-z[below])
        principal[below] = np.arctan((p[below] ** 2 - kappa**2) / (2.0 * p[below] * kappa) * np.tanh(kappa * a))
    theta = np.where(z > 0, np.sqrt(np.clip(z, 0, None)) * a, 0.0)
    # arg D = -branch because D = C - i A S.
    return principal + 2.0 * math.pi * np.round((theta - principal) / (2.0 * math.pi))


def transmission_phase(p, barrier, units=UnitsConfig()):
    """Continuous ``arg T(p)``, tending to ``-pi/2`` as ``p -> 0+``.

    ``arg D`` is pinned to the branch within ``pi/2`` of ``p'a`` (above
    threshold) or of 0 (below), which follows ``D`` continuously.
    """
    p = np.asarray(p, dtype=float)
    if barrier.threshold_momentum(units) == 0.0:
        return np.zeros(p.shape)
    return -p * barrier.width + _phase_branch(p, barrier, units)


def _phase_step(p, barrier, units):
    pv = barrier.threshold_momentum(units) or 1.0
    scale = min(1.0 / barrier.width, pv)
    return 1e-4 * np.minimum(0.5 * np.asarray(p, dtype=float), scale)


def wigner_phase_derivative(p, barrier, units=UnitsConfig(), h=None):
    """``d arg T / dp`` by central difference of the unwrapped phase on a 3-point stencil.

    Includes the ``-a`` coming from the ``exp(-i p a)`` factor.
    """
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p <= 0):
        raise DomainError("phase derivative needs p > 0")
    h = _phase_step(p, barrier, units) if h is None else np.broadcast_to(h, p.shape)
    lo, _ = transmission_amplitudes(p - h, barrier, units)
    mid, _ = transmission_amplitudes(p, barrier, units)
    hi, _ = transmission_amplitudes(p + h, barrier, units)
    out = np.empty(p.shape)
    for i in range(p.size):
        if lo[i] == 0 or hi[i] == 0:
            out[i] = _branch_slope(p[i], h[i], barrier, units)
            continue
        phase = unwrap_phase([lo[i], mid[i], hi[i]])
        out[i] = (phase[2] - phase[0]) / (2.0 * h[i])
    return float(out[0]) if scalar else out


def _branch_slope(p, h, barrier, units):
    # |T| underflowed: difference the closed-form continuous phase instead.
    br = _phase_branch(np.array([p - h, p + h]), barrier, units)
    return -barrier.width + (br[1] - br[0]) / (2.0 * h)


def _wigner_derivative_vec(p, barrier, units):
    # Same stencil as wigner_phase_derivative, vectorized for quadrature nodes.
    h = _phase_step(p, barrier, units)
    lo, _ = transmission_amplitudes(p - h, barrier, units)
    hi, _ = transmission_amplitudes(p + h, barrier, units)
    with np.errstate(invalid="ignore"):
        d = np.angle((hi / np.abs(hi)) * np.conj(lo / np.abs(lo))) / (2.0 * h)
    dead = (lo == 0) | (hi == 0)
    if np.any(dead):
        br_lo = _phase_branch(p[dead] - h[dead], barrier, units)
        br_hi = _phase_branch(p[dead] + h[dead], barrier, units)
        d[dead] = -barrier.width + (br_hi - br_lo) / (2.0 * h[dead])
    return d


def transmission(p, barrier, units=UnitsConfig()):
    """Transmission and reflection amplitudes with the unwrapped phase and its slope."""
    if p <= 0:
        raise DomainError(f"transmission needs p > 0, got {p}")
    T, R = transmission_amplitudes(np.array([p]), barrier, units)
    return TransmissionResult(
        complex(T[0]),
        complex(R[0]),
        float(transmission_phase(np.array([p]), barrier, units)[0]),
        wigner_phase_derivative(float(p), barrier, units),
    )


def plane_wave_advancement(p, barrier, units=UnitsConfig()):
    """Arrival-time shift ``(m/p) d arg T/dp`` of a transmitted plane wave."""
    return units.mass / p * wigner_phase_derivative(p, barrier, units)


def check_far_side(packet, x, barrier):
    """Raise DomainError unless the far-side right-mover approximation applies."""
    if not x > barrier.end:
        raise DomainError(f"arrival point x={x} must lie beyond the barrier end {barrier.end}")
    if not packet.center < barrier.start:
        raise DomainError(f"packet centre q0={packet.center} must lie before the barrier start {barrier.start}")
    frac = negative_momentum_fraction(packet)
    if frac > RIGHT_MOVER_THRESHOLD:
        raise DomainError(
            f"negative-momentum fraction {frac:.3g} exceeds {RIGHT_MOVER_THRESHOLD:g}; "
            "the far-side amplitude assumes right movers only"
        )


def _window(packet):
    lo, hi = packet.window(AMPLITUDE_SIGMAS)
    lo = max(lo, 0.0)
    if hi <= lo:
        raise DomainError("packet has no positive-momentum support")
    return lo, hi


def _transmitted_nodes(packet, x, barrier, units, times=(0.0,), resolution=1.0, minimum=512):
    """Quadrature nodes resolving ``x p + arg psi + arg T - E t`` on the packet window.

    The rule is rebuilt until it carries 16 points per period of the
    largest phase slope sampled on its own nodes.
    """
    window = _window(packet)
    tmax = float(np.max(np.abs(times)))
    freq = abs(x - packet.center) + barrier.width + tmax * window[1] / units.mass
    spec = resolved_spec(window, freq, minimum=int(minimum * resolution))
    for _ in range(4):
        p, w = spec.nodes()
        slope = x + packet.arg_derivative(p) + _wigner_derivative_vec(p, barrier, units)
        freq = float(np.max(np.abs(slope))) + tmax * window[1] / units.mass
        need = int(resolution * required_points(spec.width, freq))
        if spec.points >= need:
            break
        spec = resolved_spec(window, freq, minimum=need)
    p, w = spec.nodes()
    return spec, p, w


def transmitted_arrival_amplitude(packet, x, barrier, t, units=UnitsConfig(), spec=None):
    """Far-side arrival amplitude ``(2pi)^(-1/2) int dp sqrt(p/m) exp(-iEt + ipx) T(p) psi(p)``.

    Raises:
        DomainError: if ``x`` is not beyond the barrier, the packet does not
            start before it, or its negative-momentum fraction exceeds 1e-6.
    """
    check_far_side(packet, x, barrier)
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if spec is None:
        spec, p, w = _transmitted_nodes(packet, x, barrier, units, times)
    else:
        check_resolution(spec, abs(x - packet.center) + float(np.max(np.abs(times))) * spec.window[1] / units.mass)
        p, w = spec.nodes()
    T, _ = transmission_amplitudes(p, barrier, units)
    coef = w * np.sqrt(p / units.mass) * np.exp(1j * p * x) * T * packet(p) / _SQRT_2PI
    out = energy_transform(times, p * p / (2.0 * units.mass), coef)
    return complex(out[0]) if scalar else out


def transmitted_arrival_probability(packet, barrier, units=UnitsConfig(), resolution=1.0):
    """``int_0^inf dp |T(p) psi(p)|^2``; independent of where beyond the barrier one detects."""
    x_ref = barrier.end + 1.0
    _, p, w = _transmitted_nodes(packet, x_ref, barrier, units, resolution=resolution)
    T, _ = transmission_amplitudes(p, barrier, units)
    return float(np.sum(w * np.abs(T * packet(p)) ** 2))


def _phase_times(packet, x, barrier, units, p):
    return units.mass / p * (x + packet.arg_derivative(p) + _wigner_derivative_vec(p, barrier, units))


def transmitted_arrival_distribution(packet, x, barrier, grid=None, units=UnitsConfig(),
                                     truncation_tol=TRUNCATION_TOL):
    """Normalized far-side arrival density; ``arrival_probability`` is its time integral."""
    check_far_side(packet, x, barrier)
    if grid is None:
        _, p, w = _transmitted_nodes(packet, x, barrier, units)
        T, _ = transmission_amplitudes(p, barrier, units)
        weights = w * np.abs(T * packet(p)) ** 2
        grid = spectral_time_grid(p * p / (2.0 * units.mass), weights, _phase_times(packet, x, barrier, units, p))
    amp = transmitted_arrival_amplitude(packet, x, barrier, grid.times, units)
    return distribution_from_density(x, grid, np.abs(amp) ** 2, truncation_tol)


def mean_transmitted_arrival(packet, x, barrier, units=UnitsConfig(), route="phase", grid=None, resolution=1.0):
    """Mean arrival time beyond the barrier.

    ``route="phase"`` averages ``(m/p)(x - q0 + d arg T/dp)`` over
    ``|T psi|^2``; ``route="moment"`` takes the first moment of the far-side
    time density. The two agree for packets satisfying the far-side
    preconditions.
    """
    check_far_side(packet, x, barrier)
    if route == "moment":
        return transmitted_arrival_distribution(packet, x, barrier, grid, units).mean_time
    if route != "phase":
        raise InvalidParameterError(f"route must be 'phase' or 'moment', got {route!r}")
    _, p, w = _transmitted_nodes(packet, x, barrier, units, resolution=resolution)
    T, _ = transmission_amplitudes(p, barrier, units)
    weights = w * np.abs(T * packet(p)) ** 2
    return float(np.sum(weights * _phase_times(packet, x, barrier, units, p)) / np.sum(weights))


def free_mean_right_movers(packet, x, units=UnitsConfig(), resolution=1.0):
    """Phase-route mean over ``p > 0`` with ``T = 1``: the no-barrier reference."""
    window = _window(packet)
    spec = resolved_spec(window, abs(x - packet.center), minimum=int(2048 * resolution))
    p, w = spec.nodes()
    weights = w * np.abs(packet(p)) ** 2
    times = units.mass / p * (x + packet.arg_derivative(p))
    return float(np.sum(weights * times) / np.sum(weights))


@dataclass(frozen=True)
class HartmanScan:
    """Advancement ``mean(width) - free mean`` over a ladder of widths.

    ``bracket`` is the first pair of consecutive widths across which the
    advancement changes sign (None if it never does); ``crossover`` is the
    linear interpolation of the zero inside it.
    """

    widths: tuple
    mean_times: tuple
    advancements: tuple
    free_mean: float
    sign_changes: int
    bracket: tuple | None
    crossover: float | None
    transmitted_probabilities: tuple = field(default=())

    def rows(self):
        return list(zip(self.widths, self.mean_times, self.advancements))


def hartman_scan(packet, x, height, widths, units=UnitsConfig(), start=0.0, threads=None, resolution=1.0):
    """Mean transmitted arrival and advancement for each barrier width.

    ``widths`` must be positive and ascending and every barrier must end
    before ``x``. Widths are evaluated concurrently when ``threads > 1``;
    the result does not depend on the thread count.
    """
    widths = [float(a) for a in widths]
    if not widths or any(a <= 0 for a in widths) or any(b <= a for a, b in zip(widths, widths[1:])):
        raise InvalidParameterError("widths must be positive and strictly ascending")
    free = free_mean_right_movers(packet, x, units, resolution)

    def one(a):
        barrier = SquareBarrier(height, a, start)
        mean = mean_transmitted_arrival(packet, x, barrier, units, resolution=resolution)
        prob = transmitted_arrival_probability(packet, barrier, units, resolution=resolution)
        return mean, prob

    results = parallel_map(one, widths, threads)
    means = [r[0] for r in results]
    adv = [mt - free for mt in means]
    signs = np.sign(adv)
    changes = [i for i in range(len(adv) - 1) if signs[i] != 0 and signs[i + 1] != 0 and signs[i] != signs[i + 1]]
    bracket = crossover = None
    if changes:
        i = changes[0]
        bracket = (widths[i], widths[i + 1])
        crossover = widths[i] + (widths[i + 1] - widths[i]) * adv[i] / (adv[i] - adv[i + 1])
    return HartmanScan(
        tuple(widths), tuple(means), tuple(adv), free, len(changes), bracket, crossover,
        tuple(r[1] for r in results),
    )
