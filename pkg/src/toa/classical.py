"""Classical arrival times in one dimension.

Two independent routes: integrating Hamilton's equations until the
trajectory crosses ``x``, and the energy derivative of the reduced action,
``t = int dq dp(q, E)/dE = int m / p(q) dq``. Ensemble averages over
``|psi(p)|^2`` give the classical counterpart of quantum mean arrival times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateEnsembleError, IntegrationError, InvalidParameterError, TurningPointError
from .numerics import find_root, parallel_map
from .wavepacket import UnitsConfig

ENERGY_DRIFT_TOL = 1e-8
# Steps per potential length scale (and per unit of travel when V = 0).
STEPS_PER_SCALE = 200
MAX_HALVINGS = 6

# Fourth-order triple-jump coefficients built on the leapfrog.
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1
_DRIFT = (0.5 * _W1, 0.5 * (_W0 + _W1), 0.5 * (_W0 + _W1), 0.5 * _W1)
_KICK = (_W1, _W0, _W1)


@dataclass(frozen=True)
class PhaseSpacePoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise InvalidParameterError(f"phase-space point must be finite, got ({self.q}, {self.p})")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``(t_k, q_k, p_k)`` of a Hamiltonian flow at fixed step."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy: float

    @property
    def samples(self):
        return [(float(t), PhaseSpacePoint(float(q), float(p))) for t, q, p in zip(self.times, self.q, self.p)]

    def energies(self, potential, units=UnitsConfig()):
        return self.p**2 / (2.0 * units.mass) + potential(self.q)


def hamiltonian(q, p, potential, units=UnitsConfig()):
    return p * p / (2.0 * units.mass) + potential(q)


def _step(q, p, potential, dt, m):
    for i in range(3):
        q = q + _DRIFT[i] * dt * p / m
        p = p - _KICK[i] * dt * potential.slope(q)
    return q + _DRIFT[3] * dt * p / m, p


def _drift(e, e0):
    scale = np.maximum(np.abs(e0), np.finfo(float).tiny)
    return np.abs(e - e0) / scale


def integrate(start, potential, t_end, step, units=UnitsConfig(), drift_tol=ENERGY_DRIFT_TOL):
    """Integrate from ``start`` over ``[0, t_end]`` with a fourth-order symplectic scheme.

    ``t_end`` may be negative (backward in time). The last step is shortened
    to land on ``t_end``.

    Raises:
        IntegrationError: if the relative energy drift exceeds ``drift_tol``.
    """
    if not step > 0:
        raise InvalidParameterError(f"step must be positive, got {step}")
    m = units.mass
    n = max(1, int(math.ceil(abs(t_end) / step)))
    dt = t_end / n
    times = np.linspace(0.0, t_end, n + 1)
    q = np.empty(n + 1)
    p = np.empty(n + 1)
    q[0], p[0] = start.q, start.p
    qa, pa = np.array([start.q]), np.array([start.p])
    for k in range(n):
        qa, pa = _step(qa, pa, potential, dt, m)
        q[k + 1], p[k + 1] = qa[0], pa[0]
    e0 = float(hamiltonian(start.q, start.p, potential, units))
    drift = float(np.max(_drift(hamiltonian(q, p, potential, units), e0)))
    if drift > drift_tol:
        raise IntegrationError(f"relative energy drift {drift:.3g} exceeds {drift_tol:.3g}; reduce the step {step}")
    return Trajectory(times, q, p, e0)


def _hermite(t0, dt, q0, v0, q1, v1):
    """Cubic through ``(q0, v0)`` at ``t0`` and ``(q1, v1)`` at ``t0 + dt``."""

    def f(t):
        s = (t - t0) / dt
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * q0 + h10 * dt * v0 + h01 * q1 + h11 * dt * v1

    return f


def default_step(potential, q0, p0, x, units=UnitsConfig()):
    """Step covering a potential length scale (or the path) in ``STEPS_PER_SCALE`` steps."""
    speed = max(abs(p0), 1e-300) / units.mass
    scale = abs(x - q0)
    if not potential.is_zero:
        width = potential.support_end / 10.0
        scale = min(scale, width) if scale > 0 else width
    return max(scale, 1e-12) / speed / STEPS_PER_SCALE


def _allowed(potential, q0, p0, x, units):
    e = hamiltonian(q0, p0, potential, units)
    return potential.max_on(q0, x) < e


def arrival_times(q0, p0, potential, x, units=UnitsConfig(), step=None, horizon=None, drift_tol=ENERGY_DRIFT_TOL,
                  return_drift=False):
    """First time each trajectory ``(q0[k], p0[k])`` reaches ``x``; NaN for no arrival.

    All members are integrated together with a common step. A crossing is
    located on the cubic Hermite interpolant of the step that brackets it and
    refined with Brent's method. Members whose energy is below the potential
    maximum between ``q0`` and ``x``, or that have not arrived by the
    horizon, get NaN.

    With ``return_drift=True`` the largest relative energy drift seen before
    arrival is returned as well.

    Raises:
        IntegrationError: if any member drifts in energy beyond ``drift_tol``
            before arriving.
    """
    m = units.mass
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    q0, p0 = np.broadcast_arrays(q0, p0)
    out = np.full(q0.shape, np.nan)
    out[q0 == x] = 0.0
    live = np.array([qq != x and _allowed(potential, qq, pp, x, units) for qq, pp in zip(q0, p0)], dtype=bool)
    # Moving away from x through a region it can never turn back from.
    toward = np.sign(x - q0) * p0 > 0
    live &= toward | ~np.array([potential.is_zero or _flat_beyond(potential, qq, pp) for qq, pp in zip(q0, p0)])
    worst = 0.0
    if not np.any(live):
        return (out, worst) if return_drift else out
    idx = np.flatnonzero(live)
    q, p = q0[idx].copy(), p0[idx].copy()
    speeds = np.abs(p) / m
    if step is None:
        step = min(default_step(potential, a, b, x, units) for a, b in zip(q, p))
    if horizon is None:
        slowest = np.min(np.sqrt(2.0 * m * (hamiltonian(q, p, potential, units) - np.array(
            [potential.max_on(a, x) for a in q]))) / m)
        horizon = 4.0 * (float(np.max(np.abs(x - q))) / min(slowest, float(np.min(speeds))) + 1.0)
    e0 = hamiltonian(q, p, potential, units)
    side = np.sign(q - x)
    t = 0.0
    n_steps = int(math.ceil(horizon / step))
    pending = np.ones(idx.size, dtype=bool)
    for _ in range(n_steps):
        qn, pn = _step(q, p, potential, step, m)
        drift = _drift(hamiltonian(qn[pending], pn[pending], potential, units), e0[pending])
        worst = max(worst, float(np.max(drift)))
        if worst > drift_tol:
            raise IntegrationError(f"relative energy drift {worst:.3g} exceeds {drift_tol:.3g}")
        crossed = pending & (np.sign(qn - x) != side)
        for k in np.flatnonzero(crossed):
            f = _hermite(t, step, q[k], p[k] / m, qn[k], pn[k] / m)
            out[idx[k]] = find_root(lambda s: f(s) - x, (t, t + step), tol=1e-14 * max(1.0, t))
        pending &= ~crossed
        q, p = qn, pn
        t += step
        if not np.any(pending):
            break
    return (out, worst) if return_drift else out


def _flat_beyond(potential, q0, p0):
    # True when a member heading away from x only sees V = 0 from now on.
    if p0 < 0:
        return q0 <= 0.0
    return q0 >= potential.support_end


def arrival_time_trajectory(start, potential, x, units=UnitsConfig(), step=None, horizon=None, return_drift=False):
    """Smallest ``t >= 0`` with ``q(t) = x``, or None if the particle never gets there.

    The step is halved (up to ``MAX_HALVINGS`` times) until energy is
    conserved to ``ENERGY_DRIFT_TOL``. With ``return_drift=True`` the
    relative energy drift of the accepted run is returned as well.
    """
    if step is None:
        step = default_step(potential, start.q, start.p, x, units)
    for _ in range(MAX_HALVINGS + 1):
        try:
            times, drift = arrival_times(start.q, start.p, potential, x, units, step, horizon, return_drift=True)
        except IntegrationError:
            step *= 0.5
            continue
        t = None if np.isnan(times[0]) else float(times[0])
        return (t, drift) if return_drift else t
    raise IntegrationError(f"energy drift stayed above {ENERGY_DRIFT_TOL} after {MAX_HALVINGS} step halvings")


def arrival_time_hj(E, potential, q0, x, units=UnitsConfig()):
    """``int dq dp(q, E)/dE`` along the path from ``q0`` to ``x`` (adaptive quadrature).

    ``dp/dE = m / p(q)`` with ``p`` pointing from ``q0`` towards ``x``, so the
    result is the (positive) travel time in either direction.

    Raises:
        TurningPointError: if ``E <= max V`` between ``q0`` and ``x``.
    """
    if potential.max_on(q0, x) >= E:
        raise TurningPointError(f"energy {E:.6g} does not exceed max V between {q0} and {x}")
    m = units.mass

    def rate(q):
        return m / math.sqrt(2.0 * m * (E - potential(q)))

    lo, hi = sorted((q0, x))
    edges = [lo, *potential.breakpoints(lo, hi), hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        if b <= 0.0 or a >= potential.support_end:
            total += (b - a) * m / math.sqrt(2.0 * m * E)
            continue
        val, _ = quad(rate, a, b, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return total


@dataclass(frozen=True)
class EnsembleResult:
    mean: float
    stderr: float
    no_arrival_fraction: float
    samples: int


def ensemble_mean_arrival(packet, potential, x, samples=10_000, seed=0, units=UnitsConfig(), threads=None,
                          chunk=2_000):
    """Average classical arrival time over momenta drawn from ``|psi(p)|^2``.

    Every member starts at the packet centre. Momenta come from one seeded
    generator, so the result does not depend on ``threads``. Members that never
    arrive are excluded and counted in ``no_arrival_fraction``.

    Raises:
        DegenerateEnsembleError: if no member arrives.
    """
    if packet.kind != "gaussian":
        raise InvalidParameterError("ensemble sampling needs a gaussian packet")
    if samples < 1000:
        raise InvalidParameterError(f"at least 1000 samples are required, got {samples}")
    rng = np.random.default_rng(seed)
    momenta = rng.normal(packet.p0, packet.sigma_p, samples)
    q0 = packet.q0
    if q0 == x:
        return EnsembleResult(0.0, 0.0, 0.0, samples)
    step = default_step(potential, q0, packet.p0 - 3.0 * packet.sigma_p if packet.p0 > 3 * packet.sigma_p
                        else packet.p0, x, units)
    pieces = [momenta[i:i + chunk] for i in range(0, samples, chunk)]
    times = np.concatenate(parallel_map(lambda ps: _robust_times(q0, ps, potential, x, units, step), pieces, threads))
    ok = times[np.isfinite(times)]
    if ok.size == 0:
        raise DegenerateEnsembleError(f"none of {samples} members reached x={x}")
    mean = math.fsum(ok) / ok.size
    stderr = float(np.std(ok, ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else math.nan
    return EnsembleResult(mean, stderr, 1.0 - ok.size / samples, samples)


def _robust_times(q0, momenta, potential, x, units, step):
    for _ in range(MAX_HALVINGS + 1):
        try:
            return arrival_times(q0, momenta, potential, x, units, step)
        except IntegrationError:
            step *= 0.5
    raise IntegrationError(f"energy drift stayed above {ENERGY_DRIFT_TOL} after {MAX_HALVINGS} step halvings")
