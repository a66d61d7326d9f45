"""Quasi-classical arrival times for smooth potentials switched on at ``q > 0``.

For energies well above the potential, reflection is neglected and the
scattering state beyond the origin is the WKB wave
``sqrt(p / p(q)) exp(i int_0^q p(q') dq')``, with local momentum
``p(q) = sqrt(2 m (E - V(q)))``. For ``x > 0`` the arrival amplitude is

    A(t, x) = (2 pi)^(-1/2) int dp (p/m) sqrt(m / p(x)) psi(p) exp(-i E t + i int_0^x p(q) dq)

whose time integral is ``P(x) = int dp (p / p(x)) |psi(p)|^2``. Left of the
origin nothing differs from free motion.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from . import free1d
from .errors import InvalidParameterError, QuasiClassicalWarning, TurningPointError
from .free1d import Mover, TRUNCATION_TOL, channel_window, distribution_from_density
from .numerics import (
    QuadratureSpec,
    energy_transform,
    resolved_spec,
    spectral_time_grid,
    time_integral,
)
from .potential import SmoothPotential
from .wavepacket import UnitsConfig

# Packets need p0^2 >= ENERGY_RATIO * 2 m max V to count as quasi-classical.
ENERGY_RATIO = 5.0
VALIDITY_LIMIT = 0.05
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_PATH_POINTS = 1024


def local_momentum(E, potential: SmoothPotential, q, units=UnitsConfig()):
    """``sqrt(2 m (E - V(q)))``; ``q`` may be an array.

    Raises:
        TurningPointError: if ``E <= V(q)`` anywhere.
    """
    v = potential(q)
    kinetic = E - v
    if np.any(kinetic <= 0):
        bad = np.atleast_1d(q)[np.argmin(np.atleast_1d(kinetic))]
        raise TurningPointError(f"energy {E:.6g} does not exceed V at q={float(bad):.6g}")
    return np.sqrt(2.0 * units.mass * kinetic)


def _path_nodes(potential, q_from, q_to, points=_PATH_POINTS):
    """Composite Gauss nodes on ``[q_from, q_to]`` split at the potential's breakpoints."""
    lo, hi = sorted((q_from, q_to))
    edges = [lo, *potential.breakpoints(lo, hi), hi]
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        flat = b <= 0.0 or a >= potential.support_end
        p, w = QuadratureSpec((a, b), 16 if flat else points).nodes()
        nodes.append(p)
        weights.append(w)
    if not nodes:
        return np.zeros(0), np.zeros(0)
    sign = 1.0 if q_to >= q_from else -1.0
    return np.concatenate(nodes), sign * np.concatenate(weights)


def classical_time_integral(E, potential, q_from, q_to, units=UnitsConfig()):
    """``int_{q_from}^{q_to} m / p(q) dq`` (signed).

    Raises:
        TurningPointError: if ``E <= max V`` on the interval.
    """
    q, w = _path_nodes(potential, q_from, q_to)
    if potential.max_on(q_from, q_to) >= E:
        raise TurningPointError(f"energy {E:.6g} does not exceed max V on [{q_from}, {q_to}]")
    return float(np.sum(w * units.mass / local_momentum(E, potential, q, units)))


def _path_integrals(energies, potential, x, units):
    """``int_0^x p(q) dq`` and ``int_0^x m / p(q) dq`` for each energy."""
    q, w = _path_nodes(potential, 0.0, x)
    kinetic = energies[:, None] - potential(q)[None, :]
    local = np.sqrt(2.0 * units.mass * kinetic)
    return local @ w, (units.mass / local) @ w


def validity_diagnostic(E, potential, x, units=UnitsConfig(), points=4001):
    """``max m |V'(q)| / p(q)^3`` over ``[0, x]``; small values mean WKB is reliable."""
    if x <= 0 or potential.is_zero:
        return 0.0
    q = np.linspace(0.0, min(x, potential.support_end), points)
    p = local_momentum(E, potential, q, units)
    return float(np.max(units.mass * np.abs(potential.slope(q)) / p**3))


def _check_x(x):
    if not np.isfinite(x):
        raise InvalidParameterError(f"arrival point must be finite, got {x}")


def wkb_diagnostics(packet, potential, x, units=UnitsConfig()):
    """Quasi-classicality indicators for ``packet`` arriving at ``x``.

    ``energy_ratio`` is ``p0^2 / (2 m max V)``, ``validity`` the diagnostic at
    the mean energy, and ``reflected_fraction`` the weight of momenta too slow
    to cross ``[0, x]`` (excluded from every x > 0 result).
    """
    m = units.mass
    p0 = packet.mean_momentum
    vmax = potential.max_on(0.0, x) if x > 0 else 0.0
    ratio = math.inf if vmax == 0 else p0 * p0 / (2.0 * m * vmax)
    e0 = p0 * p0 / (2.0 * m)
    validity = validity_diagnostic(e0, potential, x, units) if e0 > vmax else math.inf
    reflected = 0.0
    window = channel_window(packet, Mover.RIGHT)
    if window is not None and vmax > 0:
        cut = math.sqrt(2.0 * m * vmax)
        if cut > window[0]:
            p, w = QuadratureSpec((window[0], min(cut, window[1])), 512).nodes()
            reflected = float(np.sum(w * np.abs(packet(p)) ** 2))
    return {"energy_ratio": ratio, "validity": validity, "reflected_fraction": reflected}


def _warn(diag):
    if diag["energy_ratio"] < ENERGY_RATIO:
        warnings.warn(
            f"p0^2 / (2 m max V) = {diag['energy_ratio']:.3g} is below {ENERGY_RATIO}; "
            "reflection is not negligible", QuasiClassicalWarning, stacklevel=3)
    if diag["validity"] > VALIDITY_LIMIT:
        warnings.warn(
            f"validity diagnostic m|V'|/p^3 = {diag['validity']:.3g} exceeds {VALIDITY_LIMIT}",
            QuasiClassicalWarning, stacklevel=3)
    if diag["reflected_fraction"] > 1e-12:
        warnings.warn(
            f"momenta carrying {diag['reflected_fraction']:.3g} of the norm cannot cross the potential "
            "and are left out", QuasiClassicalWarning, stacklevel=3)


def _transmitted_nodes(packet, potential, x, units, times=(0.0,)):
    """Right-mover quadrature nodes above the barrier top, with path integrals."""
    m = units.mass
    window = channel_window(packet, Mover.RIGHT)
    if window is None:
        return None
    lo, hi = window
    vmax = potential.max_on(0.0, x)
    if vmax > 0:
        lo = max(lo, math.sqrt(2.0 * m * vmax) * (1.0 + 1e-9))
    if lo >= hi:
        return None
    # The window may start at p = 0, where (p/m) * int m/p(q) dq is 0 * inf; its limit is finite.
    edges = np.array([max(lo, 1e-9 * hi), hi])
    phase_int, time_int = _path_integrals(edges * edges / (2.0 * m), potential, x, units)
    # d/dp of the phase is (p/m) * int m/p(q) dq - q0 - p t / m
    rates = edges[:, None] / m * (time_int[:, None] - np.asarray(times)[None, :]) - packet.center
    spec = resolved_spec((lo, hi), float(np.max(np.abs(rates))), minimum=512)
    p, w = spec.nodes()
    energies = p * p / (2.0 * m)
    phase_int, time_int = _path_integrals(energies, potential, x, units)
    p_x = local_momentum(energies, potential, x, units) if potential(x) > 0 else p
    return p, w, energies, p_x, phase_int, time_int


def wkb_arrival_probability(packet, potential, x, units=UnitsConfig()):
    """``P(x)``: the free value for ``x <= 0``, ``int dp (p / p(x)) |psi|^2`` beyond.

    Emits a QuasiClassicalWarning when the packet is not well inside the
    quasi-classical regime.
    """
    _check_x(x)
    if x <= 0:
        return free1d.momentum_side_probability(packet)
    _warn(wkb_diagnostics(packet, potential, x, units))
    nodes = _transmitted_nodes(packet, potential, x, units)
    if nodes is None:
        return 0.0
    p, w, _, p_x, _, _ = nodes
    return float(np.sum(w * p / p_x * np.abs(packet(p)) ** 2))


def _coefficients(packet, units, nodes):
    p, w, _, p_x, phase_int, _ = nodes
    m = units.mass
    return w * (p / m) * np.sqrt(m / p_x) * packet(p) * np.exp(1j * phase_int) / _SQRT_2PI


def wkb_arrival_amplitude(packet, potential, x, t, units=UnitsConfig()):
    """Transmitted WKB arrival amplitude at ``x > 0``; ``t`` scalar or array."""
    if x <= 0:
        raise InvalidParameterError("the transmitted WKB amplitude needs x > 0; use free1d for x <= 0")
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    nodes = _transmitted_nodes(packet, potential, x, units, times)
    if nodes is None:
        out = np.zeros(times.shape, dtype=complex)
    else:
        out = energy_transform(times, nodes[2], _coefficients(packet, units, nodes))
    return complex(out[0]) if scalar else out


def _node_times(packet, units, nodes):
    p, _, _, _, _, time_int = nodes
    return units.mass / p * packet.arg_derivative(p) + time_int


def default_wkb_grid(packet, potential, x, units=UnitsConfig()):
    nodes = _transmitted_nodes(packet, potential, x, units)
    if nodes is None:
        raise InvalidParameterError("no momentum component crosses the potential")
    p, w, energies, p_x, _, _ = nodes
    weights = w * p / p_x * np.abs(packet(p)) ** 2
    return spectral_time_grid(energies, weights, _node_times(packet, units, nodes))


def wkb_arrival_distribution(packet, potential, x, grid=None, units=UnitsConfig(), truncation_tol=TRUNCATION_TOL):
    """Normalized arrival-time density at ``x``.

    For ``x <= 0`` this is the free distribution. For ``x > 0`` the density is
    ``|A(t, x)|^2 / P(x)`` and the diagnostics carry the quasi-classicality
    indicators.
    """
    _check_x(x)
    if x <= 0:
        return free1d.arrival_distribution(packet, x, grid, units, truncation_tol)
    diag = wkb_diagnostics(packet, potential, x, units)
    _warn(diag)
    if grid is None:
        grid = default_wkb_grid(packet, potential, x, units)
    raw = np.abs(wkb_arrival_amplitude(packet, potential, x, grid.times, units)) ** 2
    return distribution_from_density(x, grid, raw, truncation_tol, diag)


def wkb_mean_arrival(packet, potential, x, units=UnitsConfig(), route="phase", grid=None):
    """Mean arrival time at ``x``.

    ``route="phase"`` averages the classical time ``-m q0 / p + int_0^x m / p(q) dq``
    with weight ``(p / p(x)) |psi|^2``. ``route="moment"`` takes the first
    moment of :func:`wkb_arrival_distribution`. For ``x <= 0`` both reduce to
    the free mean.
    """
    _check_x(x)
    if route not in ("phase", "moment"):
        raise InvalidParameterError(f"route must be 'phase' or 'moment', got {route!r}")
    if route == "moment":
        return wkb_arrival_distribution(packet, potential, x, grid, units).mean_time
    if x <= 0:
        return free1d.mean_arrival_time_phase(packet, x, units)
    _warn(wkb_diagnostics(packet, potential, x, units))
    nodes = _transmitted_nodes(packet, potential, x, units)
    if nodes is None:
        raise InvalidParameterError("no momentum component crosses the potential")
    p, w, _, p_x, _, _ = nodes
    weights = w * p / p_x * np.abs(packet(p)) ** 2
    return float(np.sum(weights * _node_times(packet, units, nodes)) / np.sum(weights))


def wkb_probability_check(packet, potential, x, units=UnitsConfig(), grid=None):
    """Time integral of the unnormalized density; equals :func:`wkb_arrival_probability`."""
    if grid is None:
        grid = default_wkb_grid(packet, potential, x, units)
    raw = np.abs(wkb_arrival_amplitude(packet, potential, x, grid.times, units)) ** 2
    return time_integral(grid, raw)
