"""Arrival time of a free particle in three dimensions, on detected states.

A detected state is ``psi(H0)|x>``: a radial momentum profile attached to the
detection point ``x``. Its momentum amplitude is
``<p|psi;x> = f(|p|) exp(-i p.x) / (2 pi)^(3/2)``, which makes the state
isotropic about ``x``.

Arrival eigenstates are taken as
``<p|t;x> = sqrt(pi / (m p)) exp(i E_p t) <p|x>``. With this normalization the
time integral of ``|t;x><t;x|`` is exactly the identity on detected states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameterError
from .numerics import QuadratureSpec, check_resolution, energy_transform, resolved_spec
from .wavepacket import UnitsConfig

_AMPLITUDE_PREFACTOR = 4.0 * math.pi / (2.0 * math.pi) ** 3
_PLANE_WAVE = (2.0 * math.pi) ** -1.5


def eigenfunction_exponent(dim):
    """Power of ``p`` in the radial arrival eigenfunction in ``dim`` dimensions.

    The ordering ``p^-(n+1) (-i d/dp) p^n`` with ``n = (dim - 2) / 2`` has
    eigenfunctions ``p^-n exp(i E t)``.
    """
    if dim < 1:
        raise InvalidParameterError(f"dimension must be at least 1, got {dim}")
    return -(dim - 2) / 2.0


def radial_weight_exponent(dim):
    """Power of ``p`` multiplying the profile in the radial amplitude integral.

    Measure ``p^(dim-1)`` times the eigenfunction power; 1/2 in one dimension
    (the ``sqrt(p/m)`` factor) and 3/2 in three.
    """
    return (dim - 1) + eigenfunction_exponent(dim)


@dataclass(frozen=True, eq=False)
class IsotropicPacket3D:
    """Detected state ``psi(H0)|x>`` given by its radial profile.

    ``support`` bounds the momenta where the profile is non-zero; quadrature
    runs over it.
    """

    radial_profile: Callable
    center: tuple = (0.0, 0.0, 0.0)
    support: tuple = (0.0, 1.0)
    points: int = field(default=512, repr=False)

    def __post_init__(self):
        lo, hi = self.support
        if not (0.0 <= lo < hi and np.isfinite(hi)):
            raise InvalidParameterError(f"support must satisfy 0 <= p_min < p_max, got {self.support}")
        c = np.asarray(self.center, dtype=float)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise InvalidParameterError(f"center must be 3 finite numbers, got {self.center}")
        object.__setattr__(self, "center", tuple(float(v) for v in c))

    def profile(self, p):
        p = np.asarray(p, dtype=float)
        lo, hi = self.support
        inside = (p >= lo) & (p <= hi)
        out = np.zeros(p.shape, dtype=complex)
        out[inside] = self.radial_profile(p[inside])
        return out

    def momentum_amplitude(self, pvec):
        """``<p|psi;x>`` for an ``(..., 3)`` array of momenta."""
        pvec = np.asarray(pvec, dtype=float)
        r = np.linalg.norm(pvec, axis=-1)
        return self.profile(r) * np.exp(-1j * (pvec @ np.asarray(self.center))) * _PLANE_WAVE

    def norm(self):
        """``<psi;x|psi;x> = 4 pi / (2 pi)^3 int p^2 |f(p)|^2 dp``."""
        p, w = QuadratureSpec(self.support, self.points).nodes()
        return float(_AMPLITUDE_PREFACTOR * np.sum(w * p * p * np.abs(self.profile(p)) ** 2))


def smooth_bump(p):
    """``exp(-1 / (1 - u^2))`` on ``|u| < 1``, zero outside; infinitely smooth."""
    u = np.asarray(p, dtype=float)
    out = np.zeros(u.shape)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def bump_packet(p_min, p_max, center=(0.0, 0.0, 0.0), phase_time=0.0, units=UnitsConfig(), points=512):
    """Detected state with a smooth bump profile on ``[p_min, p_max]``.

    ``phase_time`` multiplies the profile by ``exp(i E t0)``, which moves
    the arrival-amplitude peak to ``t = t0``.
    """
    if not 0.0 < p_min < p_max:
        raise InvalidParameterError(f"bump needs 0 < p_min < p_max, got {p_min}, {p_max}")
    mid, half = 0.5 * (p_min + p_max), 0.5 * (p_max - p_min)
    m = units.mass

    def profile(p):
        return smooth_bump((p - mid) / half) * np.exp(1j * p * p / (2.0 * m) * phase_time)

    return IsotropicPacket3D(profile, center, (p_min, p_max), points)


def _radial_terms(state, times, units, points=None):
    m = units.mass
    lo, hi = state.support
    freq = hi * float(np.max(np.abs(times))) / m
    if points is None:
        spec = resolved_spec(state.support, freq, minimum=state.points)
    else:
        spec = QuadratureSpec(state.support, points)
        check_resolution(spec, freq)
    p, w = spec.nodes()
    k = radial_weight_exponent(3)
    coef = _AMPLITUDE_PREFACTOR * math.sqrt(math.pi / m) * w * p**k * state.profile(p)
    return p * p / (2.0 * m), coef


def arrival_amplitude_3d(state, t, units=UnitsConfig(), points=None):
    """``<t;x|psi;x>`` with the angular integral done analytically.

    ``t`` may be a scalar or an array.
    """
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    energies, coef = _radial_terms(state, times, units, points)
    out = energy_transform(times, energies, coef)
    return complex(out[0]) if scalar else out


def arrival_amplitude_cartesian(momentum_amplitude, center, t, units=UnitsConfig(), p_max=1.0, points=64):
    """``<t;x|psi>`` by a tensor-product Gauss-Legendre rule on the cube ``|p_i| <= p_max``.

    ``momentum_amplitude`` maps an ``(n, 3)`` array of momenta to ``<p|psi>``.
    No symmetry is used, so this also serves non-isotropic states.
    """
    m = units.mass
    x, w = np.polynomial.legendre.leggauss(points)
    axis, wa = p_max * x, p_max * w
    center = np.asarray(center, dtype=float)
    total = 0.0 + 0.0j
    py, pz = np.meshgrid(axis, axis, indexing="ij")
    wyz = np.outer(wa, wa)
    for px, wx in zip(axis, wa):
        pvec = np.stack([np.full(py.shape, px), py, pz], axis=-1).reshape(-1, 3)
        r = np.linalg.norm(pvec, axis=1)
        r = np.where(r > 0.0, r, np.finfo(float).tiny)
        eig = np.sqrt(math.pi / (m * r)) * np.exp(1j * r * r / (2.0 * m) * t) * np.exp(-1j * (pvec @ center)) * _PLANE_WAVE
        total += wx * np.sum(wyz.ravel() * np.conj(eig) * momentum_amplitude(pvec))
    return complex(total)


def identity_window(state, units=UnitsConfig(), factor=50.0):
    """Default ``T_half`` for the identity check: ``factor * m / (p_min * (p_max - p_min))``.

    ``m / (p dp)`` is the time over which the energy spread of the profile
    dephases; the factor leaves room for the kernel to resolve the profile.
    """
    lo, hi = state.support
    return factor * units.mass / (max(lo, (hi - lo) / 10.0) * (hi - lo))


def _dirichlet(de, T):
    # int_{-T}^{T} exp(i dE t) dt
    return 2.0 * T * np.sinc(de * T / math.pi)


def _fejer(de, T):
    # (1/T) int_0^T dT' int_{-T'}^{T'} exp(i dE t) dt
    return T * np.sinc(de * T / (2.0 * math.pi)) ** 2


def identity_action(state, momenta, T_half, units=UnitsConfig(), averaged=False, points=None):
    """Radial part of ``<p|1_x(T_half)|psi;x>`` for scalar momenta ``|p|``.

    ``1_x(T_half)`` is the time integral of ``|t;x><t;x|`` over
    ``[-T_half, T_half]``; with ``averaged=True`` it is additionally averaged
    over the cutoff in ``[0, T_half]``. The result multiplies ``<p|x>``.
    """
    m = units.mass
    momenta = np.atleast_1d(np.asarray(momenta, dtype=float))
    if T_half == 0:
        return np.zeros(momenta.shape, dtype=complex)
    lo, hi = state.support
    freq = hi * T_half / m
    if points is None:
        spec = resolved_spec(state.support, freq, minimum=state.points)
    else:
        spec = QuadratureSpec(state.support, points)
        check_resolution(spec, freq)
    q, w = spec.nodes()
    k = radial_weight_exponent(3)
    source = w * q**k * state.profile(q)
    kernel = _fejer if averaged else _dirichlet
    de = (momenta[:, None] ** 2 - q[None, :] ** 2) / (2.0 * m)
    safe = np.where(momenta > 0.0, momenta, 1.0) ** eigenfunction_exponent(3)
    out = safe * (kernel(de, T_half) @ source) / (2.0 * math.pi * m)
    return np.where(momenta > 0.0, out, 0.0)


def subspace_identity_residual(state, probe_momenta, T_half, units=UnitsConfig(), averaged=False, points=None):
    """``max_k |<p_k|1_x(T_half)|psi;x> - <p_k|psi;x>|`` over the probe momenta.

    Tends to zero as ``T_half`` grows. ``averaged=True`` uses the Cesaro
    mean over the cutoff, which makes the residual non-increasing in
    ``T_half``.
    """
    if T_half < 0:
        raise InvalidParameterError(f"T_half must be non-negative, got {T_half}")
    probes = np.atleast_2d(np.asarray(probe_momenta, dtype=float))
    if probes.shape[-1] != 3:
        raise InvalidParameterError("probe momenta must be 3-component vectors")
    r = np.linalg.norm(probes, axis=1)
    action = identity_action(state, r, T_half, units, averaged, points)
    return float(_PLANE_WAVE * np.max(np.abs(action - state.profile(r))))
