"""Initial states in the momentum representation (hbar = 1)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidParameterError
from .numerics import QuadratureSpec, unwrap_phase

# Gaussian |psi(p)|^2 beyond this many standard deviations carries < 1e-15 of the norm.
NORM_SIGMAS = 8.0
# Amplitude integrals keep |psi(p)| down to exp(-36) of its peak.
AMPLITUDE_SIGMAS = 12.0


@dataclass(frozen=True)
class UnitsConfig:
    """Particle mass; hbar is fixed to 1."""

    mass: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise InvalidParameterError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True, eq=False)
class MomentumWavePacket:
    """Momentum amplitude ``psi(p)`` of an initial state.

    Construct with :func:`gaussian_packet` or :func:`tabulated_packet`.
    Gaussian packets follow the phase convention
    ``psi(p) = |psi(p)| exp(-i p q0)``, so ``q0`` is the initial centre.
    Tabulated packets interpolate real and imaginary parts linearly and
    vanish outside the table.
    """

    kind: str
    q0: float = 0.0
    p0: float = 0.0
    sigma_p: float = 1.0
    p_table: np.ndarray = field(default=None, repr=False)
    amp_table: np.ndarray = field(default=None, repr=False)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "gaussian":
            s = self.sigma_p
            mag = (2.0 * math.pi * s * s) ** -0.25 * np.exp(-((p - self.p0) ** 2) / (4.0 * s * s))
            return mag * np.exp(-1j * p * self.q0)
        re = np.interp(p, self.p_table, self.amp_table.real, left=0.0, right=0.0)
        im = np.interp(p, self.p_table, self.amp_table.imag, left=0.0, right=0.0)
        return re + 1j * im

    def window(self, n_sigma=AMPLITUDE_SIGMAS):
        """Momentum interval outside which ``psi`` is treated as zero."""
        if self.kind == "gaussian":
            return self.p0 - n_sigma * self.sigma_p, self.p0 + n_sigma * self.sigma_p
        return float(self.p_table[0]), float(self.p_table[-1])

    def arg_derivative(self, p):
        """``d arg psi / dp``; equals ``-q0`` for Gaussian packets."""
        p = np.asarray(p, dtype=float)
        if self.kind == "gaussian":
            return np.full(p.shape, -self.q0)
        phase = unwrap_phase(self.amp_table, max_jump=math.pi)
        slope = np.gradient(phase, self.p_table)
        return np.interp(p, self.p_table, slope)

    @property
    def mean_momentum(self):
        if self.kind == "gaussian":
            return self.p0
        rho = np.abs(self.amp_table) ** 2
        return float(trapezoid(rho * self.p_table, self.p_table) / trapezoid(rho, self.p_table))

    @property
    def momentum_spread(self):
        if self.kind == "gaussian":
            return self.sigma_p
        rho = np.abs(self.amp_table) ** 2
        mean = self.mean_momentum
        var = trapezoid(rho * (self.p_table - mean) ** 2, self.p_table) / trapezoid(rho, self.p_table)
        return float(math.sqrt(var))

    @property
    def center(self):
        """Initial position: ``q0`` or the ``|psi|^2``-weighted ``-d arg psi/dp``."""
        if self.kind == "gaussian":
            return self.q0
        rho = np.abs(self.amp_table) ** 2
        q = -self.arg_derivative(self.p_table)
        return float(trapezoid(rho * q, self.p_table) / trapezoid(rho, self.p_table))

    def translated(self, delta):
        """The same state displaced by ``delta`` in position."""
        if self.kind == "gaussian":
            return gaussian_packet(self.q0 + delta, self.p0, self.sigma_p)
        return tabulated_packet(self.p_table, self.amp_table * np.exp(-1j * self.p_table * delta))

    def scaled(self, factor):
        """Tabulated copy multiplied by a complex constant (breaks normalization)."""
        return tabulated_packet(self.p_table, factor * self.amp_table)

    def tabulate(self, points=2048, n_sigma=NORM_SIGMAS):
        """Tabulated copy sampled on ``points`` equally spaced momenta."""
        lo, hi = self.window(n_sigma)
        p = np.linspace(lo, hi, points)
        return tabulated_packet(p, self(p))


def gaussian_packet(q0, p0, sigma_p):
    """Normalized Gaussian ``(2 pi s^2)^(-1/4) exp(-(p-p0)^2 / 4s^2) exp(-i p q0)``."""
    if not (np.isfinite(sigma_p) and sigma_p > 0):
        raise InvalidParameterError(f"sigma_p must be positive, got {sigma_p}")
    if not (np.isfinite(q0) and np.isfinite(p0)):
        raise InvalidParameterError("q0 and p0 must be finite")
    return MomentumWavePacket("gaussian", float(q0), float(p0), float(sigma_p))


def tabulated_packet(p, amplitude):
    """Packet given by complex samples on an increasing momentum grid."""
    p = np.asarray(p, dtype=float)
    amp = np.asarray(amplitude, dtype=complex)
    if p.ndim != 1 or p.shape != amp.shape or p.size < 2:
        raise InvalidParameterError("tabulated packet needs matching 1-D arrays with at least 2 samples")
    if np.any(np.diff(p) <= 0):
        raise InvalidParameterError("tabulated momenta must be strictly increasing")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(amp))):
        raise InvalidParameterError("tabulated packet contains non-finite values")
    p.setflags(write=False)
    amp.setflags(write=False)
    return MomentumWavePacket("tabulated", p_table=p, amp_table=amp)


def _gauss_weight_integral(packet, lo, hi):
    spec = QuadratureSpec((lo, hi), 512)
    p, w = spec.nodes()
    return float(np.sum(w * np.abs(packet(p)) ** 2))


def norm(packet):
    """``integral |psi(p)|^2 dp``.

    Gaussian packets use composite Gauss-Legendre over ``p0 +- 8 sigma_p``;
    tabulated packets use the trapezoid rule on their own samples.
    """
    if packet.kind == "gaussian":
        return _gauss_weight_integral(packet, *packet.window(NORM_SIGMAS))
    return float(trapezoid(np.abs(packet.amp_table) ** 2, packet.p_table))


def negative_momentum_fraction(packet):
    """``integral_{-inf}^0 |psi(p)|^2 dp``."""
    if packet.kind == "gaussian":
        lo, hi = packet.window(NORM_SIGMAS)
        if lo >= 0.0:
            return 0.0
        return _gauss_weight_integral(packet, lo, min(hi, 0.0))
    p = packet.p_table
    if p[0] >= 0.0:
        return 0.0
    neg = p[p < 0.0]
    grid = np.append(neg, 0.0) if p[-1] >= 0.0 else neg
    return float(trapezoid(np.abs(packet(grid)) ** 2, grid))
