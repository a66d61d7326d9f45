import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from toa.errors import InvalidParameterError
from toa.free3d import (
    IsotropicPacket3D,
    arrival_amplitude_3d,
    arrival_amplitude_cartesian,
    bump_packet,
    eigenfunction_exponent,
    radial_weight_exponent,
    smooth_bump,
    subspace_identity_residual,
)
from toa.wavepacket import UnitsConfig

PROBES = [(r * math.sin(a), 0.0, r * math.cos(a)) for r, a in zip(np.linspace(0.9, 2.1, 41), np.linspace(0, 3, 41))]


def test_real_profile_gives_conjugate_amplitudes():
    st_ = bump_packet(1.0, 2.0)
    for t in (0.7, 2.5):
        assert arrival_amplitude_3d(st_, -t) == pytest.approx(np.conj(arrival_amplitude_3d(st_, t)), abs=1e-15)


@pytest.mark.parametrize("t", [0.0, 1.5, -3.0])
def test_radial_reduction_matches_cartesian_quadrature(t):
    st_ = bump_packet(1.0, 2.0, center=(0.3, -0.2, 0.5))
    a = arrival_amplitude_3d(st_, t)
    b = arrival_amplitude_cartesian(st_.momentum_amplitude, st_.center, t, p_max=2.0, points=80)
    assert abs(a - b) / abs(a) < 1e-4


def test_narrow_shell_has_flat_density():
    p0, dp = 2.0, 0.01
    st_ = bump_packet(p0 - dp, p0 + dp)
    scale = 1.0 / (p0 * dp)
    t = np.linspace(-0.01 * scale, 0.01 * scale, 11)
    dens = np.abs(arrival_amplitude_3d(st_, t)) ** 2
    assert np.max(dens) / np.min(dens) < 1.001


def test_phase_time_moves_peak():
    st_ = bump_packet(1.0, 2.0, phase_time=4.0)
    t = np.linspace(0.0, 8.0, 801)
    dens = np.abs(arrival_amplitude_3d(st_, t)) ** 2
    assert t[np.argmax(dens)] == pytest.approx(4.0, abs=0.02)


def test_residual_at_zero_window_is_the_state():
    st_ = bump_packet(1.0, 2.0)
    r = np.linalg.norm(PROBES, axis=1)
    expect = np.max(np.abs(st_.profile(r))) * (2 * math.pi) ** -1.5
    assert subspace_identity_residual(st_, PROBES, 0.0) == pytest.approx(expect, rel=1e-14)


def test_residual_decreases_and_vanishes():
    st_ = bump_packet(1.0, 2.0, center=(1.0, 2.0, 3.0))
    halves = np.linspace(0.5, 60.0, 40)
    averaged = [subspace_identity_residual(st_, PROBES, T, averaged=True) for T in halves]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(averaged, averaged[1:]))
    plain = subspace_identity_residual(st_, PROBES, 50.0)
    fine = subspace_identity_residual(st_, PROBES, 50.0, points=8192)
    assert plain < 1e-2
    assert plain == pytest.approx(fine, rel=1e-6)
    assert subspace_identity_residual(st_, PROBES, 200.0) < 1e-6


def test_shifted_peak_state_needs_longer_windows():
    # a state whose arrival is centred at t0 is not resolved by windows much shorter than t0
    st_ = bump_packet(1.0, 2.0, phase_time=30.0)
    assert subspace_identity_residual(st_, PROBES, 5.0) > 0.5 * subspace_identity_residual(st_, PROBES, 0.0)
    assert subspace_identity_residual(st_, PROBES, 120.0) < 1e-3


def test_norm_of_detected_state():
    st_ = bump_packet(1.0, 2.0)
    p = np.linspace(1.0, 2.0, 20001)
    ref = 4 * math.pi / (2 * math.pi) ** 3 * np.trapezoid(p * p * smooth_bump((p - 1.5) / 0.5) ** 2, p)
    assert st_.norm() == pytest.approx(ref, rel=1e-8)


def test_weight_exponents():
    assert eigenfunction_exponent(3) == -0.5
    assert radial_weight_exponent(3) == 1.5
    # the one-dimensional sqrt(p/m) weight
    assert eigenfunction_exponent(1) == 0.5
    assert radial_weight_exponent(1) == 0.5
    with pytest.raises(InvalidParameterError):
        eigenfunction_exponent(0)


def test_invalid_states():
    with pytest.raises(InvalidParameterError):
        bump_packet(2.0, 1.0)
    with pytest.raises(InvalidParameterError):
        IsotropicPacket3D(lambda p: p, center=(0, 0), support=(0, 1))
    with pytest.raises(InvalidParameterError):
        subspace_identity_residual(bump_packet(1, 2), PROBES, -1.0)
    with pytest.raises(InvalidParameterError):
        subspace_identity_residual(bump_packet(1, 2), [(1.0, 2.0)], 1.0)


def test_mass_dependence():
    st_ = bump_packet(1.0, 2.0, units=UnitsConfig(2.0))
    assert subspace_identity_residual(st_, PROBES, 100.0, UnitsConfig(2.0)) < 1e-2


@settings(max_examples=20, deadline=None)
@given(angles=st.tuples(st.floats(0, 2 * math.pi), st.floats(0, math.pi), st.floats(0, 2 * math.pi)),
       T=st.floats(0.5, 30.0))
def test_rotational_invariance(angles, T):
    st_ = bump_packet(1.0, 2.0, center=(0.5, 0.0, -1.0))
    rot = Rotation.from_euler("zyz", angles).as_matrix()
    probes = np.asarray(PROBES[::8])
    for probe in probes:
        a = subspace_identity_residual(st_, [probe], T)
        b = subspace_identity_residual(st_, [rot @ probe], T)
        assert a == pytest.approx(b, rel=1e-9, abs=1e-15)
