import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import transfer_matrix_transmission, wigner_derivative_mp
from toa.barrier import (
    SquareBarrier,
    free_mean_right_movers,
    hartman_scan,
    mean_transmitted_arrival,
    plane_wave_advancement,
    transmission,
    transmission_amplitudes,
    transmission_phase,
    transmitted_arrival_amplitude,
    transmitted_arrival_distribution,
    transmitted_arrival_probability,
    wigner_phase_derivative,
)
from toa.errors import DomainError, InvalidParameterError
from toa.free1d import Mover, arrival_amplitude, mean_arrival_time
from toa.wavepacket import UnitsConfig, gaussian_packet


def test_invalid_barriers():
    with pytest.raises(InvalidParameterError):
        SquareBarrier(-1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        SquareBarrier(1.0, 0.0)


def test_threshold_tracks_mass():
    b = SquareBarrier(0.5, 1.0)
    assert b.threshold_momentum() == pytest.approx(1.0)
    assert b.threshold_momentum(UnitsConfig(4.0)) == pytest.approx(2.0)


def test_zero_height_is_transparent():
    p = np.linspace(0.01, 5, 50)
    T, R = transmission_amplitudes(p, SquareBarrier(0.0, 2.0))
    assert np.all(T == 1) and np.all(R == 0)
    assert wigner_phase_derivative(1.3, SquareBarrier(0.0, 2.0)) == 0.0


def test_threshold_value():
    a = 2.0
    b = SquareBarrier(0.5, a)
    T = transmission(1.0, b).T
    assert T == pytest.approx(np.exp(-1j * a) / (1 - 1j * a / 2), rel=1e-12)


@pytest.mark.parametrize("a", [0.5, 2.0, 6.0])
def test_against_transfer_matrix(a):
    b = SquareBarrier(0.5, a)
    p = np.concatenate([np.linspace(0.05, 0.999, 60), np.linspace(1.001, 3.0, 60)])
    T, R = transmission_amplitudes(p, b)
    for k, v in enumerate(p):
        t_ref, r_ref = transfer_matrix_transmission(v, 0.5, a)
        assert abs(T[k] - t_ref) <= 1e-8 * abs(t_ref)
        assert abs(R[k] - r_ref) <= 1e-8 * max(abs(r_ref), 1e-300) + 1e-14


def test_unitarity_and_bound():
    b = SquareBarrier(0.5, 3.0)
    p = np.linspace(1e-3, 4.0, 4001)
    T, R = transmission_amplitudes(p, b)
    assert np.max(np.abs(np.abs(T) ** 2 + np.abs(R) ** 2 - 1)) < 1e-10
    assert np.all(np.abs(T) <= 1 + 1e-12)


def test_threshold_continuity():
    b = SquareBarrier(0.5, 3.0)
    pv = 1.0
    p = pv * (1 + np.array([-1e-9, 0.0, 1e-9]))
    T, _ = transmission_amplitudes(p, b)
    assert np.max(np.abs(T - T[1])) < 1e-8


@pytest.mark.parametrize("n", [1, 2, 3])
def test_resonances_are_transparent(n):
    a, pv = 3.0, 1.0
    p = math.sqrt(pv**2 + (n * math.pi / a) ** 2)
    assert abs(transmission(p, SquareBarrier(0.5, a)).T) == pytest.approx(1.0, abs=1e-12)


def test_start_only_moves_reflection_phase():
    p = np.linspace(0.2, 2.5, 30)
    T0, R0 = transmission_amplitudes(p, SquareBarrier(0.5, 2.0, 0.0))
    T1, R1 = transmission_amplitudes(p, SquareBarrier(0.5, 2.0, 1.5))
    assert np.allclose(T0, T1, rtol=1e-14)
    assert np.allclose(R1, R0 * np.exp(2j * p * 1.5), rtol=1e-12)


def test_phase_is_continuous_and_consistent():
    b = SquareBarrier(0.5, 5.0)
    p = np.linspace(1e-3, 4.0, 20001)
    ph = transmission_phase(p, b)
    assert np.max(np.abs(np.diff(ph))) < 0.05
    T, _ = transmission_amplitudes(p, b)
    assert np.max(np.abs(np.angle(T * np.exp(-1j * ph)))) < 1e-10


@pytest.mark.parametrize("p,a", [(0.3, 3.0), (0.3, 8.0), (0.8, 1.0), (1.5, 2.0), (2.5, 6.0)])
def test_phase_derivative_matches_symbolic(p, a):
    assert wigner_phase_derivative(p, SquareBarrier(0.5, a)) == pytest.approx(wigner_derivative_mp(p, 0.5, a), rel=1e-6)


def test_deep_tunneling_slope():
    # d arg T / dp -> -a + 2 / kappa once kappa a >> 1; the excess 2/kappa does not grow with a
    b = SquareBarrier(1.0, 400.0)
    kappa = math.sqrt(2.0 - 0.25)
    assert wigner_phase_derivative(0.5, b) == pytest.approx(-400 + 2 / kappa, rel=1e-9)
    # also after |T| underflows to zero
    b = SquareBarrier(1.0, 4000.0)
    assert transmission_amplitudes(np.array([0.5]), b)[0][0] == 0
    assert wigner_phase_derivative(0.5, b) + 4000 == pytest.approx(2 / kappa, rel=1e-6)


def test_plane_wave_advancement_uses_mass():
    b = SquareBarrier(0.5, 2.0)
    m = UnitsConfig(2.0)
    assert plane_wave_advancement(1.2, b, m) == pytest.approx(2.0 / 1.2 * wigner_phase_derivative(1.2, b, m))


def test_domain_errors():
    b = SquareBarrier(0.5, 2.0)
    with pytest.raises(DomainError):
        transmission(0.0, b)
    with pytest.raises(DomainError):
        mean_transmitted_arrival(gaussian_packet(-10, 0.5, 0.1), 1.0, b)
    with pytest.raises(DomainError):
        mean_transmitted_arrival(gaussian_packet(1.0, 0.5, 0.1), 5.0, b)
    with pytest.raises(DomainError):
        mean_transmitted_arrival(gaussian_packet(-10, 0.1, 0.1), 5.0, b)


def test_transparent_barrier_reduces_to_free():
    pk = gaussian_packet(-10.0, 2.0, 0.1)
    b = SquareBarrier(0.0, 1.0)
    t = np.linspace(3, 8, 9)
    a = transmitted_arrival_amplitude(pk, 5.0, b, t)
    f = arrival_amplitude(pk, 5.0, Mover.RIGHT, t)
    assert np.max(np.abs(a - f)) < 1e-10
    assert transmitted_arrival_probability(pk, b) == pytest.approx(1.0, abs=1e-6)
    assert mean_transmitted_arrival(pk, 5.0, b) == pytest.approx(mean_arrival_time(pk, 5.0), rel=1e-9)


def test_global_phase_only_rotates_amplitude():
    pk = gaussian_packet(-10.0, 0.8, 0.1)
    b = SquareBarrier(0.5, 1.0)
    tab = pk.tabulate(4096)
    rot = tab.scaled(np.exp(0.7j))
    t = np.array([15.0, 20.0])
    a = transmitted_arrival_amplitude(tab, 5.0, b, t)
    r = transmitted_arrival_amplitude(rot, 5.0, b, t)
    assert np.allclose(r, a * np.exp(0.7j), rtol=1e-12)


def test_resonant_packet_matches_free_envelope():
    a = 3.0
    p_res = math.sqrt(1.0 + (math.pi / a) ** 2)
    pk = gaussian_packet(-40.0, p_res, 0.01)
    b = SquareBarrier(0.5, a)
    d_b = transmitted_arrival_distribution(pk, 10.0, b)
    free = np.abs(arrival_amplitude(pk, 10.0, Mover.RIGHT, d_b.times)) ** 2
    dens_b = np.abs(transmitted_arrival_amplitude(pk, 10.0, b, d_b.times)) ** 2
    assert np.max(dens_b) == pytest.approx(np.max(free), rel=1e-3)


def test_probability_independent_of_position():
    pk = gaussian_packet(-10.0, 0.8, 0.1)
    b = SquareBarrier(0.5, 1.0)
    p1 = transmitted_arrival_distribution(pk, 3.0, b).arrival_probability
    p2 = transmitted_arrival_distribution(pk, 12.0, b).arrival_probability
    assert p1 == pytest.approx(p2, rel=1e-3)
    assert p1 == pytest.approx(transmitted_arrival_probability(pk, b), rel=1e-3)


def test_deep_tunneling_suppression():
    pk = gaussian_packet(-10.0, 0.3, 0.01)
    kappa = math.sqrt(1.0 - 0.09)
    ratios = []
    for a in (6.0, 8.0):
        prob = transmitted_arrival_probability(pk, SquareBarrier(0.5, a))
        t_ref, _ = transfer_matrix_transmission(0.3, 0.5, a)
        assert prob == pytest.approx(abs(t_ref) ** 2, rel=0.05)
        ratios.append(prob)
    assert ratios[1] / ratios[0] == pytest.approx(math.exp(-2 * kappa * 2.0), rel=0.05)


def test_routes_agree():
    pk = gaussian_packet(-10.0, 0.8, 0.12)
    b = SquareBarrier(0.5, 2.0)
    phase = mean_transmitted_arrival(pk, 5.0, b)
    moment = mean_transmitted_arrival(pk, 5.0, b, route="moment")
    assert moment == pytest.approx(phase, rel=1e-5)
    with pytest.raises(InvalidParameterError):
        mean_transmitted_arrival(pk, 5.0, b, route="other")


def test_thin_and_thick_barriers():
    pk = gaussian_packet(-5.0, 0.5, 0.1)
    free = free_mean_right_movers(pk, 25.0)
    assert mean_transmitted_arrival(pk, 25.0, SquareBarrier(0.5, 2.0)) < free
    assert mean_transmitted_arrival(pk, 25.0, SquareBarrier(0.5, 16.0)) > free


def test_scan_single_crossover():
    pk = gaussian_packet(-5.0, 0.5, 0.1)
    widths = np.geomspace(1.0, 20.0, 16)
    scan = hartman_scan(pk, 25.0, 0.5, widths)
    assert scan.sign_changes == 1
    lo, hi = scan.bracket
    assert lo < scan.crossover < hi
    assert scan.advancements[0] < 0 < scan.advancements[-1]
    assert len(scan.rows()) == 16


def test_scan_vanishing_width_limit():
    # psi(0) must be negligible: near p = 0 the phase slope grows like 1/a, so a
    # packet with weight at p = 0 keeps a residual of order |psi(0)|^2 / a
    pk = gaussian_packet(-5.0, 0.5, 0.05)
    scan = hartman_scan(pk, 25.0, 0.5, [1e-4, 1e-3, 1e-2])
    adv = np.abs(scan.advancements)
    assert adv[0] < adv[1] < adv[2]
    assert adv[0] < 1e-2


def test_scan_is_thread_independent():
    pk = gaussian_packet(-5.0, 0.5, 0.1)
    widths = [1.0, 4.0, 12.0]
    a = hartman_scan(pk, 25.0, 0.5, widths, threads=1)
    b = hartman_scan(pk, 25.0, 0.5, widths, threads=3)
    assert a.mean_times == b.mean_times


def test_scan_validation():
    pk = gaussian_packet(-5.0, 0.5, 0.1)
    with pytest.raises(InvalidParameterError):
        hartman_scan(pk, 25.0, 0.5, [2.0, 1.0])


def test_above_barrier_packet_is_delayed_by_wigner_time():
    pk = gaussian_packet(-10.0, 2.0, 0.05)
    b = SquareBarrier(0.5, 2.0)
    adv = mean_transmitted_arrival(pk, 5.0, b) - free_mean_right_movers(pk, 5.0)
    assert adv == pytest.approx(plane_wave_advancement(2.0, b), rel=0.05)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.01, 4.0), v=st.floats(0.01, 2.0), a=st.floats(0.05, 10.0))
def test_unitarity_property(p, v, a):
    T, R = transmission_amplitudes(np.array([p]), SquareBarrier(v, a))
    assert abs(abs(T[0]) ** 2 + abs(R[0]) ** 2 - 1) < 1e-10
