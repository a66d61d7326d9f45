import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import classical_mean_time
from toa.classical import (
    PhaseSpacePoint,
    arrival_time_hj,
    arrival_time_trajectory,
    arrival_times,
    ensemble_mean_arrival,
    integrate,
)
from toa.errors import DegenerateEnsembleError, IntegrationError, InvalidParameterError, TurningPointError
from toa.potential import gaussian_bump, tabulated_potential, zero_potential
from toa.wavepacket import UnitsConfig, gaussian_packet

BUMP = gaussian_bump(5.0, 1.0, 10.0)


def test_free_drift_is_exact():
    tr = integrate(PhaseSpacePoint(-3.0, 1.7), zero_potential(), 10.0, 0.1, UnitsConfig(2.0))
    assert np.allclose(tr.q, -3.0 + 1.7 * tr.times / 2.0, atol=1e-12)
    assert np.all(tr.p == 1.7)
    assert len(tr.samples) == tr.times.size


def test_energy_drift_small():
    tr = integrate(PhaseSpacePoint(-3.0, 4.0), BUMP, 10.0, 0.005)
    e = tr.energies(BUMP)
    assert np.max(np.abs(e - tr.energy)) / tr.energy <= 1e-8


def test_step_halving_converges_at_fourth_order():
    start = PhaseSpacePoint(8.0, 3.5)
    ref = integrate(start, BUMP, 4.0, 0.0005).q[-1]
    e1 = abs(integrate(start, BUMP, 4.0, 0.04, drift_tol=1.0).q[-1] - ref)
    e2 = abs(integrate(start, BUMP, 4.0, 0.02, drift_tol=1.0).q[-1] - ref)
    assert 12 < e1 / e2 < 20


def test_time_reversal():
    tr = integrate(PhaseSpacePoint(-3.0, 4.0), BUMP, 10.0, 0.005)
    back = integrate(PhaseSpacePoint(tr.q[-1], -tr.p[-1]), BUMP, 10.0, 0.005)
    assert back.q[-1] == pytest.approx(-3.0, abs=1e-8)
    assert -back.p[-1] == pytest.approx(4.0, abs=1e-8)


def test_large_step_is_rejected():
    with pytest.raises(IntegrationError):
        integrate(PhaseSpacePoint(5.0, 3.2), BUMP, 10.0, 0.5)
    with pytest.raises(InvalidParameterError):
        integrate(PhaseSpacePoint(5.0, 3.2), BUMP, 10.0, 0.0)


def test_free_arrival():
    assert arrival_time_trajectory(PhaseSpacePoint(-4.0, 2.0), zero_potential(), 6.0) == pytest.approx(5.0, rel=1e-12)
    assert arrival_time_trajectory(PhaseSpacePoint(-4.0, -2.0), zero_potential(), 6.0) is None
    assert arrival_time_trajectory(PhaseSpacePoint(6.0, 2.0), zero_potential(), 6.0) == 0.0


def test_reflected_particle_never_arrives():
    assert arrival_time_trajectory(PhaseSpacePoint(-4.0, 3.0), BUMP, 20.0) is None
    # starts beyond the bump moving away from a point left of it
    assert arrival_time_trajectory(PhaseSpacePoint(25.0, 1.0), BUMP, 0.0) is None


def test_turning_particle_arrives_on_the_way_back():
    # starts on the bump slope moving right but too slow to cross: it rolls back to x
    t = arrival_time_trajectory(PhaseSpacePoint(8.0, 1.0), BUMP, 5.0)
    assert t is not None and t > 0


@pytest.mark.parametrize("E", [6.0, 20.0, 80.0])
@pytest.mark.parametrize("x", [5.0, 12.0, 30.0])
def test_duality(E, x):
    t_hj = arrival_time_hj(E, BUMP, -5.0, x)
    t_tr = arrival_time_trajectory(PhaseSpacePoint(-5.0, math.sqrt(2 * E)), BUMP, x)
    assert t_tr == pytest.approx(t_hj, rel=1e-6)


def test_hj_examples():
    assert arrival_time_hj(2.0, zero_potential(), -1.0, 5.0) == pytest.approx(3.0)
    assert arrival_time_hj(20.0, BUMP, -5.0, 30.0) == pytest.approx(
        arrival_time_hj(20.0, BUMP, -5.0, 9.3) + arrival_time_hj(20.0, BUMP, 9.3, 30.0), rel=1e-12)
    with pytest.raises(TurningPointError):
        arrival_time_hj(4.0, BUMP, -5.0, 30.0)


def test_arrival_increases_with_distance():
    xs = np.linspace(-4.0, 30.0, 25)
    times = arrival_times(np.full(xs.size, -5.0), np.full(xs.size, math.sqrt(12.0)), BUMP, 30.0)
    hj = [arrival_time_hj(6.0, BUMP, -5.0, x) for x in xs]
    assert np.all(np.diff(hj) > 0)
    assert np.isfinite(times).all()


def test_ensemble_free_matches_quadrature():
    pk = gaussian_packet(-10.0, 2.0, 0.2)
    res = ensemble_mean_arrival(pk, zero_potential(), 0.0, samples=10_000, seed=5)
    ref = classical_mean_time(-10.0, 2.0, 0.2, 0.0)
    assert abs(res.mean - ref) < 3 * res.stderr
    assert res.no_arrival_fraction == 0.0


def test_ensemble_at_release_point():
    pk = gaussian_packet(3.0, 2.0, 0.2)
    res = ensemble_mean_arrival(pk, zero_potential(), 3.0, samples=1000)
    assert res.mean == 0.0


def test_ensemble_is_deterministic_and_thread_independent():
    pk = gaussian_packet(-10.0, 4.0, 0.1)
    a = ensemble_mean_arrival(pk, BUMP, 20.0, samples=2000, seed=9, threads=1)
    b = ensemble_mean_arrival(pk, BUMP, 20.0, samples=2000, seed=9, threads=3)
    assert a == b


def test_ensemble_reports_reflection_and_degeneracy():
    pk = gaussian_packet(-10.0, math.sqrt(10.0), 0.3)
    res = ensemble_mean_arrival(pk, BUMP, 20.0, samples=2000, seed=1)
    assert 0.3 < res.no_arrival_fraction < 0.7
    with pytest.raises(DegenerateEnsembleError):
        ensemble_mean_arrival(gaussian_packet(-10.0, 1.0, 0.05), BUMP, 20.0, samples=1000)
    with pytest.raises(InvalidParameterError):
        ensemble_mean_arrival(pk, BUMP, 20.0, samples=10)
    with pytest.raises(InvalidParameterError):
        ensemble_mean_arrival(pk.tabulate(), BUMP, 20.0)


@settings(max_examples=10, deadline=None)
@given(E=st.floats(6.0, 100.0), height=st.floats(0.5, 5.0), width=st.floats(0.5, 2.0), x=st.floats(-3.0, 40.0))
def test_duality_property(E, height, width, x):
    pot = gaussian_bump(height, width, 9.0 * width)
    t_hj = arrival_time_hj(E, pot, -5.0, x)
    t_tr = arrival_time_trajectory(PhaseSpacePoint(-5.0, math.sqrt(2 * E)), pot, x)
    assert t_tr == pytest.approx(t_hj, rel=1e-6)


def test_hj_time_is_positive_for_left_movers():
    right = arrival_time_hj(8.0, BUMP, -1.0, 25.0)
    left = arrival_time_hj(8.0, BUMP, 25.0, -1.0)
    assert left == pytest.approx(right, rel=1e-12) and left > 0
    assert arrival_time_hj(2.0, zero_potential(), 5.0, -1.0) == pytest.approx(3.0)


def test_left_mover_duality():
    E, q0, x = 12.0, 30.0, -2.0
    start = PhaseSpacePoint(q0, -math.sqrt(2.0 * E))
    assert arrival_time_trajectory(start, BUMP, x) == pytest.approx(arrival_time_hj(E, BUMP, q0, x), rel=1e-6)


def test_trajectory_reports_drift_within_tolerance():
    t, drift = arrival_time_trajectory(PhaseSpacePoint(-5.0, 4.0), BUMP, 25.0, return_drift=True)
    assert t > 0 and 0.0 < drift <= 1e-8
    assert arrival_times([-5.0], [-1.0], zero_potential(), 5.0, return_drift=True)[1] == 0.0


def test_tabulated_potential_conserves_energy_tightly():
    q = np.linspace(0.0, 6.0, 25)
    pot = tabulated_potential(q, 0.8 * np.sin(np.linspace(0.0, math.pi, 25)) ** 2)
    t, drift = arrival_time_trajectory(PhaseSpacePoint(-1.0, 2.0), pot, 4.0, return_drift=True)
    assert drift <= 1e-8
    assert t == pytest.approx(arrival_time_hj(2.0, pot, -1.0, 4.0), rel=1e-6)
