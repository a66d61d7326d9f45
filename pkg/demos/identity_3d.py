"""Three dimensions: arrival amplitude and the identity on detected states.

Run: python demos/identity_3d.py
"""
import numpy as np

from toa import free3d

# A smooth momentum shell 1 < |p| < 2, detected at the origin, phased to arrive at t = 3.
state = free3d.bump_packet(1.0, 2.0, phase_time=3.0)
t = np.linspace(0.0, 6.0, 7)
print(np.abs(free3d.arrival_amplitude_3d(state, t)) ** 2)

# The radial route agrees with brute-force quadrature over the momentum cube.
print(free3d.arrival_amplitude_3d(state, 2.5))
print(free3d.arrival_amplitude_cartesian(state.momentum_amplitude, state.center, 2.5, p_max=2.0, points=96))

# Summing |t><t| over a window of half-width T reproduces the state as T grows.
probes = np.array([[1.2, 0, 0], [0, 1.5, 0], [0.9, 0.9, 0.9]])
for T in (5.0, 10.0, 20.0, free3d.identity_window(state)):
    print(f"T_half={T:5.1f}  residual {free3d.subspace_identity_residual(state, probes, T):.2e}"
          f"  averaged {free3d.subspace_identity_residual(state, probes, T, averaged=True):.2e}")
