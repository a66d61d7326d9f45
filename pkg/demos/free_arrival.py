"""Free particle: arrival-time density, sure arrival and the classical mean.

Run: python demos/free_arrival.py
"""
import numpy as np

from toa import free1d
from toa.wavepacket import gaussian_packet

# A narrow-momentum packet starting at q0 = -10 and moving right with p0 = 2.
packet = gaussian_packet(-10.0, 2.0, 0.1)

# The density at x = 0 peaks near the classical time m (x - q0) / p0 = 5.
dist = free1d.arrival_distribution(packet, 0.0)
print("arrival probability", dist.arrival_probability)
print("mean arrival time  ", dist.mean_time)
print("peak of density    ", dist.times[np.argmax(dist.density)])

# The mean is the classical average of m (x - q0) / p over |psi(p)|^2,
# which is a little above 5 because <1/p> > 1/<p>.
print("phase-derivative mean", free1d.mean_arrival_time_phase(packet, 0.0))

# Sure arrival: the time integral is 1 wherever the detector sits,
# including behind the packet (the left-moving tail arrives there).
for x in (-20.0, -5.0, 0.0, 15.0):
    print(f"P(x={x:+.0f}) =", free1d.arrival_probability(packet, x))

# The arrival-time POVM fills up as the time window widens.
T = free1d.completeness_window(packet, 0.0)
for frac in (0.1, 0.2, 0.5, 1.0):
    print(f"T_half = {frac * T:6.2f}: completeness {free1d.povm_completeness(packet, 0.0, frac * T):.6f}")

# Eigenstates of different times overlap: the POVM is not projective.
print("<t=1|t=0> =", free1d.eigenstate_overlap(1.0, 0.0))
