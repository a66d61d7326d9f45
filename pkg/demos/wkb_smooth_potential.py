"""Smooth potential, fast packet: quasi-classical arrival vs the classical ensemble.

Run: python demos/wkb_smooth_potential.py
"""
from toa import classical, wkb
from toa.potential import gaussian_bump, zero_potential
from toa.wavepacket import gaussian_packet

bump = gaussian_bump(height=8.0, width=1.0, center=10.0)
packet = gaussian_packet(-20.0, 10.0, 0.2)

# Energy ratio and validity tell whether the WKB picture applies.
print(wkb.wkb_diagnostics(packet, bump, 25.0))

# Slowing down over the bump delays arrival beyond it.
for x in (5.0, 12.0, 25.0):
    print(f"x={x:4.0f}  WKB mean {wkb.wkb_mean_arrival(packet, bump, x):.6f}"
          f"   free mean {wkb.wkb_mean_arrival(packet, zero_potential(), x):.6f}")

# The classical ensemble, sampled from |psi(p)|^2, gives the same average.
ens = classical.ensemble_mean_arrival(packet, bump, 25.0, samples=20_000, seed=1)
print("ensemble", ens.mean, "+/-", ens.stderr)

# Local momentum changes the flux, so P(x) inside the bump is not 1.
print("P(10) =", wkb.wkb_arrival_probability(packet, bump, 10.0))
print("P(25) =", wkb.wkb_arrival_probability(packet, bump, 25.0))
