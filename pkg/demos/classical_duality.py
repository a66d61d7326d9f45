"""Two classical arrival times: integrate Hamilton's equations, or differentiate the action.

Run: python demos/classical_duality.py
"""
import math

import numpy as np

from toa import classical
from toa.potential import gaussian_bump, tabulated_potential

bump = gaussian_bump(1.0, 0.5, 5.0)
q = np.linspace(0.0, 6.0, 25)
table = tabulated_potential(q, 0.8 * np.sin(np.linspace(0.0, math.pi, 25)) ** 2)

for pot in (bump, table):
    for E in (1.2, 2.0, 4.0):
        q0, x = -2.0, 8.0
        start = classical.PhaseSpacePoint(q0, math.sqrt(2.0 * E))
        t_traj, drift = classical.arrival_time_trajectory(start, pot, x, return_drift=True)
        t_hj = classical.arrival_time_hj(E, pot, q0, x)
        print(f"{pot.description:45s} E={E}: trajectory {t_traj:.10f}  action {t_hj:.10f}  drift {drift:.1e}")

# Below the barrier top the particle turns back and never arrives.
print(classical.arrival_time_trajectory(classical.PhaseSpacePoint(-2.0, 1.0), bump, 8.0))
