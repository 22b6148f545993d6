"""Networked control loop inspected every M steps, for M = 1..4."""
import json

import numpy as np

from pathcomplete.certify import networked_modes
from pathcomplete import fixtures
from pathcomplete.experiments import casestudy_netcon, simulate_trajectory

for m in range(1, 5):
    rep = casestudy_netcon(m)
    d = {k: v for k, v in rep.details.items() if k != "pieces"}
    print(f"M={m}: {rep.verdict}")
    print("   ", json.dumps(d, default=float)[:400])

# the unstable product shows up in simulation when the loss pattern repeats
a, b, k = fixtures.netcon_plant()
traj = simulate_trajectory(networked_modes(a, b, k, 4), [4], np.array([1.0, 0.0]), 40)
print("\n|x(t)| under repeated mode 4:", np.round(np.linalg.norm(traj[::8], axis=1), 3))
