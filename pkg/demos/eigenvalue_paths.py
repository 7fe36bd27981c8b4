"""Track the eigenvalues of one replica and look at what moves them.

Run:  python3 demos/eigenvalue_paths.py
"""

import numpy as np

from egedyn.process import Initial, SimConfig
from egedyn.spectral import simulate_trajectory

cfg = SimConfig(N=4, tau=0.3, dt=1e-3, steps=2000, seed=1,
                initial=Initial("diagonal", (-1.5, -0.5, 0.5, 1.5)))
tr = simulate_trajectory(cfg)

print(f"N={cfg.N}, tau={cfg.tau}, T={cfg.T}")
print("start :", np.round(tr.paths[0], 3))
print("end   :", np.round(tr.paths[-1], 3))

# eigenvalues that get close repel, and their condition numbers grow
worst = int(tr.min_gaps.argmin())
print(f"\nclosest approach {tr.min_gaps[worst]:.4f} at t={tr.times[worst]:.3f}")
print("diagonal overlaps there:", np.round(tr.diag_overlaps[worst], 2))
print("diagonal overlaps at T :", np.round(tr.diag_overlaps[-1], 2))

# the overlaps are all 1 when the matrix is Hermitian
herm = simulate_trajectory(cfg.with_(tau=1.0))
print("\ntau = 1: max |O_ii - 1| along the path =",
      f"{np.abs(herm.diag_overlaps - 1).max():.2e}")
print("tau = 1: max |Im lambda| =", f"{np.abs(herm.paths.imag).max():.2e}")

tr.to_csv("eigenvalue_paths_demo.csv")
print("\nwrote eigenvalue_paths_demo.csv")
