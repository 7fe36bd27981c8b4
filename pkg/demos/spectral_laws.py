"""Finite-N views of the limit laws: ellipse, semicircle, weak non-Hermiticity.

Run:  python3 demos/spectral_laws.py
"""

import numpy as np

from egedyn.spectral_stats import (StatsConfig, overlap_profile_check, elliptic_law_check,
                                   pooled_eigenvalues, semicircle_check,
                                   weak_nonhermiticity_scaling)

for tau in (0.0, 0.5):
    r = elliptic_law_check(StatsConfig(N=200, tau=tau, samples=10))
    print(f"tau={tau}: fraction inside the ellipse {r.estimate.real:.4f}, "
          f"uniformity chi2 p = {r.details['chi2_p_value']:.3f}")

z = pooled_eigenvalues(StatsConfig(N=200, tau=0.5, samples=10))
print(f"  spread at tau=0.5: max|Re| {np.abs(z.real).max():.3f} (edge 1.5), "
      f"max|Im| {np.abs(z.imag).max():.3f} (edge 0.5)")

r = semicircle_check(StatsConfig(N=200, tau=1.0, samples=20))
print(f"\ntau=1: KS distance to the semicircle {r.estimate.real:.4f}")

r = weak_nonhermiticity_scaling(StatsConfig(alpha=2.0, samples=10))
print(f"\n1 - tau = 2/N: std(Im lambda) = {np.round(r.details['std_imag'], 4)} "
      f"for N = {r.details['Ns']}, exponent {r.estimate.real:.3f}")

r = overlap_profile_check(StatsConfig(N=100, tau=0.0, samples=200))
print("\nmean O_ii / N against 1 - |z|^2:")
for row in r.details["bins"]:
    print(f"  |z|~{row['center']:.2f}  {row['mean_O_over_N']:.3f}  vs {row['predicted']:.3f}"
          f"{'' if row['bulk'] else '  (edge, not scored)'}")
