"""Lymph-node architecture: how size and count should grow with body mass.

Run with ``python3 demos/immune_exponents.py``.
"""
import numpy as np

from modradar.harness import fit_scaling
from modradar.immune import OrganismParams, compare_policies, optimize_architecture, policy_fits, two_point_exponents

# %% Optimal architecture for a unit organism
p = OrganismParams()
arch = optimize_architecture(p)
print(f"M=1: V*={arch.V:.4f}  N*={arch.N:.4f}")

# %% Sweep mass over six decades and fit power laws
masses = np.geomspace(1e-2, 1e4, 50)
archs = [optimize_architecture(p.with_mass(float(m))) for m in masses]
for name, ys, exact in (("V*", [a.V for a in archs], 3 / 7), ("N*", [a.N for a in archs], 4 / 7)):
    fit = fit_scaling(masses, ys, "power")
    print(f"{name} ~ M^{fit.slope:.4f}   (exact {exact:.4f})")

# %% Response time under three policies
rows = compare_policies(masses)
full, top = policy_fits(rows), policy_fits(rows, min_mass=1e3)
print("fixed-V, largest decade:", round(top["fixed-V"].slope, 3))
print("fixed-N, largest decade:", round(top["fixed-N"].slope, 3))
print("optimal, whole range:   ", round(full["optimal"].slope, 3))

# %% Two species are not enough to pin an exponent, but here is what they suggest
print({k: round(v, 3) for k, v in two_point_exponents().items()})
