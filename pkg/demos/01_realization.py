"""A single chaos realization and how its mass behaves as N grows.

Run with ``python demos/01_realization.py``.  For alpha = 1 the total mass
hovers around one; for alpha = 3 it collapses towards zero.
"""

import numpy as np

from chaoslab.chaos import simulate_realization, total_mass_decay
from chaoslab.kernels import CoefficientSequence

coeffs = CoefficientSequence.inverse_sqrt(1.0)
r = simulate_realization(coeffs, 1000, 2**14, seed=1)
print(f"one realization, N=1000: total mass {r.total_mass:.4f}, max Q {r.Q.max():.2f}, "
      f"min Q {r.Q.min():.2e}")

# a few grid points where the weight concentrates
top = np.argsort(r.Q)[-5:][::-1]
print("heaviest points t:", np.round(r.grid[top], 4).tolist())

for alpha in (1.0, 3.0):
    rep = total_mass_decay(alpha, [100, 1000, 10_000], 40, seed=2026)
    meds = [round(row["median"], 4) for row in rep.table]
    print(f"alpha={alpha}: median total mass over N = 1e2, 1e3, 1e4 -> {meds}")
