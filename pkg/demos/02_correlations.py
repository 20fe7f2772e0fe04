"""Pair correlations: exact product against Monte Carlo and the exp(h) comparison.

The exact two-point moment E[Q(t)Q(t+d)] is a finite product of Bessel ratios.
It stays within bounded ratio of exp(h_N(d)), the comparison used to
classify energies.
"""

import math

import numpy as np

from chaoslab.chaos import log_q_replicas, pair_correlation_exact, replica_seeds
from chaoslab.kernels import CoefficientSequence

c = CoefficientSequence.inverse_sqrt(0.5)
N, R = 150, 20_000
d = np.array([0.0, 0.1, 0.5, 2.0])
lq = log_q_replicas(c, N, replica_seeds(3, R), np.concatenate([[0.4], 0.4 + d]))
prod = np.exp(lq[:, :1] + lq[:, 1:])
pc = pair_correlation_exact(c, N, d)
for i, di in enumerate(d):
    se = prod[:, i].std(ddof=1) / math.sqrt(R)
    print(f"d={di:4.1f}  exact {pc.value[i]:.4f}  MC {prod[:, i].mean():.4f} +- {se:.4f}  "
          f"ratio to exp(h) {pc.ratio[i]:.4f}")
