"""Random Fourier series under the chaos: law of large numbers and free energy.

Sampling t from the chaos measure (Peyriere sampling) shifts the mean of
S_N(t) / log N from zero to alpha / 2.
"""

from chaoslab.series import free_energy, legendre, lln_statistic

for alpha in (0.0, 1.0):
    rep = lln_statistic(alpha, 5000, 200, seed=4)
    print(f"alpha={alpha}: mean S_N/log N = {rep.estimate:.3f} +- {rep.std_error:.3f} "
          f"(finite-N oracle {rep.oracle:.3f})")

for N in (10**3, 10**5):
    exact, closed = free_energy(1.0, 0.5, N)
    print(f"free energy at N={N}: {exact:.4f} vs limit {closed:.4f}")

print(f"rate function at eta = 1: {legendre(1.0, 1.0).closed_form}")
