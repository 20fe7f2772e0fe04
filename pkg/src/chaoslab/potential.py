r"""Discrete potential theory on torus grids.

Energies :math:`I_\Phi^\sigma = \iint\Phi(t-s)\,d\sigma(t)\,d\sigma(s)`, potentials
:math:`U_\Phi^\sigma`, capacities, local dimensions and the level-band splitting
of a measure into regular pieces and a singular remainder.

Cell ``i`` interacts with cell ``j`` through the kernel at the displacement
``(j - i) h``; a cell interacts with itself through the cell-averaged kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chaos import log_pair_correlation_grid, replica_seeds, simulate_realization
from .errors import DomainError, ResolutionError
from .kernels import CoefficientSequence, Kernel, RieszKernel, correlation_partial
from .measures import GridMeasure
from .parallel import pmap
from .reports import StatReport
from .specfun import surface_constants

_DIRECT_SUPPORT_LIMIT = 4096


@dataclass(frozen=True)
class EnergyReport:
    """Energy of a grid measure; ``value`` is ``inf`` when the energy diverges."""

    kernel: str
    value: float
    method: str
    tail: float = 0.0

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def as_dict(self) -> dict:
        return {"kernel": self.kernel, "value": "inf" if self.infinite else self.value,
                "infinite": self.infinite, "method": self.method, "tail": self.tail}


def _kernel_grid(kernel: Kernel, sigma: GridMeasure) -> np.ndarray:
    if kernel.d != sigma.d:
        raise DomainError(f"kernel dimension {kernel.d} differs from measure dimension {sigma.d}")
    return kernel.grid_values(sigma.M)


def _diverges(sigma: GridMeasure, kernel: Kernel, diag: float) -> bool:
    return (kernel.singular and sigma.has_atoms) or math.isinf(diag)


def energy_direct(sigma: GridMeasure, kernel: Kernel) -> EnergyReport:
    """Double sum over pairs of occupied cells.

    Supports above 4096 cells switch to circular convolution by FFT, which
    evaluates the same double sum.
    """
    K = _kernel_grid(kernel, sigma)
    if _diverges(sigma, kernel, float(K.flat[0])):
        return EnergyReport(kernel.describe(), math.inf, "direct")
    w = sigma.weights
    idx = np.flatnonzero(w)
    if len(idx) <= _DIRECT_SUPPORT_LIMIT:
        ws = w.flat[idx]
        M = sigma.M
        if sigma.d == 1:
            D = (idx[None, :] - idx[:, None]) % M
            val = float(ws @ K[D] @ ws)
        else:
            i1, i2 = np.unravel_index(idx, w.shape)
            D1 = (i1[None, :] - i1[:, None]) % M
            D2 = (i2[None, :] - i2[:, None]) % M
            val = float(ws @ K[D1, D2] @ ws)
        return EnergyReport(kernel.describe(), val, "direct")
    U = _convolve(w, K)
    return EnergyReport(kernel.describe(), float(np.sum(U * w)), "direct-fft")


def _convolve(w: np.ndarray, K: np.ndarray) -> np.ndarray:
    """``U_i = sum_j K[i - j] w_j`` (circular, any dimension); ``K`` is even."""
    axes = tuple(range(w.ndim))
    return np.fft.irfftn(np.fft.rfftn(w, axes=axes) * np.fft.rfftn(K, axes=axes), w.shape, axes=axes)


def energy_fourier(sigma: GridMeasure, kernel: Kernel) -> EnergyReport:
    r"""Spectral energy :math:`(2\pi)^{2d}\sum_n\hat\Phi(n)|\hat\sigma(n)|^2`.

    Uses :math:`\hat\sigma(n) = (2\pi)^{-d}\sum_j w_j e^{-in\cdot t_j}` and
    :math:`\hat\Phi(n) = M^{-d}\sum_j\Phi_j e^{-in\cdot t_j}` with the grid-sampled
    kernel (cell average at the origin). On the grid the spectral sum is
    complete, so the reported tail is zero.
    """
    K = _kernel_grid(kernel, sigma)
    if _diverges(sigma, kernel, float(K.flat[0])):
        return EnergyReport(kernel.describe(), math.inf, "fourier")
    d, M = sigma.d, sigma.M
    phi_hat = np.fft.fftn(K).real / M**d
    sigma_hat = np.fft.fftn(sigma.weights) / (2.0 * np.pi) ** d
    val = (2.0 * np.pi) ** (2 * d) * float(np.sum(phi_hat * np.abs(sigma_hat) ** 2))
    return EnergyReport(kernel.describe(), val, "fourier")


def riesz_series_energy(sigma: GridMeasure, beta: float, B: float = 1.0,
                        n_max: int | None = None) -> EnergyReport:
    r"""Energy for the lattice-series Riesz kernel :math:`B + \sum_{m\ne0}|m|^{\beta-d}e^{im\cdot x}`.

    .. math:: I = (2\pi)^{2d}\Big(B|\hat\sigma(0)|^2 + \sum_{m\ne0}\frac{|\hat\sigma(m)|^2}{|m|^{d-\beta}}\Big)

    with cell weights spread uniformly over their cells, truncated at
    ``|m|_inf <= n_max`` (default ``M/2``). The tail is bounded using the
    ``sinc^2`` decay of the cell transform.
    """
    d, M = sigma.d, sigma.M
    if not 0 <= beta < d:
        raise DomainError(f"beta must lie in [0, d), got {beta}")
    if sigma.has_atoms and beta > 0:
        return EnergyReport(f"riesz_series(d={d},beta={beta:g})", math.inf, "fourier-series")
    h = sigma.h
    n_max = M // 2 if n_max is None else int(n_max)
    m = np.arange(-n_max, n_max + 1)
    w_hat = np.fft.fftn(sigma.weights)
    idx = m % M
    cell = np.sinc(m * h / (2.0 * np.pi)) * np.exp(-0.5j * m * h)
    axes_hat = w_hat
    for ax in range(d):
        axes_hat = np.take(axes_hat, idx, axis=ax)
        shape = [1] * d
        shape[ax] = len(m)
        axes_hat = axes_hat * cell.reshape(shape)
    s_hat = axes_hat / (2.0 * np.pi) ** d
    grids = np.meshgrid(*([m.astype(float)] * d), indexing="ij")
    r2 = sum(g * g for g in grids)
    with np.errstate(divide="ignore"):
        mult = np.where(r2 > 0, r2 ** ((beta - d) / 2.0), B)
    val = (2.0 * np.pi) ** (2 * d) * float(np.sum(mult * np.abs(s_hat) ** 2))
    # |cell transform|^2 <= (2/(m h))^2 and |w_hat| <= mass beyond the cutoff
    mass = sigma.total_mass
    tail_sum = 0.0
    if n_max > 0:
        tail_sum = 2 * d * (2.0 / h) ** 2 * (n_max ** (beta - d - 1)) * (2 * n_max + 1) ** (d - 1)
    tail = (mass**2) * tail_sum
    return EnergyReport(f"riesz_series(d={d},beta={beta:g})", val, "fourier-series", tail)


def potential_profile(sigma: GridMeasure, kernel: Kernel) -> np.ndarray:
    """``U(x_i) = sum_j Phi(x_i - x_j) w_j`` on the grid; ``inf`` at atoms of singular kernels."""
    K = _kernel_grid(kernel, sigma)
    if math.isinf(float(K.flat[0])):
        # every occupied cell sees its own infinite self-interaction
        K = K.copy()
        K.flat[0] = 0.0
        finite = _convolve(sigma.weights, K)
        return np.where(sigma.weights > 0, math.inf, finite)
    U = _convolve(sigma.weights, K)
    if kernel.singular and sigma.has_atoms:
        U = np.where(sigma.atoms, math.inf, U)
    return U


# ---------------------------------------------------------------------------
# capacity


@dataclass
class CapacityResult:
    capacity: float
    weights: np.ndarray
    energy: float
    gap: float
    iterations: int
    converged: bool
    zero_capacity: bool = False


def capacity_estimate(mask, kernel: Kernel, iterations: int = 50000, tol: float = 1e-6,
                      init: str = "vertex") -> CapacityResult:
    r"""Capacity ``1 / min sigma^T A sigma`` over probability vectors supported on ``mask``.

    Pairwise Frank-Wolfe: each step moves mass from the worst support cell to
    the best cell of ``mask`` by an exact line search. Stops once the duality gap
    :math:`2(\sigma^TA\sigma - \min_{i\in K}(A\sigma)_i)` is at most ``tol`` times
    the objective.

    Parameters
    ----------
    init : {"vertex", "uniform"}
        Start from the first cell of ``mask`` or from the uniform vector on ``mask``.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DomainError("support mask is empty")
    if mask.ndim != kernel.d:
        raise DomainError("mask dimension differs from kernel dimension")
    M = mask.shape[0]
    K = kernel.grid_values(M)
    diag = float(K.flat[0])
    cells = np.flatnonzero(mask)
    # a lone cell stands for a point, which is polar for any singular kernel
    if math.isinf(diag) or (kernel.singular and len(cells) == 1):
        return CapacityResult(0.0, np.zeros(mask.shape), math.inf, 0.0, 0, True, True)

    shape = mask.shape
    sigma = np.zeros(shape)
    if init == "uniform":
        sigma.flat[cells] = 1.0 / len(cells)
    else:
        sigma.flat[cells[0]] = 1.0
    Asig = _convolve(sigma, K)

    def column(j):
        # A e_j as an array over the grid
        return np.roll(K, np.unravel_index(j, shape), axis=tuple(range(len(shape))))

    gap = math.inf
    it = 0
    f = float(np.sum(sigma * Asig))
    for it in range(1, iterations + 1):
        g_on = Asig.flat[cells]
        s = int(cells[np.argmin(g_on)])
        gap = 2.0 * (f - float(Asig.flat[s]))
        if gap <= tol * f:
            break
        support = np.flatnonzero(sigma > 0)
        v = int(support[np.argmax(Asig.flat[support])])
        if v == s:
            break
        # f(sigma + gamma (e_s - e_v)) = f + 2 gamma (As_s - As_v) + gamma^2 (A_ss + A_vv - 2 A_sv)
        dv = np.subtract(np.unravel_index(s, shape), np.unravel_index(v, shape)) % M
        A_sv = float(K[tuple(dv)])
        curv = 2.0 * diag - 2.0 * A_sv
        slope = 2.0 * (float(Asig.flat[s]) - float(Asig.flat[v]))
        gmax = float(sigma.flat[v])
        gamma = gmax if curv <= 0 else min(gmax, -slope / (2.0 * curv))
        if gamma <= 0:
            break
        sigma.flat[s] += gamma
        sigma.flat[v] -= gamma
        if sigma.flat[v] < 1e-300:
            sigma.flat[v] = 0.0
        Asig += gamma * (column(s) - column(v))
        f = f + gamma * slope + gamma * gamma * curv
    f = float(np.sum(sigma * _convolve(sigma, K)))
    g_on = Asig.flat[cells]
    gap = 2.0 * (f - float(g_on.min()))
    return CapacityResult(1.0 / f, sigma, f, gap, it, gap <= tol * f)


# ---------------------------------------------------------------------------
# local dimension


@dataclass
class LocalDimensionProfile:
    """Per-cell slopes of ``log sigma(B(x, r))`` against ``log r`` and sigma-weighted summaries."""

    slopes: np.ndarray
    radii: np.ndarray
    dim_lower: float
    median: float
    dim_upper: float

    def as_dict(self) -> dict:
        return {"dim_lower": self.dim_lower, "median": self.median,
                "dim_upper": self.dim_upper, "radii": self.radii.tolist()}


def weighted_percentile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """Smallest value whose cumulative weight reaches fraction ``q``."""
    order = np.argsort(values)
    cw = np.cumsum(weights[order])
    k = int(np.searchsorted(cw, q * cw[-1]))
    return float(values[order][min(k, len(order) - 1)])


def _ball_masses_1d(w: np.ndarray, radius_cells: float) -> np.ndarray:
    M = len(w)
    C = np.concatenate([[0.0], np.cumsum(w)])
    total = C[-1]

    def F(u):
        # cumulative mass on [0, u) in cell units, periodic extension
        q = np.floor(u / M)
        r = u - q * M
        i = np.minimum(np.floor(r).astype(np.int64), M - 1)
        return q * total + C[i] + (r - i) * w[i]

    centers = np.arange(M) + 0.5
    return F(centers + radius_cells) - F(centers - radius_cells)


def _box_masses_2d(w: np.ndarray, radius_cells: float) -> np.ndarray:
    M = w.shape[0]
    tiled = np.tile(w, (3, 3))
    S = np.zeros((3 * M + 1, 3 * M + 1))
    S[1:, 1:] = tiled.cumsum(0).cumsum(1)

    def F(u, v):
        # coordinates shifted by M so the middle tile holds the original grid
        u = u + M
        v = v + M
        a = np.minimum(np.floor(u).astype(np.int64), 3 * M - 1)
        b = np.minimum(np.floor(v).astype(np.int64), 3 * M - 1)
        fu, fv = u - a, v - b
        s00, s10, s01, s11 = S[a, b], S[a + 1, b], S[a, b + 1], S[a + 1, b + 1]
        return s00 + fu * (s10 - s00) + fv * (s01 - s00) + fu * fv * (s11 - s10 - s01 + s00)

    c = np.arange(M) + 0.5
    X, Y = np.meshgrid(c, c, indexing="ij")
    r = radius_cells
    return F(X + r, Y + r) - F(X - r, Y + r) - F(X + r, Y - r) + F(X - r, Y - r)


def local_dimension_profile(sigma: GridMeasure, radii) -> LocalDimensionProfile:
    """Least-squares slope of ``log sigma(B(x, r))`` vs ``log r`` at every occupied cell.

    Balls are centred at cell centres; boundary cells count in proportion to
    their overlap. On the 2-torus the balls are squares ``|y - x|_inf <= r``.
    Summaries are the sigma-weighted 1%, 50% and 99% percentiles of the slopes.

    Raises
    ------
    ResolutionError
        If the radii are not strictly decreasing, or the smallest is below half a cell.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2:
        raise ResolutionError("need at least two radii")
    if np.any(np.diff(radii) >= 0):
        raise ResolutionError("radii must be strictly decreasing")
    h = sigma.h
    if radii[-1] < h / 2:
        raise ResolutionError(f"radius {radii[-1]:g} is below half a grid cell ({h / 2:g})")
    if radii[0] >= np.pi:
        raise ResolutionError("radii must stay below pi")
    w = sigma.weights
    masses = np.stack([(_ball_masses_1d(w, r / h) if sigma.d == 1 else _box_masses_2d(w, r / h))
                       for r in radii])
    occupied = (w > 0) & np.all(masses > 0, axis=0)
    x = np.log(radii)
    xc = x - x.mean()
    logm = np.log(np.where(masses > 0, masses, 1.0))
    slopes = np.tensordot(xc, logm - logm.mean(axis=0), axes=(0, 0)) / np.sum(xc * xc)
    slopes = np.where(occupied, slopes, np.nan)
    vals = slopes[occupied]
    wts = w[occupied]
    return LocalDimensionProfile(
        slopes=slopes, radii=radii,
        dim_lower=weighted_percentile(vals, wts, 0.01),
        median=weighted_percentile(vals, wts, 0.5),
        dim_upper=weighted_percentile(vals, wts, 0.99),
    )


def default_radii(N: int, M: int, d: int = 1, count: int = 12) -> np.ndarray:
    """Log-spaced radii from about 20 wavelengths of frequency ``N`` up to 0.3.

    For small ``N`` the upper end is raised to ``8 r_min`` (at most 3)
    so the schedule always spans a useful range.
    """
    h = 2.0 * np.pi / M
    r_min = max(2.0 * np.pi * 20.0 / N, h)
    r_max = min(max(0.3, 8.0 * r_min), 3.0)
    if r_max <= r_min:
        raise ResolutionError(f"no usable radii for N={N}, M={M}")
    return np.geomspace(r_max, r_min, count)


# ---------------------------------------------------------------------------
# Kahane splitting


@dataclass
class KahaneSplit:
    """Level-band components ``{i-1 <= U < i}`` and the remainder ``{U >= cap}``."""

    components: list[GridMeasure | None]
    band_masses: np.ndarray
    regular_mass: float
    remainder_mass: float
    remainder_mask: np.ndarray
    cap: int


def kahane_split(sigma: GridMeasure, kernel: Kernel, cap: int = 10) -> KahaneSplit:
    """Split ``sigma`` by potential level bands; cells with ``U >= cap`` form the singular remainder."""
    U = potential_profile(sigma, kernel)
    w = sigma.weights
    comps: list[GridMeasure | None] = []
    masses = []
    for i in range(1, cap + 1):
        band = (U >= i - 1) & (U < i) & (w > 0)
        if i == 1:
            band |= (U < 0) & (w > 0)
        m = float(w[band].sum())
        masses.append(m)
        comps.append(sigma.restrict(band) if m > 0 else None)
    rem = (U >= cap) & (w > 0)
    return KahaneSplit(comps, np.array(masses), float(np.sum(masses)),
                       float(w[rem].sum()), rem, cap)


# ---------------------------------------------------------------------------
# dimension of chaos images


def dimension_formula_check(alpha: float, base: GridMeasure, D: float, N: int,
                            replicas: int = 1, seed: int = 0, radii=None,
                            threads: int | None = None) -> StatReport:
    r"""Compare the local dimension of :math:`Q_N\sigma` with :math:`D - \tau(d)\alpha^2/4`.

    Each replica builds ``Q_N`` on the grid of ``base``, reweights ``base`` and
    records the sigma-weighted median slope. The estimate is the mean over
    replicas. ``expected_degenerate`` is set when the prediction is not positive.
    """
    d, M = base.d, base.M
    tau = surface_constants(d).tau
    predicted = D - tau * alpha**2 / 4.0
    coeffs = CoefficientSequence.inverse_sqrt(alpha, d)
    radii = default_radii(N, M, d) if radii is None else np.asarray(radii, dtype=float)

    def one(s):
        real = simulate_realization(coeffs, N, M, s)
        prof = local_dimension_profile(GridMeasure.from_realization(real, base), radii)
        return prof.median, prof.dim_lower, prof.dim_upper

    res = np.array(pmap(one, replica_seeds(seed, replicas), threads))
    med = res[:, 0]
    se = float(med.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else float("nan")
    rows = [{"replica": i, "median": float(r[0]), "dim_lower": float(r[1]),
             "dim_upper": float(r[2])} for i, r in enumerate(res)]
    return StatReport(estimate=float(med.mean()), std_error=se, oracle=predicted, N=N,
                      seed=seed, replicas=replicas, table=rows,
                      extras={"alpha": alpha, "base_dimension": D, "M": M, "d": d,
                              "expected_degenerate": predicted <= 0,
                              "radii": radii.tolist()})


def chaos_energy_check(alpha: float, beta: float, N: int, M: int, replicas: int = 100,
                       seed: int = 0, threads: int | None = None) -> StatReport:
    r"""Monte Carlo mean of the Riesz energy of :math:`Q_N\lambda` against its exact value.

    ``oracle`` is the exact finite-``N`` mean, the grid double sum of
    :math:`E[Q_N(t)Q_N(s)]R_\beta(t-s)`. ``extras["comparison"]`` uses
    :math:`e^{H_N}` in place of the exact pair correlation.
    """
    coeffs = CoefficientSequence.inverse_sqrt(alpha)
    kern = RieszKernel(beta)
    lam = GridMeasure.lebesgue(M)
    K = kern.grid_values(M)
    F = np.exp(log_pair_correlation_grid(coeffs, N, M))
    delta = 2.0 * np.pi * np.arange(M) / M
    H = np.asarray(correlation_partial(coeffs, N, delta))
    # Lebesgue autocorrelation is 1/M per displacement
    exact = float(np.sum(F * K)) / M
    comparison = float(np.sum(np.exp(H) * K)) / M

    def one(s):
        real = simulate_realization(coeffs, N, M, s)
        return energy_fourier(GridMeasure.from_realization(real, lam), kern).value

    vals = np.array(pmap(one, replica_seeds(seed, replicas), threads))
    mean = float(vals.mean())
    return StatReport(estimate=mean, std_error=float(vals.std(ddof=1) / math.sqrt(replicas)),
                      oracle=exact, N=N, seed=seed, replicas=replicas,
                      extras={"alpha": alpha, "beta": beta, "M": M, "comparison": comparison,
                              "ratio_to_comparison": mean / comparison})
