r"""Random phases, the multiplicative martingales :math:`Q_N` and their exact moment oracles.

.. math:: Q_N(t) = \prod_{k\le N} P_k(t), \qquad
          P_k(t) = \frac{e^{\alpha_k\cos(k\cdot t + \omega_k)}}{I_0(\alpha_k)}.

Grid realizations are built spectrally: ``log Q_N`` is a real trigonometric
polynomial, so its values on a uniform grid are one inverse FFT of the
coefficients ``alpha_k e^{i omega_k}``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import lattice
from .errors import DomainError, ResolutionError
from .kernels import CoefficientSequence, correlation_partial
from .measures import GridMeasure
from .parallel import pmap
from .reports import StatReport
from .rng import PhaseStream, derive_seed, phase_matrix
from .specfun import log_i0

# Pair-correlation spectral expansion: terms of the log I_0 power series, and the
# amplitude above which a frequency is evaluated directly instead.
_LOGI0_TERMS = 18
_SERIES_MAX_AMPLITUDE = 0.5


# ---------------------------------------------------------------------------
# weights and realizations


def weight_log(n: int, t, coeffs: CoefficientSequence, phases: PhaseStream):
    """``log P_n(t)``; for d=2 the sum over the cube shell of level ``n``."""
    if n < 1:
        raise DomainError("frequency index starts at 1")
    if coeffs.dimension == 2:
        k = lattice.half_shell(n)
        a = coeffs.values(k)
        w = phases.phases(k)
        pts = np.asarray(t, dtype=float).reshape(-1, 2)
        vals = np.cos(pts @ k.T.astype(float) + w) @ a - float(np.sum(log_i0(a)))
        return float(vals[0]) if np.ndim(t) == 1 else vals.reshape(np.shape(t)[:-1])
    a = float(coeffs.values(n))
    w = float(phases.phases(n))
    return a * np.cos(n * np.asarray(t, dtype=float) + w) - log_i0(a)


@dataclass(frozen=True)
class ChaosRealization:
    """``log Q_N`` sampled at ``t_j = 2*pi*j/M`` (d=1) or on the ``M x M`` product grid (d=2)."""

    logQ: np.ndarray
    N: int
    M: int
    seed: int
    coefficients: CoefficientSequence = field(repr=False)
    d: int = 1
    n_min: int = 1

    @property
    def grid(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    @property
    def Q(self) -> np.ndarray:
        return np.exp(self.logQ)

    @property
    def total_mass(self) -> float:
        """``(2 pi)^{-d} int Q_N``, by the (spectrally exact) periodic trapezoid rule."""
        return float(np.mean(np.exp(self.logQ)))

    def measure(self, base: GridMeasure | None = None) -> GridMeasure:
        return GridMeasure.from_realization(self, base)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        t = self.grid
        if self.d == 1:
            wr.writerow(["t", "logQ"])
            for tj, v in zip(t, self.logQ):
                wr.writerow([repr(float(tj)), repr(float(v))])
        else:
            wr.writerow(["t1", "t2", "logQ"])
            for (i, j), v in np.ndenumerate(self.logQ):
                wr.writerow([repr(float(t[i])), repr(float(t[j])), repr(float(v))])
        return buf.getvalue()


def _log_normalizer(a: np.ndarray) -> float:
    return float(np.sum(log_i0(a)))


def simulate_realization(coeffs: CoefficientSequence, N: int, M: int, seed: int,
                         n_min: int = 1) -> ChaosRealization:
    """Build ``log Q_N`` on the grid from frequencies ``n_min..N`` of the phase stream ``seed``.

    Raises
    ------
    ResolutionError
        If ``M < 2N``.
    """
    if N < 0:
        raise DomainError("N must be non-negative")
    if N >= 1 and M < 2 * N:
        raise ResolutionError(f"grid M={M} does not resolve frequency N={N}; need M >= 2N")
    d = coeffs.dimension
    shape = (M,) * d
    if N == 0 or n_min > N:
        return ChaosRealization(np.zeros(shape), N, M, seed, coeffs, d, n_min)
    stream = PhaseStream(seed, d)

    if d == 1:
        n = np.arange(n_min, N + 1)
        a = coeffs.values(n)
        c = a * np.exp(1j * stream.phases(n))
        # irfft(X)_j = (1/M)[X_0 + 2 Re sum_k X_k e^{i k t_j}]; the Nyquist bin counts once
        X = np.zeros(M // 2 + 1, dtype=complex)
        X[n] = 0.5 * M * c
        if M % 2 == 0 and N == M // 2:
            X[M // 2] = M * c[-1].real
        logq = np.fft.irfft(X, M) - _log_normalizer(a)
    elif d == 2:
        k, a = coeffs.lattice_block(N, n_min)
        c = a * np.exp(1j * stream.phases(k))
        Z = np.zeros(shape, dtype=complex)
        np.add.at(Z, (k[:, 0] % M, k[:, 1] % M), c)
        logq = np.fft.ifft2(Z).real * (M * M) - _log_normalizer(a)
    else:
        raise DomainError(f"dimension {d} not supported")
    return ChaosRealization(logq, N, M, seed, coeffs, d, n_min)


def evaluate_log_q(coeffs: CoefficientSequence, N: int, seed: int, t, n_min: int = 1):
    """``log Q_N`` at arbitrary (off-grid) points by direct summation."""
    stream = PhaseStream(seed, coeffs.dimension)
    if coeffs.dimension == 2:
        k, a = coeffs.lattice_block(N, n_min)
        w = stream.phases(k)
        pts = np.asarray(t, dtype=float).reshape(-1, 2)
        out = np.cos(pts @ k.T.astype(float) + w) @ a - _log_normalizer(a)
        return out.reshape(np.shape(t)[:-1]) if np.ndim(t) > 1 else float(out[0])
    n = np.arange(n_min, N + 1)
    a = coeffs.values(n)
    w = stream.phases(n)
    tt = np.asarray(t, dtype=float)
    flat = tt.reshape(-1)
    out = np.empty(len(flat))
    step = max(1, (1 << 22) // max(len(n), 1))
    for s in range(0, len(flat), step):
        out[s:s + step] = np.cos(np.outer(flat[s:s + step], n) + w) @ a
    out -= _log_normalizer(a)
    return float(out[0]) if tt.ndim == 0 else out.reshape(tt.shape)


def log_q_replicas(coeffs: CoefficientSequence, N: int, seeds, t, batch: int = 2048) -> np.ndarray:
    """``log Q_N(t_i)`` for many phase streams at once (d=1); shape ``(len(seeds), len(t))``."""
    n = np.arange(1, N + 1)
    a = coeffs.values(n)
    norm = _log_normalizer(a)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    seeds = list(seeds)
    out = np.empty((len(seeds), len(t)))
    for s in range(0, len(seeds), batch):
        w = phase_matrix(seeds[s:s + batch], n)
        for i, ti in enumerate(t):
            out[s:s + batch, i] = np.cos(ti * n + w) @ a - norm
    return out


def replica_seeds(master: int, count: int, offset: int = 0) -> list[int]:
    return [derive_seed(master, r) for r in range(offset, offset + count)]


# ---------------------------------------------------------------------------
# exact second moments


@dataclass(frozen=True)
class PairCorrelation:
    """``E[Q_N(t) Q_N(t + delta)]`` and the comparison value ``exp(H_N(delta))``."""

    value: np.ndarray | float
    comparison: np.ndarray | float

    @property
    def ratio(self):
        return np.asarray(self.value) / np.asarray(self.comparison)


def pair_correlation_exact(coeffs: CoefficientSequence, N: int, delta) -> PairCorrelation:
    r"""Exact :math:`\prod_k I_0(2\alpha_k\cos(k\cdot\Delta/2))/I_0(\alpha_k)^2`."""
    if N < 1:
        raise DomainError("N must be >= 1")
    dd = np.asarray(delta, dtype=float)
    if coeffs.dimension == 2:
        k, a = coeffs.lattice_block(N)
        pts = dd.reshape(-1, 2)
        phase = 0.5 * (pts @ k.T.astype(float))
        shape = dd.shape[:-1]
    else:
        k = np.arange(1, N + 1, dtype=float)
        a = coeffs.values(k)
        pts = dd.reshape(-1)
        phase = 0.5 * np.outer(pts, k)
        shape = dd.shape
    logv = log_i0(2.0 * a * np.cos(phase)).sum(axis=1) - 2.0 * _log_normalizer(a)
    value = np.exp(logv).reshape(shape)
    comp = np.exp(np.asarray(correlation_partial(coeffs, N, dd))).reshape(shape)
    if shape == ():
        return PairCorrelation(float(value), float(comp))
    return PairCorrelation(value, comp)


@lru_cache(maxsize=1)
def _log_i0_series() -> tuple[float, ...]:
    """Coefficients ``d_m`` of ``log I_0(x) = sum_m d_m (x^2/4)^m``."""
    b = [Fraction(1, math.factorial(m) ** 2) for m in range(_LOGI0_TERMS + 1)]
    dcoef = [Fraction(0)] * (_LOGI0_TERMS + 1)
    for m in range(1, _LOGI0_TERMS + 1):
        s = sum(j * dcoef[j] * b[m - j] for j in range(1, m))
        dcoef[m] = b[m] - s / m
    return tuple(float(x) for x in dcoef)


def log_pair_correlation_grid(coeffs: CoefficientSequence, N: int, M: int) -> np.ndarray:
    r"""``log E[Q_N(t) Q_N(t + Delta_j)]`` at all ``Delta_j = 2 pi j / M`` (d=1).

    Each factor expands as :math:`\sum_m d_m a_k^{2m}\cos^{2m}(k\Delta/2)` and
    :math:`\cos^{2m}` is a cosine polynomial in ``j k Delta``, so the sum is a
    cosine series whose grid values come from one FFT (frequencies alias exactly
    modulo ``M``). Frequencies with ``a_k > 0.5`` are summed directly.
    """
    dm = _log_i0_series()
    n = np.arange(1, N + 1)
    a = coeffs.values(n)
    big = np.abs(a) > _SERIES_MAX_AMPLITUDE
    spec = np.zeros(M)
    const = -2.0 * _log_normalizer(a)
    small_n, a2 = n[~big], a[~big] ** 2
    power = np.ones_like(a2)
    for m in range(1, _LOGI0_TERMS + 1):
        power = power * a2
        w = dm[m] * power * 4.0**-m  # d_m a^{2m} 2^{-2m}
        const += math.comb(2 * m, m) * float(w.sum())
        for j in range(1, m + 1):
            np.add.at(spec, (j * small_n) % M, 2.0 * math.comb(2 * m, m - j) * w)
    out = np.fft.fft(spec).real + const
    if big.any():
        delta = 2.0 * np.pi * np.arange(M) / M
        for k, ak in zip(n[big], a[big]):
            out += log_i0(2.0 * ak * np.cos(0.5 * k * delta))
    return out


def _autocorrelation(w: np.ndarray) -> np.ndarray:
    """``A_j = sum_i w_i w_{i+j}`` (circular)."""
    f = np.fft.rfft(w)
    return np.fft.irfft(f * np.conj(f), len(w))


def l2_mass_diagnostic(coeffs: CoefficientSequence, sigma: GridMeasure, N_list,
                       oversample: int = 4) -> StatReport:
    r"""Exact :math:`E(\int Q_N\,d\sigma)^2` for each ``N``, with a growth classification.

    The measure is refined to a grid of at least ``oversample * N`` cells and the
    double integral evaluated as a circular correlation against the exact pair
    correlation on that grid. The sequence counts as ``L2-bounded`` when the last
    two values differ by a factor below 1.05, otherwise as ``growing``.
    """
    if sigma.d != 1:
        raise DomainError("l2_mass_diagnostic is implemented for d = 1")
    if not sigma.is_probability():
        raise DomainError(f"sigma must be a probability measure (mass {sigma.total_mass})")
    rows = []
    prev = None
    for N in sorted(int(x) for x in N_list):
        factor = 1
        while sigma.M * factor < oversample * N:
            factor *= 2
        w = sigma.refine(factor).weights if factor > 1 else sigma.weights
        logF = log_pair_correlation_grid(coeffs, N, len(w))
        second = float(np.dot(_autocorrelation(w), np.exp(logF)))
        rows.append({"N": N, "M": len(w), "second_moment": second,
                     "ratio": float("nan") if prev is None else second / prev})
        prev = second
    last_ratio = rows[-1]["ratio"] if len(rows) > 1 else float("nan")
    tag = "L2-bounded" if (len(rows) > 1 and last_ratio < 1.05) else "growing"
    return StatReport(estimate=rows[-1]["second_moment"], std_error=0.0, oracle=None,
                      N=[r["N"] for r in rows], seed=None, replicas=None,
                      table=rows, extras={"classification": tag, "last_ratio": last_ratio,
                                          "coefficients": coeffs.describe()})


# ---------------------------------------------------------------------------
# degeneracy


@dataclass
class DegeneracyReport:
    """Evaluated right-hand sides of the sup-moment bound and the implied exponent ``D``."""

    alpha: float
    h: float
    p: float
    q: float
    n: int
    interval: float
    D: float
    fires: bool
    sum_a2: float
    sum_k2a2: float
    est2_exact: float
    est2_asymptotic: float
    est3_exact: float
    est3_asymptotic: float
    product_bound: float
    small_n: bool
    mc_mean: float = float("nan")
    mc_std_error: float = float("nan")
    replicas: int = 0

    @property
    def bound_respected(self) -> bool:
        return bool(self.mc_mean <= self.product_bound) if self.replicas else True

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["bound_respected"] = self.bound_respected
        return out


def degeneracy_exponent(alpha: float, h: float, p: float, eps: float) -> float:
    """``D = (alpha^2/4) h (1 - h p) / ((1 - h)(1 + eps))``."""
    return alpha**2 / 4.0 * h * (1.0 - h * p) / ((1.0 - h) * (1.0 + eps))


def degeneracy_probe(alpha: float, h: float, p: float, n: int, eps: float = 0.1,
                     L: float | None = None, replicas: int = 0, seed: int = 0,
                     subgrid: int = 33, threads: int | None = None) -> DegeneracyReport:
    r"""Evaluate the bound :math:`E\sup_I Q_n^h \le (E Q_n^{hp})^{1/p}(E e^{hq|I|\|S_n'\|_\infty})^{1/q}`.

    ``I`` has length ``L`` (default ``n^{-(1+eps)}``). The first factor is exact.
    The second uses Bernstein's inequality: on ``8n`` equispaced points ``S_n'``
    is within a factor ``c = 1/(1 - pi/8)`` of its sup norm, so
    :math:`E e^{\lambda\|S'\|} \le 2\cdot 8n\prod_k I_0(c\lambda k\alpha_k)`.
    With ``replicas > 0`` the left side is also estimated by Monte Carlo on
    ``subgrid`` points of ``I``.

    ``small_n`` is set when the prefactor ``n^{1/q_n}`` of the choice
    ``q_n = n^eps`` still exceeds 1.5, i.e. ``n`` is too small for the
    asymptotic argument.
    """
    if not 0 < h < 1:
        raise DomainError(f"h must lie in (0, 1), got {h}")
    if not p > 1 or not h * p < 1:
        raise DomainError(f"need p > 1 and h p < 1, got p={p}, h={h}")
    if n < 1:
        raise DomainError("n must be >= 1")
    q = p / (p - 1.0)
    length = n ** (-(1.0 + eps)) if L is None else float(L)
    coeffs = CoefficientSequence.inverse_sqrt(alpha)
    k = np.arange(1, n + 1, dtype=float)
    a = coeffs.values(k)
    sum_a2 = float(np.sum(a * a))
    sum_k2a2 = float(np.sum(k * k * a * a))

    log_est2 = (float(np.sum(log_i0(h * p * a))) - h * p * _log_normalizer(a)) / p
    est2_asym = math.exp(-0.25 * h * (1.0 - h * p) * sum_a2)
    lam = h * q * length / (1.0 - math.pi / 8.0)
    log_est3 = (math.log(16.0 * n) + float(np.sum(log_i0(lam * k * a)))) / q
    log_est3_asym = math.log(n) / q + (h * h / 4.0) * q * length**2 * sum_k2a2
    D = degeneracy_exponent(alpha, h, p, eps)

    rep = DegeneracyReport(
        alpha=alpha, h=h, p=p, q=q, n=n, interval=length, D=D, fires=D > 1.0,
        sum_a2=sum_a2, sum_k2a2=sum_k2a2,
        est2_exact=math.exp(log_est2), est2_asymptotic=est2_asym,
        est3_exact=math.exp(log_est3), est3_asymptotic=math.exp(log_est3_asym),
        product_bound=math.exp(log_est2 + log_est3),
        small_n=math.log(n) / n**eps > math.log(1.5),
    )
    if replicas > 0:
        pts = np.linspace(0.0, length, subgrid)

        def one(s):
            return math.exp(h * float(np.max(evaluate_log_q(coeffs, n, s, pts))))

        vals = np.array(pmap(one, replica_seeds(seed, replicas), threads))
        rep.mc_mean = float(vals.mean())
        rep.mc_std_error = float(vals.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else float("nan")
        rep.replicas = replicas
    return rep


def _next_pow2(x: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(x, 1)))))


def total_mass_decay(alpha: float, N_list, replicas: int, seed: int = 0,
                     M: int | None = None, oversample: int = 8,
                     threads: int | None = None) -> StatReport:
    """Median and quartiles of ``(1/2pi) int Q_N dt`` across replicas, per ``N``.

    Each replica uses one phase stream, so its masses for increasing ``N`` are
    nested truncations of the same martingale. The grid is shared by all ``N``:
    ``M`` defaults to the next power of two above ``oversample * max(N_list)``.
    """
    if replicas < 30:
        raise DomainError("total_mass_decay needs at least 30 replicas")
    N_list = sorted(int(x) for x in N_list)
    M = M or _next_pow2(oversample * N_list[-1])
    coeffs = CoefficientSequence.inverse_sqrt(alpha)

    def one(s):
        return [simulate_realization(coeffs, N, M, s).total_mass for N in N_list]

    masses = np.array(pmap(one, replica_seeds(seed, replicas), threads))
    rows = []
    for i, N in enumerate(N_list):
        col = masses[:, i]
        q1, med, q3 = np.percentile(col, [25, 50, 75])
        rows.append({"N": N, "median": float(med), "q1": float(q1), "q3": float(q3),
                     "mean": float(col.mean()),
                     "std_error": float(col.std(ddof=1) / math.sqrt(replicas))})
    decay = rows[-1]["median"] / rows[0]["median"]
    return StatReport(estimate=rows[-1]["median"], std_error=rows[-1]["std_error"],
                      oracle=1.0, N=N_list, seed=seed, replicas=replicas, table=rows,
                      extras={"alpha": alpha, "M": M, "median_ratio_last_first": decay})


# ---------------------------------------------------------------------------
# mutual singularity


@dataclass(frozen=True)
class HellingerResult:
    affinity: float
    classification: str
    condensed_tail: tuple[float, ...]


def _series_converges(f, j_lo: int = 8, j_hi: int = 48) -> tuple[bool, tuple[float, ...]]:
    """Cauchy-condensation test on ``sum f(n)`` for non-negative, eventually decreasing ``f``.

    Uses ``c_j = 2^j f(2^j)``. Convergent when ``c_j`` decays geometrically or like
    a power ``j^{-s}`` with ``s > 1``, or is numerically zero.
    """
    j = np.arange(j_lo, j_hi + 1, dtype=float)
    c = 2.0**j * np.asarray(f(2.0**j), dtype=float)
    tail = tuple(float(x) for x in c)
    peak = max(float(np.abs(c).max()), 1e-300)
    if c[-1] <= 1e-12 * peak:
        return True, tail
    half = len(j) // 2
    y = np.log(np.maximum(c[half:], 1e-300))
    geo = np.polyfit(j[half:], y, 1)[0]
    powr = np.polyfit(np.log(j[half:]), y, 1)[0]
    return bool(geo < -0.05 or powr < -1.05), tail


def hellinger_affinity(coeffs: CoefficientSequence, other: CoefficientSequence, N: int) -> HellingerResult:
    r"""Exact :math:`\prod_{n\le N} I_0(\frac{\alpha_n+\alpha'_n}{2})/\sqrt{I_0(\alpha_n)I_0(\alpha'_n)}`.

    Both chaoses share one phase stream. The classification follows convergence
    of :math:`\sum(\alpha_n-\alpha'_n)^2`, decided by a condensation test on the
    coefficient formulas far beyond ``N``.
    """
    n = np.arange(1, N + 1, dtype=float)
    a, b = coeffs.values(n), other.values(n)
    log_aff = float(np.sum(log_i0(0.5 * (a + b)) - 0.5 * (log_i0(a) + log_i0(b))))
    conv, tail = _series_converges(lambda x: (coeffs.values(x) - other.values(x)) ** 2)
    return HellingerResult(math.exp(log_aff),
                           "mutually-continuous" if conv else "mutually-singular", tail)
