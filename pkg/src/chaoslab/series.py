r"""Random cosine series and their behaviour under the Peyrière measure.

The series is :math:`S_N(t) = \sum_{n\le N}\rho_n\cos(nt + \omega_n)`. Under the
Peyrière measure of a chaos :math:`Q` (pick :math:`\omega`, then :math:`t` with
density :math:`Q_N(t)`), the phases :math:`nt + \omega_n` become independent with
:math:`E\cos(nt+\omega_n) = I_0'(\alpha_n)/I_0(\alpha_n)`, which drives the laws
of large numbers, iterated logarithms and large deviations computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .chaos import simulate_realization
from .errors import DomainError
from .kernels import CoefficientSequence
from .parallel import pmap
from .measures import GridMeasure
from .potential import default_radii, dimension_formula_check
from .reports import StatReport
from .rng import PhaseStream, derive_seed, uniform_from_counter
from .specfun import i0_log_derivative, log_i0

_T_STREAM = 0x7E57  # sub-stream used to draw t given the phases


@dataclass(frozen=True)
class SeriesSpec:
    """Series amplitudes ``rho`` and the chaos that tilts the sampling measure.

    ``chaos`` defaults to ``alpha / sqrt(n)``; ``alpha == 0`` gives Lebesgue x P.
    """

    rho: CoefficientSequence
    alpha: float = 0.0
    chaos: CoefficientSequence | None = None

    @classmethod
    def inverse_sqrt(cls, alpha: float = 0.0) -> "SeriesSpec":
        return cls(CoefficientSequence.inverse_sqrt(1.0), alpha)

    @classmethod
    def power(cls, r: float, alpha: float = 0.0) -> "SeriesSpec":
        if not 0 < r < 0.5:
            raise DomainError(f"r must lie in (0, 1/2), got {r}")
        return cls(CoefficientSequence.power(r), alpha)

    @property
    def chaos_coefficients(self) -> CoefficientSequence:
        return self.chaos if self.chaos is not None else CoefficientSequence.inverse_sqrt(self.alpha)


# ---------------------------------------------------------------------------
# partial sums


def partial_sum(rho: CoefficientSequence, t, N: int, phases: PhaseStream, n_min: int = 1):
    """``S_N(t) = sum_{n_min <= n <= N} rho_n cos(n t + omega_n)``."""
    if N < 1:
        raise DomainError("N must be >= 1")
    n = np.arange(n_min, N + 1)
    a = rho.values(n)
    w = phases.phases(n)
    tt = np.asarray(t, dtype=float)
    flat = tt.reshape(-1)
    out = np.empty(len(flat))
    step = max(1, (1 << 22) // max(len(n), 1))
    for s in range(0, len(flat), step):
        out[s:s + step] = np.cos(np.outer(flat[s:s + step], n) + w) @ a
    return float(out[0]) if tt.ndim == 0 else out.reshape(tt.shape)


def partial_sum_trace(rho: CoefficientSequence, t: float, N: int, phases: PhaseStream,
                      block: int = 1 << 20) -> np.ndarray:
    """``S_1(t), ..., S_N(t)`` in O(N)."""
    out = np.empty(N)
    acc = 0.0
    for lo in range(1, N + 1, block):
        n = np.arange(lo, min(N, lo + block - 1) + 1)
        terms = rho.values(n) * np.cos(n * t + phases.phases(n))
        c = np.cumsum(terms) + acc
        out[lo - 1:lo - 1 + len(n)] = c
        acc = float(c[-1])
    return out


# ---------------------------------------------------------------------------
# Peyriere sampling


@dataclass(frozen=True)
class PeyriereSample:
    """One draw ``(omega, t)``: ``omega`` is the phase stream ``seed``, ``t`` the grid point ``index``.

    ``weight`` is the realization's total mass ``(1/2pi) int Q_N``. Expectations
    under the Peyrière measure are ``E[weight * phi] / E[weight]``.
    """

    t: float
    index: int
    seed: int
    weight: float
    log_q: float
    N: int
    M: int
    resample: bool = False


def _draw_index(seed: int, probs_cum: np.ndarray) -> int:
    u = float(uniform_from_counter(derive_seed(seed, _T_STREAM), np.array([0], dtype=np.uint64))[0])
    return int(min(np.searchsorted(probs_cum, u * probs_cum[-1], side="right"), len(probs_cum) - 1))


def peyriere_draw(chaos: CoefficientSequence, N: int, M: int, seed: int) -> PeyriereSample:
    """Single Peyrière draw for phase stream ``seed``."""
    if M < 2 * N:
        raise DomainError(f"grid M={M} must be at least 2N={2 * N}")
    if not np.any(chaos.values(np.arange(1, N + 1))):
        # Q_N is identically 1: t is uniform on the grid
        idx = _draw_index(seed, np.arange(1, M + 1, dtype=float))
        return PeyriereSample(2 * math.pi * idx / M, idx, seed, 1.0, 0.0, N, M)
    real = simulate_realization(chaos, N, M, seed)
    lq = real.logQ
    top = float(lq.max())
    p = np.exp(lq - top)
    cum = np.cumsum(p)
    weight = math.exp(top) * float(cum[-1]) / M
    bad = not (math.isfinite(weight) and weight > 0)
    idx = _draw_index(seed, cum)
    return PeyriereSample(2 * math.pi * idx / M, idx, seed, weight, float(lq[idx]), N, M, bad)


def peyriere_sample(alpha: float, N: int, M: int, count: int, seed: int,
                    chaos: CoefficientSequence | None = None,
                    threads: int | None = None) -> list[PeyriereSample]:
    """``count`` independent draws from the Peyrière measure of ``Q_N`` (default ``alpha/sqrt(n)``).

    Sample ``i`` uses phase stream ``derive_seed(seed, i)``; ``t`` is drawn from
    the grid with probabilities proportional to ``Q_N(t_j)``.
    """
    if abs(alpha) >= 2 and chaos is None:
        raise DomainError("Peyrière sampling needs |alpha| < 2")
    chaos = chaos if chaos is not None else CoefficientSequence.inverse_sqrt(alpha)
    seeds = [derive_seed(seed, i) for i in range(count)]
    return pmap(lambda s: peyriere_draw(chaos, N, M, s), seeds, threads)


def weighted_mean(values, weights) -> tuple[float, float]:
    """Self-normalized mean ``sum w x / sum w`` and its delta-method standard error."""
    x = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = len(x)
    sw = w.sum()
    mu = float(np.sum(w * x) / sw)
    if n < 2:
        return mu, float("nan")
    wbar = sw / n
    r = w * (x - mu) / wbar
    return mu, float(np.sqrt(np.sum(r * r) / (n * (n - 1))))


def _next_pow2(x: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(x, 1)))))


# ---------------------------------------------------------------------------
# oracles


def expected_series(rho: CoefficientSequence, chaos: CoefficientSequence, N: int) -> float:
    r"""Exact :math:`E_Q S_N = \sum_n \rho_n I_0'(\alpha_n)/I_0(\alpha_n)`."""
    n = np.arange(1, N + 1)
    return float(np.sum(rho.values(n) * i0_log_derivative(chaos.values(n))))


def expected_log_weight(chaos: CoefficientSequence, N: int) -> float:
    r"""Exact :math:`E_Q\sum_n\log P_n = \sum_n[\alpha_n I_0'(\alpha_n)/I_0(\alpha_n) - \log I_0(\alpha_n)]`."""
    a = chaos.values(np.arange(1, N + 1))
    return float(np.sum(a * i0_log_derivative(a) - log_i0(a)))


def oracle_self_test(alpha: float, N: int, tol: float = 1e-12) -> dict:
    """Cross-check the closed finite-``N`` oracles against independent scalar evaluations.

    Raises ``AssertionError`` on a mismatch beyond ``tol`` (relative).
    """
    from scipy import special

    rho = CoefficientSequence.inverse_sqrt(1.0)
    chaos = CoefficientSequence.inverse_sqrt(alpha)
    vec = expected_series(rho, chaos, N)
    ref = math.fsum(special.i1(alpha / math.sqrt(n)) / special.i0(alpha / math.sqrt(n)) / math.sqrt(n)
                    for n in range(1, N + 1))
    beta = 0.5
    fe = free_energy(alpha, beta, N)[0] * math.log(N)
    fe_ref = math.fsum(math.log(special.i0((alpha + beta) / math.sqrt(k)) / special.i0(alpha / math.sqrt(k)))
                       for k in range(1, N + 1))
    checks = {"expected_series": (vec, ref), "free_energy": (fe, fe_ref)}
    for name, (a, b) in checks.items():
        if abs(a - b) > tol * max(1.0, abs(b)):
            raise AssertionError(f"oracle {name} disagrees: {a!r} vs {b!r}")
    return {k: v[0] for k, v in checks.items()}


# ---------------------------------------------------------------------------
# law of large numbers


def lln_statistic(alpha: float, N: int, samples: int, seed: int = 0, M: int | None = None,
                  delta: float = 0.05, threads: int | None = None) -> StatReport:
    r"""Peyrière means of :math:`S_N/\log N` and :math:`\log Q_N/\log N` against their exact oracles.

    ``extras`` also records the remainder :math:`(S_N - \frac12\sum\rho_n\alpha_n)/\varphi(\sum\rho_n^2)`
    with :math:`\varphi(x) = x^{1/2+\delta}`.
    """
    oracle_self_test(alpha, min(N, 20000))
    M = M or _next_pow2(2 * N)
    rho = CoefficientSequence.inverse_sqrt(1.0)
    chaos = CoefficientSequence.inverse_sqrt(alpha)
    logN = math.log(N)

    def one(s):
        smp = peyriere_draw(chaos, N, M, s)
        S = partial_sum(rho, smp.t, N, PhaseStream(s))
        return smp.weight, S, smp.log_q, smp.resample

    res = np.array(pmap(one, [derive_seed(seed, i) for i in range(samples)], threads))
    w, S, lq = res[:, 0], res[:, 1], res[:, 2]
    est, se = weighted_mean(S / logN, w)
    lw, lw_se = weighted_mean(lq / logN, w)
    oracle = expected_series(rho, chaos, N) / logN
    lw_oracle = expected_log_weight(chaos, N) / logN
    n = np.arange(1, N + 1)
    sum_rho2 = float(np.sum(rho.squares(n)))
    center = 0.5 * float(np.sum(rho.values(n) * chaos.values(n)))
    rem, rem_se = weighted_mean((S - center) / sum_rho2 ** (0.5 + delta), w)
    passed = (abs(est - oracle) <= 4 * se and abs(oracle - alpha / 2) <= 0.05
              and abs(lw - alpha**2 / 4) <= 0.05)
    return StatReport(
        estimate=est, std_error=se, oracle=oracle, N=N, seed=seed, replicas=samples, passed=passed,
        extras={"alpha": alpha, "M": M, "limit": alpha / 2,
                "log_weight": lw, "log_weight_std_error": lw_se,
                "log_weight_oracle": lw_oracle, "log_weight_limit": alpha**2 / 4,
                "remainder": rem, "remainder_std_error": rem_se, "remainder_delta": delta,
                "resampled": int(res[:, 3].sum())})


# ---------------------------------------------------------------------------
# law of the iterated logarithm


def wittmann_check(r: float, p: float = 3.0, n_max: float = 1e12) -> dict:
    r"""Convergence of :math:`\sum_n\rho_n^p/(s_n^2\log\log s_n^2)^{p/2}` for ``rho_n = n^{-r}``.

    ``s_n^2`` uses the integral approximation ``n^{1-2r}/(1-2r)`` beyond ``n = 10^6``.
    Terms start where ``log log s_n^2 > 0``. Returns the partial sum to ``10^6``,
    the fitted tail exponent and an integral-test tail bound.
    """
    n = np.arange(1, 1_000_001, dtype=float)
    s2 = np.cumsum(n ** (-2 * r))
    ok = s2 > math.e
    ll = np.log(np.log(np.where(ok, s2, math.e + 1)))
    terms = np.where(ok, n ** (-r * p) / (s2 * ll) ** (p / 2), 0.0)
    partial = float(terms.sum())

    def term(x):
        s = x ** (1 - 2 * r) / (1 - 2 * r)
        return x ** (-r * p) / (s * math.log(math.log(s))) ** (p / 2)

    xs = np.geomspace(1e6, n_max, 13)
    ys = np.log([term(x) for x in xs])
    slope = float(np.polyfit(np.log(xs[-4:]), ys[-4:], 1)[0])
    convergent = slope < -1.0
    tail = term(1e6) * 1e6 / (-slope - 1.0) if convergent else math.inf
    return {"p": p, "r": r, "partial_sum": partial, "tail_exponent": slope,
            "tail_bound": tail, "convergent": convergent}


def lil_normalizer(N, r: float):
    """``sqrt(N^{1-2r} log log N)``."""
    N = np.asarray(N, dtype=float)
    return np.sqrt(N ** (1 - 2 * r) * np.log(np.log(N)))


def lil_scaling(r: float, alpha: float, N_max: int, samples: int, seed: int = 0,
                n_start: int = 16, band: tuple[float, float] = (0.4, 1.1),
                threads: int | None = None) -> StatReport:
    r"""Running maximum over ``n_start <= N <= N_max`` of :math:`S_N/\sqrt{N^{1-2r}\log\log N}`.

    ``rho_n = n^{-r}``; ``t`` is drawn from the Peyrière measure of ``alpha/sqrt(n)``
    at level ``N_max`` (uniform when ``alpha == 0``). The estimate is the
    weighted fraction of samples whose running maximum lies in ``band``;
    ``extras`` holds the Wittmann check, the centering ratio and the value
    :math:`\sqrt{1-2r}` quoted as the limit.
    """
    if not 0 < r < 0.5:
        raise DomainError(f"r must lie in (0, 1/2), got {r}")
    rho = CoefficientSequence.power(r)
    chaos = CoefficientSequence.inverse_sqrt(alpha)
    M = _next_pow2(2 * N_max)
    Ns = np.arange(n_start, N_max + 1)
    norm = lil_normalizer(Ns, r)

    def one(s):
        smp = peyriere_draw(chaos, N_max, M, s)
        tr = partial_sum_trace(rho, smp.t, N_max, PhaseStream(s))
        return smp.weight, float(np.max(tr[n_start - 1:] / norm)), tr[-1] / norm[-1]

    res = np.array(pmap(one, [derive_seed(seed, i) for i in range(samples)], threads))
    w, run_max, final = res[:, 0], res[:, 1], res[:, 2]
    inside = ((run_max >= band[0]) & (run_max <= band[1])).astype(float)
    frac, se = weighted_mean(inside, w)
    sched = np.geomspace(max(n_start, 10), N_max, 6).astype(int)
    centering = [{"N": int(N), "ratio": float(alpha / (1 - 2 * r) * N ** (0.5 - r) / lil_normalizer(N, r))}
                 for N in sched]
    rows = [{"sample": i, "weight": float(w[i]), "running_max": float(run_max[i]),
             "final": float(final[i])} for i in range(samples)]
    return StatReport(
        estimate=frac, std_error=se, oracle=math.sqrt(1 - 2 * r), N=N_max, seed=seed,
        replicas=samples, passed=frac >= 0.9, table=rows,
        extras={"r": r, "alpha": alpha, "band": list(band), "n_start": n_start,
                "median_running_max": float(np.median(run_max)),
                "mean_running_max": weighted_mean(run_max, w)[0],
                "wittmann": wittmann_check(r), "centering": centering})


def lil_half_trace(N_max: int, samples: int, seed: int = 0, points: int = 12,
                   threads: int | None = None) -> list[dict]:
    r"""Trace of :math:`S_N/\sqrt{\log N\,\log\log\log N}` for ``rho_n = n^{-1/2}`` (no pass/fail).

    The triple logarithm is positive only for ``N > e^{e^e}`` (about 3.8 million);
    below that the normalized column is NaN and only ``|S_N|/sqrt(log N)`` is reported.
    """
    rho = CoefficientSequence.inverse_sqrt(1.0)
    Ns = np.unique(np.geomspace(10, N_max, points).astype(int))

    def one(s):
        t = 2 * math.pi * float(uniform_from_counter(derive_seed(s, _T_STREAM), np.array([0], np.uint64))[0])
        tr = partial_sum_trace(rho, t, N_max, PhaseStream(s))
        return tr[Ns - 1]

    vals = np.array(pmap(one, [derive_seed(seed, i) for i in range(samples)], threads))
    rows = []
    for j, N in enumerate(Ns):
        lll = math.log(math.log(math.log(N))) if math.log(math.log(N)) > 1 else float("nan")
        s = vals[:, j]
        rows.append({"N": int(N), "logloglogN": lll,
                     "mean_abs_over_sqrt_log": float(np.mean(np.abs(s)) / math.sqrt(math.log(N))),
                     "max_normalized": float(np.max(s) / math.sqrt(math.log(N) * lll)) if lll > 0 else float("nan")})
    return rows


# ---------------------------------------------------------------------------
# free energy and large deviations


def free_energy(alpha: float, beta: float, N: int) -> tuple[float, float]:
    r"""``(exact, closed_form)``: :math:`\frac{1}{\log N}\log E_Q e^{\beta S_N}` and :math:`(\beta^2+2\alpha\beta)/4`."""
    if N < 2:
        raise DomainError("N must be >= 2")
    k = np.arange(1, N + 1, dtype=float)
    s = 1.0 / np.sqrt(k)
    exact = float(np.sum(log_i0((alpha + beta) * s) - log_i0(alpha * s))) / math.log(N)
    return exact, (beta**2 + 2 * alpha * beta) / 4.0


@dataclass(frozen=True)
class LegendreResult:
    closed_form: float
    grid_sup: float
    argmax: float


def legendre(alpha: float, gamma: float) -> LegendreResult:
    r"""Legendre transform :math:`c^*(\gamma) = \sup_\beta(\gamma\beta - c(\beta)) = (\gamma - \alpha/2)^2`.

    The supremum is also taken numerically: a coarse ``beta`` grid followed by a
    bounded scalar refinement.
    """
    def neg(b):
        return -(gamma * b - (b * b + 2 * alpha * b) / 4.0)

    span = 10.0 + 4.0 * abs(gamma) + 2.0 * abs(alpha)
    grid = np.linspace(-span, span, 4001)
    vals = -neg(grid)
    b0 = float(grid[np.argmax(vals)])
    step = grid[1] - grid[0]
    opt = optimize.minimize_scalar(neg, bounds=(b0 - step, b0 + step), method="bounded",
                                   options={"xatol": 1e-12})
    return LegendreResult((gamma - alpha / 2.0) ** 2, float(-opt.fun), float(opt.x))


def _wls_slope(x: np.ndarray, y: np.ndarray, var: np.ndarray) -> tuple[float, float, float]:
    w = 1.0 / var
    X = np.column_stack([np.ones_like(x), x])
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    coef = cov @ (X.T @ (w * y))
    return float(coef[1]), float(math.sqrt(cov[1, 1])), float(coef[0])


def ld_rate_estimate(alpha: float, eta: float, N_schedule, samples: int, seed: int = 0,
                     normalizer: str = "log", r: float = 0.25, min_hits: int = 10,
                     threads: int | None = None) -> StatReport:
    r"""Fit the decay rate of :math:`p_N = Q\{|S_N/a_N - \alpha/2| \ge \eta\}`.

    ``normalizer="log"``: ``rho_n = n^{-1/2}``, ``a_N = log N``, chaos ``alpha/sqrt(n)``;
    the slope of ``log p_N`` against ``log N`` is compared with ``-eta^2``.
    ``normalizer="power"``: ``rho_n = n^{-r}``, ``a_N = sum rho_n^2``, chaos
    ``alpha rho_n``; the slope is taken against ``a_N``.

    The fit is weighted least squares with binomial variances; the CI is two
    standard errors. ``widen_budget`` is raised when some ``N`` has fewer than
    ``min_hits`` deviations.
    """
    if eta <= 0:
        raise DomainError("eta must be positive")
    if normalizer == "log":
        rho = CoefficientSequence.inverse_sqrt(1.0)
        chaos = CoefficientSequence.inverse_sqrt(alpha)
    elif normalizer == "power":
        rho = CoefficientSequence.power(r)
        chaos = CoefficientSequence.power(r, alpha) if alpha != 0 else CoefficientSequence.inverse_sqrt(0.0)
    else:
        raise DomainError(f"unknown normalizer {normalizer!r}")
    oracle_self_test(alpha, 2000)
    rows = []
    for j, N in enumerate(sorted(int(x) for x in N_schedule)):
        aN = math.log(N) if normalizer == "log" else float(np.sum(rho.squares(np.arange(1, N + 1))))
        M = _next_pow2(2 * N)
        base = derive_seed(seed, 1_000_003 + j)

        def one(s, N=N, M=M, aN=aN):
            smp = peyriere_draw(chaos, N, M, s)
            W = partial_sum(rho, smp.t, N, PhaseStream(s)) / aN
            return smp.weight, float(abs(W - alpha / 2.0) >= eta)

        res = np.array(pmap(one, [derive_seed(base, i) for i in range(samples)], threads))
        w, hit = res[:, 0], res[:, 1]
        p, se = weighted_mean(hit, w)
        rows.append({"N": N, "a_N": aN, "p": p, "std_error": se, "hits": int(hit.sum()),
                     "samples": samples})
    usable = [row for row in rows if row["hits"] > 0]
    widen = any(row["hits"] < min_hits for row in rows)
    target = -eta**2
    if len(usable) >= 2:
        x = np.array([math.log(row["N"]) if normalizer == "log" else row["a_N"] for row in usable])
        y = np.log([row["p"] for row in usable])
        # var(log p) ~ (1 - p) / (n p)
        var = np.array([(1 - row["p"]) / (row["samples"] * row["p"]) for row in usable])
        slope, slope_se, _ = _wls_slope(x, y, np.maximum(var, 1e-12))
    else:
        slope, slope_se = float("nan"), float("nan")
    covered = bool(abs(slope - target) <= 2 * slope_se) if math.isfinite(slope) else False
    return StatReport(
        estimate=slope, std_error=slope_se, oracle=target, N=[row["N"] for row in rows],
        seed=seed, replicas=samples, passed=(not widen) and math.isfinite(slope), table=rows,
        extras={"alpha": alpha, "eta": eta, "normalizer": normalizer,
                "ci": [slope - 2 * slope_se, slope + 2 * slope_se], "ci_covers_target": covered,
                "widen_budget": widen})


# ---------------------------------------------------------------------------
# multifractal spectrum


def multifractal_scan(alphas, N: int, M: int, samples: int = 200, replicas: int = 1,
                      seed: int = 0, threads: int | None = None) -> StatReport:
    """Divergence level and local dimension of ``Q_N lambda`` for each ``alpha``.

    Predictions are ``alpha/2`` for the level and ``1 - alpha^2/4`` for the dimension.
    """
    rows = []
    for j, a in enumerate(alphas):
        if not -2 < a < 2:
            raise DomainError("alpha must lie in (-2, 2)")
        lvl = lln_statistic(a, N, samples, seed=derive_seed(seed, 2 * j), threads=threads)
        dim = dimension_formula_check(a, GridMeasure.lebesgue(M), 1.0, N, replicas,
                                      seed=derive_seed(seed, 2 * j + 1),
                                      radii=default_radii(N, M), threads=threads)
        rows.append({"alpha": a, "level": lvl.estimate, "level_std_error": lvl.std_error,
                     "level_predicted": a / 2, "dimension": dim.estimate,
                     "dimension_std_error": dim.std_error,
                     "dimension_predicted": 1 - a * a / 4})
    return StatReport(estimate=float("nan"), N=N, seed=seed, replicas=replicas, table=rows,
                      extras={"M": M, "samples": samples})
