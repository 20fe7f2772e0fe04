r"""Coefficient families, correlation functions and potential-theoretic kernels.

The correlation function of a coefficient sequence :math:`(\alpha_n)` is

.. math:: H(t) = \tfrac12 \sum_n \alpha_n^2 \cos(n\cdot t),

and :math:`\Phi = e^H` is the kernel governing second moments of the chaos.
On :math:`\mathbb{T}^2` the sum runs over the positive half-lattice, grouped in
cube shells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from . import lattice
from .errors import DomainError, SingularityError
from .specfun import jacobi_G, surface_constants, wrap_torus

_CHUNK = 1 << 22  # elements per cosine block


# ---------------------------------------------------------------------------
# coefficient sequences


@dataclass(frozen=True)
class CoefficientSequence:
    """Deterministic amplitudes ``alpha_n`` (or ``rho_n``) given by a closed-form family.

    Use the constructors :meth:`inverse_sqrt`, :meth:`power`, :meth:`log_corrected`,
    :meth:`explicit` and :meth:`from_function` rather than the raw initializer.
    For ``dimension == 2`` the sequence is indexed by lattice points ``k`` and
    evaluated at ``|k|``.
    """

    family: str
    params: tuple = ()
    scale: float = 1.0
    dimension: int = 1
    func: Callable | None = field(default=None, compare=False, repr=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def inverse_sqrt(cls, alpha: float, dimension: int = 1) -> "CoefficientSequence":
        """``alpha_k = alpha * |k|^{-d/2}``."""
        return cls("inverse_sqrt", (), float(alpha), dimension)

    @classmethod
    def power(cls, r: float, scale: float = 1.0, dimension: int = 1) -> "CoefficientSequence":
        """``rho_n = scale * n^{-r}``."""
        if r <= 0:
            raise DomainError(f"power family needs r > 0, got {r}")
        return cls("power", (float(r),), float(scale), dimension)

    @classmethod
    def log_corrected(cls, tau: float, beta: float, scale: float = 1.0) -> "CoefficientSequence":
        """``alpha_n^2 = scale^2 n^{-tau} log^{-beta} n``.

        For ``beta == 0`` the formula holds for every ``n >= 1``. Otherwise it holds
        for ``n >= 3`` and ``alpha_1^2, alpha_2^2`` continue the chord through
        ``n = 3, 4`` linearly, which keeps the squares decreasing and convex.
        """
        if not 0 < tau <= 1:
            raise DomainError(f"tau must lie in (0, 1], got {tau}")
        return cls("log_corrected", (float(tau), float(beta)), float(scale), 1)

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "CoefficientSequence":
        """``alpha_n = values[n-1]`` for ``n <= len(values)`` and 0 beyond."""
        return cls("explicit", tuple(float(v) for v in values), 1.0, 1)

    @classmethod
    def from_function(cls, f: Callable, label: str = "function") -> "CoefficientSequence":
        """``alpha_n = f(n)`` for a vectorized callable ``f``."""
        return cls("function", (label,), 1.0, 1, func=f)

    @classmethod
    def parity(cls, base: "CoefficientSequence", odd: bool) -> "CoefficientSequence":
        """Restriction of ``base`` to odd (``odd=True``) or even frequencies."""
        return cls("parity", (base, bool(odd)), 1.0, base.dimension)

    # -- evaluation -------------------------------------------------------
    def _radial_squares(self, r: np.ndarray) -> np.ndarray:
        fam = self.family
        if fam == "inverse_sqrt":
            return self.scale**2 * r ** (-float(self.dimension))
        if fam == "power":
            return self.scale**2 * r ** (-2.0 * self.params[0])
        raise DomainError(f"family {fam!r} has no lattice form")

    def values(self, n) -> np.ndarray:
        """``alpha_n`` for 1-based integer frequencies (d=1) or lattice points (d=2)."""
        if self.dimension == 2:
            k = np.asarray(n, dtype=float)
            r = np.sqrt(np.sum(k * k, axis=-1))
            sign = -1.0 if self.scale < 0 else 1.0
            return sign * np.sqrt(self._radial_squares(r))

        n = np.asarray(n, dtype=float)
        fam = self.family
        if fam == "inverse_sqrt":
            return self.scale / np.sqrt(n)
        if fam == "power":
            return self.scale * n ** (-self.params[0])
        if fam == "log_corrected":
            return self.scale * np.sqrt(_log_corrected_squares(n, *self.params))
        if fam == "explicit":
            vals = np.asarray(self.params, dtype=float)
            idx = n.astype(np.int64) - 1
            inside = idx < len(vals)
            out = np.zeros(n.shape)
            out[inside] = vals[idx[inside]]
            return out
        if fam == "function":
            return np.asarray(self.func(n), dtype=float) * np.ones_like(n)
        if fam == "parity":
            base, odd = self.params
            keep = (n.astype(np.int64) % 2 == 1) == odd
            return np.where(keep, base.values(n), 0.0)
        raise DomainError(f"unknown family {fam!r}")

    def squares(self, n) -> np.ndarray:
        return self.values(n) ** 2

    def first(self, N: int) -> np.ndarray:
        """``alpha_1, ..., alpha_N`` (d=1)."""
        return self.values(np.arange(1, N + 1))

    def lattice_block(self, N: int, n_min: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Lattice points of the shells ``n_min..N`` and their coefficients (d=2)."""
        k = lattice.half_cube(N)
        if n_min > 1:
            k = k[lattice.shell_of(k) >= n_min]
        return k, self.values(k)

    def describe(self) -> dict:
        params = []
        for p in self.params:
            params.append(p.describe() if isinstance(p, CoefficientSequence) else p)
        return {"family": self.family, "params": params, "scale": self.scale,
                "dimension": self.dimension}


def _log_corrected_squares(n: np.ndarray, tau: float, beta: float) -> np.ndarray:
    def f(x):
        return x ** (-tau) * np.log(x) ** (-beta)

    if beta == 0:
        return n ** (-tau)
    a3, a4 = f(3.0), f(4.0)
    slope = a4 - a3
    safe = np.maximum(n, 3.0)
    return np.where(n >= 3, f(safe), a3 + (n - 3.0) * slope)


@dataclass(frozen=True)
class KernelSpec:
    """A coefficient sequence together with an optional closed-form tag.

    ``closed_form`` is one of ``None``, ``"riesz_log"``, ``"odd_half"``,
    ``"even_half"``; ``alpha`` is the parameter of the closed form.
    """

    coefficients: CoefficientSequence
    closed_form: str | None = None
    alpha: float | None = None

    def correlation_partial(self, N: int, t) -> np.ndarray:
        return correlation_partial(self.coefficients, N, t)

    def correlation(self, t):
        """Closed-form correlation function when one is known."""
        t = np.asarray(t, dtype=float)
        a2 = (self.alpha or 0.0) ** 2
        d = self.coefficients.dimension
        if self.closed_form == "riesz_log":
            return correlation_closed_form(self.alpha, t, d)
        if self.closed_form == "even_half":
            return -(a2 / 4.0) * np.log(np.abs(2.0 * np.sin(t)))
        if self.closed_form == "odd_half":
            return -(a2 / 4.0) * np.log(np.abs(np.tan(t / 2.0)))
        raise DomainError("no closed form attached to this kernel")


# ---------------------------------------------------------------------------
# correlation functions


def _as_sequences(coeffs) -> list[CoefficientSequence]:
    if isinstance(coeffs, KernelSpec):
        return [coeffs.coefficients]
    if isinstance(coeffs, CoefficientSequence):
        return [coeffs]
    return [c.coefficients if isinstance(c, KernelSpec) else c for c in coeffs]


def correlation_partial(coeffs, N: int, t):
    r"""Partial correlation sum :math:`H_N(t) = \frac12\sum_{n\le N}\alpha_n^2\cos(n\cdot t)`.

    ``coeffs`` may also be a list of sequences, describing the product of
    independent chaoses; their correlation sums add.
    For ``d == 2`` the sum runs over the half cube ``C_N^+`` and ``t`` carries a
    trailing axis of length 2.
    """
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    seqs = _as_sequences(coeffs)
    total = None
    for seq in seqs:
        part = _correlation_single(seq, N, t)
        total = part if total is None else total + part
    return total


def _correlation_single(seq: CoefficientSequence, N: int, t):
    if seq.dimension == 2:
        pts = np.asarray(t, dtype=float)
        flat = pts.reshape(-1, 2)
        k, a = seq.lattice_block(N)
        w = 0.5 * a * a
        out = np.empty(len(flat))
        step = max(1, _CHUNK // max(len(k), 1))
        for s in range(0, len(flat), step):
            out[s:s + step] = np.cos(flat[s:s + step] @ k.T.astype(float)) @ w
        return out.reshape(pts.shape[:-1]) if pts.ndim > 1 else float(out[0])

    tt = np.asarray(t, dtype=float)
    flat = tt.ravel()
    out = np.zeros(len(flat))
    step = max(1, _CHUNK // max(len(flat), 1))
    for lo in range(1, N + 1, step):
        n = np.arange(lo, min(N, lo + step - 1) + 1, dtype=float)
        w = 0.5 * seq.squares(n)
        out += np.cos(np.outer(flat, n)) @ w
    return float(out[0]) if tt.ndim == 0 else out.reshape(tt.shape)


def correlation_closed_form(alpha: float, t, d: int = 1):
    r"""Correlation function of ``alpha_k = alpha |k|^{-d/2}``.

    ``d == 1``: :math:`-\frac{\alpha^2}{2}\log|2\sin(t/2)|`;
    ``d == 2``: :math:`\frac{\alpha^2}{4} G(t)` with ``G`` the Jacobi function.
    """
    if alpha == 0:
        shape = np.shape(t) if d == 1 else np.shape(t)[:-1]
        return 0.0 if shape == () else np.zeros(shape)
    if d == 1:
        tt = wrap_torus(t)
        if np.any(tt == 0):
            raise SingularityError("correlation function is singular at t = 0")
        val = -(alpha**2 / 2.0) * np.log(np.abs(2.0 * np.sin(tt / 2.0)))
        return float(val) if np.ndim(val) == 0 else val
    if d == 2:
        return (alpha**2 / 4.0) * jacobi_G(t, 2)
    raise DomainError(f"d must be 1 or 2, got {d}")


def correlation_on_grid(coeffs, N: int, M: int) -> np.ndarray:
    """``H_N`` at the grid points ``2*pi*j/M`` via one FFT (d=1); exact including aliasing."""
    spec = np.zeros(M)
    for seq in _as_sequences(coeffs):
        n = np.arange(1, N + 1)
        np.add.at(spec, n % M, 0.5 * seq.squares(n))
    # sum_k c_k cos(k t_j) = Re FFT of c
    return np.fft.fft(spec).real


# ---------------------------------------------------------------------------
# upper-bound conditions


@dataclass
class UpperBoundReport:
    """Check of the decay conditions under which partial sums of H stay below H + C."""

    convex: bool
    monotone: bool
    decays: bool
    order_constant: float
    order_bounded: bool
    difference_constant: float
    difference_bounded: bool
    sup_excess: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_upper_bound_conditions(coeffs: CoefficientSequence, N_max: int,
                                 n_grid: int = 2048) -> UpperBoundReport:
    """Report decay, convexity and O-bounds of ``alpha_n^2`` on ``[1, N_max]``.

    Also computes ``sup_t max_{N <= N_max} (H_N(t) - H_{4 N_max}(t))`` on an
    ``n_grid``-point grid of the circle.
    """
    if N_max < 3:
        raise DomainError("N_max must be at least 3")
    n = np.arange(1, N_max + 2, dtype=float)
    a2 = coeffs.squares(n)
    diff = a2[:-1] - a2[1:]
    second = a2[:-2] - 2 * a2[1:-1] + a2[2:]
    tol = 1e-14 * max(1.0, float(np.abs(a2).max()))
    convex = bool(np.all(second >= -tol))
    monotone = bool(np.all(diff >= -tol))

    a2 = a2[:-1]
    n = n[:-1]
    half = N_max // 2
    quarter = max(1, N_max // 4)
    decays = bool(a2[half:].max() < a2[quarter - 1:half].max())

    order = n * a2
    order_constant = float(order.max())
    order_bounded = bool(order[half:].max() <= 1.5 * order[:half].max())
    dterm = n * n * diff
    difference_constant = float(np.abs(dterm).max())
    difference_bounded = bool(np.abs(dterm[half:]).max() <= 1.5 * np.abs(dterm[:half]).max() + tol)

    t = -np.pi + 2 * np.pi * np.arange(n_grid) / n_grid
    reference = correlation_partial(coeffs, 4 * N_max, t)
    running = np.zeros(n_grid)
    best = np.full(n_grid, -np.inf)
    step = max(1, _CHUNK // n_grid)
    for lo in range(1, N_max + 1, step):
        nn = np.arange(lo, min(N_max, lo + step - 1) + 1, dtype=float)
        block = np.cumsum(np.cos(np.outer(nn, t)) * (0.5 * coeffs.squares(nn))[:, None], axis=0)
        block += running
        best = np.maximum(best, block.max(axis=0))
        running = block[-1]
    sup_excess = float((best - reference).max())

    passed = monotone and decays and order_bounded and difference_bounded
    return UpperBoundReport(convex, monotone, decays, order_constant, order_bounded,
                            difference_constant, difference_bounded, sup_excess, passed)


# ---------------------------------------------------------------------------
# the h_{alpha,tau,beta} family


@dataclass(frozen=True)
class HAsymptotic:
    value: float
    predicted: float
    N: int

    @property
    def ratio(self) -> float:
        return self.value / self.predicted


def h_family_predicted(tau: float, beta: float, alpha: float, t: float) -> float:
    """Leading small-``t`` behaviour of ``h_{alpha,tau,beta}``; NaN when the function stays bounded."""
    L = math.log(1.0 / t)
    if tau < 1:
        c = alpha * math.gamma(1.0 - tau) * math.sin(tau * math.pi / 2.0)
        return c / (t ** (1.0 - tau) * L**beta)
    if beta < 1:
        return alpha / (1.0 - beta) * L ** (1.0 - beta)
    if beta == 1:
        return alpha * math.log(L)
    return float("nan")


def h_family_asymptotic(tau: float, beta: float, alpha: float, t: float) -> HAsymptotic:
    r"""Evaluate :math:`h_{\alpha,\tau,\beta}(t) = \sum_n \alpha n^{-\tau}\log^{-\beta}n\,\cos nt` and its prediction.

    The series starts at ``n = 3`` (``n = 1`` when ``beta == 0``), is truncated at
    ``N = ceil(50/t)`` and the last ``ceil(2*pi/t)`` partial sums (one full
    period of ``cos(n t)``) are averaged, which cancels the leading oscillation.
    """
    if not 0 < tau <= 1:
        raise DomainError(f"tau must lie in (0, 1], got {tau}")
    if not 0 < t < 0.1:
        raise DomainError(f"t must lie in (0, 0.1), got {t}")
    N = int(math.ceil(50.0 / t))
    L = int(math.ceil(2.0 * math.pi / t))
    n0 = 1 if beta == 0 else 3
    total = 0.0
    tail_avg = 0.0
    start_avg = N - L + 1
    step = 1 << 20
    for lo in range(n0, N + 1, step):
        n = np.arange(lo, min(N, lo + step - 1) + 1, dtype=float)
        terms = alpha * n ** (-tau) * np.cos(n * t)
        if beta != 0:
            terms = terms * np.log(n) ** (-beta)
        partial = total + np.cumsum(terms)
        inside = n >= start_avg
        tail_avg += partial[inside].sum()
        total = float(partial[-1])
    value = tail_avg / L
    return HAsymptotic(value=value, predicted=h_family_predicted(tau, beta, alpha, t), N=N)


# ---------------------------------------------------------------------------
# even/odd splitting


def kernel_split_even_odd(alpha: float) -> tuple[KernelSpec, KernelSpec]:
    """Split ``alpha/sqrt(n)`` into odd- and even-frequency parts.

    Returns ``(odd, even)``; their correlation functions sum to ``H_alpha``.
    The even part has singularities at 0 and pi, the odd part only at 0.
    """
    base = CoefficientSequence.inverse_sqrt(alpha)
    odd = KernelSpec(CoefficientSequence.parity(base, odd=True), "odd_half", alpha)
    even = KernelSpec(CoefficientSequence.parity(base, odd=False), "even_half", alpha)
    return odd, even


# ---------------------------------------------------------------------------
# kernels for potential theory


class Kernel:
    """Even kernel on the torus, evaluated at displacements.

    Subclasses provide :meth:`values` off the origin and :meth:`cell_average`,
    the mean of the kernel over a grid cell centred at the origin.
    """

    name = "kernel"
    singular = False
    d = 1

    def values(self, x):
        raise NotImplementedError

    def cell_average(self, h: float) -> float:
        return float(self.values(np.zeros(1) if self.d == 1 else np.zeros((1, 2)))[0])

    def grid_values(self, M: int) -> np.ndarray:
        """Kernel at grid displacements ``2*pi*j/M``; the origin gets the cell average."""
        h = 2.0 * np.pi / M
        j = np.arange(M)
        disp = wrap_torus(h * j)
        if self.d == 1:
            out = np.empty(M)
            out[1:] = self.values(disp[1:])
            out[0] = self.cell_average(h)
            return out
        X, Y = np.meshgrid(disp, disp, indexing="ij")
        pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
        out = np.empty(M * M)
        out[1:] = self.values(pts[1:])
        out[0] = self.cell_average(h)
        return out.reshape(M, M)

    def describe(self) -> str:
        return self.name


class ConstantKernel(Kernel):
    def __init__(self, c: float = 1.0, d: int = 1):
        self.c = float(c)
        self.d = d
        self.name = f"constant({self.c:g})"

    def values(self, x):
        shape = np.shape(x) if self.d == 1 else np.shape(x)[:-1]
        return np.full(shape, self.c)

    def cell_average(self, h):
        return self.c


class CosineKernel(Kernel):
    """Smooth kernel ``a + cos t`` (d=1)."""

    def __init__(self, offset: float = 0.0):
        self.offset = float(offset)
        self.name = f"cosine({self.offset:g})"

    def values(self, x):
        return self.offset + np.cos(np.asarray(x, dtype=float))

    def cell_average(self, h):
        return self.offset + math.sin(h / 2.0) / (h / 2.0)


class RieszKernel(Kernel):
    r"""Riesz kernel of order ``beta`` on :math:`\mathbb{T}^d`.

    ``d == 1``: :math:`|2\sin(x/2)|^{-\beta}`. ``d == 2``:
    :math:`\exp(\beta G(x)/s_2)`, which is comparable to :math:`|x|^{-\beta}`
    near the origin.
    """

    def __init__(self, beta: float, d: int = 1):
        if not 0 <= beta:
            raise DomainError(f"beta must be non-negative, got {beta}")
        if d not in (1, 2):
            raise DomainError("Riesz kernels are implemented for d in {1, 2}")
        self.beta = float(beta)
        self.d = d
        self.singular = beta > 0
        self.name = f"riesz(d={d},beta={self.beta:g})"

    def values(self, x):
        return riesz_kernel(self.d, self.beta, x)

    def cell_average(self, h):
        b = self.beta
        if b == 0:
            return 1.0
        if b >= self.d:
            return math.inf
        if self.d == 1:
            # (2/h) int_0^{h/2} (2 sin(u/2))^{-b} du, singular factor u^{-b} handled by QUADPACK
            g = lambda u: (np.sinc(u / (2 * np.pi))) ** (-b)  # (2 sin(u/2)/u)^{-b}
            val, _ = integrate.quad(g, 0.0, h / 2.0, weight="alg", wvar=(-b, 0.0),
                                    epsabs=0.0, epsrel=1e-13)
            return 2.0 * val / h
        # d = 2: smooth factor R|x|^b frozen at radius h/2, times the exact
        # square average of |x|^{-b}
        r0 = h / 2.0
        factor = float(self.values(np.array([[r0, 0.0]]))[0]) * r0**b

        def ang(phi):
            return (r0 / math.cos(phi)) ** (2.0 - b) / (2.0 - b)

        val, _ = integrate.quad(ang, 0.0, math.pi / 4.0)
        return factor * 8.0 * val / (h * h)

    def fourier_coefficients(self, n) -> np.ndarray:
        r"""Exact Fourier coefficients :math:`\hat\Phi(n) = \frac{1}{2\pi}\int\Phi(t)e^{-int}dt` (d=1)."""
        if self.d != 1:
            raise DomainError("closed-form coefficients are available for d = 1 only")
        b = self.beta
        n = np.abs(np.asarray(n, dtype=float))
        # |2 sin(t/2)|^{2l} has coefficients (-1)^n Gamma(2l+1) / (Gamma(l+n+1) Gamma(l-n+1))
        lam = -b / 2.0
        sign = np.where(n % 2 == 1, -1.0, 1.0)
        return sign * special.gamma(2 * lam + 1) * special.rgamma(lam + n + 1) * special.rgamma(lam - n + 1)


class ExpCorrelationKernel(Kernel):
    """``Phi_N = exp(H_N)`` for a coefficient sequence truncated at ``N`` (bounded, d=1)."""

    def __init__(self, coeffs: CoefficientSequence, N: int):
        self.coeffs = coeffs
        self.N = N
        self.name = f"exp_correlation(N={N})"

    def values(self, x):
        return np.exp(correlation_partial(self.coeffs, self.N, np.asarray(x, dtype=float)))

    def cell_average(self, h):
        val, _ = integrate.quad(lambda u: float(self.values(np.array([u]))[0]), 0.0, h / 2)
        return 2.0 * val / h


def riesz_kernel(d: int, beta: float, x):
    """Riesz kernel ``R_beta(x)``; see :class:`RieszKernel`."""
    if d == 1:
        xx = wrap_torus(x)
        if np.any(xx == 0):
            raise SingularityError("Riesz kernel is singular at x = 0")
        val = np.abs(2.0 * np.sin(xx / 2.0)) ** (-beta)
        return float(val) if np.ndim(val) == 0 else val
    if d == 2:
        s2 = surface_constants(2).s
        return np.exp(beta * np.asarray(jacobi_G(x, 2)) / s2)
    raise DomainError(f"d must be 1 or 2, got {d}")


def riesz_constant(d: int, beta: float) -> float:
    r"""Leading constant :math:`\gamma_\beta = 2^\beta\pi^{2\beta-d/2}\Gamma(\frac{d-\beta}{2})/\Gamma(\frac\beta2)`."""
    return 2.0**beta * math.pi ** (2 * beta - d / 2.0) * math.gamma((d - beta) / 2.0) / math.gamma(beta / 2.0)
