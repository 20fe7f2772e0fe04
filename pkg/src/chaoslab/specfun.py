r"""Special functions: :math:`I_0`, Jacobi theta functions and the Jacobi function G.

All torus points use period :math:`2\pi` per coordinate and are reduced to
:math:`[-\pi, \pi)^d` before evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, SingularityError

I0_MAX_ARGUMENT = 700.0

# Truncation targets for the theta series.
_THETA_TAIL_EXP = 38.0  # exp(-38) ~ 3e-17
_B_UPPER = 40.0  # theta_0(u, x) <= 4 * (2d) e^{-u} < 1e-16 beyond this


@dataclass(frozen=True)
class SurfaceConstants:
    """Half area ``tau`` and full area ``s`` of the unit sphere in R^d."""

    d: int
    tau: float
    s: float


def surface_constants(d: int) -> SurfaceConstants:
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    tau = math.pi ** (d / 2) / math.gamma(d / 2)
    return SurfaceConstants(d=d, tau=tau, s=2.0 * tau)


def wrap_torus(x):
    """Reduce coordinates modulo 2*pi into [-pi, pi)."""
    x = np.asarray(x, dtype=float)
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def _check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def bessel_i0(x):
    r"""Modified Bessel function :math:`I_0(x) = \frac{1}{2\pi}\int_0^{2\pi} e^{x\cos u}\,du`.

    Raises
    ------
    DomainError
        If ``|x|`` exceeds 700, where the unscaled value overflows double precision.
    """
    arr = _check_finite(x)
    if np.any(np.abs(arr) > I0_MAX_ARGUMENT):
        raise DomainError(
            f"bessel_i0 argument exceeds the overflow bound |x| <= {I0_MAX_ARGUMENT:g}; use log_i0"
        )
    return _scalar_or_array(special.i0(arr), x)


def log_i0(x):
    """``log I_0(x)`` without overflow, via the exponentially scaled Bessel function."""
    arr = np.abs(_check_finite(x))
    return _scalar_or_array(np.log(special.i0e(arr)) + arr, x)


def i0_log_derivative(x):
    """``I_0'(x) / I_0(x) = I_1(x) / I_0(x)``; odd, with values in (-1, 1)."""
    arr = _check_finite(x)
    return _scalar_or_array(special.i1e(arr) / special.i0e(arr), x)


def _as_points(x, d: int) -> np.ndarray:
    """Return points as an array of shape (n, d)."""
    if d not in (1, 2):
        raise DomainError(f"only d in {{1, 2}} is supported, got d={d}")
    arr = np.asarray(x, dtype=float)
    if d == 1:
        return arr.reshape(-1, 1)
    if arr.shape[-1] != 2:
        raise DomainError("points on T^2 need a trailing axis of length 2")
    return arr.reshape(-1, 2)


def _lattice(K: int, d: int) -> np.ndarray:
    r = np.arange(-K, K + 1)
    if d == 1:
        return r.reshape(-1, 1)
    g1, g2 = np.meshgrid(r, r, indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], axis=1)


def theta0_direct(u: float, x, d: int = 1):
    r"""``theta(u, x) - 1`` from the lattice series :math:`\sum_{n\neq0} e^{-|n|^2u}e^{in\cdot x}`."""
    if u <= 0:
        raise DomainError(f"theta requires u > 0, got {u}")
    pts = wrap_torus(_as_points(x, d))
    K = int(math.ceil(math.sqrt(_THETA_TAIL_EXP / u))) + 1
    n = _lattice(K, d)
    n = n[np.any(n != 0, axis=1)]
    w = np.exp(-u * np.sum(n * n, axis=1))
    vals = np.cos(pts @ n.T) @ w
    return _reshape_like(vals, x, d)


def theta0_dual(u: float, x, d: int = 1):
    r"""``theta(u, x) - 1`` from the Poisson-dual Gaussian sum over images :math:`x - 2\pi k`."""
    if u <= 0:
        raise DomainError(f"theta requires u > 0, got {u}")
    pts = wrap_torus(_as_points(x, d))
    K = int(math.ceil(math.sqrt(4.0 * u * _THETA_TAIL_EXP) / (2.0 * math.pi))) + 1
    k = _lattice(K, d) * (2.0 * math.pi)
    diff = pts[:, None, :] - k[None, :, :]
    r2 = np.sum(diff * diff, axis=2)
    vals = (math.pi / u) ** (d / 2) * np.exp(-r2 / (4.0 * u)).sum(axis=1) - 1.0
    return _reshape_like(vals, x, d)


def _reshape_like(vals, x, d):
    arr = np.asarray(x, dtype=float)
    shape = arr.shape if d == 1 else arr.shape[:-1]
    if shape == ():
        return float(vals[0])
    return vals.reshape(shape)


def jacobi_theta0(u: float, x, d: int = 1):
    """``theta(u, x) - 1``: direct series for ``u >= 1``, Poisson-dual form for ``u < 1``."""
    if not u > 0:
        raise DomainError(f"theta requires u > 0, got {u}")
    if u >= 1.0:
        return theta0_direct(u, x, d)
    return theta0_dual(u, x, d)


def _jacobi_G_point(p: np.ndarray, d: int) -> float:
    p = wrap_torus(p)
    r = float(np.sqrt(np.sum(p * p)))
    if r == 0.0:
        raise SingularityError("the Jacobi function G is singular at x = 0")

    # A-part: int_0^1 theta0_dual(u) u^{d/2-1} du.  The "-1" integrates to -2/d;
    # the Gaussian images contribute pi^{d/2} int_0^1 sum_k e^{-a_k/u} du/u,
    # integrated in v = log u where the integrand is smooth and bounded.
    k = _lattice(2, d) * (2.0 * math.pi)
    a = np.sum((p[None, :] - k) ** 2, axis=1) / 4.0
    a_min = float(a.min())

    def gauss_images(v):
        return math.pi ** (d / 2) * float(np.exp(-a * math.exp(-v)).sum())

    v_lo = math.log(a_min) - math.log(750.0)
    breaks = [b for b in (math.log(a_min),) if v_lo < b < 0.0]
    A, _ = integrate.quad(gauss_images, v_lo, 0.0, points=breaks or None,
                          epsabs=1e-11, epsrel=1e-12, limit=200)
    A -= 2.0 / d

    def direct(u):
        return float(np.ravel(theta0_direct(u, p, d))[0]) * u ** (d / 2 - 1.0)

    B, _ = integrate.quad(direct, 1.0, _B_UPPER, epsabs=1e-11, epsrel=1e-12, limit=200)
    return (A + B) / math.gamma(d / 2)


def jacobi_G_quadrature(x, d: int = 1):
    """Jacobi function by numerical quadrature of the Mellin split (slow reference path)."""
    pts = _as_points(x, d)
    vals = np.array([_jacobi_G_point(p, d) for p in pts])
    return _reshape_like(vals, x, d)


_IMAGE_RANGE = 3  # Gaussian images |k|_inf <= 3: next image exponent >= (5 pi)^2 / 4
_DIRECT_RANGE = 6  # e^{-|n|^2} < 3e-16 beyond |n| = 6


def jacobi_G(x, d: int = 1):
    r"""Jacobi function :math:`G(x) = \sum_{k\in\mathbb{Z}^d\setminus 0} |k|^{-d} e^{ik\cdot x}`.

    Splitting the Mellin representation
    :math:`\Gamma(d/2) G = \int_0^\infty (\theta(u, x) - 1) u^{d/2-1} du` at ``u = 1``
    and using the Poisson-dual theta form below 1, both halves integrate in
    closed form:

    .. math:: \Gamma(d/2) G(x) = \pi^{d/2}\sum_k E_1\big(|x - 2\pi k|^2/4\big) - \frac{2}{d}
              + \sum_{n\ne0}\frac{\Gamma(d/2, |n|^2)}{|n|^d}\cos(n\cdot x).

    Parameters
    ----------
    x : float or array_like
        Torus point(s). For ``d == 2`` the trailing axis holds the two coordinates.
    d : {1, 2}

    Raises
    ------
    SingularityError
        If any point reduces to the origin of the torus.
    """
    pts = wrap_torus(_as_points(x, d))
    if np.any(np.all(pts == 0.0, axis=1)):
        raise SingularityError("the Jacobi function G is singular at x = 0")
    half = d / 2.0
    k = _lattice(_IMAGE_RANGE, d) * (2.0 * math.pi)
    n = _lattice(_DIRECT_RANGE, d)
    n = n[np.any(n != 0, axis=1)]
    n2 = np.sum(n * n, axis=1).astype(float)
    coef = special.gammaincc(half, n2) * math.gamma(half) / n2**half
    out = np.empty(len(pts))
    for s in range(0, len(pts), 4096):
        p = pts[s:s + 4096]
        a = np.sum((p[:, None, :] - k[None, :, :]) ** 2, axis=2) / 4.0
        A = math.pi**half * special.exp1(a).sum(axis=1) - 2.0 / d
        B = np.cos(p @ n.T) @ coef
        out[s:s + 4096] = (A + B) / math.gamma(half)
    return _reshape_like(out, x, d)


def jacobi_G_partial(x, m: float, d: int = 2):
    r"""Spherical partial sum :math:`S_m(G)(x) = \sum_{0<|k|\le m} |k|^{-d} e^{ik\cdot x}`."""
    pts = wrap_torus(_as_points(x, d))
    K = int(math.floor(m))
    n = _lattice(K, d)
    norm2 = np.sum(n * n, axis=1)
    keep = (norm2 > 0) & (norm2 <= m * m)
    n, norm2 = n[keep], norm2[keep]
    w = norm2 ** (-d / 2.0)
    out = np.empty(len(pts))
    for start in range(0, len(pts), 256):
        chunk = pts[start:start + 256]
        out[start:start + 256] = np.cos(chunk @ n.T) @ w
    return _reshape_like(out, x, d)
