"""Half-lattice bookkeeping on Z^2: cubes C_n^+ and their boundary shells."""

from __future__ import annotations

import numpy as np


def _positive_half(k: np.ndarray) -> np.ndarray:
    return (k[:, 0] > 0) | ((k[:, 0] == 0) & (k[:, 1] > 0))


def half_cube(n: int) -> np.ndarray:
    """Points of C_n^+ = {k in Z^2_+ : |k|_inf <= n}, as an (m, 2) int array."""
    if n < 1:
        return np.zeros((0, 2), dtype=np.int64)
    r = np.arange(-n, n + 1, dtype=np.int64)
    g1, g2 = np.meshgrid(np.arange(0, n + 1, dtype=np.int64), r, indexing="ij")
    k = np.stack([g1.ravel(), g2.ravel()], axis=1)
    return k[_positive_half(k)]


def half_shell(n: int) -> np.ndarray:
    """Boundary shell C_n^+ minus C_{n-1}^+ (points with |k|_inf == n)."""
    k = half_cube(n)
    return k[np.max(np.abs(k), axis=1) == n]


def half_cube_size(n: int) -> int:
    """#C_n^+ = ((2n+1)^2 - 1) / 2."""
    return ((2 * n + 1) ** 2 - 1) // 2


def shell_of(k: np.ndarray) -> np.ndarray:
    """Shell level |k|_inf of lattice points."""
    return np.max(np.abs(np.asarray(k)), axis=-1)


def half_ball(radius: float) -> np.ndarray:
    """Points of Z^2_+ with 0 < |k| <= radius."""
    n = int(np.floor(radius))
    k = half_cube(n)
    return k[np.sum(k * k, axis=1) <= radius * radius]
