"""Counter-based random phases.

Each phase is a pure function of ``(seed, index)`` computed with the SplitMix64
output function, so any subset of frequencies can be generated in any order,
in any chunking and on any thread with bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_LATTICE_OFFSET = 1 << 31


def mix64(z):
    """SplitMix64 finalizer applied elementwise to uint64 data."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(master: int, stream: int) -> int:
    """Stable 64-bit seed for replica/sample ``stream`` of a ``master`` seed."""
    a = mix64(np.array([(master * 0x9E3779B97F4A7C15 + 0x632BE59BD9B4E019) & _MASK], dtype=np.uint64))
    b = mix64(a ^ np.uint64((stream * 0xD1B54A32D192ED03 + 1) & _MASK))
    return int(b[0])


def uniform_from_counter(key: int, counters) -> np.ndarray:
    """Uniform [0, 1) doubles for the given counters under ``key``."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & _MASK) + (c + np.uint64(1)) * _GOLDEN
    return (mix64(z) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def lattice_counter(k) -> np.ndarray:
    """Injective counter for lattice points in Z^2 after identifying k with -k."""
    k = canonical_half(np.asarray(k, dtype=np.int64))
    hi = (k[..., 0] + _LATTICE_OFFSET).astype(np.uint64)
    lo = (k[..., 1] + _LATTICE_OFFSET).astype(np.uint64)
    return (hi << np.uint64(32)) | lo


def canonical_half(k: np.ndarray) -> np.ndarray:
    """Representative of {k, -k} in the positive half-lattice (k1 > 0, or k1 == 0 and k2 > 0)."""
    k = np.asarray(k, dtype=np.int64)
    flip = (k[..., 0] < 0) | ((k[..., 0] == 0) & (k[..., 1] < 0))
    return np.where(flip[..., None], -k, k)


@dataclass(frozen=True)
class PhaseStream:
    """Reproducible i.i.d. uniform phases on [0, 2*pi) indexed by frequency.

    For ``dimension == 2`` the index is a lattice point and ``omega(k) == omega(-k)``.
    """

    seed: int
    dimension: int = 1

    @property
    def key(self) -> int:
        return int(mix64(np.array([self.seed & _MASK], dtype=np.uint64))[0])

    def phases(self, index) -> np.ndarray:
        """Phases for frequencies ``index`` (ints for d=1, shape (..., 2) lattice points for d=2)."""
        if self.dimension == 1:
            counters = np.asarray(index, dtype=np.int64)
            if np.any(counters < 1):
                raise ValueError("frequencies start at 1")
            return 2.0 * np.pi * uniform_from_counter(self.key, counters.astype(np.uint64))
        return 2.0 * np.pi * uniform_from_counter(self.key, lattice_counter(index))

    def range(self, n_lo: int, n_hi: int) -> np.ndarray:
        """Phases for the frequency block ``n_lo <= n <= n_hi`` (d=1)."""
        return self.phases(np.arange(n_lo, n_hi + 1, dtype=np.int64))


def phase_matrix(seeds, n) -> np.ndarray:
    """Phases for many streams at once: row ``r`` equals ``PhaseStream(seeds[r]).phases(n)`` (d=1)."""
    keys = mix64(np.asarray([s & _MASK for s in seeds], dtype=np.uint64))
    c = np.asarray(n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = keys[:, None] + (c[None, :] + np.uint64(1)) * _GOLDEN
    return 2.0 * np.pi * ((mix64(z) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53)))
