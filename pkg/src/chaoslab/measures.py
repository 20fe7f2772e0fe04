"""Finite measures discretized on a uniform torus grid."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class GridMeasure:
    """Non-negative cell weights on ``M`` (d=1) or ``M x M`` (d=2) cells of side ``2*pi/M``.

    Cell ``i`` is ``[i h, (i+1) h)``. ``atoms`` marks cells carrying a point mass,
    which makes energies against singular kernels infinite.
    """

    weights: np.ndarray
    d: int = 1
    provenance: dict = field(default_factory=lambda: {"kind": "explicit"})
    atoms: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != self.d or (self.d == 2 and w.shape[0] != w.shape[1]):
            raise DomainError(f"weights of shape {w.shape} do not describe a d={self.d} grid")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("weights must be finite and non-negative")
        if w.sum() <= 0:
            raise DomainError("total mass must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.atoms is not None:
            a = np.asarray(self.atoms, dtype=bool)
            if a.shape != w.shape:
                raise DomainError("atom mask shape differs from weights")
            object.__setattr__(self, "atoms", a)

    # -- constructors -----------------------------------------------------
    @classmethod
    def lebesgue(cls, M: int, d: int = 1, mass: float = 1.0) -> "GridMeasure":
        """Uniform measure of total mass ``mass``."""
        shape = (M,) * d
        return cls(np.full(shape, mass / M**d), d, {"kind": "lebesgue", "mass": mass})

    @classmethod
    def point_mass(cls, M: int, index=0, d: int = 1, mass: float = 1.0) -> "GridMeasure":
        w = np.zeros((M,) * d)
        w[index] = mass
        return cls(w, d, {"kind": "point_mass", "index": index}, atoms=w > 0)

    @classmethod
    def cantor(cls, ratio: float, depth: int, M: int) -> "GridMeasure":
        """Self-similar Cantor measure: keep two end pieces of relative length ``ratio``.

        Each of the ``2**depth`` intervals of generation ``depth`` carries mass
        ``2**-depth``, spread over the cells it overlaps in proportion to overlap length.
        """
        if not 0 < ratio < 0.5:
            raise DomainError(f"ratio must lie in (0, 1/2), got {ratio}")
        left = np.array([0.0])
        length = float(M)  # in cell units
        for _ in range(depth):
            length *= ratio
            left = np.concatenate([left, left + length / ratio - length])
        w = np.zeros(M)
        mass = 2.0**-depth
        for a in np.sort(left):
            b = a + length
            i0, i1 = int(math.floor(a)), int(math.ceil(b))
            for i in range(i0, min(i1, M)):
                overlap = min(b, i + 1) - max(a, i)
                if overlap > 0:
                    w[i] += mass * overlap / length
        return cls(w, 1, {"kind": "cantor", "ratio": ratio, "depth": depth})

    @classmethod
    def from_realization(cls, realization, base: "GridMeasure | None" = None) -> "GridMeasure":
        """``Q_N sigma``: base cell weights times the realization's grid values."""
        M, d = realization.M, realization.d
        if base is None:
            base = cls.lebesgue(M, d)
        if base.M != M or base.d != d:
            raise DomainError("base measure and realization grids differ")
        w = base.weights * np.exp(realization.logQ)
        return cls(w, d,
                   {"kind": "realization", "N": realization.N, "seed": realization.seed,
                    "base": base.provenance})

    @classmethod
    def explicit(cls, weights, d: int = 1) -> "GridMeasure":
        return cls(np.asarray(weights, dtype=float), d, {"kind": "explicit"})

    @classmethod
    def mixture(cls, parts, coefficients) -> "GridMeasure":
        parts = list(parts)
        w = sum(c * p.weights for c, p in zip(coefficients, parts))
        atoms = None
        for c, p in zip(coefficients, parts):
            if p.atoms is not None and c > 0:
                atoms = p.atoms if atoms is None else (atoms | p.atoms)
        prov = {"kind": "mixture", "parts": [p.provenance for p in parts],
                "coefficients": list(coefficients)}
        return cls(w, parts[0].d, prov, atoms)

    # -- properties -------------------------------------------------------
    @property
    def M(self) -> int:
        return self.weights.shape[0]

    @property
    def h(self) -> float:
        return 2.0 * math.pi / self.M

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def has_atoms(self) -> bool:
        return self.atoms is not None and bool(self.atoms.any())

    def normalized(self) -> "GridMeasure":
        return GridMeasure(self.weights / self.total_mass, self.d, self.provenance, self.atoms)

    def is_probability(self, tol: float = 1e-9) -> bool:
        return abs(self.total_mass - 1.0) <= tol

    def restrict(self, mask) -> "GridMeasure":
        mask = np.asarray(mask, dtype=bool)
        atoms = None if self.atoms is None else self.atoms & mask
        return GridMeasure(np.where(mask, self.weights, 0.0), self.d,
                           {"kind": "restriction", "of": self.provenance}, atoms)

    def refine(self, factor: int) -> "GridMeasure":
        """Split every cell into ``factor`` (per axis) equal sub-cells."""
        w = self.weights
        for ax in range(self.d):
            w = np.repeat(w, factor, axis=ax) / factor
        atoms = None
        if self.atoms is not None:
            atoms = self.atoms
            for ax in range(self.d):
                atoms = np.repeat(atoms, factor, axis=ax)
        return GridMeasure(w, self.d, self.provenance, atoms)

    # -- serialization ----------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        if self.d == 1:
            wr.writerow(["cell", "weight"])
            for i, v in enumerate(self.weights):
                wr.writerow([i, repr(float(v))])
        else:
            wr.writerow(["cell1", "cell2", "weight"])
            for (i, j), v in np.ndenumerate(self.weights):
                wr.writerow([i, j, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridMeasure":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header == ["cell", "weight"]:
            M = max(int(r[0]) for r in body) + 1
            w = np.zeros(M)
            for r in body:
                w[int(r[0])] = float(r[1])
            return cls(w, 1, {"kind": "explicit"})
        if header == ["cell1", "cell2", "weight"]:
            M = max(max(int(r[0]), int(r[1])) for r in body) + 1
            w = np.zeros((M, M))
            for r in body:
                w[int(r[0]), int(r[1])] = float(r[2])
            return cls(w, 2, {"kind": "explicit"})
        raise DomainError(f"unrecognized measure CSV header {header}")
