"""Statistical reports and their JSON/CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np


def to_plain(x: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(x, "describe"):
        return to_plain(x.describe())
    return x


@dataclass
class StatReport:
    """Estimate with standard error and, when available, an exact oracle value.

    ``table`` holds per-row results (one dict per ``N`` or per parameter value);
    ``extras`` carries operation-specific fields such as classification tags.
    """

    estimate: float
    std_error: float = float("nan")
    oracle: float | None = None
    N: Any = None
    seed: int | None = None
    replicas: int | None = None
    passed: bool | None = None
    table: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "oracle": self.oracle,
            "N": self.N,
            "seed": self.seed,
            "replicas": self.replicas,
        }
        if self.passed is not None:
            out["passed"] = self.passed
        if self.extras:
            out["extras"] = self.extras
        if self.table:
            out["table"] = self.table
        return to_plain(out)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def table_csv(self) -> str:
        return rows_to_csv(self.table)


def rows_to_csv(rows: Sequence[dict]) -> str:
    """CSV text for a list of flat dicts; columns follow the first row's key order."""
    if not rows:
        return ""
    cols = list(rows[0].keys())
    for r in rows[1:]:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in cols})
    return buf.getvalue()


def _fmt(v: Any) -> Any:
    v = to_plain(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
