"""Command-line front end.

Every command writes ``<command>-<seed>.json`` (and ``.csv`` when there is a
table, ``.svg`` for figures) into ``--out``. Exit status is 0 when the
command's check passes, 2 when it fails and 1 on a usage error.

A config file holds ``key = value`` lines (``#`` starts a comment); keys are the
long option names of the command, with dashes or underscores. Options given on
the command line override the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chaos, kernels, potential, series
from .errors import ChaosLabError, ConfigError
from .measures import GridMeasure
from .parallel import set_default_threads
from .reports import StatReport, rows_to_csv, to_plain, write_text
from .svg import line_plot


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(x)) for x in _floats(text)]


# name -> (type, default, help)
SCHEMAS: dict[str, dict[str, tuple]] = {
    "selftest": {},
    "kernel-figure": {"alpha": (float, 1.0, "chaos parameter"),
                      "points": (int, 2000, "plot resolution")},
    "simulate": {"alpha": (float, 1.0, "chaos parameter"), "n": (int, 1000, "truncation N"),
                 "m": (int, 4096, "grid size M"), "d": (int, 1, "torus dimension")},
    "mass-decay": {"alpha": (float, 3.0, "chaos parameter"),
                   "n-list": (_ints, [100, 1000, 10000], "comma-separated N values"),
                   "replicas": (int, 100, "replicas")},
    "energy": {"measure": (str, "random", "lebesgue | cantor | point | random"),
               "kernel": (str, "riesz", "riesz | cosine | constant"),
               "beta": (float, 0.5, "Riesz order"), "m": (int, 1024, "grid size"),
               "count": (int, 20, "random measures")},
    "capacity": {"mask": (str, "full", "full | interval | two-cells | single"),
                 "beta": (float, 0.5, "Riesz order"), "m": (int, 256, "grid size")},
    "dimension": {"alpha": (float, 1.0, "chaos parameter"), "n": (int, 100000, "truncation N"),
                  "m": (int, 1 << 20, "grid size"), "replicas": (int, 1, "replicas"),
                  "tolerance": (float, 0.1, "allowed deviation from the prediction")},
    "lln": {"alpha": (float, 1.0, "chaos parameter"), "n": (int, 100000, "truncation N"),
            "samples": (int, 2000, "Peyriere samples")},
    "lil": {"r": (float, 0.25, "series exponent"), "alpha": (float, 0.0, "chaos parameter"),
            "n": (int, 1000000, "largest N"), "samples": (int, 200, "samples"),
            "n-start": (int, 16, "first N of the running maximum")},
    "free-energy": {"alpha": (float, 1.0, "chaos parameter"), "beta": (float, 0.5, "tilt"),
                    "n-list": (_ints, [1000, 10000, 100000, 1000000], "comma-separated N values")},
    "ld-rate": {"alpha": (float, 0.0, "chaos parameter"), "eta": (float, 0.5, "deviation"),
                "n-list": (_ints, [1000, 10000, 100000], "comma-separated N values"),
                "samples": (int, 4000, "samples per N"),
                "normalizer": (str, "log", "log | power"), "r": (float, 0.25, "power exponent")},
    "spectrum": {"alphas": (_floats, [-1.0, 0.0, 1.0], "comma-separated alpha values"),
                 "n": (int, 10000, "truncation N"), "m": (int, 1 << 17, "grid size"),
                 "samples": (int, 300, "Peyriere samples per alpha"),
                 "replicas": (int, 1, "dimension replicas per alpha")},
    "hellinger": {"alpha": (float, 1.0, "chaos parameter"), "n": (int, 10000, "truncation N"),
                  "other": (str, "negated", "negated | perturbed")},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class ExperimentConfig:
    """A command with its parameters, master seed and output directory."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "."
    threads: int | None = None

    def __post_init__(self):
        if self.command not in SCHEMAS:
            raise ConfigError(f"unknown command {self.command!r}", key="command")
        schema = SCHEMAS[self.command]
        clean = {}
        for k, v in self.params.items():
            key = k.replace("_", "-")
            if key not in schema:
                raise ConfigError(f"unknown key {k!r} for command {self.command}", key=k)
            conv = schema[key][0]
            try:
                clean[key] = conv(v) if isinstance(v, str) else v
            except ValueError as exc:
                raise ConfigError(f"bad value for {k!r}: {v!r}", key=k) from exc
        full = {k: spec[1] for k, spec in schema.items()}
        full.update(clean)
        self.params = full

    def to_text(self) -> str:
        lines = [f"command = {self.command}", f"seed = {self.seed}", f"out = {self.out}"]
        if self.threads is not None:
            lines.append(f"threads = {self.threads}")
        for k in sorted(self.params):
            v = self.params[k]
            if isinstance(v, list):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, command: str | None = None) -> "ExperimentConfig":
        values = parse_config_text(text)
        cmd = values.pop("command", command)
        if cmd is None:
            raise ConfigError("config names no command", key="command")
        seed = int(values.pop("seed", 0))
        out = values.pop("out", ".")
        threads = values.pop("threads", None)
        return cls(cmd, values, seed, out, None if threads is None else int(threads))


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value", key=line)
        k, v = (s.strip() for s in line.split("=", 1))
        values[k.replace("_", "-")] = v
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chaoslab", description="Random multiplicative chaos experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--config", default=None, help="key = value file")
        for opt, (conv, _, helptext) in schema.items():
            sp.add_argument(f"--{opt}", type=conv, default=None, help=helptext)
    return p


def config_from_args(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    base = ExperimentConfig(args.command)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}", key="config") from exc
        base = ExperimentConfig.from_text(text, args.command)
        if base.command != args.command:
            raise ConfigError(f"config is for {base.command!r}, not {args.command!r}", key="command")
    params = dict(base.params)
    for opt in SCHEMAS[args.command]:
        v = getattr(args, opt.replace("-", "_"))
        if v is not None:
            params[opt] = v
    return ExperimentConfig(
        args.command, params,
        seed=args.seed if args.seed is not None else base.seed,
        out=args.out if args.out is not None else base.out,
        threads=args.threads if args.threads is not None else base.threads)


# ---------------------------------------------------------------------------
# commands: each returns (report dict, csv text or None, svg text or None, passed)


def _selftest(cfg):
    c1 = kernels.CoefficientSequence.inverse_sqrt(1.0)
    c0 = kernels.CoefficientSequence.inverse_sqrt(0.0)
    stream = chaos.PhaseStream(cfg.seed)
    lam = GridMeasure.lebesgue(256, mass=2 * math.pi)
    checks = {
        "zero_weight": float(np.max(np.abs(chaos.weight_log(3, np.linspace(0, 6, 50), c0, stream)))) == 0.0,
        "empty_product": bool(np.all(chaos.simulate_realization(c1, 0, 64, cfg.seed).logQ == 0)),
        "pair_correlation_trivial": chaos.pair_correlation_exact(c0, 50, 0.7).value == 1.0,
        "free_energy_beta0": series.free_energy(1.0, 0.0, 1000)[0] == 0.0,
        "legendre_minimum": series.legendre(1.0, 0.5).closed_form == 0.0,
        "constant_kernel_energy": math.isclose(
            potential.energy_direct(lam, kernels.ConstantKernel()).value, 4 * math.pi**2, rel_tol=1e-12),
        "point_mass_infinite": potential.energy_direct(
            GridMeasure.point_mass(64), kernels.RieszKernel(0.5)).infinite,
        "single_cell_capacity": potential.capacity_estimate(
            np.eye(1, 64, 5, dtype=bool)[0], kernels.RieszKernel(0.5)).zero_capacity,
        "hellinger_self": chaos.hellinger_affinity(c1, c1, 100).affinity == 1.0,
        "l2_alpha0": all(abs(r["second_moment"] - 1) < 1e-12 for r in chaos.l2_mass_diagnostic(
            c0, GridMeasure.lebesgue(64), [10, 100]).table),
        "lebesgue_profile_constant": float(np.ptp(potential.potential_profile(
            GridMeasure.lebesgue(128), kernels.RieszKernel(0.5)))) < 1e-9,
        "oracles": bool(series.oracle_self_test(1.0, 2000)),
    }
    rows = [{"check": k, "passed": v} for k, v in checks.items()]
    ok = all(checks.values())
    rep = StatReport(estimate=float(sum(checks.values())), oracle=float(len(checks)),
                     seed=cfg.seed, passed=ok, table=rows)
    return rep.as_dict(), rep.table_csv(), None, ok


def _kernel_figure(cfg):
    a, npts = cfg.params["alpha"], cfg.params["points"]
    odd, even = kernels.kernel_split_even_odd(a)
    t = np.linspace(0, 2 * math.pi, npts + 2)[1:-1]
    with np.errstate(divide="ignore"):
        y1 = np.exp(odd.correlation(t))
        y2 = np.exp(even.correlation(t))
    cap = float(np.exp(a * a / 4.0 * math.log(20.0)))
    svg = line_plot([("e^H1 (odd frequencies)", t, y1), ("e^H2 (even frequencies)", t, y2)],
                    title=f"Split kernels, alpha = {a:g}", xlabel="t", ylabel="kernel",
                    metadata={"alpha": a, "points": npts}, ylim=(0.0, cap))
    rows = [{"t": float(ti), "odd": float(u), "even": float(v)} for ti, u, v in zip(t, y1, y2)]
    # singular points inside (0, 2 pi): peaks far above the bulk
    sing_odd = int(np.sum(y1 > cap))
    sing_even = int(np.sum((y2 > cap) & (np.abs(t - math.pi) < 0.1)))
    ok = sing_even > 0 and not np.any((y1 > cap) & (np.abs(t - math.pi) < 0.1))
    rep = {"alpha": a, "points": npts, "odd_singularities": ["0"],
           "even_singularities": ["0", "pi"], "odd_points_above_cap": sing_odd,
           "even_points_above_cap_near_pi": sing_even, "cap": cap, "passed": ok}
    return rep, rows_to_csv(rows), svg, ok


def _simulate(cfg):
    p = cfg.params
    coeffs = kernels.CoefficientSequence.inverse_sqrt(p["alpha"], p["d"])
    real = chaos.simulate_realization(coeffs, p["n"], p["m"], cfg.seed)
    rep = {"alpha": p["alpha"], "N": p["n"], "M": p["m"], "d": p["d"], "seed": cfg.seed,
           "total_mass": real.total_mass, "max_logQ": float(real.logQ.max()),
           "min_logQ": float(real.logQ.min())}
    return rep, real.to_csv(), None, True


def _mass_decay(cfg):
    p = cfg.params
    rep = chaos.total_mass_decay(p["alpha"], p["n-list"], p["replicas"], seed=cfg.seed)
    meds = [r["median"] for r in rep.table]
    if p["alpha"] ** 2 / 4 > 1:
        ok = meds[-1] < 0.1 * meds[0]
    elif p["alpha"] == 0:
        ok = all(abs(m - 1) < 1e-12 for m in meds)
    else:
        ok = all(0.3 <= m <= 3 for m in meds)
    rep.passed = ok
    return rep.as_dict(), rep.table_csv(), None, ok


def _energy(cfg):
    p = cfg.params
    M = p["m"]
    kern = {"riesz": lambda: kernels.RieszKernel(p["beta"]),
            "cosine": lambda: kernels.CosineKernel(1.5),
            "constant": lambda: kernels.ConstantKernel()}.get(p["kernel"])
    if kern is None:
        raise ConfigError(f"unknown kernel {p['kernel']!r}", key="kernel")
    kern = kern()
    rng = np.random.default_rng(cfg.seed)
    if p["measure"] == "random":
        measures = [GridMeasure.explicit(rng.random(M) * (rng.random(M) < 0.5) + 1e-3 * (np.arange(M) == 0))
                    for _ in range(p["count"])]
    elif p["measure"] == "lebesgue":
        measures = [GridMeasure.lebesgue(M, mass=2 * math.pi)]
    elif p["measure"] == "cantor":
        measures = [GridMeasure.cantor(1 / 3, int(math.log(M, 3)) - 1, M)]
    elif p["measure"] == "point":
        measures = [GridMeasure.point_mass(M)]
    else:
        raise ConfigError(f"unknown measure {p['measure']!r}", key="measure")
    rows = []
    for i, s in enumerate(measures):
        d = potential.energy_direct(s, kern)
        f = potential.energy_fourier(s, kern)
        rel = 0.0 if d.infinite and f.infinite else abs(d.value - f.value) / abs(d.value)
        rows.append({"measure": i, "direct": d.value, "fourier": f.value, "relative_difference": rel})
    worst = max(r["relative_difference"] for r in rows)
    ok = worst <= 1e-8
    rep = StatReport(estimate=worst, oracle=0.0, seed=cfg.seed, replicas=len(rows), passed=ok,
                     table=rows, extras={"kernel": kern.describe(), "M": M})
    return rep.as_dict(), rep.table_csv(), None, ok


def _capacity(cfg):
    p = cfg.params
    M = p["m"]
    mask = np.zeros(M, dtype=bool)
    kind = p["mask"]
    if kind == "full":
        mask[:] = True
    elif kind == "interval":
        mask[: M // 4] = True
    elif kind == "two-cells":
        mask[[0, M // 2]] = True
    elif kind == "single":
        mask[0] = True
    else:
        raise ConfigError(f"unknown mask {kind!r}", key="mask")
    kern = kernels.RieszKernel(p["beta"])
    res = potential.capacity_estimate(mask, kern)
    rep = {"capacity": res.capacity, "energy": res.energy, "gap": res.gap,
           "iterations": res.iterations, "converged": res.converged,
           "zero_capacity": res.zero_capacity, "mask": kind, "M": M, "beta": p["beta"]}
    ok = res.converged
    if kind == "full":
        uniform = potential.energy_direct(GridMeasure.lebesgue(M), kern).value
        rep["uniform_energy"] = uniform
        rep["max_weight_deviation"] = float(np.max(np.abs(res.weights - 1.0 / M)))
        ok = ok and abs(res.energy - uniform) <= 1e-6 * uniform
    rows = [{"cell": i, "weight": float(w)} for i, w in enumerate(res.weights) if mask[i]]
    rep["passed"] = ok
    return rep, rows_to_csv(rows), None, ok


def _dimension(cfg):
    p = cfg.params
    rep = potential.dimension_formula_check(p["alpha"], GridMeasure.lebesgue(p["m"]), 1.0, p["n"],
                                            p["replicas"], seed=cfg.seed)
    rep.passed = abs(rep.estimate - rep.oracle) <= p["tolerance"]
    return rep.as_dict(), rep.table_csv(), None, rep.passed


def _lln(cfg):
    p = cfg.params
    rep = series.lln_statistic(p["alpha"], p["n"], p["samples"], seed=cfg.seed)
    return rep.as_dict(), None, None, bool(rep.passed)


def _lil(cfg):
    p = cfg.params
    rep = series.lil_scaling(p["r"], p["alpha"], p["n"], p["samples"], seed=cfg.seed,
                             n_start=p["n-start"])
    trace = series.lil_half_trace(p["n"], min(p["samples"], 50), seed=cfg.seed)
    d = rep.as_dict()
    d["extras"]["half_exponent_trace"] = trace
    d["extras"]["half_exponent_note"] = "trace only, no pass/fail"
    return d, rep.table_csv(), None, bool(rep.passed)


def _free_energy(cfg):
    p = cfg.params
    rows = []
    for N in p["n-list"]:
        exact, closed = series.free_energy(p["alpha"], p["beta"], N)
        rows.append({"N": N, "exact": exact, "closed_form": closed, "gap": abs(exact - closed)})
    gaps = [r["gap"] for r in rows]
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 0.05
    rep = StatReport(estimate=rows[-1]["exact"], std_error=0.0, oracle=rows[-1]["closed_form"],
                     N=list(p["n-list"]), seed=cfg.seed, passed=ok, table=rows,
                     extras={"alpha": p["alpha"], "beta": p["beta"]})
    return rep.as_dict(), rep.table_csv(), None, ok


def _ld_rate(cfg):
    p = cfg.params
    rep = series.ld_rate_estimate(p["alpha"], p["eta"], p["n-list"], p["samples"], seed=cfg.seed,
                                  normalizer=p["normalizer"], r=p["r"])
    ok = bool(rep.passed) and abs(rep.estimate - rep.oracle) <= 0.1
    rep.passed = ok
    return rep.as_dict(), rep.table_csv(), None, ok


def _spectrum(cfg):
    p = cfg.params
    rep = series.multifractal_scan(p["alphas"], p["n"], p["m"], samples=p["samples"],
                                   replicas=p["replicas"], seed=cfg.seed)
    ok = all(abs(r["level"] - r["level_predicted"]) <= 0.1
             and abs(r["dimension"] - r["dimension_predicted"]) <= 0.1 for r in rep.table)
    rep.passed = ok
    return rep.as_dict(), rep.table_csv(), None, ok


def _hellinger(cfg):
    p = cfg.params
    a = p["alpha"]
    c = kernels.CoefficientSequence.inverse_sqrt(a)
    if p["other"] == "negated":
        other = kernels.CoefficientSequence.inverse_sqrt(-a)
        expected = "mutually-singular"
    elif p["other"] == "perturbed":
        other = kernels.CoefficientSequence.from_function(lambda n: a / np.sqrt(n) + 1.0 / n, "perturbed")
        expected = "mutually-continuous"
    else:
        raise ConfigError(f"unknown comparison {p['other']!r}", key="other")
    res = chaos.hellinger_affinity(c, other, p["n"])
    ok = res.classification == expected
    if expected == "mutually-singular":
        ok = ok and res.affinity < 0.1
    rep = {"alpha": a, "N": p["n"], "other": p["other"], "affinity": res.affinity,
           "classification": res.classification, "expected": expected, "passed": ok}
    return rep, None, None, ok


COMMANDS = {
    "selftest": _selftest, "kernel-figure": _kernel_figure, "simulate": _simulate,
    "mass-decay": _mass_decay, "energy": _energy, "capacity": _capacity,
    "dimension": _dimension, "lln": _lln, "lil": _lil, "free-energy": _free_energy,
    "ld-rate": _ld_rate, "spectrum": _spectrum, "hellinger": _hellinger,
}


def run(cfg: ExperimentConfig) -> tuple[int, list[Path]]:
    """Execute ``cfg``; returns the exit status and the files written."""
    set_default_threads(cfg.threads)
    report, table, svg, passed = COMMANDS[cfg.command](cfg)
    out = Path(cfg.out)
    stem = f"{cfg.command}-{cfg.seed}"
    payload = {"command": cfg.command, "seed": cfg.seed, "params": cfg.params,
               "report": report, "passed": bool(passed)}
    files = [write_text(out / f"{stem}.json", json.dumps(to_plain(payload), indent=2, sort_keys=True) + "\n")]
    if table:
        files.append(write_text(out / f"{stem}.csv", table))
    if svg:
        files.append(write_text(out / f"{stem}.svg", svg))
    return (0 if passed else 2), files


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"usage error: {exc} (key: {exc.key})", file=sys.stderr)
        return 1
    try:
        status, files = run(cfg)
    except ConfigError as exc:
        print(f"usage error: {exc} (key: {exc.key})", file=sys.stderr)
        return 1
    except ChaosLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    print("PASS" if status == 0 else "FAIL")
    return status


if __name__ == "__main__":
    sys.exit(main())
