"""Command-line front end: ``tailsum estimate | bounds | table | tune``.

Results go to stdout as CSV or a markdown table; logs (configuration echo,
resolved generator parameter, seed, phase timings) go to stderr.  Exit codes:
0 success, 2 usage, 3 capability, 4 numerical.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from dataclasses import dataclass, field

from .archimedean import Family, GeneratorSpec, tau_to_param
from .bounds import bounds_tail
from .errors import CapabilityError, DomainError, NumericalError, TailsumError
from .estimators import (
    Estimator,
    Mode,
    TailProblem,
    default_workers,
    run_replications,
    tune_parameter,
)
from .marginals import format_marginals, parse_marginals

log = logging.getLogger("tailsum")

EXIT_OK, EXIT_USAGE, EXIT_CAPABILITY, EXIT_NUMERICAL = 0, 2, 3, 4
NR_ALL = [Estimator.NR1, Estimator.NR2, Estimator.NR3, Estimator.NR4]


class UsageError(TailsumError):
    pass


# -- configuration -------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    family: str = "clayton"
    mode: str = "copula"
    tau: float | None = None
    param: float | None = None
    marginals: str = "pareto:2.5,2.5"
    s: list[float] = field(default_factory=lambda: [1.0])
    estimators: list[str] = field(default_factory=lambda: ["nr2"])
    reps: int = 100_000
    seed: int = 0
    lam: str = "tune"
    kappa: str = "tune"
    pilot_reps: int = 2_000
    m: int | None = None
    fmt: str = "csv"
    full_precision: bool = False
    workers: int = 1
    timing: bool = False
    allow_large: bool = False

    def generator(self) -> GeneratorSpec:
        if (self.tau is None) == (self.param is None):
            raise UsageError("exactly one of tau and param must be given")
        fam = Family(self.family)
        p = tau_to_param(fam, self.tau) if self.param is None else self.param
        return GeneratorSpec(fam, p)

    def problem(self, s: float) -> TailProblem:
        return TailProblem(self.generator(), parse_marginals(self.marginals), s, Mode(self.mode))


CONFIG_KEYS = {
    "family": str,
    "mode": str,
    "tau": float,
    "param": float,
    "marginals": str,
    "s": "floats",
    "estimator": "estimators",
    "reps": int,
    "seed": int,
    "lambda": str,
    "kappa": str,
    "pilot_reps": int,
    "m": int,
    "format": str,
    "workers": int,
}
_DEST = {"estimator": "estimators", "lambda": "lam", "format": "fmt"}


def _floats(text: str) -> list[float]:
    out = [float(t) for t in text.replace(",", " ").split()]
    if not out or any(not v > 0 for v in out):
        raise ValueError("thresholds must be a non-empty list of positive numbers")
    return out


def _estimators(text: str) -> list[str]:
    names = [t.strip().lower() for t in text.replace(",", " ").split() if t.strip()]
    out = []
    for name in names:
        if name == "all":
            out += [e.value for e in NR_ALL]
        else:
            out.append(Estimator(name).value)
    if not out:
        raise ValueError("no estimator given")
    return list(dict.fromkeys(out))


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file with ``#`` comments."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = (part.strip() for part in line.partition("="))
            key = key.replace("-", "_")
            if not sep or not key:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            conv = CONFIG_KEYS[key]
            try:
                if conv == "floats":
                    parsed = _floats(val)
                elif conv == "estimators":
                    parsed = _estimators(val)
                else:
                    parsed = conv(val)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
            values[_DEST.get(key, key)] = parsed
    return values


# -- output ----------------------------------------------------------------------------


def _fmt(value, full: bool) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return f"{value:.17g}" if full else f"{value:.5E}"


def render(rows: list[dict], fmt: str, full: bool) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    for r in rows[1:]:
        header += [k for k in r if k not in header]
    cells = [[_fmt(r.get(k), full) for k in header] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(cells)
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(c) + " |" for c in cells]
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------------------


class _Timer:
    def __init__(self, label):
        self.label = label

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0
        log.info("phase %s: %.3f s", self.label, self.seconds)


def _resolve_tuning(cfg: ExperimentConfig, p: TailProblem, est: Estimator):
    key = est.tuning_key
    if key is None:
        return None
    raw = cfg.lam if est is Estimator.NR3 else cfg.kappa
    if str(raw).lower() != "tune":
        return {key: float(raw)}
    pilot_seed = (cfg.seed + 1) % 2**64
    with _Timer(f"tune {est.value} s={p.s:g}"):
        value = tune_parameter(p, est, pilot_reps=cfg.pilot_reps, seed=pilot_seed, workers=cfg.workers)
    log.info("tuned %s = %.6g for s = %g", key, value, p.s)
    return {key: value}


def _estimate_row(cfg: ExperimentConfig, p: TailProblem, row: dict) -> dict:
    for name in cfg.estimators:
        est = Estimator(name)
        params = _resolve_tuning(cfg, p, est)
        with _Timer(f"{est.value} s={p.s:g}") as t:
            rep = run_replications(p, est, params, cfg.reps, cfg.seed, workers=cfg.workers)
        row[f"{est.value}_mean"] = rep.mean
        row[f"{est.value}_cv"] = rep.cv
        row[f"{est.value}_rms_re"] = rep.rms_re
        row[f"{est.value}_se"] = rep.se
        if params:
            row[f"{est.value}_{est.tuning_key}"] = next(iter(params.values()))
        if cfg.timing:
            row[f"{est.value}_seconds"] = t.seconds
    return row


def _bounds_row(cfg: ExperimentConfig, p: TailProblem, row: dict) -> dict:
    with _Timer(f"bounds m={cfg.m} s={p.s:g}") as t:
        b = bounds_tail(p, cfg.m, allow_large=cfg.allow_large)
    row["bounds_lower"], row["bounds_upper"] = b.lower, b.upper
    if cfg.timing:
        row["bounds_seconds"] = t.seconds
    return row


def _echo(cfg: ExperimentConfig):
    gen = cfg.generator()
    log.info("config: %s", cfg)
    log.info("generator: %s with parameter %.17g (tau %.6g)", gen.family.value, gen.param, gen.tau)
    log.info("seed: %d, workers: %d", cfg.seed, cfg.workers)


def cmd_estimate(cfg: ExperimentConfig) -> list[dict]:
    _echo(cfg)
    rows = []
    for s in cfg.s:
        p = cfg.problem(s)
        row = {"s": s}
        if cfg.m is not None:
            _bounds_row(cfg, p, row)
        rows.append(_estimate_row(cfg, p, row))
    return rows


def cmd_bounds(cfg: ExperimentConfig) -> list[dict]:
    _echo(cfg)
    if cfg.m is None:
        raise UsageError("bounds needs --m")
    return [_bounds_row(cfg, cfg.problem(s), {"s": s}) for s in cfg.s]


def cmd_tune(cfg: ExperimentConfig, grid=None) -> list[dict]:
    _echo(cfg)
    rows = []
    for s in cfg.s:
        p = cfg.problem(s)
        for name in cfg.estimators:
            est = Estimator(name)
            if est.tuning_key is None:
                raise UsageError(f"{est.value} has no tuning parameter; use nr3 or nr4")
            value = tune_parameter(
                p, est, grid, pilot_reps=cfg.pilot_reps, seed=cfg.seed, workers=cfg.workers
            )
            rows.append({"s": s, "estimator": est.value, est.tuning_key: value})
    return rows


PRESETS = {
    "table1": dict(family="clayton", mode="copula", tau=3 / 8, marginals="pareto:0.9,1.8",
                   s=[1.0, 1e2, 1e4, 1e6], m=20),
    "table2": dict(family="clayton", mode="copula", tau=1 / 6, marginals="pareto:0.9,1.8,2.6",
                   s=[1.0, 1e2, 1e4, 1e6], m=8),
    "table3": dict(family="clayton", mode="survival", tau=0.5, marginals="pareto:2.5,2.5",
                   s=[1.0, 1e2, 1e3, 1e4], m=20),
    "table4": dict(family="clayton", mode="survival", tau=0.5, marginals="pareto:2.5,2.5,2.5",
                   s=[1.0, 1e2, 1e3, 1e4], m=8),
    "table5": dict(s=[20.0]),
    "table6": dict(s=[200.0]),
}
SCENARIO_TAUS = (0.1, 0.5, 0.9)
SCENARIO_COPULAS = (
    ("Clayton", "clayton", "copula"),
    ("Gumbel", "gumbel", "copula"),
    ("Survival Clayton", "clayton", "survival"),
    ("Survival Gumbel", "gumbel", "survival"),
)


def preset_configs(name: str, base: ExperimentConfig):
    """Configurations making up a preset, each paired with its row label."""
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    spec = PRESETS[name]
    common = dict(
        reps=base.reps, seed=base.seed, lam=base.lam, kappa=base.kappa, pilot_reps=base.pilot_reps,
        fmt=base.fmt, full_precision=base.full_precision, workers=base.workers,
        timing=base.timing, estimators=[e.value for e in NR_ALL],
    )
    if name in ("table5", "table6"):
        out = []
        for tau in SCENARIO_TAUS:
            for label, fam, mode in SCENARIO_COPULAS:
                cfg = ExperimentConfig(family=fam, mode=mode, tau=tau,
                                       marginals="pareto:" + ",".join(["2.5"] * 5),
                                       s=list(spec["s"]), **common)
                out.append(({"tau": tau, "copula": label}, cfg))
        return out
    cfg = ExperimentConfig(**spec, **common)
    if base.m is not None:
        cfg.m = base.m
    return [({}, cfg)]


def cmd_table(name: str, base: ExperimentConfig) -> list[dict]:
    rows = []
    for label, cfg in preset_configs(name, base):
        for row in cmd_estimate(cfg):
            rows.append({**label, **row})
    return rows


# -- argument parsing -----------------------------------------------------------------


def _add_common(sp, problem=True):
    if problem:
        sp.add_argument("--family", choices=[f.value for f in Family])
        sp.add_argument("--mode", choices=[m.value for m in Mode])
        group = sp.add_mutually_exclusive_group()
        group.add_argument("--tau", type=float, help="Kendall's tau, converted to the generator parameter")
        group.add_argument("--param", type=float, help="raw generator parameter (theta or b)")
        sp.add_argument("--marginals", help="pareto:a1,...,an")
        sp.add_argument("--s", nargs="+", help="thresholds (space or comma separated)")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--lambda", dest="lam", help="NR3 cut in (0, 1/n) or 'tune'")
    sp.add_argument("--kappa", help="NR4 cut in (1/n, 1) or 'tune'")
    sp.add_argument("--pilot-reps", dest="pilot_reps", type=int)
    sp.add_argument("--m", type=int, help="bounds precision")
    sp.add_argument("--allow-large", dest="allow_large", action="store_true", default=None)
    sp.add_argument("--format", dest="fmt", choices=["csv", "markdown"])
    sp.add_argument("--full-precision", dest="full_precision", action="store_true", default=None)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--timing", action="store_true", default=None, help="add wall-clock columns")
    sp.add_argument("--config", help="key = value configuration file; flags override it")
    sp.add_argument("-q", "--quiet", action="store_true")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tailsum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    est = sub.add_parser("estimate", help="run Monte Carlo estimators")
    _add_common(est)
    est.add_argument("--estimator", help="nr1..nr4, plain, or all (comma separated)")
    bnd = sub.add_parser("bounds", help="deterministic bounds (n = 2, 3)")
    _add_common(bnd)
    tab = sub.add_parser("table", help="reproduce a preset table")
    tab.add_argument("preset", help=", ".join(PRESETS))
    _add_common(tab, problem=False)
    tun = sub.add_parser("tune", help="pilot-tune lambda or kappa")
    _add_common(tun)
    tun.add_argument("--estimator", help="nr3 or nr4")
    tun.add_argument("--grid", help="comma separated candidate values")
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig(workers=default_workers())
    if getattr(args, "config", None):
        for key, val in read_config_file(args.config).items():
            setattr(cfg, key, val)
    flags = vars(args)
    if flags.get("tau") is not None or flags.get("param") is not None:
        cfg.tau = cfg.param = None
    for key in ("family", "mode", "tau", "param", "marginals", "reps", "seed", "lam", "kappa",
                "pilot_reps", "m", "fmt", "full_precision", "workers", "timing", "allow_large"):
        if flags.get(key) is not None:
            setattr(cfg, key, flags[key])
    try:
        if flags.get("s") is not None:
            cfg.s = _floats(" ".join(flags["s"]))
        if flags.get("estimator") is not None:
            cfg.estimators = _estimators(flags["estimator"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if cfg.tau is None and cfg.param is None and args.command != "table":
        raise UsageError("one of --tau or --param is required")
    if cfg.reps < 2:
        raise UsageError("--reps must be at least 2")
    if not 0 <= cfg.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if cfg.workers < 1:
        raise UsageError("--workers must be positive")
    return cfg


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.WARNING if args.quiet else logging.INFO,
            format="%(levelname)s %(message)s",
            stream=sys.stderr,
        )
        cfg = config_from_args(args)
        if args.command == "estimate":
            rows = cmd_estimate(cfg)
        elif args.command == "bounds":
            rows = cmd_bounds(cfg)
        elif args.command == "tune":
            grid = None if args.grid is None else [float(g) for g in args.grid.split(",")]
            if args.estimator is None:
                cfg.estimators = ["nr3", "nr4"]
            rows = cmd_tune(cfg, grid)
        else:
            rows = cmd_table(args.preset, cfg)
        out.write(render(rows, cfg.fmt, cfg.full_precision))
        return EXIT_OK
    except CapabilityError as exc:
        print(f"tailsum: capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except NumericalError as exc:
        print(f"tailsum: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, DomainError, ValueError, OSError) as exc:
        print(f"tailsum: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
