"""Command-line frontend: calibrate / exact / simulate / compare / sweep.

Configuration is a JSON document; repeated --set key=value flags override
individual keys (dotted paths).  All commands are deterministic given the
config and seed.  Exit codes: 0 success, 1 usage, 2 calibration failure,
3 evaluation failure, 4 acceptance failure, 5 partial sweep failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .core import GenerationSchedule
from .errors import CalibrationError, EvaluationError
from .links import (
    CalibrationTarget,
    CorrelationMode,
    DelayModel,
    LinkFunction,
    calibrate_kappa,
    calibrate_marginal,
    lag_covariance,
    marginal_moments,
)
from .orthant import QuadratureSpec
from .outputs import (
    DEFAULT_LEVELS,
    PercentileRow,
    TimeAverageEvaluator,
    dominance_check,
    exact_ccdf_grid,
    heatmap,
    percentiles,
    write_ccdf_csv,
    write_heatmap_csv,
    write_meta_json,
    write_percentiles_csv,
    write_timeavg_csv,
)
from .simulate import SimConfig, simulate_aoi_paths, simulate_empirical_ccdf

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CALIBRATION = 2
EXIT_EVALUATION = 3
EXIT_ACCEPTANCE = 4
EXIT_PARTIAL_SWEEP = 5


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class GridRange:
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise UsageError(f"grid step must be positive, got {self.step}")
        if self.stop < self.start:
            raise UsageError("grid stop must be >= start")

    def values(self) -> np.ndarray:
        # Inclusive of stop within half a step.
        n = int(math.floor((self.stop - self.start) / self.step + 0.5)) + 1
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class RunConfig:
    """Flat, JSON-serializable description of one experiment."""

    link_kind: str = "shifted-lognormal"
    x_min: float = 0.5
    mu: float | None = None
    s: float | None = None
    mu_hat: float | None = None
    s_hat: float | None = None
    mode: str = "ou"
    c: float | None = None
    kappa: float | None = None
    tau: float = 2.0
    t_grid: GridRange = field(default_factory=lambda: GridRange(0.5, 10.0, 0.5))
    x_grid: GridRange = field(default_factory=lambda: GridRange(0.0, 10.0, 0.02))
    delta: float = 0.02
    quad_m: int = 400
    quad_l: float = 8.0
    quad_rule: str = "gauss-legendre"
    n_paths: int = 500
    n_saved_paths: int = 500
    seed: int = 1
    threads: int = 1
    out: str = "aoi-out"

    def __post_init__(self):
        has_targets = self.mu is not None and self.s is not None
        has_direct = self.mu_hat is not None and self.s_hat is not None
        if has_targets == has_direct:
            raise UsageError(
                "exactly one of link.{mu,s} (targets) or link.{mu_hat,s_hat} "
                "(direct parameters) must be provided"
            )
        if self.mode == "ou":
            if (self.c is None) == (self.kappa is None):
                raise UsageError(
                    "ou mode requires exactly one of correlation.c or "
                    "correlation.kappa"
                )
        elif self.mode in ("iid", "frozen"):
            if self.kappa is not None:
                raise UsageError(f"{self.mode} mode takes no kappa")
        else:
            raise UsageError(f"unknown correlation mode {self.mode!r}")

    # -- nested-dict round trip ------------------------------------------

    def to_dict(self) -> dict:
        return {
            "link": {
                "kind": self.link_kind,
                "x_min": self.x_min,
                "mu": self.mu,
                "s": self.s,
                "mu_hat": self.mu_hat,
                "s_hat": self.s_hat,
            },
            "correlation": {"mode": self.mode, "c": self.c, "kappa": self.kappa},
            "tau": self.tau,
            "t_grid": asdict(self.t_grid),
            "x_grid": asdict(self.x_grid),
            "delta": self.delta,
            "quadrature": {"m": self.quad_m, "L": self.quad_l, "rule": self.quad_rule},
            "simulation": {
                "n_paths": self.n_paths,
                "n_saved_paths": self.n_saved_paths,
                "seed": self.seed,
            },
            "threads": self.threads,
            "out": self.out,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        link = d.get("link", {})
        corr = d.get("correlation", {})
        quad = d.get("quadrature", {})
        sim = d.get("simulation", {})

        def grid(key: str, default: GridRange) -> GridRange:
            g = d.get(key)
            if g is None:
                return default
            return GridRange(float(g["start"]), float(g["stop"]), float(g["step"]))

        def opt(src: dict, key: str) -> float | None:
            v = src.get(key)
            return None if v is None else float(v)

        return cls(
            link_kind=link.get("kind", "shifted-lognormal"),
            x_min=float(link.get("x_min", 0.5)),
            mu=opt(link, "mu"),
            s=opt(link, "s"),
            mu_hat=opt(link, "mu_hat"),
            s_hat=opt(link, "s_hat"),
            mode=corr.get("mode", "ou"),
            c=opt(corr, "c"),
            kappa=opt(corr, "kappa"),
            tau=float(d.get("tau", 2.0)),
            t_grid=grid("t_grid", GridRange(0.5, 10.0, 0.5)),
            x_grid=grid("x_grid", GridRange(0.0, 10.0, 0.02)),
            delta=float(d.get("delta", 0.02)),
            quad_m=int(quad.get("m", 400)),
            quad_l=float(quad.get("L", 8.0)),
            quad_rule=quad.get("rule", "gauss-legendre"),
            n_paths=int(sim.get("n_paths", 500)),
            n_saved_paths=int(sim.get("n_saved_paths", 500)),
            seed=int(sim.get("seed", 1)),
            threads=int(d.get("threads", 1)),
            out=d.get("out", "aoi-out"),
        )

    # -- model construction ----------------------------------------------

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(m=self.quad_m, L=self.quad_l, rule=self.quad_rule)

    def target(self) -> CalibrationTarget:
        try:
            return CalibrationTarget(
                mu=self.mu, s=self.s, x_min=self.x_min, c=self.c
            )
        except ValueError as exc:
            raise CalibrationError(f"infeasible target: {exc}") from exc

    def link(self) -> LinkFunction:
        if self.mu_hat is not None:
            return LinkFunction(
                kind=self.link_kind,
                x_min=self.x_min,
                mu_hat=self.mu_hat,
                s_hat=self.s_hat,
            )
        mu_hat, s_hat = calibrate_marginal(self.target(), self.link_kind)
        return LinkFunction(
            kind=self.link_kind, x_min=self.x_min, mu_hat=mu_hat, s_hat=s_hat
        )

    def model(self) -> DelayModel:
        link = self.link()
        if self.mode == "ou":
            kappa = self.kappa
            if kappa is None:
                kappa = calibrate_kappa(link, self.c)
            corr = CorrelationMode(kind="ou", kappa=kappa, c=self.c)
        else:
            corr = CorrelationMode(kind=self.mode)
        return DelayModel(link=link, correlation=corr, schedule=GenerationSchedule(self.tau))


def _set_nested(d: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = d
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise UsageError(f"cannot descend into non-object key {p!r}")
    node[parts[-1]] = value


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise UsageError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    if raw == "inf":
        return key, math.inf
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def load_config(args: argparse.Namespace) -> RunConfig:
    doc: dict = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    for item in args.set or []:
        key, value = _parse_override(item)
        _set_nested(doc, key, value)
    if args.out:
        doc["out"] = args.out
    if args.seed is not None:
        _set_nested(doc, "simulation.seed", args.seed)
    if args.threads is not None:
        doc["threads"] = args.threads
    elif "threads" not in doc and os.environ.get("AOI_LAB_THREADS"):
        doc["threads"] = int(os.environ["AOI_LAB_THREADS"])
    return RunConfig.from_dict(doc)


def _meta(cfg: RunConfig, command: str, started: float, extra: dict | None = None) -> dict:
    meta = {
        "command": command,
        "config": cfg.to_dict(),
        "engine_version": __version__,
        "seed": cfg.seed,
        "quadrature": {"m": cfg.quad_m, "L": cfg.quad_l, "rule": cfg.quad_rule},
        "wall_time_s": time.time() - started,
    }
    if extra:
        meta.update(extra)
    return meta


def _corr_label(cfg: RunConfig) -> float:
    if cfg.mode == "iid":
        return 0.0
    if cfg.mode == "frozen":
        return math.inf
    return cfg.c if cfg.c is not None else math.nan


# -- commands --------------------------------------------------------------


def cmd_calibrate(cfg: RunConfig) -> int:
    started = time.time()
    if cfg.mu is None:
        raise CalibrationError("calibrate requires target-based link config (mu, s)")
    mu_hat, s_hat = calibrate_marginal(cfg.target(), cfg.link_kind)
    link = LinkFunction(cfg.link_kind, cfg.x_min, mu_hat, s_hat)
    mean, sd = marginal_moments(link)
    result = {
        "mu_hat": mu_hat,
        "s_hat": s_hat,
        "achieved_mean": mean,
        "achieved_sd": sd,
        "mean_residual": mean - cfg.mu,
        "sd_residual": sd - cfg.s,
    }
    if cfg.mode == "ou" and cfg.c is not None:
        kappa = calibrate_kappa(link, cfg.c)
        ratio = lag_covariance(link, math.exp(-kappa * cfg.c)) / lag_covariance(link, 1.0)
        result["kappa"] = kappa
        result["cov_ratio"] = ratio
        result["cov_ratio_residual"] = ratio - math.exp(-1.0)
    print(json.dumps(result, indent=2))
    os.makedirs(cfg.out, exist_ok=True)
    write_meta_json(result, os.path.join(cfg.out, "calibration.json"))
    write_meta_json(_meta(cfg, "calibrate", started), os.path.join(cfg.out, "meta.json"))
    return EXIT_OK


def cmd_exact(cfg: RunConfig) -> int:
    started = time.time()
    model = cfg.model()
    spec = cfg.quadrature()
    t_values = cfg.t_grid.values()
    x_values = cfg.x_grid.values()
    grid = exact_ccdf_grid(model, t_values, x_values, spec, threads=cfg.threads)
    hm = heatmap(grid, cfg.delta)
    ev = TimeAverageEvaluator(model, spec)
    avg = np.array([ev.value(float(x)) for x in x_values])
    pct = percentiles(model, DEFAULT_LEVELS, spec, evaluator=ev)
    row = PercentileRow(
        link=cfg.link_kind,
        c=_corr_label(cfg),
        tau=cfg.tau,
        s=cfg.s if cfg.s is not None else marginal_moments(model.link)[1],
        levels=DEFAULT_LEVELS,
        values=tuple(pct),
    )
    out = cfg.out
    write_ccdf_csv(grid, os.path.join(out, "ccdf.csv"))
    write_heatmap_csv(hm, os.path.join(out, "heatmap.csv"))
    write_timeavg_csv(x_values, avg, os.path.join(out, "timeavg.csv"))
    write_percentiles_csv([row], os.path.join(out, "percentiles.csv"))
    write_meta_json(_meta(cfg, "exact", started), os.path.join(out, "meta.json"))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    started = time.time()
    model = cfg.model()
    sim = SimConfig(
        model=model,
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        t_grid=cfg.t_grid.values(),
        x_grid=cfg.x_grid.values(),
    )
    emp = simulate_empirical_ccdf(sim)
    out = cfg.out
    write_ccdf_csv(emp.grid, os.path.join(out, "empirical_ccdf.csv"), stderr=emp.stderr)
    n_save = min(cfg.n_saved_paths, cfg.n_paths)
    saved = SimConfig(
        model=model, n_paths=n_save, seed=cfg.seed, t_grid=sim.t_grid, x_grid=sim.x_grid
    )
    ages = simulate_aoi_paths(saved)
    lines = ["path,t,age"]
    for p in range(n_save):
        for j, t in enumerate(saved.t_grid):
            age = ages[p, j]
            lines.append(f"{p},{t:.12g},{'inf' if math.isinf(age) else f'{age:.12g}'}")
    from .outputs import _atomic_write

    os.makedirs(out, exist_ok=True)
    _atomic_write(os.path.join(out, "paths.csv"), "\n".join(lines) + "\n")
    write_meta_json(_meta(cfg, "simulate", started), os.path.join(out, "meta.json"))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    started = time.time()
    model = cfg.model()
    spec = cfg.quadrature()
    t_values = cfg.t_grid.values()
    x_values = cfg.x_grid.values()
    grid = exact_ccdf_grid(model, t_values, x_values, spec, threads=cfg.threads)
    emp = simulate_empirical_ccdf(
        SimConfig(
            model=model,
            n_paths=cfg.n_paths,
            seed=cfg.seed,
            t_grid=t_values,
            x_grid=x_values,
        )
    )
    diff = np.abs(grid.p - emp.grid.p)
    se = np.sqrt(grid.p * (1.0 - grid.p) / cfg.n_paths)
    z = np.where(diff <= 1e-9, 0.0, diff / np.maximum(se, 1e-300))
    frac_ok = float(np.mean(z <= 3.0))

    # Dominance ladder: correlation increases left to right.
    ladder: list[tuple[str, DelayModel]] = [
        ("iid", DelayModel(model.link, CorrelationMode("iid"), model.schedule))
    ]
    if model.correlation.kind == "ou":
        k = model.correlation.kappa
        for label, kappa in [("2kappa", 2 * k), ("kappa", k), ("kappa/2", k / 2)]:
            ladder.append(
                (
                    label,
                    DelayModel(
                        model.link, CorrelationMode("ou", kappa=kappa), model.schedule
                    ),
                )
            )
    ladder.append(
        ("frozen", DelayModel(model.link, CorrelationMode("frozen"), model.schedule))
    )
    grids = [
        (label, exact_ccdf_grid(m, t_values, x_values, spec, threads=cfg.threads))
        for label, m in ladder
    ]
    dominance = []
    all_dominant = True
    for (lo_label, lo), (hi_label, hi) in zip(grids, grids[1:]):
        rep = dominance_check(lo, hi, tol=1e-6)
        all_dominant &= rep.passed
        dominance.append(
            {
                "low": lo_label,
                "high": hi_label,
                "passed": rep.passed,
                "max_violation": rep.max_violation,
            }
        )
    passed = frac_ok >= 0.99 and all_dominant
    report = {
        "z_fraction_within_3": frac_ok,
        "max_z": float(z.max()),
        "dominance": dominance,
        "passed": passed,
    }
    print(json.dumps(report, indent=2))
    os.makedirs(cfg.out, exist_ok=True)
    write_meta_json(report, os.path.join(cfg.out, "compare_report.json"))
    write_meta_json(_meta(cfg, "compare", started), os.path.join(cfg.out, "meta.json"))
    return EXIT_OK if passed else EXIT_ACCEPTANCE


_SWEEPABLE = ("c", "tau", "s", "link")


def cmd_sweep(cfg: RunConfig, params: dict[str, list]) -> int:
    started = time.time()
    for name in params:
        if name not in _SWEEPABLE:
            raise UsageError(f"cannot sweep {name!r}; choose from {_SWEEPABLE}")
    if cfg.mu is None:
        raise CalibrationError("sweep requires target-based link config (mu, s)")
    names = list(params)
    grids = [params[n] for n in names]
    combos = [[]]
    for values in grids:
        combos = [c + [v] for c in combos for v in values]
    rows, failures = [], []
    spec = cfg.quadrature()
    for combo in combos:
        setting = dict(zip(names, combo))
        c = setting.get("c", _corr_label(cfg))
        tau = float(setting.get("tau", cfg.tau))
        s = float(setting.get("s", cfg.s))
        kind = setting.get("link", cfg.link_kind)
        try:
            target = CalibrationTarget(mu=cfg.mu, s=s, x_min=cfg.x_min)
            mu_hat, s_hat = calibrate_marginal(target, kind)
            link = LinkFunction(kind, cfg.x_min, mu_hat, s_hat)
            if c == 0:
                corr = CorrelationMode("iid")
            elif math.isinf(c):
                corr = CorrelationMode("frozen")
            else:
                corr = CorrelationMode("ou", kappa=calibrate_kappa(link, float(c)), c=float(c))
            model = DelayModel(link, corr, GenerationSchedule(tau))
            pct = percentiles(model, DEFAULT_LEVELS, spec)
            rows.append(
                PercentileRow(
                    link=kind,
                    c=float(c),
                    tau=tau,
                    s=s,
                    levels=DEFAULT_LEVELS,
                    values=tuple(pct),
                )
            )
        except Exception as exc:  # keep sweeping, report at the end
            failures.append({"setting": setting, "error": str(exc)})
            print(f"sweep row failed: {setting}: {exc}", file=sys.stderr)
    os.makedirs(cfg.out, exist_ok=True)
    write_percentiles_csv(rows, os.path.join(cfg.out, "percentiles.csv"))
    write_meta_json(
        _meta(cfg, "sweep", started, {"failures": failures, "n_rows": len(rows)}),
        os.path.join(cfg.out, "meta.json"),
    )
    return EXIT_PARTIAL_SWEEP if failures else EXIT_OK


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="aoi-lab",
        description="Transient age-of-information distributions for "
        "Gaussian-process delay models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("calibrate", "solve for link parameters and OU rate from targets"),
        ("exact", "exact CCDF grid, heatmap, time average, percentiles"),
        ("simulate", "Monte-Carlo sample paths and empirical CCDF"),
        ("compare", "exact-vs-simulation z-scores and dominance ladder"),
        ("sweep", "percentile rows over a parameter cross-product"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="simulation seed")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config key (dotted path), repeatable",
        )
        if name == "sweep":
            p.add_argument(
                "--param",
                action="append",
                metavar="NAME=V1,V2,...",
                required=True,
                help="parameter values to sweep (c, tau, s, link); repeatable",
            )
    return parser


def _parse_sweep_values(text: str) -> tuple[str, list]:
    if "=" not in text:
        raise UsageError(f"--param expects NAME=V1,V2,..., got {text!r}")
    name, raw = text.split("=", 1)
    values = []
    for item in raw.split(","):
        item = item.strip()
        if name == "link":
            values.append(item)
        elif item == "inf":
            values.append(math.inf)
        else:
            values.append(float(item))
    return name, values


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        cfg = load_config(args)
        if args.command == "calibrate":
            return cmd_calibrate(cfg)
        if args.command == "exact":
            return cmd_exact(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "sweep":
            params = dict(_parse_sweep_values(p) for p in args.param)
            return cmd_sweep(cfg, params)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"aoi-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"aoi-lab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"aoi-lab: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except EvaluationError as exc:
        print(f"aoi-lab: evaluation failed: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


def entrypoint() -> None:
    sys.exit(main())
