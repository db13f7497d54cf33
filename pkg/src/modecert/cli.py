"""Command-line interface.

Every subcommand writes a JSON report to stdout (or ``--out``).  Exit codes:
0 on success, 2 on bad input, 3 when a solver fails to converge.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import constrained, inference, montecarlo, unconstrained
from .distributions import ReferenceDistribution, parse_dist, sample, solve_laplace_projection
from .errors import DegenerateSample, NotConverged, OutOfRange, ParseError, SimulationFailed, UnsupportedFamily
from .inference import CriticalValueTable
from .io import read_sample, write_json
from .unconstrained import SolverOptions

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 2, 3

DENSE_ALPHAS = np.round(np.arange(1, 1000) / 1000.0, 3)
STOCHASTIC = {"simulate-null", "coverage"}


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    dist: ReferenceDistribution | None = None
    n: int | None = None
    seed: int | None = None
    mode: float | None = None
    alphas: list | None = None
    levels: list | None = None
    reps: int | None = None
    grid: int = inference.DEFAULT_GRID
    table: str | None = None
    out: str | None = None
    opts: SolverOptions = SolverOptions()

    def data(self):
        if self.input is not None:
            return read_sample(self.input)
        return sample(self.dist, self.n, self.seed)

    def load_table(self) -> CriticalValueTable:
        return CriticalValueTable.load(self.table) if self.table else inference.default_table()


def _floats(text: str | None):
    if text is None:
        return None
    if text.strip() == "dense":
        return [float(a) for a in DENSE_ALPHAS]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    dist = parse_dist(args.dist) if args.dist else None
    data_cmds = {"fit", "fit-constrained", "lrtest", "ci"}
    if cmd in data_cmds:
        if (args.input is None) == (dist is None):
            raise InputError("give exactly one of --input or --dist")
        if dist is not None and (args.n is None or args.seed is None):
            raise InputError("--dist needs --n and --seed")
    if cmd in STOCHASTIC:
        if dist is None:
            raise InputError(f"{cmd} needs --dist")
        if args.seed is None:
            raise InputError(f"{cmd} needs --seed")
    if cmd in ("fit-constrained", "lrtest") and args.mode is None:
        raise InputError(f"{cmd} needs --mode")
    opts = SolverOptions(
        tol=args.tol if args.tol is not None else SolverOptions.tol,
        max_iter=args.max_iter if args.max_iter is not None else SolverOptions.max_iter,
    )
    return RunConfig(
        command=cmd,
        input=args.input,
        dist=dist,
        n=args.n,
        seed=args.seed,
        mode=args.mode,
        alphas=_floats(args.alpha),
        levels=_floats(args.levels),
        reps=args.reps,
        grid=args.grid if args.grid is not None else inference.DEFAULT_GRID,
        table=args.table,
        out=args.out,
        opts=opts,
    )


# --- subcommands -----------------------------------------------------------


def _cmd_fit(cfg: RunConfig) -> dict:
    x = cfg.data()
    rep = unconstrained.fit(x, cfg.opts)
    cert = unconstrained.check_characterization(rep, x)
    return {"fit": rep.to_dict(), "mode": rep.density.mode_summary().__dict__, "certificate": cert.to_dict()}


def _cmd_fit_constrained(cfg: RunConfig) -> dict:
    x = cfg.data()
    rep = constrained.fit_constrained(x, cfg.mode, cfg.opts)
    cert = constrained.check_constrained_characterization(rep, x)
    return {"fit": rep.to_dict(), "certificate": cert.to_dict()}


def _cmd_lrtest(cfg: RunConfig) -> dict:
    x = cfg.data()
    alphas = cfg.alphas or [0.05]
    table = cfg.load_table()
    res = inference.lr_test(x, cfg.mode, alphas[0], table, cfg.opts)
    out = res.to_dict()
    out["decisions"] = {f"{a:g}": bool(res.stat > inference.critical_value(table, a)) for a in alphas}
    return out


def _cmd_ci(cfg: RunConfig) -> dict:
    x = cfg.data()
    alphas = cfg.alphas or [0.05]
    cis = inference.confidence_intervals(x, alphas, cfg.load_table(), cfg.grid, cfg.opts)
    return {"n": x.n, "intervals": [ci.to_dict() for ci in cis]}


def _cmd_simulate_null(cfg: RunConfig) -> dict:
    alphas = sorted(cfg.alphas or montecarlo.DEFAULT_ALPHAS)
    n = cfg.n or 10_000
    M = cfg.reps or 2000
    table = montecarlo.estimate_critical_values(cfg.dist, n, M, alphas, cfg.seed, cfg.opts)
    out = table.to_dict()  # loadable with --table
    out["quantiles"] = {f"{a:g}": d for a, d in zip(table.alphas, table.d)}
    return out


def _cmd_coverage(cfg: RunConfig) -> dict:
    levels = cfg.levels or [0.80, 0.90, 0.95, 0.99]
    rep = montecarlo.coverage_study(
        cfg.dist, cfg.n or 100, cfg.reps or 1000, levels, cfg.seed, cfg.load_table(), cfg.grid, cfg.opts
    )
    out = rep.to_dict()
    out.pop("wall_time", None)
    return out


def _cmd_laplace_example(cfg: RunConfig) -> dict:
    proj = solve_laplace_projection()
    check = constrained.population_projection_check(proj.density, parse_dist("laplace:0,1"), 1.0)
    out = proj.to_dict()
    out["twice_kl"] = 2.0 * proj.kl
    out["projection_check"] = check.to_dict()
    return out


COMMANDS = {
    "fit": _cmd_fit,
    "fit-constrained": _cmd_fit_constrained,
    "lrtest": _cmd_lrtest,
    "ci": _cmd_ci,
    "simulate-null": _cmd_simulate_null,
    "coverage": _cmd_coverage,
    "laplace-example": _cmd_laplace_example,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="data file, one number per line ('#' header allowed)")
    common.add_argument("--dist", help="synthetic data, e.g. normal:0,1 or gamma:3,1")
    common.add_argument("--mode", type=float, help="hypothesized mode m")
    common.add_argument("--alpha", help="level(s) alpha, comma-separated; 'dense' for a fine grid")
    common.add_argument("--levels", help="confidence levels for coverage, e.g. 0.8,0.9,0.95,0.99")
    common.add_argument("--n", type=int, help="sample size for synthetic data")
    common.add_argument("--reps", type=int, help="Monte Carlo replications")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--max-iter", type=int, dest="max_iter")
    common.add_argument("--grid", type=int, help="grid size for interval search")
    common.add_argument("--table", help="critical-value table (JSON); default is the shipped table")
    common.add_argument("--out", help="write the JSON report here instead of stdout")

    ap = argparse.ArgumentParser(prog="modecert", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "log-concave MLE",
        "fit-constrained": "log-concave MLE with mode fixed at --mode",
        "lrtest": "likelihood-ratio test of mode = --mode",
        "ci": "confidence interval for the mode",
        "simulate-null": "simulate the null statistic; output loads with --table",
        "coverage": "coverage and length of the intervals under --dist",
        "laplace-example": "Laplace(0,1) projected onto densities with mode 1",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return ap


def run(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        cfg = build_config(args)
        t0 = time.perf_counter()
        report = COMMANDS[cfg.command](cfg)
        # kept apart so byte comparisons of reruns can drop it
        report["timing"] = {"wall_time": time.perf_counter() - t0}
        write_json(report, cfg.out)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except SimulationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (InputError, ParseError, DegenerateSample, OutOfRange, UnsupportedFamily, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
