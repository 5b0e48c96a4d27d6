"""Command-line entry point: ``run``, ``sweep``, ``illustrate`` and ``check``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .conditions import THEOREMS, ConditionSpec, classify_condition, condition_value
from .core import UsageError, parse_schedule
from .delays import DELAY_NAMES
from .estimators import KERNELS
from .harness import (
    PRESETS,
    ExperimentConfig,
    emit_csv,
    emit_svg,
    paper_grid,
    preset_config,
    run_experiment,
    sweep,
)
from .metrics import rand_error_bounds

# Flag name -> ExperimentConfig field, for flags that override a config value.
_OVERRIDES = {
    "seed": "master_seed",
    "out": "out_dir",
    "setup": "setup",
    "dim": "dim",
    "noise": "noise",
    "delay": "delay",
    "delay_p": "delay_p",
    "delay_sigma": "delay_sigma",
    "delay_prob": "delay_prob",
    "delay_period": "delay_period",
    "delay_periods": "delay_periods",
    "strategy": "strategy",
    "estimator": "estimator",
    "kernel": "kernel",
    "pi": "pi",
    "h": "h",
    "init": "init",
    "horizon": "horizon",
    "replications": "replications",
}


def _add_global(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output directory (default results)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")


def _add_experiment(p: argparse.ArgumentParser, multi: bool = False) -> None:
    if multi:
        p.add_argument("--setups", type=int, nargs="+", default=[1, 2, 3, 4], choices=[1, 2, 3, 4])
        p.add_argument("--delays", nargs="+", default=["halfnormal", "quartered"], choices=DELAY_NAMES)
        p.add_argument("--strategies", nargs="+", default=["eta1", "eta2"], choices=["eta1", "eta2"])
    else:
        p.add_argument("--setup", type=int, choices=[1, 2, 3, 4])
        p.add_argument("--delay", choices=DELAY_NAMES)
        p.add_argument("--strategy", choices=["eta1", "eta2"])
    p.add_argument("--dim", type=int, choices=[1, 2])
    p.add_argument("--noise", type=float, help="reward noise scale")
    p.add_argument("--delay-p", type=float, help="geometric success probability")
    p.add_argument("--delay-sigma", type=float, help="half-normal scale")
    p.add_argument("--delay-prob", type=float, help="probability that a reward is delayed (half-normal model)")
    p.add_argument("--delay-period", type=int, help="censoring period (periodic-geom)")
    p.add_argument("--delay-periods", type=int, nargs=4, metavar="K", help="per-quarter censoring periods")
    p.add_argument("--estimator", choices=["hist", "nw"])
    p.add_argument("--kernel", choices=sorted(KERNELS))
    p.add_argument("--pi", help="exploration schedule, e.g. logpow:-1 or pow:-1/4")
    p.add_argument("--h", help="bandwidth schedule")
    p.add_argument("--init", help="fixed:<m> or until-reward")
    p.add_argument("--horizon", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int, default=1, help="worker processes for replications")
    p.add_argument("--no-crn", action="store_true", help="give each strategy its own random streams")
    p.add_argument("--no-svg", action="store_true", help="skip the SVG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayed-bandits",
        description="Simulate randomized allocation strategies for contextual bandits with delayed rewards.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its CSV")
    _add_global(run)
    _add_experiment(run)

    sw = sub.add_parser("sweep", help="run a setups x delays x strategies grid")
    _add_global(sw)
    _add_experiment(sw, multi=True)

    ill = sub.add_parser("illustrate", help="tabulate exploration-count bounds under delays")
    ill.add_argument("--pi", default="pow:-1/4")
    ill.add_argument("--horizon", type=int, default=10000)
    ill.add_argument("--m0", type=int, default=30)
    ill.add_argument("--alpha", type=float, nargs="+", default=[0.25])
    ill.add_argument("--arms", type=int, default=2)

    chk = sub.add_parser(
        "check",
        help="classify a consistency condition as diverging or vanishing",
        description=(
            "Evaluates the condition sequence at the sample points. It is reported as "
            "diverging when it increases strictly and grows at least tenfold, and as "
            "vanishing when it decreases strictly to a tenth or less. Sample points must "
            "span three decades."
        ),
    )
    chk.add_argument("--theorem", choices=THEOREMS, default="thm2b")
    chk.add_argument("--h", default="pow:-1/8")
    chk.add_argument("--pi", default="pow:-1/8")
    chk.add_argument("--q", default="pow:1", help="growth rate of the observed count")
    chk.add_argument("--dim", type=int, default=1)
    chk.add_argument("--h-exponent", type=float, help="power on h for thm2 (default: dim)")
    chk.add_argument("--points", type=float, nargs="+", default=[1e2, 1e3, 1e4, 1e5])
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.load(args.config)
        if args.preset:
            raise UsageError("give either --config or --preset, not both")
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        cfg = ExperimentConfig()
    changes = {
        field: getattr(args, flag)
        for flag, field in _OVERRIDES.items()
        if getattr(args, flag, None) is not None
    }
    if args.no_crn:
        changes["common_random_numbers"] = False
    return cfg.replace(**changes) if changes else cfg


def _cmd_run(args) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve = run_experiment(cfg, workers=args.workers)
    path = emit_csv(curve, out / f"{cfg.label()}.csv")
    cfg.save(out / f"{cfg.label()}.json")
    if not args.no_svg:
        emit_svg([curve], out / f"{cfg.label()}.svg", labels=[cfg.strategy], title=cfg.label())
    print(f"{cfg.label()}: final mean per-round regret {curve.final_regret:.6f}")
    print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    base = config_from_args(args)
    grid = paper_grid(base, args.setups, args.delays, args.strategies)
    outcomes = sweep(grid, out_dir=base.out_dir, workers=args.workers, svg=not args.no_svg)
    failed = 0
    for o in outcomes:
        if o.ok:
            print(f"{o.config.label()}: {o.curve.final_regret:.6f}")
        else:
            failed += 1
            print(f"{o.config.label()}: FAILED ({o.error})")
    return 1 if failed else 0


def _cmd_illustrate(args) -> int:
    pi = parse_schedule(args.pi)
    header = ("schedule", "N", "m0", "alpha", "arms", "tau", "min", "max", "eta1_expected",
              "norm_lower", "norm_upper")
    print("\t".join(header))
    for alpha in args.alpha:
        b = rand_error_bounds(pi, args.horizon, args.m0, n_arms=args.arms, alpha=alpha)
        row = (str(pi), b.horizon, b.m0, alpha, b.n_arms, b.tau, f"{b.minimum:.4f}",
               f"{b.maximum:.4f}", f"{b.eta1_expected:.4f}", f"{b.normalized_lower:.4f}",
               f"{b.normalized_upper:.4f}")
        print("\t".join(str(v) for v in row))
    return 0


def _cmd_check(args) -> int:
    spec = ConditionSpec(
        h=parse_schedule(args.h),
        pi=parse_schedule(args.pi),
        q=parse_schedule(args.q, clamp_max=np.inf),
        dim=args.dim,
        theorem=args.theorem,
        h_exponent=args.h_exponent,
    )
    for n, v in zip(args.points, np.atleast_1d(condition_value(spec, args.points))):
        print(f"n={n:g}\t{v:.6g}")
    print(classify_condition(spec, args.points).value)
    return 0


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "illustrate": _cmd_illustrate, "check": _cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
