"""Experiment orchestration: configuration, seeding, replications and output files."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Strategy, UsageError, parse_schedule
from .delays import DELAY_NAMES, DelayModel, build_ledger, expected_delay, make_delay
from .environments import ARM_COUNTS, Environment
from .estimators import KERNELS, HistogramEstimator, KernelEstimator
from .metrics import RunTrace
from .policy import (
    AllocationPolicy,
    FixedRounds,
    Streams,
    init_cap,
    parse_init,
    simulate,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("round", "mean_avg_regret", "std_avg_regret", "mean_tau", "exploration_rate")

# --------------------------------------------------------------------------
# Seeding
# --------------------------------------------------------------------------

MASK64 = (1 << 64) - 1

STREAM_DELAY = 0
STREAM_CONTEXT = 1
STREAM_NOISE = 2
STREAM_DECISION = 3


def splitmix64(x: int) -> int:
    """One SplitMix64 step (Steele, Lea and Flood 2014) on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Fold integer keys into the master seed with SplitMix64.

    ``derive_seed(m, r, s)`` is the seed of stream ``s`` in replication
    ``r``; it depends on nothing else, so results do not change with the
    number of worker processes.
    """
    state = splitmix64(master_seed & MASK64)
    for key in keys:
        state = splitmix64(state ^ (key & MASK64))
    return state


def replication_streams(master_seed: int, rep: int, salt: Sequence[int] = ()) -> tuple[np.random.Generator, Streams]:
    """Delay generator plus the per-round streams for replication ``rep``."""

    def gen(stream: int) -> np.random.Generator:
        return np.random.default_rng(derive_seed(master_seed, rep, *salt, stream))

    return gen(STREAM_DELAY), Streams(gen(STREAM_CONTEXT), gen(STREAM_NOISE), gen(STREAM_DECISION))


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment cell.

    ``common_random_numbers`` makes covariates, noise, delays and the
    randomization uniforms independent of the strategy, so ``eta1`` and
    ``eta2`` runs with the same seed face identical data streams.
    """

    setup: int = 1
    dim: int = 2
    noise: float = 0.5
    delay: str = "none"
    delay_p: float = 0.3
    delay_sigma: float = 1500.0
    delay_prob: float = 0.7
    delay_period: int = 5
    delay_periods: list = field(default_factory=lambda: [10, 15, 20, 25])
    strategy: str = "eta1"
    estimator: str = "nw"
    kernel: str = "gaussian"
    pi: str = "logpow:-1"
    h: str = "logpow:-1"
    init: str = "fixed:30"
    horizon: int = 4000
    replications: int = 20
    master_seed: int = 0
    common_random_numbers: bool = True
    out_dir: str = "results"

    def __post_init__(self) -> None:
        self.delay_periods = [int(k) for k in self.delay_periods]
        if self.replications < 1:
            raise UsageError("replications must be >= 1")
        if self.horizon < 1:
            raise UsageError("horizon must be >= 1")
        if self.setup not in ARM_COUNTS:
            raise UsageError("setup must be 1, 2, 3 or 4")
        if self.estimator not in ("nw", "hist"):
            raise UsageError("estimator must be 'nw' or 'hist'")
        if self.kernel not in KERNELS:
            raise UsageError(f"kernel must be one of {sorted(KERNELS)}")
        if self.delay not in DELAY_NAMES:
            raise UsageError(f"delay must be one of {DELAY_NAMES}")
        Strategy(self.strategy)
        parse_schedule(self.pi)
        parse_schedule(self.h)
        init = parse_init(self.init)
        if isinstance(init, FixedRounds) and init.m > self.horizon:
            raise UsageError("horizon is shorter than the initialization")
        self.environment()
        self.delay_model()

    @property
    def n_arms(self) -> int:
        return ARM_COUNTS[self.setup]

    def environment(self) -> Environment:
        return Environment(self.setup, self.dim, self.noise)

    def delay_model(self) -> DelayModel:
        return make_delay(
            self.delay,
            p=self.delay_p,
            sigma=self.delay_sigma,
            delay_prob=self.delay_prob,
            periods=self.delay_periods,
            period=self.delay_period,
        )

    def label(self) -> str:
        est = self.estimator if self.estimator == "hist" else f"nw-{self.kernel}"
        return (
            f"setup{self.setup}_d{self.dim}_{self.delay}_{self.strategy}_{est}"
            f"_pi{_slug(self.pi)}_h{_slug(self.h)}_N{self.horizon}_R{self.replications}"
        )

    def panel(self) -> str:
        """Label shared by configs that differ only in strategy."""
        return self.label().replace(f"_{self.strategy}_", "_")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())


def _slug(schedule: str) -> str:
    return schedule.replace(":", "").replace("/", "o").replace("-", "m")


PRESETS = {
    "paper-desk": dict(
        horizon=4000, replications=20, dim=2, noise=0.5, estimator="nw",
        kernel="gaussian", pi="logpow:-1", h="logpow:-1", init="fixed:30",
    ),
    "paper": dict(
        horizon=8000, replications=60, dim=2, noise=0.5, estimator="nw",
        kernel="gaussian", pi="logpow:-1", h="logpow:-1", init="fixed:30",
    ),
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(**{**PRESETS[name], **overrides})


def paper_grid(
    base: ExperimentConfig,
    setups: Iterable[int] = (1, 2, 3, 4),
    delays: Iterable[str] = ("halfnormal", "quartered"),
    strategies: Iterable[str] = ("eta1", "eta2"),
) -> list[ExperimentConfig]:
    """Setups x delay scenarios x strategies, in that nesting order."""
    return [
        base.replace(setup=s, delay=d, strategy=st)
        for s in setups
        for d in delays
        for st in strategies
    ]


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------


def build_policy(cfg: ExperimentConfig, ledger) -> AllocationPolicy:
    h = parse_schedule(cfg.h)
    if cfg.estimator == "hist":
        est = HistogramEstimator(cfg.n_arms, cfg.dim, h, capacity=cfg.horizon)
    else:
        est = KernelEstimator(cfg.n_arms, cfg.dim, h, cfg.kernel, capacity=cfg.horizon)
    return AllocationPolicy(
        Strategy(cfg.strategy),
        parse_schedule(cfg.pi),
        est,
        ledger,
        parse_init(cfg.init),
        max_init_rounds=init_cap(cfg.n_arms, expected_delay(cfg.delay_model())),
    )


def run_replication(cfg: ExperimentConfig, rep: int) -> RunTrace:
    """One independent replication, fully determined by ``(cfg, rep)``."""
    salt = () if cfg.common_random_numbers else (1 + list(Strategy).index(Strategy(cfg.strategy)),)
    delay_rng, streams = replication_streams(cfg.master_seed, rep, salt)
    ledger = build_ledger(cfg.delay_model(), cfg.horizon, delay_rng)
    policy = build_policy(cfg, ledger)
    return simulate(policy, cfg.environment(), cfg.horizon, streams)


def _replication_curves(args: tuple[ExperimentConfig, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cfg, rep = args
    trace = run_replication(cfg, rep)
    return trace.regret_curve(), trace.tau.astype(float), trace.exploration_curve()


@dataclass
class AggregateCurve:
    """Per-round mean/std of the running-average regret across replications."""

    mean_avg_regret: np.ndarray
    std_avg_regret: np.ndarray
    mean_tau: np.ndarray
    exploration_rate: np.ndarray
    config: Optional[ExperimentConfig] = None
    replications: int = 0

    @property
    def horizon(self) -> int:
        return len(self.mean_avg_regret)

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(1, self.horizon + 1)

    @property
    def final_regret(self) -> float:
        return float(self.mean_avg_regret[-1])


class _RunningMoments:
    """Welford accumulation of per-round means and population variance."""

    def __init__(self):
        self.k = 0
        self.mean = None
        self.m2 = None

    def add(self, x: np.ndarray) -> None:
        self.k += 1
        if self.mean is None:
            self.mean = np.zeros_like(x, dtype=float)
            self.m2 = np.zeros_like(x, dtype=float)
        delta = x - self.mean
        self.mean += delta / self.k
        self.m2 += delta * (x - self.mean)

    def std(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.m2 / self.k, 0.0))


def aggregate(curves: Iterable[tuple[np.ndarray, np.ndarray, np.ndarray]], config=None) -> AggregateCurve:
    """Fold replication curves in the order given."""
    regret, tau, explore = _RunningMoments(), _RunningMoments(), _RunningMoments()
    for r, t, e in curves:
        regret.add(r)
        tau.add(t)
        explore.add(e)
    if regret.k == 0:
        raise UsageError("nothing to aggregate")
    return AggregateCurve(regret.mean, regret.std(), tau.mean, explore.mean, config, regret.k)


def run_experiment(cfg: ExperimentConfig, workers: int = 1, reps: Optional[Sequence[int]] = None) -> AggregateCurve:
    """Run all replications and aggregate them in replication-index order."""
    reps = list(range(cfg.replications)) if reps is None else list(reps)
    jobs = [(cfg, r) for r in reps]
    if workers <= 1:
        return aggregate(map(_replication_curves, jobs), cfg)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return aggregate(pool.map(_replication_curves, jobs), cfg)


@dataclass
class SweepOutcome:
    config: ExperimentConfig
    curve: Optional[AggregateCurve]
    path: Optional[Path]
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def sweep(
    grid: Sequence[ExperimentConfig],
    out_dir=None,
    workers: int = 1,
    svg: bool = True,
) -> list[SweepOutcome]:
    """Run every config, writing one CSV each plus ``combined.csv``.

    A failing config is logged and reported in its outcome; the rest still run.
    """
    if not grid:
        raise UsageError("sweep needs at least one config")
    out = Path(out_dir if out_dir is not None else grid[0].out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outcomes = []
    for cfg in grid:
        try:
            curve = run_experiment(cfg, workers=workers)
            path = out / f"{cfg.label()}.csv"
            emit_csv(curve, path)
            outcomes.append(SweepOutcome(cfg, curve, path))
        except Exception as exc:  # noqa: BLE001 - reported per config
            log.error("config %s failed: %s", cfg.label(), exc)
            outcomes.append(SweepOutcome(cfg, None, None, exc))
    done = [o for o in outcomes if o.ok]
    if done:
        emit_combined_csv([(o.config.label(), o.curve) for o in done], out / "combined.csv")
    if svg:
        panels: dict[str, list[SweepOutcome]] = {}
        for o in done:
            panels.setdefault(o.config.panel(), []).append(o)
        for name, members in panels.items():
            emit_svg(
                [o.curve for o in members],
                out / f"{name}.svg",
                labels=[o.config.strategy for o in members],
                title=name,
            )
    return outcomes


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _rows(curve: AggregateCurve):
    for i in range(curve.horizon):
        yield (
            i + 1,
            repr(float(curve.mean_avg_regret[i])),
            repr(float(curve.std_avg_regret[i])),
            repr(float(curve.mean_tau[i])),
            repr(float(curve.exploration_rate[i])),
        )


def emit_csv(curve: AggregateCurve, path) -> Path:
    if curve.horizon == 0:
        raise UsageError("curve is empty")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(_rows(curve))
    return path


def read_csv(path) -> AggregateCurve:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise UsageError(f"unexpected CSV header {header}")
        rows = [[float(v) for v in row] for row in reader]
    cols = np.asarray(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
    return AggregateCurve(cols[:, 1], cols[:, 2], cols[:, 3], cols[:, 4])


def emit_combined_csv(labelled: Sequence[tuple[str, AggregateCurve]], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("label",) + CSV_COLUMNS)
        for label, curve in labelled:
            for row in _rows(curve):
                writer.writerow((label,) + row)
    return path


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def emit_svg(
    curves: Sequence[AggregateCurve],
    path,
    labels: Optional[Sequence[str]] = None,
    title: str = "",
    width: int = 640,
    height: int = 400,
    max_points: int = 800,
) -> Path:
    """Average regret against time, one polyline per curve."""
    if not curves:
        raise UsageError("no curves to plot")
    labels = list(labels) if labels is not None else [f"curve {i + 1}" for i in range(len(curves))]
    left, right, top, bottom = 60, 20, 30, 40
    pw, ph = width - left - right, height - top - bottom
    n_max = max(c.horizon for c in curves)
    y_max = max(float(np.nanmax(c.mean_avg_regret)) for c in curves) or 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" font-size="12" font-family="sans-serif">{_escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left + pw / 2}" y="{height - 8}" font-size="12" text-anchor="middle" '
        f'font-family="sans-serif">time</text>',
        f'<text x="14" y="{top + ph / 2}" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 14 {top + ph / 2})" text-anchor="middle">average regret</text>',
        f'<text x="{left - 4}" y="{top + 4}" font-size="10" text-anchor="end" '
        f'font-family="sans-serif">{y_max:.3g}</text>',
        f'<text x="{left + pw}" y="{top + ph + 14}" font-size="10" text-anchor="end" '
        f'font-family="sans-serif">{n_max}</text>',
    ]
    for i, (curve, label) in enumerate(zip(curves, labels)):
        idx = np.unique(np.linspace(0, curve.horizon - 1, min(curve.horizon, max_points)).astype(int))
        xs = left + pw * (idx + 1) / n_max
        ys = top + ph * (1.0 - curve.mean_avg_regret[idx] / y_max)
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{left + pw - 80}" y="{top + 14 * (i + 1)}" font-size="11" fill="{color}" '
            f'font-family="sans-serif">{_escape(label)}</text>'
        )
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
