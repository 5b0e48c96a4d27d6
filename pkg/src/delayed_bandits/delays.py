"""Delay scenarios: arrival times ``t_j = j + d_j`` drawn independently of arms and contexts.

The samplers only ever see round indices, the horizon and a generator, so
delays cannot depend on which arm was pulled or on the covariate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import NEVER, Arrival, ArrivalLedger, UsageError


def _check_p(p: float) -> None:
    if not 0.0 < p <= 1.0:
        raise UsageError(f"success probability must be in (0, 1], got {p}")


@dataclass(frozen=True)
class NoDelay:
    """Every reward arrives in the round it was earned."""


@dataclass(frozen=True)
class Geometric:
    """``P(d = k) = p (1 - p)**k`` for ``k >= 0`` (shifted by ``support_offset``)."""

    p: float
    support_offset: int = 0

    def __post_init__(self) -> None:
        _check_p(self.p)
        if self.support_offset < 0:
            raise UsageError("support_offset must be nonnegative")


@dataclass(frozen=True)
class PeriodicCensoredGeometric:
    """Rounds divisible by ``period`` are censored; the rest get a geometric delay."""

    period: int
    p: float
    support_offset: int = 0

    def __post_init__(self) -> None:
        _check_p(self.p)
        if self.period < 1:
            raise UsageError("period must be >= 1")


@dataclass(frozen=True)
class MixedHalfNormal:
    """With probability ``delay_prob`` the delay is ``ceil(|Z|)``, ``Z ~ N(0, sigma^2)``; else 0."""

    delay_prob: float
    sigma: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delay_prob <= 1.0:
            raise UsageError("delay_prob must be in [0, 1]")
        if not self.sigma > 0:
            raise UsageError("sigma must be positive")


@dataclass(frozen=True)
class QuarteredCensored:
    """Horizon split into four equal parts; in part ``q`` only multiples of
    ``periods[q]`` are observed (after a geometric delay), the rest are censored."""

    periods: tuple[int, ...]
    p: float
    support_offset: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "periods", tuple(int(k) for k in self.periods))
        if len(self.periods) != 4 or min(self.periods) < 1:
            raise UsageError("periods must be four integers >= 1")
        _check_p(self.p)


DelayModel = Union[
    NoDelay, Geometric, PeriodicCensoredGeometric, MixedHalfNormal, QuarteredCensored
]


def _geometric(p: float, offset: int, size: int, rng: np.random.Generator) -> np.ndarray:
    # numpy's geometric counts trials (support 1, 2, ...); shift to failures.
    return rng.geometric(p, size=size).astype(np.int64) - 1 + offset


def quarter_of(rounds: np.ndarray, horizon: int) -> np.ndarray:
    """0-based quarter index of each round in ``1..horizon``."""
    rounds = np.asarray(rounds, dtype=np.int64)
    return np.minimum((rounds - 1) * 4 // horizon, 3)


def sample_delays(
    model: DelayModel, rounds: Sequence[int], horizon: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized delay draws.

    Returns ``(delays, observed)``; ``delays`` is meaningful only where
    ``observed`` is true.
    """
    rounds = np.asarray(rounds, dtype=np.int64)
    if rounds.size and (rounds.min() < 1 or rounds.max() > horizon):
        raise UsageError("round indices must lie in 1..horizon")
    size = rounds.size
    observed = np.ones(size, dtype=bool)

    if isinstance(model, NoDelay):
        delays = np.zeros(size, dtype=np.int64)
    elif isinstance(model, Geometric):
        delays = _geometric(model.p, model.support_offset, size, rng)
    elif isinstance(model, PeriodicCensoredGeometric):
        delays = _geometric(model.p, model.support_offset, size, rng)
        observed = rounds % model.period != 0
    elif isinstance(model, MixedHalfNormal):
        delayed = rng.random(size) < model.delay_prob
        magnitude = np.ceil(np.abs(rng.standard_normal(size)) * model.sigma)
        delays = np.where(delayed, magnitude, 0).astype(np.int64)
    elif isinstance(model, QuarteredCensored):
        delays = _geometric(model.p, model.support_offset, size, rng)
        period = np.asarray(model.periods)[quarter_of(rounds, horizon)]
        observed = rounds % period == 0
    else:
        raise UsageError(f"unknown delay model {model!r}")
    return delays, observed


def draw_delay(model: DelayModel, j: int, horizon: int, rng: np.random.Generator) -> Arrival:
    """Delay ``d_j`` for a single round, or ``NEVER`` when the reward is censored."""
    delays, observed = sample_delays(model, [j], horizon, rng)
    return int(delays[0]) if observed[0] else NEVER


def build_ledger(model: DelayModel, horizon: int, rng: np.random.Generator) -> ArrivalLedger:
    """Pregenerate arrival times for rounds ``1..horizon``."""
    if horizon < 1:
        raise UsageError("horizon must be >= 1")
    rounds = np.arange(1, horizon + 1)
    delays, observed = sample_delays(model, rounds, horizon, rng)
    return ArrivalLedger(rounds + np.where(observed, delays, 0), observed)


def expected_delay(model: DelayModel) -> float:
    """Mean delay of the rewards that are not censored."""
    if isinstance(model, NoDelay):
        return 0.0
    if isinstance(model, (Geometric, PeriodicCensoredGeometric, QuarteredCensored)):
        return (1.0 - model.p) / model.p + model.support_offset
    if isinstance(model, MixedHalfNormal):
        return model.delay_prob * (model.sigma * math.sqrt(2.0 / math.pi) + 0.5)
    raise UsageError(f"unknown delay model {model!r}")


DELAY_NAMES = ("none", "geom", "periodic-geom", "halfnormal", "quartered")


def make_delay(
    name: str,
    p: float = 0.3,
    sigma: float = 1500.0,
    delay_prob: float = 0.7,
    periods: Sequence[int] = (10, 15, 20, 25),
    period: int = 5,
) -> DelayModel:
    """Build a delay model from its command-line name.

    The defaults reproduce the simulation scenarios: ``geom`` is Delay 1,
    ``periodic-geom`` Delay 2, ``halfnormal`` Delay 3 and ``quartered`` Delay 4.
    """
    if name == "none":
        return NoDelay()
    if name == "geom":
        return Geometric(p)
    if name == "periodic-geom":
        return PeriodicCensoredGeometric(period, p)
    if name == "halfnormal":
        return MixedHalfNormal(delay_prob, sigma)
    if name == "quartered":
        return QuarteredCensored(tuple(periods), p)
    raise UsageError(f"unknown delay {name!r}; choose from {', '.join(DELAY_NAMES)}")
