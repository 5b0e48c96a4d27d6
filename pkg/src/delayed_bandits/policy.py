"""Randomized allocation with delayed rewards.

Both strategies pick the arm with the highest estimated mean with probability
``1 - (l - 1) * pi`` and every other arm with probability ``pi``. ``eta1``
reads the exploration schedule at the round index ``n``; ``eta2`` reads it at
``tau_n``, the number of rewards observed so far, so it only moves when a
reward arrives.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import NEVER, ArrivalLedger, Context, Observation, Schedule, Strategy, UsageError
from .environments import Environment
from .metrics import RunTrace

EXPLORATION_MARGIN = 1e-6


class InitializationStall(RuntimeError):
    """Forced allocation did not yield a reward for every arm within the safety cap."""


@dataclass(frozen=True)
class FixedRounds:
    """Round-robin for the first ``m`` rounds, then randomized allocation."""

    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise UsageError("fixed initialization needs m >= 1")

    def __str__(self) -> str:
        return f"fixed:{self.m}"


@dataclass(frozen=True)
class UntilOneRewardPerArm:
    """Round-robin until every arm has at least one arrived reward."""

    def __str__(self) -> str:
        return "until-reward"


InitMode = Union[FixedRounds, UntilOneRewardPerArm]


def parse_init(text: str) -> InitMode:
    text = text.strip().lower()
    if text == "until-reward":
        return UntilOneRewardPerArm()
    kind, _, value = text.partition(":")
    if kind == "fixed" and value.isdigit():
        return FixedRounds(int(value))
    raise UsageError(f"init must be 'fixed:<m>' or 'until-reward', got {text!r}")


def init_cap(n_arms: int, expected_delay: float) -> int:
    """Safety cap on the length of the until-reward initialization."""
    return int(np.ceil(50 * n_arms * (expected_delay + 1.0)))


def exploration_clamp(n_arms: int) -> float:
    return (1.0 - EXPLORATION_MARGIN) / max(n_arms - 1, 1)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    context: Context
    arm: int
    greedy: int
    explored: bool
    regret: float
    optimal: float
    tau: int
    pi: float
    reward: float


@dataclass
class Streams:
    """Independent generators for covariates, reward noise and arm randomization.

    Each stream is consumed at a fixed rate per round, so two policies fed
    equally seeded streams see the same covariates and noise.
    """

    context: np.random.Generator
    noise: np.random.Generator
    decision: np.random.Generator


class AllocationPolicy:
    """Sequential allocation state for one replication.

    Rewards are delivered at the end of the round in which they arrive, so
    the decision at round ``n`` uses exactly the rewards with ``t_j <= n - 1``.
    The exploration schedule is clamped so that ``(l - 1) * pi < 1``.

    An arm with no arrived reward after a fixed-length initialization is
    treated as the greedy arm (lowest such index) until one of its rewards
    arrives.
    """

    def __init__(
        self,
        strategy: Strategy,
        exploration: Schedule,
        estimator,
        ledger: ArrivalLedger,
        init_mode: InitMode = FixedRounds(30),
        max_init_rounds: Optional[int] = None,
    ):
        self.strategy = Strategy(strategy)
        self.n_arms = estimator.n_arms
        self.exploration = exploration.with_clamp(
            min(exploration.clamp_max, exploration_clamp(self.n_arms))
        )
        self.estimator = estimator
        self.ledger = ledger
        self.init_mode = init_mode
        self.max_init_rounds = (
            init_cap(self.n_arms, 0.0) if max_init_rounds is None else max_init_rounds
        )
        self.phase = "initializing"
        self.m0: Optional[int] = None
        self.pending: dict[int, list[Observation]] = defaultdict(list)
        self._tau = ledger.tau_curve()

    @property
    def running(self) -> bool:
        return self.phase == "running"

    def tau(self, n: int) -> int:
        return int(self._tau[n - 1]) if n >= 1 else 0

    def exploration_prob(self, n: int) -> float:
        """Per-arm exploration probability used at round ``n``."""
        index = n if self.strategy is Strategy.ETA1 else max(self.tau(n), 1)
        return self.exploration(index)

    def greedy_arm(self, x) -> int:
        preds = self.estimator.predict_all(x, self.estimator.data.size)
        missing = np.isnan(preds)
        if missing.any():
            return int(np.argmax(missing)) + 1
        return int(np.argmax(preds)) + 1

    def _select(self, x, n: int, u: float) -> tuple[int, int, bool, float]:
        greedy = self.greedy_arm(x)
        pi = self.exploration_prob(n)
        keep = 1.0 - (self.n_arms - 1) * pi
        if u < keep:
            return greedy, greedy, False, pi
        k = min(int((u - keep) / pi), self.n_arms - 2)
        others = [a for a in range(1, self.n_arms + 1) if a != greedy]
        return others[k], greedy, True, pi

    def choose_arm(self, x, n: int, rng: np.random.Generator) -> tuple[int, int, bool]:
        """Randomized arm choice; returns ``(arm, greedy, explored)``."""
        if not self.running:
            raise UsageError("choose_arm called during initialization")
        arm, greedy, explored, _ = self._select(x, n, rng.random())
        return arm, greedy, explored

    def choose_arms(self, x, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` independent arm choices at the same context and round.

        Uses the same uniform-to-arm mapping as ``choose_arm``, computing the
        greedy arm only once.
        """
        if not self.running:
            raise UsageError("choose_arms called during initialization")
        greedy = self.greedy_arm(x)
        pi = self.exploration_prob(n)
        u = rng.random(size)
        keep = 1.0 - (self.n_arms - 1) * pi
        k = np.minimum(((u - keep) / pi).astype(np.int64), self.n_arms - 2)
        others = np.array([a for a in range(1, self.n_arms + 1) if a != greedy])
        return np.where(u < keep, greedy, others[np.clip(k, 0, None)])

    def step(
        self,
        env: Environment,
        n: int,
        streams: Streams,
        x: Optional[Context] = None,
        means: Optional[np.ndarray] = None,
    ) -> RoundRecord:
        """Play round ``n``: draw a context, pull, record the reward and deliver arrivals.

        ``x`` and ``means`` let a caller supply the context (already drawn from
        ``streams.context``) and its mean rewards, computed in bulk.
        """
        if x is None:
            x = Context(tuple(streams.context.random(env.dim)))
        u = streams.decision.random()
        eps = streams.noise.standard_normal()

        if self.running:
            arm, greedy, explored, pi = self._select(x, n, u)
        else:
            arm = greedy = (n - 1) % self.n_arms + 1
            explored, pi = False, float("nan")

        if means is None:
            means = env.mean_rewards(x)
        optimal = float(means.max())
        reward = float(means[arm - 1]) + env.noise_scale * eps
        arrival = self.ledger.arrival(n)
        if arrival is not NEVER:
            self.pending[arrival].append(Observation(n, arm, x, reward, arrival))
        for obs in self.pending.pop(n, ()):
            self.estimator.ingest(obs, now=n)

        if not self.running:
            self._maybe_finish_init(n)

        return RoundRecord(
            round=n,
            context=x,
            arm=arm,
            greedy=greedy,
            explored=explored,
            regret=optimal - float(means[arm - 1]),
            optimal=optimal,
            tau=self.tau(n),
            pi=pi,
            reward=reward,
        )

    def _maybe_finish_init(self, n: int) -> None:
        if isinstance(self.init_mode, FixedRounds):
            done = n >= self.init_mode.m
        else:
            done = all(self.estimator.count(a) > 0 for a in range(1, self.n_arms + 1))
            if not done and n >= self.max_init_rounds:
                raise InitializationStall(
                    f"no reward for every arm after {n} forced rounds"
                )
        if done:
            self.phase = "running"
            self.m0 = n


def simulate(policy: AllocationPolicy, env: Environment, horizon: int, streams: Streams) -> RunTrace:
    """Run ``horizon`` rounds and collect the per-round trace."""
    if policy.ledger.horizon < horizon:
        raise UsageError("ledger is shorter than the horizon")
    regret = np.empty(horizon)
    optimal = np.empty(horizon)
    explored = np.empty(horizon, dtype=bool)
    arms = np.empty(horizon, dtype=np.int64)
    greedy = np.empty(horizon, dtype=np.int64)
    # Same draws as per-round calls, in one batch.
    points = streams.context.random((horizon, env.dim))
    all_means = env.mean_rewards(points).T
    for n in range(1, horizon + 1):
        x = Context.unchecked(tuple(points[n - 1].tolist()))
        rec = policy.step(env, n, streams, x=x, means=all_means[n - 1])
        regret[n - 1] = rec.regret
        optimal[n - 1] = rec.optimal
        explored[n - 1] = rec.explored
        arms[n - 1] = rec.arm
        greedy[n - 1] = rec.greedy
    return RunTrace(
        regret_increment=regret,
        optimal_value=optimal,
        explored=explored,
        tau=policy.ledger.tau_curve(horizon),
        arm=arms,
        greedy=greedy,
    )
