"""Regret, reward ratio and closed-form randomization-error calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Schedule, Strategy, UsageError


class UndefinedRatioError(ArithmeticError):
    """The oracle reward sum is zero, so the reward ratio is undefined."""


@dataclass
class RunTrace:
    """Per-round log of one replication (index ``j - 1`` holds round ``j``)."""

    regret_increment: np.ndarray
    optimal_value: np.ndarray
    explored: np.ndarray
    tau: np.ndarray
    arm: np.ndarray
    greedy: np.ndarray

    def __post_init__(self) -> None:
        lengths = {len(a) for a in (self.regret_increment, self.optimal_value,
                                    self.explored, self.tau, self.arm, self.greedy)}
        if len(lengths) != 1:
            raise UsageError("trace columns differ in length")
        if np.any(self.regret_increment < 0):
            raise UsageError("regret increments must be nonnegative")

    @property
    def horizon(self) -> int:
        return len(self.regret_increment)

    def regret_curve(self) -> np.ndarray:
        """``r_n`` for every ``n``: running mean of the regret increments."""
        return np.cumsum(self.regret_increment) / np.arange(1, self.horizon + 1)

    def exploration_curve(self) -> np.ndarray:
        """Running fraction of rounds in which a non-greedy arm was pulled."""
        return np.cumsum(self.explored) / np.arange(1, self.horizon + 1)


def _check_n(trace: RunTrace, n: int) -> None:
    if not 1 <= n <= trace.horizon:
        raise UsageError(f"n must be in 1..{trace.horizon}")


def per_round_regret(trace: RunTrace, n: int) -> float:
    _check_n(trace, n)
    return float(np.sum(trace.regret_increment[:n]) / n)


def reward_ratio(trace: RunTrace, n: int) -> float:
    """Achieved mean-reward sum over oracle mean-reward sum for the first ``n`` rounds."""
    _check_n(trace, n)
    oracle = float(np.sum(trace.optimal_value[:n]))
    if oracle == 0.0:
        raise UndefinedRatioError("sum of optimal mean rewards is zero")
    return 1.0 - float(np.sum(trace.regret_increment[:n])) / oracle


# --------------------------------------------------------------------------
# Randomization-error illustrations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RandErrorBounds:
    """Expected number of exploration pulls after initialization.

    ``minimum``/``maximum`` bound the ``eta2`` count over arrival patterns
    with ``tau`` observed rewards; ``eta1_expected`` is the delay-free
    ``eta1`` count. ``bracket_lower``/``bracket_upper`` are the tail sums
    ``sum_{t > tau} (l-1)(pi_tau - pi_t)`` and ``sum_{t > tau} (l-1)(pi_1 - pi_t)``.
    """

    minimum: float
    maximum: float
    eta1_expected: float
    bracket_lower: float
    bracket_upper: float
    horizon: int
    m0: int
    tau: int
    n_arms: int

    @property
    def n_bar(self) -> int:
        return self.horizon - self.m0 - 1

    @property
    def normalized_lower(self) -> float:
        return (self.minimum - self.eta1_expected) / self.n_bar

    @property
    def normalized_upper(self) -> float:
        return (self.maximum - self.eta1_expected) / self.n_bar


def tau_from_fraction(alpha: float, n_bar: int) -> int:
    return int(math.floor(alpha * n_bar))


def rand_error_bounds(
    pi: Schedule,
    horizon: int,
    m0: int,
    tau: Optional[int] = None,
    n_arms: int = 2,
    alpha: Optional[float] = None,
) -> RandErrorBounds:
    """Direct-summation bounds on the expected exploration count of ``eta2`` versus ``eta1``.

    Exactly one of ``tau`` or ``alpha`` is given; ``alpha`` sets
    ``tau = floor(alpha * (horizon - m0 - 1))``.

    >>> from delayed_bandits.core import parse_schedule
    >>> b = rand_error_bounds(parse_schedule("pow:-1/4"), 10000, 30, alpha=0.25)
    >>> round(b.normalized_lower, 3)
    0.02
    """
    n_bar = horizon - m0 - 1
    if n_bar < 1:
        raise UsageError("horizon must exceed m0 + 1")
    if (tau is None) == (alpha is None):
        raise UsageError("give exactly one of tau or alpha")
    if tau is None:
        tau = tau_from_fraction(alpha, n_bar)
    if not 1 <= tau <= n_bar:
        raise UsageError(f"tau must be in 1..{n_bar}, got {tau}")
    if n_arms < 2:
        raise UsageError("need at least two arms")

    p = np.asarray(pi(np.arange(1, n_bar + 1)), dtype=float)  # p[t - 1] = pi_t
    k = n_arms - 1
    tail = p[tau:]  # t = tau + 1 .. n_bar
    return RandErrorBounds(
        minimum=k * (math.fsum(p[: tau - 1]) + (n_bar - tau) * p[tau - 1]),
        maximum=k * ((n_bar - tau) * p[0] + math.fsum(p[1:tau])),
        eta1_expected=k * math.fsum(p),
        bracket_lower=k * math.fsum(p[tau - 1] - tail),
        bracket_upper=k * math.fsum(p[0] - tail),
        horizon=horizon,
        m0=m0,
        tau=tau,
        n_arms=n_arms,
    )


def equally_spaced_arrivals(horizon: int, tau: int) -> np.ndarray:
    """Arrival-order indices ``sigma_t = floor(t * horizon / tau)`` for ``t = 1..tau``."""
    if not 1 <= tau <= horizon:
        raise UsageError("need 1 <= tau <= horizon")
    t = np.arange(1, tau + 1, dtype=np.int64)
    return t * horizon // tau


def exploration_mass_at_arrivals(
    pi: Schedule, sigma: Sequence[int], strategy: Strategy | str, n_arms: int = 2
) -> float:
    """Total exploration probability over the rounds at which rewards arrive.

    ``eta2`` sums ``(l-1) pi_t`` for ``t = 1..len(sigma)``; ``eta1`` sums
    ``(l-1) pi_{sigma_t}``.
    """
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.size == 0:
        return 0.0
    if sigma[0] < 1 or np.any(np.diff(sigma) <= 0):
        raise UsageError("sigma must be strictly increasing positive indices")
    if Strategy(strategy) is Strategy.ETA2:
        index = np.arange(1, sigma.size + 1)
    else:
        index = sigma
    return (n_arms - 1) * math.fsum(np.atleast_1d(pi(index)))
