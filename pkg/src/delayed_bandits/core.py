"""Shared domain types: contexts, observations, schedules and arrival bookkeeping."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np


class UsageError(ValueError):
    """Raised when an operation is called outside its precondition."""


class Never(enum.Enum):
    """Arrival time of a reward that is not observed within the horizon."""

    NEVER = "never"

    def __repr__(self) -> str:
        return "NEVER"


NEVER = Never.NEVER


class Strategy(enum.Enum):
    """``ETA1`` indexes exploration by round, ``ETA2`` by observed-reward count."""

    ETA1 = "eta1"
    ETA2 = "eta2"

Arrival = Union[int, Never]


@dataclass(frozen=True)
class Context:
    """A covariate vector in the unit cube."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise UsageError("context needs at least one coordinate")
        if any(not (0.0 <= c <= 1.0) for c in coords):
            raise UsageError(f"context {coords} is outside the unit cube")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def unchecked(cls, coords: tuple[float, ...]) -> "Context":
        """Wrap coordinates already known to lie in the cube, skipping validation."""
        obj = cls.__new__(cls)
        object.__setattr__(obj, "coords", coords)
        return obj

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype or float)

    def __len__(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class Observation:
    """One pull: round index, 1-based arm, context, realized reward and arrival time."""

    round: int
    arm: int
    context: Context
    reward: float
    arrival: Arrival

    def __post_init__(self) -> None:
        if self.round < 1:
            raise UsageError("round index starts at 1")
        if self.arrival is not NEVER and self.arrival < self.round:
            raise UsageError(
                f"arrival {self.arrival} precedes round {self.round} (negative delay)"
            )

    @property
    def delay(self) -> Arrival:
        return NEVER if self.arrival is NEVER else self.arrival - self.round


# --------------------------------------------------------------------------
# Schedules
# --------------------------------------------------------------------------

SCHEDULE_KINDS = ("pow", "logpow", "const")


@dataclass(frozen=True)
class Schedule:
    """A deterministic positive sequence indexed by n >= 1.

    ``pow:a`` is ``n**a``, ``logpow:a`` is ``log(n + 1)**a`` and ``const:v`` is
    ``v``. Every evaluation is clamped above by ``clamp_max``. The log form is
    shifted by one so that the sequence is finite at ``n = 1``.
    """

    kind: str
    param: float
    clamp_max: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in SCHEDULE_KINDS:
            raise UsageError(f"unknown schedule kind {self.kind!r}")
        if not self.clamp_max > 0:
            raise UsageError("clamp_max must be positive")
        if self.kind == "const" and not self.param > 0:
            raise UsageError("constant schedule must be positive")
        object.__setattr__(self, "param", float(self.param))
        object.__setattr__(self, "clamp_max", float(self.clamp_max))

    def __call__(self, n):
        return eval_schedule(self, n)

    def raw(self, n):
        if self.kind == "pow":
            return np.power(n, self.param, dtype=float)
        if self.kind == "logpow":
            return np.power(np.log1p(np.asarray(n, dtype=float)), self.param)
        return np.full(np.shape(n), self.param, dtype=float)

    def with_clamp(self, clamp_max: float) -> "Schedule":
        return Schedule(self.kind, self.param, clamp_max)

    def __str__(self) -> str:
        return f"{self.kind}:{self.param!r}"


def parse_schedule(text: str, clamp_max: float = 1.0) -> Schedule:
    """Parse ``pow:<a>``, ``logpow:<a>`` or ``const:<v>``; ``<a>`` may be a fraction like ``-1/4``."""
    kind, sep, value = text.strip().partition(":")
    if not sep:
        raise UsageError(f"schedule {text!r} is not of the form kind:value")
    try:
        param = float(Fraction(value.strip()))
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad schedule parameter in {text!r}") from None
    return Schedule(kind.strip().lower(), param, clamp_max)


def eval_schedule(s: Schedule, n):
    """Evaluate ``min(raw(n), clamp_max)``; scalar in, float out, arrays vectorize."""
    if isinstance(n, (int, float)):
        if n < 1:
            raise UsageError("schedules are defined for n >= 1")
        if s.kind == "pow":
            raw = float(n) ** s.param
        elif s.kind == "logpow":
            raw = math.log1p(n) ** s.param
        else:
            raw = s.param
        return min(raw, s.clamp_max)
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise UsageError("schedules are defined for n >= 1")
    out = np.minimum(s.raw(n_arr), s.clamp_max)
    if out.ndim == 0:
        return float(out)
    return out


# --------------------------------------------------------------------------
# Arrival ledger
# --------------------------------------------------------------------------


@dataclass
class ArrivalLedger:
    """Arrival times ``t_j`` for rounds ``1..horizon``.

    ``arrivals[j - 1]`` holds ``t_j`` where ``observed[j - 1]`` is true; the
    other rounds never deliver their reward. ``recorded`` marks which rounds
    have an entry at all, so partially filled ledgers can be detected.
    """

    arrivals: np.ndarray
    observed: np.ndarray
    recorded: np.ndarray = None
    _sorted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.arrivals = np.asarray(self.arrivals, dtype=np.int64)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.recorded is None:
            self.recorded = np.ones(len(self.arrivals), dtype=bool)
        self.recorded = np.asarray(self.recorded, dtype=bool)
        if not (len(self.arrivals) == len(self.observed) == len(self.recorded)):
            raise UsageError("ledger arrays differ in length")
        self.observed = self.observed & self.recorded
        rounds = np.arange(1, len(self.arrivals) + 1)
        if np.any(self.arrivals[self.observed] < rounds[self.observed]):
            raise UsageError("an arrival precedes its round")
        self._sorted = np.sort(self.arrivals[self.observed])

    @classmethod
    def from_mapping(cls, arrivals: Mapping[int, Arrival]) -> "ArrivalLedger":
        horizon = max(arrivals, default=0)
        times = np.zeros(horizon, dtype=np.int64)
        observed = np.zeros(horizon, dtype=bool)
        recorded = np.zeros(horizon, dtype=bool)
        for j, t in arrivals.items():
            if j < 1:
                raise UsageError("round index starts at 1")
            recorded[j - 1] = True
            if t is not NEVER:
                times[j - 1] = t
                observed[j - 1] = True
        return cls(times, observed, recorded)

    @property
    def horizon(self) -> int:
        return len(self.arrivals)

    def arrival(self, j: int) -> Arrival:
        if not (1 <= j <= self.horizon) or not self.recorded[j - 1]:
            raise UsageError(f"no arrival recorded for round {j}")
        return int(self.arrivals[j - 1]) if self.observed[j - 1] else NEVER

    def _check(self, n: int) -> None:
        if n < 0:
            raise UsageError("n must be nonnegative")
        upto = min(n, self.horizon)
        if not self.recorded[:upto].all():
            missing = int(np.argmin(self.recorded[:upto])) + 1
            raise UsageError(f"missing arrival record for round {missing}")

    def tau(self, n: int) -> int:
        self._check(n)
        # t_j >= j, so t_j <= n already implies j <= n.
        return int(np.searchsorted(self._sorted, n, side="right"))

    def observed_set(self, n: int) -> frozenset[int]:
        self._check(n)
        hit = self.observed & (self.arrivals <= n)
        return frozenset(int(j) + 1 for j in np.flatnonzero(hit))

    def arriving_at(self, n: int) -> np.ndarray:
        """Rounds whose reward arrives exactly at time ``n``."""
        return np.flatnonzero(self.observed & (self.arrivals == n)) + 1

    def tau_curve(self, horizon: int | None = None) -> np.ndarray:
        """``tau(n)`` for ``n = 1..horizon`` in one pass."""
        horizon = self.horizon if horizon is None else horizon
        self._check(horizon)
        return np.searchsorted(self._sorted, np.arange(1, horizon + 1), side="right")


def tau(ledger: ArrivalLedger, n: int) -> int:
    """Number of rewards observed by time ``n``."""
    return ledger.tau(n)


def observed_set(ledger: ArrivalLedger, n: int) -> frozenset[int]:
    """Rounds ``j`` whose reward has arrived by time ``n``."""
    return ledger.observed_set(n)


def as_points(x: Union[Context, Sequence[float], np.ndarray]) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))
