"""Per-arm nonparametric mean-reward estimators fed only with arrived rewards.

Both estimators keep every arrived observation and recompute predictions from
scratch, because the smoothing scale ``h`` is indexed by the number of observed
rewards and therefore changes whenever new data arrives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import NEVER, Observation, Schedule, UsageError, as_points

DEGENERATE_WEIGHT = 1e-12


class EstimationError(RuntimeError):
    """Raised when an arm has no arrived observations to estimate from."""


def _gaussian(u: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.einsum("ij,ij->i", u, u))


def _box(u: np.ndarray) -> np.ndarray:
    return (np.abs(u).max(axis=1) <= 1.0).astype(float)


def _epanechnikov(u: np.ndarray) -> np.ndarray:
    return np.prod(np.clip(0.75 * (1.0 - u * u), 0.0, None), axis=1)


@dataclass(frozen=True)
class Kernel:
    """A nonnegative product kernel on R^d plus the constants used in the consistency theory.

    ``support`` is the sup-norm radius ``L`` outside of which the kernel
    vanishes (``None`` for unbounded support), ``core`` the radius ``L1``
    inside which it is at least ``floor``; ``lipschitz`` is the sup-norm
    Lipschitz constant in one dimension (``None`` if discontinuous).
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    support: Optional[float]
    core: Optional[float]
    floor: Optional[float]
    peak: float
    lipschitz: Optional[float]

    @property
    def bounded_support(self) -> bool:
        return self.support is not None

    def __call__(self, u) -> np.ndarray:
        return self.func(np.atleast_2d(np.asarray(u, dtype=float)))


KERNELS = {
    "gaussian": Kernel("gaussian", _gaussian, None, None, None, 1.0, math.exp(-0.5)),
    "box": Kernel("box", _box, 1.0, 1.0, 1.0, 1.0, None),
    "epanechnikov": Kernel("epanechnikov", _epanechnikov, 1.0, 0.5, 0.5625, 0.75, 1.5),
}


class _ArrivedData:
    """Pooled storage of arrived observations for all arms, grown by doubling."""

    def __init__(self, n_arms: int, dim: int, capacity: int = 256):
        if n_arms < 1 or dim < 1:
            raise UsageError("need at least one arm and one dimension")
        self.n_arms = n_arms
        self.dim = dim
        self._x = np.empty((capacity, dim))
        self._y = np.empty(capacity)
        self._arm = np.empty(capacity, dtype=np.intp)
        self._size = 0
        self._seen: set[tuple[int, int]] = set()
        self._counts = np.zeros(n_arms, dtype=np.int64)

    def ingest(self, obs: Observation, now: Optional[int] = None) -> None:
        """Add an arrived observation (arms are 1-based)."""
        if obs.arrival is NEVER:
            raise UsageError(f"round {obs.round} was censored and cannot be ingested")
        if now is not None and obs.arrival > now:
            raise UsageError(f"round {obs.round} arrives at {obs.arrival}, after time {now}")
        if not 1 <= obs.arm <= self.n_arms:
            raise UsageError(f"arm {obs.arm} out of range 1..{self.n_arms}")
        key = (obs.arm, obs.round)
        if key in self._seen:
            raise UsageError(f"round {obs.round} already ingested for arm {obs.arm}")
        x = as_points(obs.context)
        if x.shape != (self.dim,):
            raise UsageError(f"context dimension {x.shape} does not match {self.dim}")
        if self._size == len(self._y):
            grow = 2 * len(self._y)
            self._x = np.resize(self._x, (grow, self.dim))
            self._y = np.resize(self._y, grow)
            self._arm = np.resize(self._arm, grow)
        i = self._size
        self._x[i] = x
        self._y[i] = obs.reward
        self._arm[i] = obs.arm - 1
        self._size += 1
        self._seen.add(key)
        self._counts[obs.arm - 1] += 1

    @property
    def size(self) -> int:
        return self._size

    def count(self, arm: int) -> int:
        return int(self._counts[arm - 1])

    @property
    def counts(self) -> np.ndarray:
        return self._counts.copy()

    def arm_means(self) -> np.ndarray:
        k = self._size
        sums = np.bincount(self._arm[:k], self._y[:k], minlength=self.n_arms)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self._counts > 0, sums / self._counts, np.nan)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self._size
        return self._x[:k], self._y[:k], self._arm[:k]


class _Estimator:
    def __init__(self, n_arms: int, dim: int, schedule: Schedule, capacity: int = 256):
        self.schedule = schedule
        self.data = _ArrivedData(n_arms, dim, capacity)

    @property
    def n_arms(self) -> int:
        return self.data.n_arms

    @property
    def dim(self) -> int:
        return self.data.dim

    def ingest(self, obs: Observation, now: Optional[int] = None) -> "_Estimator":
        self.data.ingest(obs, now)
        return self

    def count(self, arm: int) -> int:
        return self.data.count(arm)

    def scale(self, observed_count: int) -> float:
        """Smoothing scale ``h`` at observed-reward count ``observed_count`` (floored at 1)."""
        return self.schedule(max(int(observed_count), 1))

    def predict_all(self, x, observed_count: int) -> np.ndarray:
        """Predictions for every arm at ``x``; arms with no data give NaN."""
        x = as_points(x)
        if x.shape != (self.dim,):
            raise UsageError(f"query dimension {x.shape} does not match {self.dim}")
        if self.data.size == 0:
            return np.full(self.n_arms, np.nan)
        num, den = self._local_sums(x, self.scale(observed_count))
        ok = den > self._threshold
        if ok.all():
            return num / den
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(ok, num / np.where(ok, den, 1.0), self.data.arm_means())

    def predict(self, arm: int, x, observed_count: int) -> float:
        if not 1 <= arm <= self.n_arms:
            raise UsageError(f"arm {arm} out of range 1..{self.n_arms}")
        if self.data.count(arm) == 0:
            raise EstimationError(f"arm {arm} has no arrived observations")
        return float(self.predict_all(x, observed_count)[arm - 1])

    _threshold = 0.0

    def _local_sums(self, x: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class HistogramEstimator(_Estimator):
    """Cell-average estimator on a regular partition of the unit cube.

    At scale ``h`` each axis is cut into ``M = max(1, round(1/h))`` cells of
    width ``1/M``. Cells are half-open ``[a, b)`` except the last one, which
    is closed. Queries in an empty cell fall back to the arm's overall mean.
    """

    @staticmethod
    def cells_per_axis(h: float) -> int:
        return max(1, int(math.floor(1.0 / h + 0.5)))

    @staticmethod
    def cell_index(points: np.ndarray, m: int) -> np.ndarray:
        return np.minimum((np.asarray(points) * m).astype(np.intp), m - 1)

    def _local_sums(self, x, h):
        m = self.cells_per_axis(h)
        xs, ys, arms = self.data.arrays()
        inside = (self.cell_index(xs, m) == self.cell_index(x, m)).all(axis=1)
        num = np.bincount(arms[inside], ys[inside], minlength=self.n_arms)
        den = np.bincount(arms[inside], minlength=self.n_arms).astype(float)
        return num, den


class KernelEstimator(_Estimator):
    """Nadaraya-Watson estimator ``sum_j Y_j K((x - X_j)/h) / sum_j K((x - X_j)/h)``.

    Weight sums at or below ``1e-12`` are treated as empty and fall back to
    the arm's overall mean.
    """

    _threshold = DEGENERATE_WEIGHT

    def __init__(self, n_arms, dim, schedule, kernel: str | Kernel = "gaussian", capacity=256):
        super().__init__(n_arms, dim, schedule, capacity)
        if isinstance(kernel, str):
            if kernel not in KERNELS:
                raise UsageError(f"unknown kernel {kernel!r}")
            kernel = KERNELS[kernel]
        self.kernel = kernel

    def _local_sums(self, x, h):
        xs, ys, arms = self.data.arrays()
        w = self.kernel.func((xs - x) / h)
        num = np.bincount(arms, w * ys, minlength=self.n_arms)
        den = np.bincount(arms, w, minlength=self.n_arms)
        return num, den


def hist_predict(est: HistogramEstimator, arm: int, x, observed_count: int) -> float:
    return est.predict(arm, x, observed_count)


def nw_predict(est: KernelEstimator, arm: int, x, observed_count: int) -> float:
    return est.predict(arm, x, observed_count)


def ingest(est: _Estimator, obs: Observation, now: Optional[int] = None) -> _Estimator:
    return est.ingest(obs, now)
