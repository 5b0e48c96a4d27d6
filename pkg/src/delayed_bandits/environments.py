"""The four reward-generating setups used in the simulations.

Each setup is a family of one-dimensional functions ``g_i`` on ``[0, 1]``.
In one dimension the mean reward is ``f_i(x) = g_i(x)``; in two dimensions it
is ``f_i(x1, x2) = g_i(x1) * x2``. Observed rewards add ``noise_scale`` times a
standard normal draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Context, UsageError

TWO_PI_10 = 20.0 * np.pi
FIVE_PI = 5.0 * np.pi


def _setup1(x: np.ndarray) -> np.ndarray:
    s = np.sin(TWO_PI_10 * x)
    return np.stack([-2.0 * s + 3.0, -2.0 * s + 2.0])


def _setup2(x: np.ndarray) -> np.ndarray:
    g1 = np.select([x < 0.5, x < 0.6], [np.ones_like(x), -10.0 * x + 6.0], 0.0)
    g2 = np.select([x < 0.5, x < 0.6], [np.zeros_like(x), 10.0 * x - 5.0], 1.0)
    g3 = np.select(
        [x < 0.3, x < 0.4, x < 0.6, x < 0.7],
        [np.zeros_like(x), 20.0 * x - 6.0, np.full_like(x, 2.0), -20.0 * x + 14.0],
        0.0,
    )
    return np.stack([g1, g2, g3])


def _setup3(x: np.ndarray) -> np.ndarray:
    return np.stack([2.0 * np.cos(FIVE_PI * x) + 2.0, -2.0 * np.sin(FIVE_PI * x) + 2.0])


def _setup4(x: np.ndarray) -> np.ndarray:
    g2 = np.select(
        [x < 0.5, x < 0.502, x < 0.503, x < 0.505],
        [np.zeros_like(x), 100000.0 * x - 50000.0, np.full_like(x, 200.0), -100000.0 * x + 50500.0],
        0.0,
    )
    return np.stack([np.ones_like(x), g2])


SETUPS = {1: _setup1, 2: _setup2, 3: _setup3, 4: _setup4}
ARM_COUNTS = {1: 2, 2: 3, 3: 2, 4: 2}


def base_functions(setup: int, x) -> np.ndarray:
    """Values ``g_i(x)`` with shape ``(arms, *x.shape)``."""
    return SETUPS[setup](np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Environment:
    setup: int
    dim: int = 2
    noise_scale: float = 0.5

    def __post_init__(self) -> None:
        if self.setup not in SETUPS:
            raise UsageError(f"setup must be one of 1-4, got {self.setup}")
        if self.dim not in (1, 2):
            raise UsageError(f"dim must be 1 or 2, got {self.dim}")
        if self.noise_scale < 0:
            raise UsageError("noise_scale must be nonnegative")

    @property
    def n_arms(self) -> int:
        return ARM_COUNTS[self.setup]

    def mean_rewards(self, x) -> np.ndarray:
        """All arms' mean rewards at ``x``; a batch of points gives shape ``(arms, batch)``."""
        pts = np.asarray(x, dtype=float)
        if pts.shape[-1] != self.dim:
            raise UsageError(f"context has dimension {pts.shape[-1]}, expected {self.dim}")
        g = base_functions(self.setup, pts[..., 0])
        if self.dim == 2:
            g = g * pts[..., 1]
        return g

    def mean_reward(self, arm: int, x) -> float:
        if not 1 <= arm <= self.n_arms:
            raise UsageError(f"arm must be in 1..{self.n_arms}")
        return float(self.mean_rewards(x)[arm - 1])

    def sample_reward(self, arm: int, x, rng: np.random.Generator) -> float:
        return self.mean_reward(arm, x) + self.noise_scale * rng.standard_normal()

    def best(self, x) -> tuple[int, float]:
        """Best arm (smallest index on ties) and its mean reward."""
        means = self.mean_rewards(x)
        i = int(np.argmax(means))
        return i + 1, float(means[i])

    def sample_context(self, rng: np.random.Generator) -> Context:
        return Context(tuple(rng.random(self.dim)))


def mean_reward(env: Environment, arm: int, x) -> float:
    return env.mean_reward(arm, x)


def sample_reward(env: Environment, arm: int, x, rng: np.random.Generator) -> float:
    return env.sample_reward(arm, x, rng)


def best(env: Environment, x) -> tuple[int, float]:
    return env.best(x)


def sample_context(env: Environment, rng: np.random.Generator) -> Context:
    return env.sample_context(rng)
