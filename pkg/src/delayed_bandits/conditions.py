"""Numerical checks of the consistency-condition sequences and the modulus of continuity.

Each theorem variant is a sequence in ``n`` that must diverge for the
corresponding strong-consistency guarantee. ``classify_condition`` only looks
at the trend over a handful of sample points; it is a diagnostic, not a proof.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import Schedule, UsageError

THEOREMS = ("thm2a", "thm2b", "thm3a", "thm3b")

DIVERGE_FACTOR = 10.0
VANISH_FACTOR = 0.1
MIN_POINTS = 4
MIN_DECADES = 3


class Trend(enum.Enum):
    DIVERGES = "diverges"
    VANISHES = "vanishes"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ConditionSpec:
    """Schedules and growth rate entering a consistency condition.

    ``h_exponent`` overrides the power on ``h_{q(n)}`` for the histogram
    conditions (``thm2a``/``thm2b``). By default it is the dimension ``d``;
    pass 2 to evaluate the alternative ``h^2`` form.
    """

    h: Schedule
    pi: Schedule
    q: Schedule
    dim: int = 1
    theorem: str = "thm2b"
    h_exponent: Optional[float] = None

    def __post_init__(self) -> None:
        if self.theorem not in THEOREMS:
            raise UsageError(f"theorem must be one of {THEOREMS}")
        if self.dim < 1:
            raise UsageError("dim must be >= 1")


def condition_value(spec: ConditionSpec, n):
    """Value of the condition sequence at ``n >= 2`` (vectorizes over arrays)."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 2):
        raise UsageError("condition sequences are evaluated for n >= 2")
    qn = np.maximum(np.asarray(spec.q(n_arr), dtype=float), 1.0)
    h_q = spec.h(qn)
    lazy = spec.theorem.endswith("a")  # eta1 variants use pi_n, eta2 variants pi_{q(n)}
    pi_val = spec.pi(n_arr) if lazy else spec.pi(qn)
    if spec.theorem.startswith("thm2"):
        e = spec.dim if spec.h_exponent is None else spec.h_exponent
        out = np.power(h_q, e) * np.power(pi_val, 2) * qn / np.log(n_arr)
    else:
        out = qn * np.power(h_q, 2 * spec.dim) * np.power(pi_val, 4) / np.log(n_arr)
    return float(out) if np.ndim(out) == 0 else out


def classify_condition(spec: ConditionSpec, sample_points: Sequence[float]) -> Trend:
    """Classify the trend of the condition over increasing sample points.

    Needs at least four points spanning at least three decades. The sequence
    counts as diverging when it strictly increases and grows by a factor of
    10 or more end to end, and as vanishing when it strictly decreases to a
    tenth or less.
    """
    pts = np.asarray(sample_points, dtype=float)
    if pts.size < MIN_POINTS:
        raise UsageError(f"need at least {MIN_POINTS} sample points")
    if np.any(np.diff(pts) <= 0):
        raise UsageError("sample points must be strictly increasing")
    if math.log10(pts[-1] / pts[0]) < MIN_DECADES - 1e-9:
        raise UsageError(f"sample points must span at least {MIN_DECADES} decades")
    values = np.asarray(condition_value(spec, pts))
    ratio = values[-1] / values[0]
    steps = np.diff(values)
    if np.all(steps > 0) and ratio >= DIVERGE_FACTOR:
        return Trend.DIVERGES
    if np.all(steps < 0) and ratio <= VANISH_FACTOR:
        return Trend.VANISHES
    return Trend.INCONCLUSIVE


def modulus_of_continuity(
    f: Callable[[np.ndarray], np.ndarray], h: float, grid_resolution: int = 101, dim: int = 1
) -> float:
    """Grid approximation (from below) of ``sup |f(x1) - f(x2)|`` over ``|x1k - x2k| <= h``.

    ``f`` is evaluated once on a regular grid with ``grid_resolution`` points
    per axis; for ``dim == 1`` it receives a 1-D array, otherwise an array of
    shape ``(points, dim)``. Any two grid points within ``h`` of each other
    coordinatewise fit in one window of ``k + 1`` points per axis, so the
    supremum is the largest window range.
    """
    if not 0 < h <= 1:
        raise UsageError("h must lie in (0, 1]")
    if grid_resolution < 10:
        raise UsageError("grid_resolution must be >= 10")
    axis = np.linspace(0.0, 1.0, grid_resolution)
    if dim == 1:
        values = np.asarray(f(axis), dtype=float).reshape(grid_resolution)
    else:
        mesh = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1)
        values = np.asarray(f(mesh.reshape(-1, dim)), dtype=float).reshape((grid_resolution,) * dim)
    k = int(math.floor(h * (grid_resolution - 1) + 1e-9))
    windows = sliding_window_view(values, (k + 1,) * dim)
    tail = tuple(range(dim, 2 * dim))
    return float(np.max(windows.max(axis=tail) - windows.min(axis=tail)))
