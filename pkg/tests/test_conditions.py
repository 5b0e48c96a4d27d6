import math

import numpy as np
import pytest

from delayed_bandits.conditions import ConditionSpec, Trend, classify_condition, condition_value, modulus_of_continuity
from delayed_bandits.core import Schedule, UsageError, parse_schedule
from delayed_bandits.environments import base_functions

IDENTITY = Schedule("pow", 1.0, clamp_max=math.inf)
POINTS = [1e2, 1e3, 1e4, 1e5]


def spec(h, pi, theorem="thm2b", **kw):
    return ConditionSpec(parse_schedule(h), parse_schedule(pi), IDENTITY, theorem=theorem, **kw)


def test_thm2b_diverging_value():
    s = spec("pow:-1/8", "pow:-1/8")
    for n in POINTS:
        assert condition_value(s, n) == pytest.approx(n ** 0.625 / math.log(n), rel=1e-12)
    assert np.all(np.diff(condition_value(s, np.arange(11, 2000))) > 0)
    assert classify_condition(s, POINTS) is Trend.DIVERGES


def test_thm2b_vanishing():
    s = spec("pow:-1", "pow:-1")
    assert condition_value(s, 100.0) == pytest.approx(100.0 ** -2 / math.log(100), rel=1e-12)
    assert classify_condition(s, POINTS) is Trend.VANISHES


def test_constant_schedules_grow_linearly():
    s = spec("const:0.5", "const:0.5")
    assert condition_value(s, 1000.0) == pytest.approx(0.125 * 1000 / math.log(1000))
    assert classify_condition(s, POINTS) is Trend.DIVERGES
    with pytest.raises(UsageError):
        classify_condition(s, [100, 200, 500, 1000])


def test_inconclusive():
    s = spec("pow:-1/2", "pow:-1/4")  # q h pi^2 / log n = 1 / log n: slowly decaying
    assert classify_condition(s, POINTS) is Trend.INCONCLUSIVE


def test_eta1_variant_and_exponents():
    q = Schedule("pow", 0.5, clamp_max=math.inf)
    a = ConditionSpec(parse_schedule("pow:-1/8"), parse_schedule("pow:-1/8"), q, theorem="thm2a")
    b = ConditionSpec(parse_schedule("pow:-1/8"), parse_schedule("pow:-1/8"), q, theorem="thm2b")
    n = 1e4
    assert condition_value(a, n) == pytest.approx(100 ** (7 / 8) * n ** -0.25 / math.log(n))
    assert condition_value(b, n) == pytest.approx(100 ** (5 / 8) / math.log(n))
    c = ConditionSpec(parse_schedule("pow:-1/8"), parse_schedule("pow:-1/8"), q, dim=2, theorem="thm3b")
    assert condition_value(c, n) == pytest.approx(100 * 100 ** -0.5 * 100 ** -0.5 / math.log(n))
    d = ConditionSpec(parse_schedule("pow:-1/8"), parse_schedule("pow:-1/8"), IDENTITY, dim=3, h_exponent=2)
    assert condition_value(d, n) == pytest.approx(n ** (1 - 2 / 8 - 2 / 8) / math.log(n))


def test_condition_errors():
    with pytest.raises(UsageError):
        spec("pow:-1", "pow:-1", theorem="thm4")
    with pytest.raises(UsageError):
        condition_value(spec("pow:-1", "pow:-1"), 1)
    with pytest.raises(UsageError):
        classify_condition(spec("pow:-1", "pow:-1"), [1e2, 1e3, 1e5])


def test_modulus_constant_and_identity():
    assert modulus_of_continuity(lambda x: np.full_like(x, 3.0), 0.3) == 0.0
    assert abs(modulus_of_continuity(lambda x: x, 0.2, grid_resolution=1001) - 0.2) <= 1e-3


def test_modulus_full_range():
    f = lambda x: np.sin(7 * x)
    axis = np.linspace(0, 1, 501)
    assert modulus_of_continuity(f, 1.0, grid_resolution=501) == pytest.approx(np.ptp(f(axis)))


def test_modulus_two_dim():
    f = lambda p: p[:, 0] + 2 * p[:, 1]
    assert modulus_of_continuity(f, 0.1, grid_resolution=101, dim=2) == pytest.approx(0.3)


def test_modulus_lipschitz_bound():
    g1 = lambda x: base_functions(1, x)[0]
    for h in (0.001, 0.005, 0.01):
        w = modulus_of_continuity(g1, h, grid_resolution=20001)
        assert 0 < w <= 2 * 20 * math.pi * h + 1e-12


def test_modulus_errors():
    with pytest.raises(UsageError):
        modulus_of_continuity(lambda x: x, 0.0)
    with pytest.raises(UsageError):
        modulus_of_continuity(lambda x: x, 0.5, grid_resolution=3)
