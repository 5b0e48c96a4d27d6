import math

import numpy as np
import pytest

from delayed_bandits.core import NEVER, UsageError, tau
from delayed_bandits.delays import (
    Geometric,
    MixedHalfNormal,
    NoDelay,
    PeriodicCensoredGeometric,
    QuarteredCensored,
    build_ledger,
    draw_delay,
    expected_delay,
    make_delay,
    quarter_of,
    sample_delays,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def test_geometric_p_one_is_immediate(rng):
    d, obs = sample_delays(Geometric(1.0), np.arange(1, 1001), 1000, rng)
    assert obs.all() and not d.any()


def test_geometric_mean(rng):
    d, _ = sample_delays(Geometric(0.3), np.ones(10**6, dtype=int), 1, rng)
    assert abs(d.mean() - 7 / 3) <= 0.02
    assert d.min() == 0


def test_geometric_support_offset(rng):
    d, _ = sample_delays(Geometric(0.5, support_offset=1), np.ones(1000, dtype=int), 1, rng)
    assert d.min() >= 1


def test_periodic_censoring(rng):
    model = PeriodicCensoredGeometric(5, 0.3)
    assert draw_delay(model, 10, 100, rng) is NEVER
    assert isinstance(draw_delay(model, 11, 100, rng), int)
    for n in (4000, 4003, 8000):
        ledger = build_ledger(model, n, rng)
        assert int((~ledger.observed).sum()) == n // 5


def test_halfnormal_zero_frequency(rng):
    d, obs = sample_delays(MixedHalfNormal(0.7, 1500.0), np.ones(10**6, dtype=int), 1, rng)
    assert obs.all()
    assert abs(np.mean(d == 0) - 0.3) <= 0.002


def test_halfnormal_is_ceiled_magnitude(rng):
    d, _ = sample_delays(MixedHalfNormal(1.0, 2.5), np.ones(10**5, dtype=int), 1, rng)
    assert d.dtype.kind == "i" and d.min() >= 1
    # E ceil(|Z| sigma) lies within half a round of sigma*sqrt(2/pi) + 1/2 on average
    assert abs(d.mean() - expected_delay(MixedHalfNormal(1.0, 2.5))) < 0.05


def test_quarter_boundaries():
    q = quarter_of(np.arange(1, 101), 100)
    assert list(np.bincount(q)) == [25, 25, 25, 25]
    assert quarter_of([1, 8000], 8000).tolist() == [0, 3]
    assert quarter_of([1, 2, 3], 3).tolist() == [0, 1, 2]


def test_quartered_observes_multiples(rng):
    model = QuarteredCensored((10, 15, 20, 25), 0.3)
    n = 4000
    ledger = build_ledger(model, n, rng)
    rounds = np.arange(1, n + 1)
    period = np.array([10, 15, 20, 25])[quarter_of(rounds, n)]
    np.testing.assert_array_equal(ledger.observed, rounds % period == 0)


def test_nodelay_ledger(rng):
    ledger = build_ledger(NoDelay(), 5, rng)
    assert [ledger.arrival(j) for j in range(1, 6)] == [1, 2, 3, 4, 5]
    assert tau(ledger, 5) == 5


def test_full_censoring(rng):
    ledger = build_ledger(PeriodicCensoredGeometric(1, 0.5), 50, rng)
    assert tau(ledger, 50) == 0
    ledger = build_ledger(QuarteredCensored((10**6,) * 4, 0.5), 50, rng)
    assert tau(ledger, 50) == 0


def test_geometric_tau_fraction():
    n = 8000
    fractions = [tau(build_ledger(Geometric(0.3), n, np.random.default_rng(s)), n) / n for s in range(50)]
    assert 0.9 <= np.mean(fractions) <= 1.0


def test_arrivals_never_before_pull(rng):
    for model in (Geometric(0.2), MixedHalfNormal(0.7, 30.0), QuarteredCensored((2, 3, 4, 5), 0.3)):
        ledger = build_ledger(model, 500, rng)
        for j in range(1, 501):
            t = ledger.arrival(j)
            assert t is NEVER or t >= j


def test_expected_delay():
    assert expected_delay(NoDelay()) == 0.0
    assert expected_delay(Geometric(0.3)) == pytest.approx(7 / 3)
    assert expected_delay(MixedHalfNormal(0.7, 1500)) == pytest.approx(0.7 * (1500 * math.sqrt(2 / math.pi) + 0.5))


@pytest.mark.parametrize(
    "name,kind",
    [("none", NoDelay), ("geom", Geometric), ("periodic-geom", PeriodicCensoredGeometric),
     ("halfnormal", MixedHalfNormal), ("quartered", QuarteredCensored)],
)
def test_make_delay(name, kind):
    assert isinstance(make_delay(name), kind)


@pytest.mark.parametrize("bad", [lambda: Geometric(0.0), lambda: Geometric(1.5),
                                 lambda: MixedHalfNormal(1.2, 1.0), lambda: MixedHalfNormal(0.5, 0.0),
                                 lambda: QuarteredCensored((1, 2, 3), 0.3), lambda: make_delay("exp")])
def test_invalid_parameters(bad):
    with pytest.raises(UsageError):
        bad()


def test_rounds_out_of_range(rng):
    with pytest.raises(UsageError):
        sample_delays(Geometric(0.3), [0], 10, rng)
