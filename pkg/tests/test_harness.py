import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delayed_bandits.core import UsageError
from delayed_bandits.harness import (
    CSV_COLUMNS,
    AggregateCurve,
    ExperimentConfig,
    aggregate,
    derive_seed,
    emit_csv,
    emit_svg,
    paper_grid,
    preset_config,
    read_csv,
    run_experiment,
    run_replication,
    splitmix64,
    sweep,
)

SMALL = dict(horizon=200, replications=3, init="fixed:10")


def test_splitmix64_reference_values():
    # First outputs of the reference generator seeded with 0.
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_derive_seed_distinct():
    seeds = {derive_seed(7, r, s) for r in range(100) for s in range(4)}
    assert len(seeds) == 400
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)


def test_near_greedy_regret_small():
    cfg = ExperimentConfig(setup=1, delay="none", pi="const:1e-12", horizon=1000, replications=2)
    assert run_experiment(cfg).final_regret < 0.1


def test_single_replication_std_zero():
    curve = run_experiment(ExperimentConfig(**{**SMALL, "replications": 1}))
    assert curve.std_avg_regret.shape == (200,)
    assert not curve.std_avg_regret.any()


def test_aggregate_matches_numpy():
    cfg = ExperimentConfig(delay="geom", **SMALL)
    curves = [run_replication(cfg, r).regret_curve() for r in range(3)]
    agg = run_experiment(cfg)
    np.testing.assert_allclose(agg.mean_avg_regret, np.mean(curves, axis=0), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(agg.std_avg_regret, np.std(curves, axis=0), rtol=1e-9, atol=1e-12)
    assert np.all(agg.std_avg_regret >= 0)


def test_replication_order_does_not_change_mean():
    cfg = ExperimentConfig(delay="halfnormal", delay_sigma=20.0, **SMALL)
    a = run_experiment(cfg, reps=[0, 1, 2])
    b = run_experiment(cfg, reps=[2, 0, 1])
    np.testing.assert_allclose(a.mean_avg_regret, b.mean_avg_regret, rtol=1e-12, atol=1e-15)


def test_workers_do_not_change_output(tmp_path):
    cfg = ExperimentConfig(delay="quartered", **SMALL)
    p1 = emit_csv(run_experiment(cfg, workers=1), tmp_path / "a.csv")
    p2 = emit_csv(run_experiment(cfg, workers=3), tmp_path / "b.csv")
    assert p1.read_bytes() == p2.read_bytes()


def test_common_random_numbers():
    base = ExperimentConfig(setup=3, delay="geom", **SMALL)
    t1 = run_replication(base.replace(strategy="eta1"), 0)
    t2 = run_replication(base.replace(strategy="eta2"), 0)
    np.testing.assert_array_equal(t1.optimal_value, t2.optimal_value)
    np.testing.assert_array_equal(t1.tau, t2.tau)
    off = base.replace(common_random_numbers=False)
    t3 = run_replication(off.replace(strategy="eta1"), 0)
    t4 = run_replication(off.replace(strategy="eta2"), 0)
    assert not np.array_equal(t3.optimal_value, t4.optimal_value)


def test_csv_shape_and_round_trip(tmp_path):
    curve = AggregateCurve(np.array([0.5, 0.25, 1 / 3]), np.zeros(3), np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5, 0.1]))
    path = emit_csv(curve, tmp_path / "c.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert len(lines) == 4 and lines[0] == ",".join(CSV_COLUMNS)
    back = read_csv(path)
    for name in ("mean_avg_regret", "std_avg_regret", "mean_tau", "exploration_rate"):
        np.testing.assert_allclose(getattr(back, name), getattr(curve, name), atol=1e-12)


def test_svg_polylines(tmp_path):
    curves = [AggregateCurve(np.linspace(1, 0.1, 50), np.zeros(50), np.zeros(50), np.zeros(50)) for _ in range(2)]
    text = emit_svg(curves, tmp_path / "p.svg", labels=["eta1", "eta<2>"]).read_text()
    assert text.count("<polyline") == 2
    assert "eta&lt;2&gt;" in text
    with pytest.raises(UsageError):
        emit_svg([], tmp_path / "q.svg")


def test_unwritable_path(tmp_path):
    curve = AggregateCurve(np.ones(2), np.zeros(2), np.zeros(2), np.zeros(2))
    with pytest.raises(OSError):
        emit_csv(curve, tmp_path / "missing" / "c.csv")


def test_sweep_outputs(tmp_path):
    grid = [ExperimentConfig(strategy=s, **SMALL) for s in ("eta1", "eta2")]
    outcomes = sweep(grid, out_dir=tmp_path)
    assert all(o.ok for o in outcomes)
    assert sorted(p.name for p in tmp_path.glob("*.csv")) == sorted(
        [o.path.name for o in outcomes] + ["combined.csv"])
    svgs = list(tmp_path.glob("*.svg"))
    assert len(svgs) == 1 and svgs[0].read_text().count("<polyline") == 2
    combined = (tmp_path / "combined.csv").read_text().splitlines()
    assert len(combined) == 1 + 2 * 200


def test_sweep_reports_failures(tmp_path):
    good = ExperimentConfig(**SMALL)
    stall = ExperimentConfig(delay="periodic-geom", delay_period=1, init="until-reward", horizon=2000, replications=1)
    outcomes = sweep([stall, good], out_dir=tmp_path, svg=False)
    assert not outcomes[0].ok and outcomes[1].ok
    assert (tmp_path / "combined.csv").exists()


def test_empty_sweep():
    with pytest.raises(UsageError):
        sweep([])


def test_paper_grid_size():
    grid = paper_grid(preset_config("paper-desk"))
    assert len(grid) == 16 and len({c.label() for c in grid}) == 16
    assert len({c.panel() for c in grid}) == 8


def test_presets():
    assert preset_config("paper-desk").horizon == 4000
    p = preset_config("paper")
    assert (p.horizon, p.replications) == (8000, 60)
    with pytest.raises(UsageError):
        preset_config("huge")


@pytest.mark.parametrize("bad", [dict(replications=0), dict(horizon=10, init="fixed:30"), dict(setup=7),
                                 dict(estimator="knn"), dict(delay="weibull"), dict(pi="pow"), dict(strategy="eta3")])
def test_invalid_configs(bad):
    with pytest.raises((UsageError, ValueError)):
        ExperimentConfig(**bad)


def test_unknown_config_key():
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"setup": 1, "colour": "red"})


configs = st.builds(
    ExperimentConfig,
    setup=st.sampled_from([1, 2, 3, 4]),
    dim=st.sampled_from([1, 2]),
    noise=st.floats(0, 2),
    delay=st.sampled_from(["none", "geom", "periodic-geom", "halfnormal", "quartered"]),
    delay_p=st.floats(0.01, 1),
    delay_periods=st.lists(st.integers(1, 50), min_size=4, max_size=4),
    strategy=st.sampled_from(["eta1", "eta2"]),
    estimator=st.sampled_from(["nw", "hist"]),
    kernel=st.sampled_from(["gaussian", "box", "epanechnikov"]),
    pi=st.sampled_from(["logpow:-1", "pow:-1/4", "const:0.05"]),
    horizon=st.integers(30, 10**5),
    replications=st.integers(1, 100),
    master_seed=st.integers(0, 2**63),
    common_random_numbers=st.booleans(),
)


@settings(max_examples=100)
@given(configs)
def test_config_round_trip(cfg):
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_config_file(tmp_path):
    cfg = preset_config("paper-desk", setup=3, delay="quartered")
    cfg.save(tmp_path / "c.json")
    assert ExperimentConfig.load(tmp_path / "c.json") == cfg
