"""Тесты Монте-Карло: генерация панелей, истинные параметры, воспроизводимость отчётов."""

import math

import numpy as np
import pandas as pd
import pytest

from dpd_regression import ols_fit, vbeta
from errors import ConfigError
from sim_harness import (
    EFFECT_MEAN,
    FACTOR_VAR,
    Contamination,
    SimConfig,
    _ar1,
    gen_panel,
    population_parameters,
    replicate,
    replication_rng,
    run_bias_mse,
    run_power,
    run_variance_law,
    theoretical_sigma,
)


def _small(**overrides):
    params = dict(t1=60, t2=10, reps=6, seed=7, alphas=(0.3,))
    params.update(overrides)
    return SimConfig(**params)


# ============================================================================
# ГЕНЕРАЦИЯ ДАННЫХ
# ============================================================================

def test_zero_rate_is_pure_data():
    pure = SimConfig(reps=1, seed=11)
    zero = SimConfig(reps=1, seed=11, contamination=Contamination("pre", 0.0))
    for rep in range(3):
        a, ate_a = gen_panel(pure, rep)
        b, ate_b = gen_panel(zero, rep)
        np.testing.assert_array_equal(a.treated, b.treated)
        np.testing.assert_array_equal(a.controls, b.controls)
        assert ate_a == ate_b


@pytest.mark.parametrize("period, count", [("pre", 20), ("post", 4)])
def test_contamination_touches_only_treated_points(period, count):
    pure = SimConfig(reps=1, seed=11)
    dirty = SimConfig(reps=1, seed=11, contamination=Contamination(period, 0.2))
    a, ate_a = gen_panel(pure, 4)
    b, ate_b = gen_panel(dirty, 4)
    np.testing.assert_array_equal(a.controls, b.controls)
    assert ate_a == ate_b
    changed = np.flatnonzero(a.treated != b.treated)
    assert changed.shape[0] == count
    if period == "pre":
        assert np.all(changed < a.t1)
    else:
        assert np.all(changed >= a.t1)


def test_ar1_stationary_variance():
    series = _ar1(replication_rng(3, 0), 100_000, 1.0, FACTOR_VAR)
    assert np.var(series) == pytest.approx(4.0 / 3.0, rel=0.05)


def test_true_effect_range_and_shift():
    config = SimConfig(reps=1, seed=5)
    ates = []
    for rep in range(30):
        _, ate = gen_panel(config, rep)
        assert 1.0 < ate < 2.0
        ates.append(ate)
    assert np.mean(ates) == pytest.approx(EFFECT_MEAN, abs=0.05)
    _, base = gen_panel(config, 0)
    _, moved = gen_panel(config, 0, shift=0.5)
    assert moved == pytest.approx(base + 0.5, abs=1e-12)


def test_target_mean_centres_realized_effects():
    config = SimConfig(reps=1, seed=5)
    for rep in range(5):
        plain, ate = gen_panel(config, rep)
        centred, centred_ate = gen_panel(config, rep, target_mean=0.25)
        assert centred_ate == pytest.approx(0.25, abs=1e-12)
        t1 = plain.t1
        np.testing.assert_array_equal(plain.treated[:t1], centred.treated[:t1])
        np.testing.assert_array_equal(plain.controls, centred.controls)
        gap = plain.treated[t1:] - centred.treated[t1:]
        np.testing.assert_allclose(gap, ate - 0.25, atol=1e-12)


def test_replication_streams():
    a = replication_rng(42, 0).standard_normal(5)
    b = replication_rng(42, 0).standard_normal(5)
    c = replication_rng(42, 1).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


# ============================================================================
# ИСТИННЫЕ ПАРАМЕТРЫ
# ============================================================================

def test_population_parameters_two_controls():
    pop = population_parameters(2)
    np.testing.assert_allclose(pop.beta, [3 / 11, 4 / 11, 4 / 11], rtol=1e-12)
    assert pop.sigma2 == pytest.approx(15 / 11, rel=1e-12)
    assert pop.long_run_variance == pytest.approx(189 / 121, rel=1e-12)
    assert pop.quad == pytest.approx(1.0, rel=1e-10)


def test_population_beta_matches_large_sample_ols():
    panel, _ = gen_panel(SimConfig(t1=20_000, t2=2, reps=1, seed=17), 0)
    fit = ols_fit(panel.pre_design())
    pop = population_parameters(2)
    np.testing.assert_allclose(fit.beta, pop.beta, atol=0.05)
    assert fit.sigma2 == pytest.approx(pop.sigma2, rel=0.05)


def test_theoretical_sigma():
    config = SimConfig(t1=400, t2=320, reps=1)
    assert theoretical_sigma(config, 0.0) == pytest.approx(0.8 * 15 / 11 + 189 / 121, rel=1e-12)
    expected = vbeta(0.3) * 0.8 * 15 / 11 + 189 / 121
    assert theoretical_sigma(config, 0.3) == pytest.approx(expected, rel=1e-12)


# ============================================================================
# КОНФИГУРАЦИЯ
# ============================================================================

def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(reps=0)
    with pytest.raises(ConfigError):
        Contamination("pre", 1.5)
    with pytest.raises(ConfigError):
        Contamination("during", 0.1)
    with pytest.raises(ConfigError):
        SimConfig(estimators=("did",))
    with pytest.raises(ConfigError):
        SimConfig(t1=3)


def test_cells_order():
    config = SimConfig(alphas=(0.1, 0.5), reps=1)
    assert config.cells() == [
        ("hcw", 0.0),
        ("mean_mdpde", 0.1), ("mean_mdpde", 0.5),
        ("median_mdpde", 0.1), ("median_mdpde", 0.5),
    ]
    assert Contamination("post", 0.2).label() == "post:0.2"
    assert Contamination().label() == "none"


# ============================================================================
# РЕПЛИКАЦИИ И ОТЧЁТЫ
# ============================================================================

def test_zero_alpha_mean_equals_hcw():
    result = replicate(_small(alphas=(0.0, 0.3)), 2)
    assert result["values"][("mean_mdpde", 0.0)] == pytest.approx(result["values"][("hcw", 0.0)], abs=1e-10)


def test_power_replication_null_is_realized_mean():
    config = _small(estimators=("hcw",))
    for rep in range(3):
        result = replicate(config, rep, delta_grid=(0.0, 0.5), delta0=0.0)
        assert result["true_ate"] == pytest.approx(0.0, abs=1e-12)
        assert len(result["rejections"][("hcw", 0.0)]) == 2
    plain = replicate(config, 0)
    centred = replicate(config, 0, delta_grid=(plain["true_ate"],), delta0=plain["true_ate"])
    assert centred["values"][("hcw", 0.0)] == pytest.approx(plain["values"][("hcw", 0.0)], abs=1e-10)


def test_report_independent_of_worker_count():
    serial = run_bias_mse(_small(workers=1)).to_frame()
    parallel = run_bias_mse(_small(workers=2)).to_frame()
    pd.testing.assert_frame_equal(serial, parallel)


def test_bias_report():
    report = run_bias_mse(_small(contamination=Contamination("pre", 0.2)))
    frame = report.to_frame()
    assert list(frame["estimator"]) == ["hcw", "mean_mdpde", "median_mdpde"]
    assert set(frame["contamination"]) == {"pre:0.2"}
    for cell in report.cells:
        assert cell.reps_used + cell.failures == 6
        assert cell.mse >= cell.bias ** 2 - 1e-12


def test_power_report():
    report = run_power(_small(), delta0=0.0, delta_grid=(0.0, 6.0))
    frame = report.to_frame()
    assert len(frame) == 3 * 2
    for cell in report.cells:
        assert len(cell.rejection_rates) == 2
        assert 0.0 <= cell.rejection_rates[0] <= 1.0
        assert cell.rejection_rates[1] == 1.0
    assert report.cell("hcw", 0.0).reps_used == 6


def test_variance_report():
    frame = run_variance_law(_small(estimators=("hcw", "mean_mdpde"))).to_frame()
    assert list(frame["estimator"]) == ["hcw", "mean_mdpde"]
    assert np.all(frame["variance"] > 0)
    assert np.all(np.isfinite(frame["ratio"]))
    assert frame["theoretical_sigma"].iloc[0] == pytest.approx(theoretical_sigma(_small(), 0.0))
    assert not math.isnan(frame["theoretical_sigma"].iloc[1])
