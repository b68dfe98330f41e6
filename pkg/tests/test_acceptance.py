"""
Приёмочные прогоны Монте-Карло (долгие, запуск: pytest -m slow).

Число процессов берётся из MDPDE_WORKERS (.env).
"""

import pytest

import settings
from ate_estimator import Sigma2Mode
from sim_harness import Contamination, SimConfig, run_bias_mse, run_power, run_variance_law

pytestmark = pytest.mark.slow


def _config(**overrides):
    params = dict(t1=100, t2=20, reps=2500, seed=settings.DEFAULT_SEED, workers=settings.WORKERS)
    params.update(overrides)
    return SimConfig(**params)


def test_pure_data_bias_and_mse():
    report = run_bias_mse(_config(alphas=(0.5,), estimators=("hcw", "mean_mdpde")))
    hcw = report.cell("hcw", 0.0)
    assert hcw.bias == pytest.approx(0.0116, abs=0.015)
    assert hcw.mse == pytest.approx(0.0954, abs=0.015)
    assert report.cell("mean_mdpde", 0.5).mse == pytest.approx(0.0986, abs=0.015)


def test_pre_contamination_robustness():
    report = run_bias_mse(_config(
        alphas=(1.0,), estimators=("hcw", "mean_mdpde"), contamination=Contamination("pre", 0.2),
    ))
    assert -1.08 <= report.cell("hcw", 0.0).bias <= -0.91
    robust = report.cell("mean_mdpde", 1.0)
    assert abs(robust.bias) <= 0.10
    assert robust.mse <= 0.20


def test_post_contamination_mean_versus_median():
    report = run_bias_mse(_config(
        alphas=(0.1,), estimators=("mean_mdpde", "median_mdpde"), contamination=Contamination("post", 0.2),
    ))
    assert 0.90 <= report.cell("mean_mdpde", 0.1).bias <= 1.10
    assert 0.32 <= report.cell("median_mdpde", 0.1).bias <= 0.48


def test_variance_law():
    report = run_variance_law(_config(t1=400, t2=320, reps=1000, alphas=(0.3,), estimators=("hcw", "mean_mdpde")))
    for estimator, alpha in (("hcw", 0.0), ("mean_mdpde", 0.3)):
        cell = report.cell(estimator, alpha)
        assert cell.variance == pytest.approx(cell.theoretical, rel=0.15)


def test_size_on_pure_data():
    report = run_power(
        _config(t1=400, t2=100, reps=5000, alphas=(0.3, 1.0), estimators=("hcw", "mean_mdpde"),
                sigma2_mode=Sigma2Mode("hac")),
        delta0=0.0, delta_grid=(0.0,),
    )
    for estimator, alpha in (("hcw", 0.0), ("mean_mdpde", 0.3), ("mean_mdpde", 1.0)):
        size = report.cell(estimator, alpha).rejection_rates[0]
        assert 0.035 <= size <= 0.065


def test_power_far_from_null():
    report = run_power(
        _config(t1=400, t2=100, reps=500, alphas=(0.5,), estimators=("hcw", "mean_mdpde"),
                sigma2_mode=Sigma2Mode("hac")),
        delta0=0.0, delta_grid=(1.0,),
    )
    assert report.cell("hcw", 0.0).rejection_rates[0] >= 0.99
    assert report.cell("mean_mdpde", 0.5).rejection_rates[0] >= 0.99


def test_size_under_pre_contamination():
    report = run_power(
        _config(t1=400, t2=100, reps=5000, alphas=(0.5, 1.0), estimators=("hcw", "mean_mdpde"),
                contamination=Contamination("pre", 0.1), sigma2_mode=Sigma2Mode("hac")),
        delta0=0.0, delta_grid=(0.0,),
    )
    assert report.cell("hcw", 0.0).rejection_rates[0] > 0.10
    assert report.cell("mean_mdpde", 0.5).rejection_rates[0] <= 0.08
    assert report.cell("mean_mdpde", 1.0).rejection_rates[0] <= 0.08
