"""Тесты оценки ATE: прогноз, эффекты, агрегаты, Σ̂₂ и Σ̂(α)."""

import math

import numpy as np
import pytest

from ate_estimator import (
    IID,
    PanelDataset,
    Sigma2Mode,
    aggregate_effects,
    counterfactual_predict,
    design_term,
    estimate_ate,
    fitted_values,
    hcw_estimate,
    per_period_effects,
    r_squared,
    sigma2_hat,
    sigma_hat,
)
from dpd_regression import RegressionFit, RegressionParams, vbeta
from errors import (
    DimensionMismatch,
    InsufficientPostPeriod,
    InsufficientPreperiod,
    InvalidArgument,
    MissingValue,
)
from sim_harness import SimConfig, gen_panel


def _fit(beta, sigma2=1.0, alpha=0.0):
    beta = np.asarray(beta, dtype=float)
    size = beta.shape[0] + 1
    return RegressionFit(
        params=RegressionParams(beta, sigma2), alpha=alpha, objective_value=0.0,
        gradient_norm=0.0, vcov=np.zeros((size, size)), converged=True, iterations=0,
    )


def _tracking_panel(post_gap, t1=12, seed=5):
    """treated = 0.5 + 2·control₁ − control₂ на пре-периоде, плюс post_gap после."""
    gen = np.random.default_rng(seed)
    gap = np.asarray(post_gap, dtype=float)
    total = t1 + gap.shape[0]
    controls = gen.normal(size=(total, 2))
    treated = 0.5 + 2.0 * controls[:, 0] - controls[:, 1]
    treated[t1:] += gap
    return PanelDataset(treated, controls, t1)


# ============================================================================
# ПАНЕЛЬ
# ============================================================================

def test_panel_shape(pure_panel):
    assert pure_panel.t == 120 and pure_panel.t1 == 100 and pure_panel.t2 == 20
    assert pure_panel.n == 3
    assert pure_panel.pre_design().X.shape == (100, 3)
    assert pure_panel.post_design().shape == (20, 3)
    assert pure_panel.control_names == ("control_1", "control_2")


def test_panel_validation():
    treated, controls = np.arange(10.0), np.ones((10, 1)) + np.arange(10.0)[:, None] ** 2
    with pytest.raises(InsufficientPreperiod):
        PanelDataset(treated, controls, 0)
    with pytest.raises(InsufficientPostPeriod):
        PanelDataset(treated, controls, 9)
    with pytest.raises(DimensionMismatch):
        PanelDataset(treated[:9], controls, 5)
    broken = treated.copy()
    broken[3] = np.nan
    with pytest.raises(MissingValue):
        PanelDataset(broken, controls, 5)


# ============================================================================
# ПРОГНОЗ И ЭФФЕКТЫ
# ============================================================================

def test_identity_projection(pure_panel):
    prediction = counterfactual_predict(_fit([0.0, 1.0, 0.0]), pure_panel)
    np.testing.assert_array_equal(prediction, pure_panel.controls[pure_panel.t1:, 0])


def test_constant_prediction(pure_panel):
    prediction = counterfactual_predict(_fit([2.5, 0.0, 0.0]), pure_panel)
    np.testing.assert_array_equal(prediction, np.full(pure_panel.t2, 2.5))


def test_prediction_matches_matrix_product(pure_panel):
    est = hcw_estimate(pure_panel)
    manual = pure_panel.post_design() @ est.fit.beta
    np.testing.assert_allclose(counterfactual_predict(est.fit, pure_panel), manual, atol=1e-12)


def test_prediction_dimension_mismatch(pure_panel):
    with pytest.raises(DimensionMismatch):
        counterfactual_predict(_fit([0.0, 1.0]), pure_panel)


def test_effects_zero_and_unit_gap():
    beta = [0.5, 2.0, -1.0]
    np.testing.assert_allclose(per_period_effects(_tracking_panel(np.zeros(6)), _fit(beta)), 0.0, atol=1e-12)
    np.testing.assert_allclose(per_period_effects(_tracking_panel(np.ones(6)), _fit(beta)), 1.0, atol=1e-12)


def test_hcw_equals_independent_ols(pure_panel):
    X0, y0 = pure_panel.pre_design().X, pure_panel.treated[: pure_panel.t1]
    beta, *_ = np.linalg.lstsq(X0, y0, rcond=None)
    manual = float(np.mean(pure_panel.post_treated - pure_panel.post_design() @ beta))
    assert hcw_estimate(pure_panel).value == pytest.approx(manual, abs=1e-10)


def test_fitted_values_and_r_squared(pure_panel):
    est = estimate_ate(pure_panel, 0.3)
    fitted = fitted_values(pure_panel, est.fit)
    assert fitted.shape == (pure_panel.t,)
    np.testing.assert_allclose(fitted[pure_panel.t1:], counterfactual_predict(est.fit, pure_panel), atol=1e-12)
    r2_pre, r2_post = r_squared(pure_panel, est.fit)
    assert 0.0 < r2_pre < 1.0
    assert r2_post < 1.0


# ============================================================================
# АГРЕГАТЫ
# ============================================================================

@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_constant_effects_give_equal_aggregates(alpha):
    panel = _tracking_panel(np.full(7, 1.25))
    mean = estimate_ate(panel, alpha, "mean")
    median = estimate_ate(panel, alpha, "median")
    assert mean.value == pytest.approx(1.25, abs=1e-8)
    assert median.value == pytest.approx(1.25, abs=1e-8)
    assert median.se_approximate and not mean.se_approximate


def test_median_resists_post_outliers(pure_panel):
    base_mean = estimate_ate(pure_panel, 0.5, "mean")
    base_median = estimate_ate(pure_panel, 0.5, "median")
    effects = base_mean.per_period

    count = (pure_panel.t2 - 1) // 2
    hit = np.argsort(effects)[-count:]
    treated = pure_panel.treated.copy()
    treated[pure_panel.t1 + hit] = 1e6
    dirty = PanelDataset(treated, pure_panel.controls, pure_panel.t1)

    untouched = np.delete(effects, hit)
    moved_median = estimate_ate(dirty, 0.5, "median").value - base_median.value
    moved_mean = estimate_ate(dirty, 0.5, "mean").value - base_mean.value
    assert abs(moved_median) <= untouched.max() - untouched.min()
    assert moved_mean > 1e4


def test_location_equivariance(pure_panel):
    c = 0.75
    base_mean = estimate_ate(pure_panel, 0.3, "mean")
    moved = pure_panel.shifted(c)
    moved_mean = estimate_ate(moved, 0.3, "mean")
    np.testing.assert_allclose(moved_mean.per_period, base_mean.per_period + c, atol=1e-12)
    assert moved_mean.value == pytest.approx(base_mean.value + c, abs=1e-12)
    base_median = aggregate_effects(pure_panel, base_mean.fit, "median")
    moved_median = aggregate_effects(moved, moved_mean.fit, "median")
    assert moved_median.value == pytest.approx(base_median.value + c, abs=1e-12)


def test_mean_and_median_agree_on_clean_data():
    config = SimConfig(t1=100, t2=20, reps=1, seed=99)
    violations = 0
    for rep in range(20):
        panel, _ = gen_panel(config, rep)
        mean = estimate_ate(panel, 0.3, "mean")
        median = aggregate_effects(panel, mean.fit, "median")
        if abs(mean.value - median.value) >= 3.0 * mean.se:
            violations += 1
    assert violations <= 1


def test_unknown_aggregate(pure_panel):
    with pytest.raises(InvalidArgument):
        estimate_ate(pure_panel, 0.0, "trimmed")


# ============================================================================
# ДИСПЕРСИЯ
# ============================================================================

def test_sigma2_of_constant_effects_is_zero():
    effects = np.full(8, 3.0)
    assert sigma2_hat(effects, IID) == 0.0
    assert sigma2_hat(effects, Sigma2Mode("hac", 2)) == 0.0


def test_hac_without_lags_is_iid(pure_panel):
    effects = hcw_estimate(pure_panel).per_period
    assert sigma2_hat(effects, Sigma2Mode("hac", 0)) == sigma2_hat(effects, IID)
    assert sigma2_hat(effects, Sigma2Mode("nw", 0)) == sigma2_hat(effects, IID)


def test_hac_can_be_negative():
    effects = np.array([1.0, -1.0, 1.0, -1.0])
    assert sigma2_hat(effects, Sigma2Mode("hac", 1)) == pytest.approx(-0.5, abs=1e-15)
    assert sigma2_hat(effects, Sigma2Mode("nw", 1)) == pytest.approx(0.25, abs=1e-15)
    assert sigma2_hat(effects, IID) == pytest.approx(1.0, abs=1e-15)


def test_negative_hac_is_clamped():
    panel = _tracking_panel(np.array([1.0, -1.0, 1.0, -1.0]))
    est = estimate_ate(panel, 0.0, "mean", Sigma2Mode("hac", 1))
    assert est.sigma2_clamped
    assert est.sigma2_hat == 0.0
    assert est.sigma_hat == pytest.approx(est.design_term, abs=1e-15)


def test_sigma2_needs_two_effects():
    with pytest.raises(InsufficientPostPeriod):
        sigma2_hat(np.array([1.0]))


def test_sigma2_mode_parsing():
    assert Sigma2Mode.parse("hac:3") == Sigma2Mode("hac", 3)
    assert Sigma2Mode.parse("NW").lag is None
    assert Sigma2Mode.parse("nw").resolve_lag(20) == 2
    assert Sigma2Mode.parse("iid").resolve_lag(20) == 0
    assert Sigma2Mode("hac", None).label() == "hac:auto"
    for bad in ("bogus", "hac:x", "hac:-1"):
        with pytest.raises(InvalidArgument):
            Sigma2Mode.parse(bad)


def test_sigma_hat_matches_raw_sums(pure_panel):
    est = estimate_ate(pure_panel, 0.3)
    X = pure_panel.design()
    x_pre, x_post = X[: pure_panel.t1], X[pure_panel.t1:]
    post_sum = x_post.sum(axis=0)
    quad = post_sum @ np.linalg.inv(x_pre.T @ x_pre) @ post_sum
    effects = est.per_period
    expected = vbeta(0.3) * est.fit.sigma2 * quad / pure_panel.t2 + np.mean((effects - effects.mean()) ** 2)

    assert est.sigma_hat == pytest.approx(expected, rel=1e-10)
    assert sigma_hat(pure_panel, est.fit, effects) == pytest.approx(expected, rel=1e-10)
    assert est.se == pytest.approx(math.sqrt(expected / pure_panel.t2), rel=1e-10)
    assert est.omega == pytest.approx(0.2)
    assert design_term(pure_panel, est.fit) > 0.0
