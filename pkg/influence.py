"""
============================================================================
ФУНКЦИИ ВЛИЯНИЯ MEAN-MDPDE ОЦЕНКИ ATE
============================================================================

Назначение:
    Аналитические функции влияния ATE-функционала при точечном загрязнении
    пре-периода (ограничена по отклику при α > 0) и пост-периода
    (линейна и не ограничена), кривые для графиков и эмпирическая
    чувствительность (переоценка с одним добавленным наблюдением).

Использование:
    from influence import figure_config, if_curve
    curve = if_curve("pre", figure_config(alpha=0.5), np.linspace(-3, 3, 601), sweep="diagonal")

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd

from ate_estimator import AteEstimate, PanelDataset, estimate_ate
from dpd_regression import FitOptions
from errors import AlphaOutOfRange, DimensionMismatch, InvalidArgument, NonPositiveSigma

logger = logging.getLogger(__name__)

KINDS = ("pre", "post")
SWEEPS = ("response", "diagonal")


@dataclass(frozen=True)
class ContaminationPoint:
    """Точка загрязнения (xₜ, y₁ₜ); x[0] = 1, если не снято require_intercept."""

    x: np.ndarray
    y: float
    require_intercept: bool = True

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if self.require_intercept and (x.shape[0] == 0 or x[0] != 1.0):
            raise InvalidArgument("Первая координата x должна быть равна 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))


@dataclass(frozen=True)
class InfluenceCurve:
    grid: np.ndarray
    values: np.ndarray
    alpha: float
    kind: str
    sweep: str = "response"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"alpha": self.alpha, "kind": self.kind,
                             "y": self.grid, "influence": self.values})


@dataclass(frozen=True)
class InfluenceConfig:
    """Подстановки для кривых влияния."""

    beta: np.ndarray
    sigma2: float
    alpha: float
    exx_inv: np.ndarray
    post_mean_x: np.ndarray
    x: np.ndarray
    ate_value: float = 0.0
    t: float = 1.0


# ============================================================================
# АНАЛИТИЧЕСКИЕ ФУНКЦИИ ВЛИЯНИЯ
# ============================================================================

def _check_dims(x: np.ndarray, beta: np.ndarray, exx_inv=None, post_mean_x=None) -> None:
    n = beta.shape[0]
    bad = x.shape[-1] != n
    if exx_inv is not None:
        bad = bad or exx_inv.shape != (n, n) or post_mean_x.shape[0] != n
    if bad:
        raise DimensionMismatch("Размерности x, β и плаг-инов не согласованы", n=n)


def _pre_values(xs: np.ndarray, ys: np.ndarray, beta, sigma2, alpha, exx_inv, post_mean_x):
    resid = ys - xs @ beta
    design = xs @ (exx_inv.T @ post_mean_x)
    weight = np.exp(-alpha * resid ** 2 / (2.0 * sigma2))
    return -((1.0 + alpha) ** 1.5) * resid * weight * design


def if_pre(point: ContaminationPoint, beta, sigma2: float, alpha: float,
           exx_inv, post_mean_x) -> float:
    """
    IF при загрязнении пре-периода:
    −(1+α)^{3/2}·r·exp(−αr²/(2σ²))·post_mean_x′·exx_inv·x, r = y − β′x.
    При α = 0 — неограниченная HCW-функция −r·post_mean_x′·exx_inv·x.
    """
    beta = np.asarray(beta, dtype=float)
    exx_inv = np.atleast_2d(np.asarray(exx_inv, dtype=float))
    post_mean_x = np.asarray(post_mean_x, dtype=float)
    _check_dims(point.x, beta, exx_inv, post_mean_x)
    if not sigma2 > 0:
        raise NonPositiveSigma("sigma2 должна быть положительной", sigma2=sigma2)
    if alpha < 0:
        raise AlphaOutOfRange("α должно быть неотрицательным", alpha=alpha)
    value = _pre_values(point.x[None, :], np.array([point.y]), beta, float(sigma2),
                        float(alpha), exx_inv, post_mean_x)
    return float(value[0])


def if_post(point: ContaminationPoint, beta, ate_value: float) -> float:
    """IF при загрязнении пост-периода: y − x′β − T*."""
    beta = np.asarray(beta, dtype=float)
    _check_dims(point.x, beta)
    return float(point.y - point.x @ beta - ate_value)


def if_curve(kind: str, config: InfluenceConfig, y_grid, sweep: str = "response") -> InfluenceCurve:
    """
    Значения IF на сетке.

    sweep="response": меняется y при фиксированном config.x;
    sweep="diagonal": сетка — значения t, x = (t, …, t), y = t.
    """
    if kind not in KINDS:
        raise InvalidArgument(f"Неизвестный тип загрязнения: {kind}")
    if sweep not in SWEEPS:
        raise InvalidArgument(f"Неизвестный режим развёртки: {sweep}")
    grid = np.asarray(y_grid, dtype=float).reshape(-1)
    beta = np.asarray(config.beta, dtype=float)
    if sweep == "response":
        xs = np.tile(np.asarray(config.x, dtype=float), (grid.shape[0], 1))
    else:
        xs = np.outer(grid, np.ones(beta.shape[0]))
    _check_dims(xs, beta)

    if kind == "pre":
        if not config.sigma2 > 0:
            raise NonPositiveSigma("sigma2 должна быть положительной", sigma2=config.sigma2)
        exx_inv = np.atleast_2d(np.asarray(config.exx_inv, dtype=float))
        post_mean_x = np.asarray(config.post_mean_x, dtype=float)
        _check_dims(xs, beta, exx_inv, post_mean_x)
        values = _pre_values(xs, grid, beta, float(config.sigma2), float(config.alpha),
                             exx_inv, post_mean_x)
    else:
        values = grid - xs @ beta - config.ate_value
    return InfluenceCurve(grid, values, float(config.alpha), kind, sweep)


# ============================================================================
# КОНФИГУРАЦИИ
# ============================================================================

def figure_config(alpha: float, t: float = 1.0) -> InfluenceConfig:
    """
    Стилизованный пример: δ₁ = 2, δ = 4, σ = 2, E(X₀′X₀)⁻¹ = I,
    средний x на пост-периоде (1, 1), точка x = (t, t), y = t.
    """
    return InfluenceConfig(
        beta=np.array([2.0, 4.0]),
        sigma2=4.0,
        alpha=float(alpha),
        exx_inv=np.eye(2),
        post_mean_x=np.ones(2),
        x=np.array([t, t]),
        ate_value=0.0,
        t=float(t),
    )


def config_from_fit(panel: PanelDataset, estimate: AteEstimate,
                    x: Optional[np.ndarray] = None) -> InfluenceConfig:
    """
    Плаг-ины по данным: exx_inv = (T₁⁻¹X₀′X₀)⁻¹, post_mean_x — среднее x
    на пост-периоде, точка x по умолчанию — среднее x на пре-периоде.
    """
    x_all = panel.design()
    x_pre = x_all[: panel.t1]
    exx_inv = np.linalg.inv(x_pre.T @ x_pre / panel.t1)
    return InfluenceConfig(
        beta=estimate.fit.beta,
        sigma2=estimate.fit.sigma2,
        alpha=estimate.alpha,
        exx_inv=exx_inv,
        post_mean_x=x_all[panel.t1:].mean(axis=0),
        x=x_pre.mean(axis=0) if x is None else np.asarray(x, dtype=float),
        ate_value=estimate.value,
    )


# ============================================================================
# ЭМПИРИЧЕСКАЯ ЧУВСТВИТЕЛЬНОСТЬ
# ============================================================================

def empirical_sensitivity(panel: PanelDataset, alpha: float, point: ContaminationPoint,
                          kind: str = "pre", options: Optional[FitOptions] = None) -> float:
    """
    (m+1)·(T(добавлена точка) − T(исходная панель)), где m — длина периода,
    в который добавлено наблюдение. Приближает аналитическую IF.
    """
    if kind not in KINDS:
        raise InvalidArgument(f"Неизвестный тип загрязнения: {kind}")
    if point.x.shape[0] != panel.n:
        raise DimensionMismatch("Размерность точки не совпадает с панелью", n=panel.n)
    base = estimate_ate(panel, alpha, "mean", options=options).value

    at = panel.t1 if kind == "pre" else panel.t
    treated = np.insert(panel.treated, at, point.y)
    controls = np.insert(panel.controls, at, point.x[1:], axis=0)
    t1 = panel.t1 + 1 if kind == "pre" else panel.t1
    augmented = replace(panel, treated=treated, controls=controls, t1=t1, time=None)

    value = estimate_ate(augmented, alpha, "mean", options=options).value
    size = panel.t1 if kind == "pre" else panel.t2
    return (size + 1) * (value - base)
