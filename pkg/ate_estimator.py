"""
============================================================================
ОЦЕНКА СРЕДНЕГО ЭФФЕКТА ВОЗДЕЙСТВИЯ (ATE): MEAN-MDPDE И MEDIAN-MDPDE
============================================================================

Назначение:
    По панели (одна обработанная единица + контрольные) строит робастный
    контрфактический прогноз y₁ₜ⁰ = δ̂₁ + δ̂′ỹₜ на пост-периоде, поэффектные
    оценки Δ̂₁ₜ = y₁ₜ − ŷ₁ₜ⁰ и их агрегат (среднее или медиану) вместе
    с состоятельной оценкой дисперсии Σ̂(α) и стандартной ошибкой.

Возможности:
    - PanelDataset с проверкой разбиения на пре-/пост-период
    - Σ̂₂ в режимах iid, hac(l) (равные веса) и nw(l) (веса Бартлетта)
    - Σ̂(α) = v_β(α)σ̂²T₂⁻¹(Σ_post x)′(Σ_pre xx′)⁻¹(Σ_post x) + Σ̂₂
    - Подогнанные значения и R² на пре- и пост-периоде

Использование:
    from ate_estimator import PanelDataset, estimate_ate
    est = estimate_ate(panel, alpha=0.5, aggregate_kind="median")
    print(est.value, est.se)

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from dpd_regression import (
    STANDARD_NORMAL,
    DesignResponse,
    ErrorDensity,
    FitOptions,
    RegressionFit,
    check_design,
    fit_mdpde,
    variance_factors,
)
from errors import (
    DimensionMismatch,
    InsufficientPostPeriod,
    InsufficientPreperiod,
    InvalidArgument,
    MissingValue,
)

logger = logging.getLogger(__name__)

AGGREGATE_KINDS = ("mean", "median")


# ============================================================================
# ПАНЕЛЬ
# ============================================================================

@dataclass(frozen=True)
class PanelDataset:
    """
    Панель: treated — y₁ₜ (длина T), controls — матрица T×(N−1),
    t1 — число пре-периодов (воздействие начинается в строке t1).
    """

    treated: np.ndarray
    controls: np.ndarray
    t1: int
    time: Optional[np.ndarray] = None
    treated_name: str = "treated"
    control_names: Tuple[str, ...] = ()

    def __post_init__(self):
        treated = np.asarray(self.treated, dtype=float).reshape(-1)
        controls = np.asarray(self.controls, dtype=float)
        if controls.ndim == 1:
            controls = controls[:, None]
        if controls.ndim != 2 or controls.shape[0] != treated.shape[0]:
            raise DimensionMismatch(
                "Число строк controls не совпадает с длиной treated",
                rows=controls.shape[0], length=treated.shape[0],
            )
        if not (np.all(np.isfinite(treated)) and np.all(np.isfinite(controls))):
            raise MissingValue("Панель содержит пропуски или бесконечности")
        t1 = int(self.t1)
        total = treated.shape[0]
        if t1 <= 0:
            raise InsufficientPreperiod("Нет пре-периода", t1=t1)
        if t1 >= total - 1:
            raise InsufficientPostPeriod(
                f"Пост-период должен содержать не меньше 2 наблюдений (T={total}, T₁={t1})",
                t1=t1, t=total,
            )
        names = tuple(self.control_names) or tuple(f"control_{j + 1}" for j in range(controls.shape[1]))
        if len(names) != controls.shape[1]:
            raise DimensionMismatch("Число имён контрольных рядов не совпадает с числом столбцов")
        time = None if self.time is None else np.asarray(self.time)
        if time is not None and time.shape[0] != total:
            raise DimensionMismatch("Длина time не совпадает с T")
        object.__setattr__(self, "treated", treated)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "control_names", names)

    @property
    def t(self) -> int:
        return self.treated.shape[0]

    @property
    def t2(self) -> int:
        return self.t - self.t1

    @property
    def n(self) -> int:
        """Число регрессоров N = 1 + число контрольных единиц."""
        return self.controls.shape[1] + 1

    def design(self) -> np.ndarray:
        return np.column_stack([np.ones(self.t), self.controls])

    def pre_design(self) -> DesignResponse:
        return DesignResponse(self.design()[: self.t1], self.treated[: self.t1])

    def post_design(self) -> np.ndarray:
        return self.design()[self.t1:]

    @property
    def post_treated(self) -> np.ndarray:
        return self.treated[self.t1:]

    def shifted(self, c: float) -> "PanelDataset":
        """Копия панели с treated + c на пост-периоде."""
        treated = self.treated.copy()
        treated[self.t1:] += c
        return PanelDataset(treated, self.controls, self.t1, self.time,
                            self.treated_name, self.control_names)


# ============================================================================
# РЕЖИМЫ Σ̂₂
# ============================================================================

@dataclass(frozen=True)
class Sigma2Mode:
    """
    kind: iid | hac (равные веса при |t−s| ≤ l) | nw (веса Бартлетта 1 − k/(l+1)).
    lag = None означает l = floor(T₂^{1/4}).
    """

    kind: str = "iid"
    lag: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("iid", "hac", "nw"):
            raise InvalidArgument(f"Неизвестный режим Σ₂: {self.kind}")
        if self.lag is not None and int(self.lag) < 0:
            raise InvalidArgument("Число лагов должно быть неотрицательным", lag=self.lag)

    @classmethod
    def parse(cls, text: str) -> "Sigma2Mode":
        """'iid', 'hac', 'hac:3', 'nw:2'."""
        kind, _, lag = str(text).strip().lower().partition(":")
        try:
            return cls(kind, int(lag) if lag else None)
        except ValueError:
            raise InvalidArgument(f"Некорректный режим Σ₂: {text!r}")

    def resolve_lag(self, t2: int) -> int:
        if self.kind == "iid":
            return 0
        if self.lag is not None:
            return int(self.lag)
        return int(math.floor(t2 ** 0.25))

    def label(self) -> str:
        return "iid" if self.kind == "iid" else f"{self.kind}:{'auto' if self.lag is None else self.lag}"


IID = Sigma2Mode()


# ============================================================================
# РЕЗУЛЬТАТ
# ============================================================================

@dataclass(frozen=True)
class AteEstimate:
    alpha: float
    aggregate_kind: str
    per_period: np.ndarray
    value: float
    sigma_hat: float
    sigma2_hat: float
    se: float
    fit: RegressionFit
    sigma2_mode: Sigma2Mode = IID
    omega: float = 0.0
    design_term: float = 0.0
    sigma2_clamped: bool = False
    se_approximate: bool = False

    @property
    def t2(self) -> int:
        return self.per_period.shape[0]

    @property
    def converged(self) -> bool:
        return self.fit.converged


# ============================================================================
# ПРОГНОЗ И ЭФФЕКТЫ
# ============================================================================

def _check_fit_dim(fit: RegressionFit, panel: PanelDataset) -> None:
    if fit.beta.shape[0] != panel.n:
        raise DimensionMismatch(
            "Размерность оценки не совпадает с 1 + числом контрольных рядов",
            beta=fit.beta.shape[0], n=panel.n,
        )


def counterfactual_predict(fit: RegressionFit, panel: PanelDataset) -> np.ndarray:
    """ŷ₁ₜ⁰ = δ̂₁ + δ̂′ỹₜ для t = T₁+1, …, T."""
    _check_fit_dim(fit, panel)
    return fit.beta[0] + panel.controls[panel.t1:] @ fit.beta[1:]


def per_period_effects(panel: PanelDataset, fit: RegressionFit) -> np.ndarray:
    return panel.post_treated - counterfactual_predict(fit, panel)


def fitted_values(panel: PanelDataset, fit: RegressionFit) -> np.ndarray:
    """Подгонка на пре-периоде и контрфактический прогноз на пост-периоде (длина T)."""
    _check_fit_dim(fit, panel)
    return panel.design() @ fit.beta


def r_squared(panel: PanelDataset, fit: RegressionFit) -> Tuple[float, float]:
    """
    R² на пре-периоде и «плацебо» R² контрфактического прогноза на пост-периоде.
    """
    fitted = fitted_values(panel, fit)

    def _r2(y, yhat):
        total = float(np.sum((y - y.mean()) ** 2))
        if total == 0.0:
            return math.nan
        return 1.0 - float(np.sum((y - yhat) ** 2)) / total

    pre = slice(0, panel.t1)
    post = slice(panel.t1, panel.t)
    return _r2(panel.treated[pre], fitted[pre]), _r2(panel.treated[post], fitted[post])


# ============================================================================
# ДИСПЕРСИЯ
# ============================================================================

def sigma2_hat(effects, mode: Sigma2Mode = IID) -> float:
    """
    Σ̂₂: iid — T₂⁻¹Σ(Δ̂₁ₜ − Δ̂₁)²; hac(l) — двойная сумма центрированных
    произведений по |t−s| ≤ l, делённая на T₂; nw(l) — то же с весами Бартлетта.

    Значение hac может быть отрицательным — обрезка делается в estimate_ate.
    """
    e = np.asarray(effects, dtype=float).reshape(-1)
    t2 = e.shape[0]
    if t2 < 2:
        raise InsufficientPostPeriod("Для Σ̂₂ нужно не меньше 2 эффектов", t2=t2)
    c = e - e.mean()
    total = float(c @ c)
    if mode.kind == "iid":
        return total / t2
    lag = min(mode.resolve_lag(t2), t2 - 1)
    for k in range(1, lag + 1):
        weight = 1.0 if mode.kind == "hac" else 1.0 - k / (lag + 1.0)
        total += 2.0 * weight * float(c[:-k] @ c[k:])
    return total / t2


def design_term(panel: PanelDataset, fit: RegressionFit,
                f: Optional[ErrorDensity] = None) -> float:
    """Первое слагаемое Σ̂(α): v_β(α)·σ̂²·T₂⁻¹·(Σ_post x)′(Σ_pre xx′)⁻¹(Σ_post x)."""
    _check_fit_dim(fit, panel)
    x_all = panel.design()
    x_pre = x_all[: panel.t1]
    check_design(x_pre)
    post_sum = x_all[panel.t1:].sum(axis=0)
    quad = float(post_sum @ np.linalg.solve(x_pre.T @ x_pre, post_sum))
    v_b, _ = variance_factors(f or fit.density, fit.alpha)
    return v_b * fit.sigma2 * quad / panel.t2


def _clamped_sigma2(effects, mode: Sigma2Mode) -> Tuple[float, bool]:
    raw = sigma2_hat(effects, mode)
    if raw < 0:
        logger.warning(f"Σ̂₂ = {raw:.6g} < 0 в режиме {mode.label()}, обрезаем до 0")
        return 0.0, True
    return raw, False


def sigma_hat(panel: PanelDataset, fit: RegressionFit, effects,
              mode: Sigma2Mode = IID, f: Optional[ErrorDensity] = None) -> float:
    """Σ̂(α) = первое слагаемое + Σ̂₂ (отрицательная Σ̂₂ обрезается до 0)."""
    s2, _ = _clamped_sigma2(effects, mode)
    return design_term(panel, fit, f) + s2


# ============================================================================
# ОЦЕНКА ATE
# ============================================================================

def estimate_ate(panel: PanelDataset, alpha: float = 0.0, aggregate_kind: str = "mean",
                 sigma2_mode: Sigma2Mode = IID, f: ErrorDensity = STANDARD_NORMAL,
                 options: Optional[FitOptions] = None, strict: bool = False) -> AteEstimate:
    """
    MDPDE на пре-периоде → эффекты на пост-периоде → среднее или медиана.

    Для медианы se считается по той же формуле Σ̂(α) и помечается
    как приближённая (se_approximate=True).

    Raises:
        InsufficientPreperiod, SingularDesign, NoConvergence (strict) — из fit_mdpde
        InsufficientPostPeriod: T₂ < 2
    """
    if aggregate_kind not in AGGREGATE_KINDS:
        raise InvalidArgument(f"Неизвестный тип агрегата: {aggregate_kind}")
    if panel.t2 < 2:
        raise InsufficientPostPeriod("Пост-период короче 2 наблюдений", t2=panel.t2)
    fit = fit_mdpde(panel.pre_design(), alpha, f, options, strict)
    return aggregate_effects(panel, fit, aggregate_kind, sigma2_mode)


def aggregate_effects(panel: PanelDataset, fit: RegressionFit, aggregate_kind: str = "mean",
                      sigma2_mode: Sigma2Mode = IID) -> AteEstimate:
    """Агрегат эффектов и Σ̂(α) по готовой оценке регрессии."""
    if aggregate_kind not in AGGREGATE_KINDS:
        raise InvalidArgument(f"Неизвестный тип агрегата: {aggregate_kind}")
    effects = per_period_effects(panel, fit)
    value = float(effects.mean()) if aggregate_kind == "mean" else float(np.median(effects))

    s2, clamped = _clamped_sigma2(effects, sigma2_mode)
    first = design_term(panel, fit)
    total = first + s2
    logger.debug(f"ATE α={fit.alpha} ({aggregate_kind}): {value:.6g}, Σ̂ = {total:.6g}")

    return AteEstimate(
        alpha=float(fit.alpha),
        aggregate_kind=aggregate_kind,
        per_period=effects,
        value=value,
        sigma_hat=total,
        sigma2_hat=s2,
        se=math.sqrt(total / panel.t2),
        fit=fit,
        sigma2_mode=sigma2_mode,
        omega=panel.t2 / panel.t1,
        design_term=first,
        sigma2_clamped=clamped,
        se_approximate=aggregate_kind == "median",
    )


def hcw_estimate(panel: PanelDataset, sigma2_mode: Sigma2Mode = IID) -> AteEstimate:
    """Классическая HCW-оценка (МНК, среднее)."""
    return estimate_ate(panel, 0.0, "mean", sigma2_mode)
