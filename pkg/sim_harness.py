"""
============================================================================
МОНТЕ-КАРЛО: СМЕЩЕНИЕ, MSE, МОЩНОСТЬ И ЗАКОН ДИСПЕРСИИ
============================================================================

Назначение:
    Генерация панелей факторной модели (один обработанный и n_controls
    контрольных рядов, AR(1)-фактор, логистический эффект воздействия)
    с опциональным загрязнением и прогон оценок ATE по сетке α.

Возможности:
    - Детерминированные потоки случайных чисел на репликацию
      (SeedSequence(seed, spawn_key=(rep,)) + Philox), результат не
      зависит от числа процессов
    - Загрязнение пре- или пост-периода: u₁ₜ ~ N(5, 1) в случайных точках
    - Таблицы bias/MSE, эмпирическая мощность, сравнение дисперсии с Σ(α)
    - Параллельный прогон пачками через ProcessPoolExecutor

Использование:
    from sim_harness import SimConfig, Contamination, run_bias_mse
    report = run_bias_mse(SimConfig(reps=500, contamination=Contamination("pre", 0.2)))
    print(report.to_frame())

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import signal
from scipy.special import expit

from ate_estimator import IID, PanelDataset, Sigma2Mode, aggregate_effects
from dpd_regression import fit_mdpde, vbeta
from errors import ConfigError, MdpdeError
from hypothesis_tests import normalize_alternative, one_sample_test
from settings import DEFAULT_SEED

logger = logging.getLogger(__name__)

# ============================================================================
# ПАРАМЕТРЫ МОДЕЛИ ДАННЫХ
# ============================================================================

AR_COEF = 0.5
FACTOR_VAR = 1.0 / (1.0 - AR_COEF ** 2)          # 4/3
EFFECT_INNOV_SD = 0.5                             # ε ~ N(0, 0.25)
EFFECT_VAR = EFFECT_INNOV_SD ** 2 / (1.0 - AR_COEF ** 2)   # 1/3
EFFECT_MEAN = 1.5                                 # E[expit(z)] + 1
OUTLIER_MEAN = 5.0
OUTLIER_SD = 1.0

ESTIMATORS = ("hcw", "mean_mdpde", "median_mdpde")
PERIODS = ("none", "pre", "post")


# ============================================================================
# КОНФИГУРАЦИЯ
# ============================================================================

@dataclass(frozen=True)
class Contamination:
    """period: none | pre | post; rate — доля загрязнённых точек периода."""

    period: str = "none"
    rate: float = 0.0

    def __post_init__(self):
        if self.period not in PERIODS:
            raise ConfigError(f"Неизвестный период загрязнения: {self.period}")
        rate = float(self.rate)
        if not 0.0 <= rate < 1.0:
            raise ConfigError("Доля загрязнения должна лежать в [0, 1)", rate=rate)
        object.__setattr__(self, "rate", rate)

    @property
    def active(self) -> bool:
        return self.period != "none" and self.rate > 0

    def label(self) -> str:
        return "none" if not self.active else f"{self.period}:{self.rate:g}"


@dataclass(frozen=True)
class SimConfig:
    t1: int = 100
    t2: int = 20
    n_controls: int = 2
    reps: int = 2500
    seed: int = DEFAULT_SEED
    contamination: Contamination = field(default_factory=Contamination)
    alphas: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 1.0)
    estimators: Tuple[str, ...] = ESTIMATORS
    sigma2_mode: Sigma2Mode = IID
    workers: int = 1
    level: float = 0.05
    alternative: str = "two_sided"

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("Число репликаций должно быть ≥ 1", reps=self.reps)
        if self.n_controls < 1:
            raise ConfigError("Нужна хотя бы одна контрольная единица", n_controls=self.n_controls)
        if self.t1 <= self.n_controls + 2:
            raise ConfigError("Пре-период слишком короткий", t1=self.t1)
        if self.t2 < 2:
            raise ConfigError("Пост-период должен содержать ≥ 2 наблюдений", t2=self.t2)
        if self.seed < 0:
            raise ConfigError("seed должен быть неотрицательным", seed=self.seed)
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"Неизвестные оценки: {sorted(unknown)}")
        if any(a < 0 for a in self.alphas):
            raise ConfigError("α должны быть неотрицательными")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("Уровень значимости должен лежать в (0, 1)", level=self.level)
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "alternative", normalize_alternative(self.alternative))

    def cells(self) -> List[Tuple[str, float]]:
        """Ячейки таблицы (оценка, α) в фиксированном порядке."""
        cells = []
        for estimator in ESTIMATORS:
            if estimator not in self.estimators:
                continue
            if estimator == "hcw":
                cells.append(("hcw", 0.0))
            else:
                cells.extend((estimator, a) for a in self.alphas)
        return cells


# ============================================================================
# ГЕНЕРАЦИЯ ДАННЫХ
# ============================================================================

def replication_rng(seed: int, rep_index: int) -> np.random.Generator:
    """Независимый поток для репликации rep_index."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(rep_index),))
    return np.random.Generator(np.random.Philox(seq))


def _ar1(rng: np.random.Generator, length: int, innov_sd: float, stationary_var: float) -> np.ndarray:
    """AR(1) с коэффициентом AR_COEF и стационарным стартом."""
    start = rng.normal(0.0, math.sqrt(stationary_var))
    innov = rng.normal(0.0, innov_sd, size=length)
    return signal.lfilter([1.0], [1.0, -AR_COEF], innov, zi=[AR_COEF * start])[0]


def gen_panel(config: SimConfig, rep_index: int, shift: float = 0.0,
              target_mean: Optional[float] = None) -> Tuple[PanelDataset, float]:
    """
    Одна репликация: yᵢₜ = 1 + fₜ + uᵢₜ, эффект Δ₁ₜ = expit(zₜ) + 1 + shift
    на пост-периоде у единицы 1. Возвращает панель и Δ̄₁ = T₂⁻¹ΣΔ₁ₜ.

    target_mean сдвигает эффекты этой репликации так, что Δ̄₁ = target_mean
    (форма траектории Δ₁ₜ сохраняется, shift при этом не учитывается).

    Все «чистые» случайные величины тянутся до точек загрязнения, так что
    при нулевой доле панель побитово совпадает с чистой.
    """
    rng = replication_rng(config.seed, rep_index)
    t1, t2 = config.t1, config.t2
    total = t1 + t2
    units = 1 + config.n_controls

    factor = _ar1(rng, total, 1.0, FACTOR_VAR)
    noise = rng.standard_normal((total, units))
    z = _ar1(rng, t2, EFFECT_INNOV_SD, EFFECT_VAR)
    effect = expit(z) + 1.0 + shift
    if target_mean is not None:
        effect = effect - effect.mean() + target_mean

    cont = config.contamination
    if cont.active:
        pool = np.arange(t1) if cont.period == "pre" else np.arange(t1, total)
        count = int(round(cont.rate * pool.shape[0]))
        if count > 0:
            idx = rng.choice(pool, size=count, replace=False)
            noise[idx, 0] = rng.normal(OUTLIER_MEAN, OUTLIER_SD, size=count)

    y = 1.0 + factor[:, None] + noise
    y[t1:, 0] += effect
    panel = PanelDataset(y[:, 0], y[:, 1:], t1)
    return panel, float(effect.mean())


# ============================================================================
# ИСТИННЫЕ ПАРАМЕТРЫ МОДЕЛИ
# ============================================================================

@dataclass(frozen=True)
class PopulationParameters:
    beta: np.ndarray
    sigma2: float
    long_run_variance: float
    mean_x: np.ndarray
    quad: float


def population_parameters(n_controls: int = 2) -> PopulationParameters:
    """
    Проекция y₁ₜ на (1, ỹₜ) в чистой модели: δⱼ = v/(mv+1), δ₁ = 1 − mδⱼ,
    σ² = 1 + mδⱼ² + v/(mv+1)², долгосрочная дисперсия ηₜ = 1 + mδⱼ² + 4/(mv+1)².
    """
    m = int(n_controls)
    v = FACTOR_VAR
    slope = v / (m * v + 1.0)
    beta = np.concatenate([[1.0 - m * slope], np.full(m, slope)])
    loading = 1.0 / (m * v + 1.0)
    idio = 1.0 + m * slope ** 2
    factor_lrv = 1.0 / (1.0 - AR_COEF) ** 2
    mean_x = np.ones(m + 1)
    second = np.ones((m + 1, m + 1)) + v * np.outer(np.r_[0.0, np.ones(m)], np.r_[0.0, np.ones(m)])
    second[1:, 1:] += np.eye(m)
    quad = float(mean_x @ np.linalg.solve(second, mean_x))
    return PopulationParameters(
        beta=beta,
        sigma2=idio + v * loading ** 2,
        long_run_variance=idio + factor_lrv * loading ** 2,
        mean_x=mean_x,
        quad=quad,
    )


def theoretical_sigma(config: SimConfig, alpha: float) -> float:
    """Σ(α) = v_β(α)·ω·σ²·E[x]′(E xx′)⁻¹E[x] + Σ₂, ω = T₂/T₁, Σ₂ — долгосрочная дисперсия η."""
    pop = population_parameters(config.n_controls)
    omega = config.t2 / config.t1
    return vbeta(alpha) * omega * pop.sigma2 * pop.quad + pop.long_run_variance


# ============================================================================
# РЕПЛИКАЦИИ
# ============================================================================

def replicate(config: SimConfig, rep_index: int, delta_grid: Optional[Tuple[float, ...]] = None,
              delta0: float = 0.0) -> dict:
    """
    Одна репликация по всем ячейкам. Оценка с неудачной подгонкой
    (исключение или несошедшийся оптимизатор) в ячейку не попадает.

    При delta_grid эффекты панели сдвигаются так, что их выборочное среднее
    равно delta_grid[0], а сдвиги к остальным Δ сетки применяются к эффектам
    (те же случайные числа). Тогда при Δ = delta0 гипотеза H₀ верна для
    реализованного Δ̄₁, на которое нацелены оценка и Σ̂(α).
    """
    target = None if delta_grid is None else delta_grid[0]
    panel, true_ate = gen_panel(config, rep_index, target_mean=target)
    design = panel.pre_design()
    fits: Dict[float, object] = {}
    values: Dict[Tuple[str, float], float] = {}
    rejections: Dict[Tuple[str, float], List[bool]] = {}

    for estimator, alpha in config.cells():
        key = (estimator, alpha)
        if alpha not in fits:
            try:
                fits[alpha] = fit_mdpde(design, alpha)
            except (MdpdeError, np.linalg.LinAlgError) as e:
                logger.warning(f"Репликация {rep_index}, α={alpha}: {e}")
                fits[alpha] = None
        fit = fits[alpha]
        if fit is None or not fit.converged:
            continue
        try:
            kind = "median" if estimator == "median_mdpde" else "mean"
            est = aggregate_effects(panel, fit, kind, config.sigma2_mode)
            values[key] = est.value
            if delta_grid is not None:
                flags = []
                for delta in delta_grid:
                    step = delta - delta_grid[0]
                    moved = replace(est, value=est.value + step, per_period=est.per_period + step)
                    flags.append(one_sample_test(moved, delta0, config.alternative, config.level).reject)
                rejections[key] = flags
        except (MdpdeError, np.linalg.LinAlgError) as e:
            logger.warning(f"Репликация {rep_index}, {estimator} α={alpha}: {e}")

    return {"rep": rep_index, "true_ate": true_ate, "values": values, "rejections": rejections}


def _run_batch(args):
    """Пачка репликаций в рабочем процессе (функция уровня модуля для pickle)."""
    config, indices, delta_grid, delta0 = args
    return [replicate(config, int(i), delta_grid, delta0) for i in indices]


def run_replications(config: SimConfig, delta_grid=None, delta0: float = 0.0) -> List[dict]:
    """Все репликации, отсортированные по номеру (порядок агрегации фиксирован)."""
    indices = np.arange(config.reps)
    grid = None if delta_grid is None else tuple(float(d) for d in delta_grid)
    workers = max(1, int(config.workers))

    if workers == 1 or config.reps == 1:
        results = _run_batch((config, indices, grid, delta0))
    else:
        n_chunks = min(workers * 4, config.reps)
        chunks = np.array_split(indices, n_chunks)
        results = []
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(_run_batch, (config, chunk, grid, delta0)): i
                for i, chunk in enumerate(chunks)
            }
            for done, future in enumerate(as_completed(futures), start=1):
                results.extend(future.result())
                logger.debug(f"Пачка {done}/{n_chunks} готова ({len(results)}/{config.reps})")

    results.sort(key=lambda r: r["rep"])
    return results


# ============================================================================
# ОТЧЁТ
# ============================================================================

@dataclass(frozen=True)
class CellResult:
    estimator: str
    alpha: float
    reps_used: int
    failures: int
    bias: float = math.nan
    mse: float = math.nan
    variance: float = math.nan
    theoretical: float = math.nan
    rejection_rates: Tuple[float, ...] = ()


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    mode: str
    cells: Tuple[CellResult, ...]
    delta_grid: Tuple[float, ...] = ()
    delta0: float = 0.0

    def cell(self, estimator: str, alpha: float) -> CellResult:
        for c in self.cells:
            if c.estimator == estimator and math.isclose(c.alpha, alpha, abs_tol=1e-12):
                return c
        raise KeyError((estimator, alpha))

    def to_frame(self) -> pd.DataFrame:
        """Одна строка на ячейку (для мощности — на ячейку и Δ)."""
        base = {
            "contamination": self.config.contamination.label(),
            "t1": self.config.t1,
            "t2": self.config.t2,
        }
        rows = []
        for c in self.cells:
            head = {"estimator": c.estimator, "alpha": c.alpha, **base}
            if self.mode == "power":
                for delta, rate in zip(self.delta_grid, c.rejection_rates):
                    rows.append({**head, "delta": delta, "rejection_rate": rate,
                                 "reps_used": c.reps_used, "failures": c.failures})
            elif self.mode == "variance":
                rows.append({**head, "variance": c.variance, "theoretical_sigma": c.theoretical,
                             "ratio": c.variance / c.theoretical if c.theoretical else math.nan,
                             "reps_used": c.reps_used, "failures": c.failures})
            else:
                rows.append({**head, "bias": c.bias, "mse": c.mse,
                             "reps_used": c.reps_used, "failures": c.failures})
        return pd.DataFrame(rows)


def _cell_errors(results: List[dict], key) -> np.ndarray:
    return np.array([r["values"][key] - r["true_ate"] for r in results if key in r["values"]])


def _log_failures(config: SimConfig, key, used: int) -> None:
    if used < config.reps:
        logger.warning(f"{key[0]} α={key[1]}: отброшено {config.reps - used} из {config.reps} репликаций")


def run_bias_mse(config: SimConfig) -> SimReport:
    """bias = mean(Δ̂ − Δ̄₁), mse = mean((Δ̂ − Δ̄₁)²) по каждой ячейке."""
    results = run_replications(config)
    cells = []
    for key in config.cells():
        err = _cell_errors(results, key)
        _log_failures(config, key, err.shape[0])
        cells.append(CellResult(
            estimator=key[0], alpha=key[1],
            reps_used=int(err.shape[0]), failures=config.reps - int(err.shape[0]),
            bias=float(err.mean()) if err.size else math.nan,
            mse=float(np.mean(err ** 2)) if err.size else math.nan,
        ))
    return SimReport(config, "bias", tuple(cells))


def run_power(config: SimConfig, delta0: float = 0.0, delta_grid=None) -> SimReport:
    """
    Доля отвержений H₀: Δ₁ = delta0 для каждого Δ сетки (Δ = delta0 — эмпирический размер).
    """
    if delta_grid is None:
        delta_grid = tuple(np.round(np.linspace(-1.0, 1.0, 21), 10))
    grid = tuple(float(d) for d in delta_grid)
    if not grid:
        raise ConfigError("Сетка Δ пуста")
    results = run_replications(config, grid, delta0)
    cells = []
    for key in config.cells():
        flags = np.array([r["rejections"][key] for r in results if key in r["rejections"]], dtype=float)
        used = int(flags.shape[0])
        _log_failures(config, key, used)
        rates = tuple(float(x) for x in flags.mean(axis=0)) if used else tuple(math.nan for _ in grid)
        cells.append(CellResult(key[0], key[1], used, config.reps - used, rejection_rates=rates))
    return SimReport(config, "power", tuple(cells), grid, float(delta0))


def run_variance_law(config: SimConfig) -> SimReport:
    """Выборочная дисперсия √T₂(Δ̂ − Δ̄₁) против Σ(α) с истинными параметрами."""
    results = run_replications(config)
    cells = []
    for key in config.cells():
        err = _cell_errors(results, key)
        used = int(err.shape[0])
        _log_failures(config, key, used)
        scaled = math.sqrt(config.t2) * err
        theory = theoretical_sigma(config, key[1]) if key[0] != "median_mdpde" else math.nan
        cells.append(CellResult(
            key[0], key[1], used, config.reps - used,
            bias=float(err.mean()) if used else math.nan,
            mse=float(np.mean(err ** 2)) if used else math.nan,
            variance=float(np.var(scaled, ddof=1)) if used > 1 else math.nan,
            theoretical=theory,
        ))
    return SimReport(config, "variance", tuple(cells))
