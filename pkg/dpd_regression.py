"""
============================================================================
MDPDE-РЕГРЕССИЯ: МИНИМУМ ДИВЕРГЕНЦИИ ПЛОТНОСТЕЙ СТЕПЕНИ α
============================================================================

Назначение:
    Робастная оценка линейной регрессии y₁ₜ = δ₁ + δ′ỹₜ + ηₜ по
    предтритментному периоду минимизацией эмпирической DPD-функции H(θ),
    плюс асимптотическая ковариация оценок (β̂, σ̂²).

Возможности:
    - Целевая функция и аналитический градиент для нормальной и
      произвольной (custom) плотности ошибок
    - Квазиньютоновская минимизация по (β, log σ) с мультистартом
      и полировкой методом доверительной области
    - МНК как предельный случай α = 0
    - Интегралы M_{f,i,j} (замкнутая форма или адаптивная квадратура)
    - Коэффициенты эффективности v_β(α), v_σ(α) и полная sandwich-ковариация

Использование:
    from dpd_regression import DesignResponse, fit_mdpde
    fit = fit_mdpde(DesignResponse(X, y), alpha=0.5)

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import math
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    InsufficientPreperiod,
    InvalidArgument,
    NoConvergence,
    NonPositiveSigma,
    QuadratureFailure,
    SingularDesign,
)

logger = logging.getLogger(__name__)

# ============================================================================
# КОНСТАНТЫ
# ============================================================================

# Порог обратного числа обусловленности X′X (условие невырожденности дизайна)
RCOND_MIN = 1e-12

# Нижняя граница σ относительно масштаба y
SIGMA_FLOOR = 1e-8

# Критерий сходимости: ∞-норма градиента и лимит итераций
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500

# При α ≥ 0.5 целевая функция многоэкстремальна, нужно больше стартов
MULTISTART_ALPHA = 0.5
MULTISTART_DEFAULT = 5

# Нижняя граница σ в неограниченном режиме: доля от min(σ МНК, σ MAD)
BASIN_SIGMA_SHARE = 0.5

# Допуск «σ лежит на нижней границе» в шкале log σ
BOUND_ATOL = 1e-10

# Квадратура для custom-плотностей
QUAD_EPS = 1e-10
QUAD_FAIL_ABSERR = 1e-8
DENSITY_CHECK_TOL = 1e-6

LOG_2PI = math.log(2.0 * math.pi)

# Моменты стандартного нормального распределения m_k, k = 0..4
_NORMAL_MOMENTS = (1.0, 0.0, 1.0, 0.0, 3.0)


# ============================================================================
# ТИПЫ ДАННЫХ
# ============================================================================

def check_design(X: np.ndarray) -> None:
    """
    Проверяет невырожденность X′X по обратному числу обусловленности.

    Raises:
        SingularDesign: если rcond(X′X) < RCOND_MIN
    """
    xtx = X.T @ X
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = 1.0 / np.linalg.cond(xtx)
    if not np.isfinite(rcond) or rcond < RCOND_MIN:
        raise SingularDesign(
            "Матрица X′X вырождена или плохо обусловлена",
            rcond=float(rcond) if np.isfinite(rcond) else 0.0,
        )


@dataclass(frozen=True)
class DesignResponse:
    """
    Дизайн регрессии на предтритментном периоде.

    X — матрица T₁×N (первый столбец из единиц, далее контрольные ряды ỹₜ),
    y — отклик обрабатываемой единицы y₁ₜ длины T₁.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise DimensionMismatch("X должна быть двумерной матрицей", ndim=X.ndim)
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(
                "Число строк X не совпадает с длиной y",
                rows=X.shape[0], length=y.shape[0],
            )
        if X.shape[1] == 0 or not np.all(X[:, 0] == 1.0):
            raise InvalidArgument("Первый столбец X должен состоять из единиц")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgument("X и y не должны содержать NaN/inf")
        check_design(X)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_controls(cls, controls, y) -> "DesignResponse":
        """Собирает X = [1, ỹₜ] из матрицы контрольных рядов."""
        controls = np.asarray(controls, dtype=float)
        if controls.ndim == 1:
            controls = controls[:, None]
        return cls(np.column_stack([np.ones(controls.shape[0]), controls]), y)

    @property
    def t1(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RegressionParams:
    """Параметры регрессии: beta = (δ₁, δ) и дисперсия ошибки sigma2."""

    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(beta)):
            raise InvalidArgument("Коэффициенты beta должны быть конечными")
        sigma2 = float(self.sigma2)
        if not math.isfinite(sigma2):
            raise NonPositiveSigma("sigma2 должна быть конечной", sigma2=sigma2)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2) if self.sigma2 > 0 else 0.0


# ----------------------------------------------------------------------------
# Плотности ошибок: только функции уровня модуля, ErrorDensity должна пиклиться
# ----------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)


def _laplace_pdf(s):
    return np.exp(-_SQRT2 * np.abs(s)) / _SQRT2


def _laplace_score(s):
    return -_SQRT2 * np.sign(s)


@dataclass(frozen=True)
class ErrorDensity:
    """
    Модельная плотность стандартизованной ошибки f (среднее 0, дисперсия 1).

    kind = "standard_normal" использует замкнутые формулы; kind = "custom"
    требует pdf f(s) и score u(s) = f′(s)/f(s), принимающие numpy-массивы,
    а интегралы считаются адаптивной квадратурой по support с разбиением
    в точках breakpoints (изломы плотности).
    """

    kind: str = "standard_normal"
    pdf: Optional[Callable] = None
    score: Optional[Callable] = None
    support: Tuple[float, float] = (-math.inf, math.inf)
    nodes: int = 200
    breakpoints: Tuple[float, ...] = ()
    name: str = "standard_normal"

    def __post_init__(self):
        if self.kind not in ("standard_normal", "custom"):
            raise InvalidArgument(f"Неизвестный тип плотности: {self.kind}")
        if self.kind == "custom":
            if self.pdf is None or self.score is None:
                raise InvalidArgument("Для custom-плотности нужны pdf и score")
            if not self.support[0] < self.support[1]:
                raise InvalidArgument("Пустой носитель плотности", support=str(self.support))
            self._validate_moments()

    def _validate_moments(self) -> None:
        """Масса 1, среднее 0, дисперсия 1 в пределах DENSITY_CHECK_TOL."""
        mass = _integrate(self, lambda s: self.pdf(s))
        mean = _integrate(self, lambda s: s * self.pdf(s))
        var = _integrate(self, lambda s: s * s * self.pdf(s))
        for label, value, target in (("масса", mass, 1.0), ("среднее", mean, 0.0), ("дисперсия", var, 1.0)):
            if abs(value - target) > DENSITY_CHECK_TOL:
                raise InvalidArgument(
                    f"Плотность {self.name}: {label} = {value:.8g}, ожидалось {target}",
                    value=value,
                )


STANDARD_NORMAL = ErrorDensity()


def standard_normal() -> ErrorDensity:
    return STANDARD_NORMAL


def laplace() -> ErrorDensity:
    """Плотность Лапласа с единичной дисперсией: f(s) = e^{-√2|s|}/√2."""
    return ErrorDensity(
        kind="custom", pdf=_laplace_pdf, score=_laplace_score,
        breakpoints=(0.0,), name="laplace",
    )


def custom(pdf: Callable, score: Callable, support=(-math.inf, math.inf),
           nodes: int = 200, breakpoints=(), name: str = "custom") -> ErrorDensity:
    return ErrorDensity(
        kind="custom", pdf=pdf, score=score, support=tuple(support),
        nodes=int(nodes), breakpoints=tuple(breakpoints), name=name,
    )


@dataclass(frozen=True)
class FitOptions:
    """
    Настройки оптимизатора.

    multistart_count = None означает MULTISTART_DEFAULT при α ≥ 0.5 и 1 иначе.
    """

    init: Optional[RegressionParams] = None
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    multistart_count: Optional[int] = None
    seed: int = 0


@dataclass(frozen=True)
class RegressionFit:
    """Результат оценивания; vcov — асимптотическая ковариация (β̂, σ̂²), делённая на T₁."""

    params: RegressionParams
    alpha: float
    objective_value: float
    gradient_norm: float
    vcov: np.ndarray
    converged: bool
    iterations: int
    density: ErrorDensity = STANDARD_NORMAL
    tol: float = DEFAULT_TOL
    exact_fit: bool = False
    start: int = 0
    sigma_at_bound: bool = False

    @property
    def beta(self) -> np.ndarray:
        return self.params.beta

    @property
    def sigma2(self) -> float:
        return self.params.sigma2

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))


# ============================================================================
# ИНТЕГРАЛЫ M_{f,i,j} И КОЭФФИЦИЕНТЫ ЭФФЕКТИВНОСТИ
# ============================================================================

def _integrate(f: ErrorDensity, func: Callable) -> float:
    """Адаптивная квадратура Гаусса–Кронрода (QUADPACK) по кускам носителя."""
    lo, hi = f.support
    inner = sorted(b for b in f.breakpoints if lo < b < hi)
    edges = [lo, *inner, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        out = integrate.quad(
            func, a, b, epsabs=QUAD_EPS, epsrel=QUAD_EPS,
            limit=max(50, f.nodes), full_output=1,
        )
        value, abserr = out[0], out[1]
        if len(out) == 4 and abserr > QUAD_FAIL_ABSERR:
            raise QuadratureFailure(
                f"Квадратура по [{a}, {b}] не стабилизировалась: {out[3]}",
                abserr=abserr,
            )
        total += value
    return total


@lru_cache(maxsize=4096)
def _quad_moment(f: ErrorDensity, i: int, j: int, alpha: float) -> float:
    def integrand(s):
        return s ** i * f.score(s) ** j * f.pdf(s) ** (1.0 + alpha)

    return _integrate(f, integrand)


def moment_integral(f: ErrorDensity, i: int, j: int, alpha: float) -> float:
    """
    M_{f,i,j}^{(α)} = ∫ sⁱ u(s)ʲ f(s)^{1+α} ds.

    Для нормальной плотности u(s) = −s, поэтому
    M = (−1)ʲ (2π)^{−α/2} (1+α)^{−(i+j+1)/2} m_{i+j}.
    """
    if i not in (0, 1, 2) or j not in (0, 1, 2):
        raise InvalidArgument("Индексы i, j должны быть из {0, 1, 2}", i=i, j=j)
    alpha = float(alpha)
    if alpha < 0:
        raise AlphaOutOfRange("α должно быть неотрицательным", alpha=alpha)
    if f.kind == "standard_normal":
        k = i + j
        return ((-1.0) ** j) * math.exp(-0.5 * alpha * LOG_2PI) \
            * (1.0 + alpha) ** (-(k + 1) / 2.0) * _NORMAL_MOMENTS[k]
    return _quad_moment(f, i, j, alpha)


def _zeta_phi(f: ErrorDensity, alpha: float) -> dict:
    """ζ₁₁, ζ₁₂, ζ₂₂ и φ₁, φ₂ при заданном α."""
    m = {(i, j): moment_integral(f, i, j, alpha) for i in range(3) for j in range(3)}
    return {
        "z11": m[0, 2],
        "z12": (m[0, 1] + m[1, 2]) / 2.0,
        "z22": (m[2, 2] + 2.0 * m[1, 1] + m[0, 0]) / 4.0,
        "phi1": -m[0, 1],
        "phi2": -(m[0, 0] + m[1, 1]) / 2.0,
    }


def vbeta(alpha: float) -> float:
    """v_β(α) = (1 + α²/(1+2α))^{3/2} для нормальных ошибок."""
    alpha = float(alpha)
    if alpha < 0:
        raise AlphaOutOfRange("α должно быть неотрицательным", alpha=alpha)
    return (1.0 + alpha ** 2 / (1.0 + 2.0 * alpha)) ** 1.5


def vsigma(alpha: float) -> float:
    """v_σ(α) для нормальных ошибок."""
    alpha = float(alpha)
    if alpha < 0:
        raise AlphaOutOfRange("α должно быть неотрицательным", alpha=alpha)
    a2 = alpha ** 2
    inner = (1.0 + a2 / (1.0 + 2.0 * alpha)) ** 2.5
    return 4.0 / (a2 + 2.0) ** 2 * (2.0 * (1.0 + 2.0 * a2) * inner - a2 * (1.0 + alpha) ** 2)


def variance_factors(f: ErrorDensity, alpha: float) -> Tuple[float, float]:
    """
    (v_β, v_σ) для плотности f через ζ/φ.

    Для нормальной плотности совпадает с vbeta/vsigma. Формулы имеют смысл,
    когда M_{f,0,1} = M_{f,1,2} = 0 (блочная независимость β̂ и σ̂²).
    """
    if f.kind == "standard_normal":
        return vbeta(alpha), vsigma(alpha)
    one = _zeta_phi(f, alpha)
    two = _zeta_phi(f, 2.0 * alpha)
    v_b = (two["z11"] - one["phi1"] ** 2) / one["z11"] ** 2
    v_s = (two["z22"] - one["phi2"] ** 2) / one["z22"] ** 2
    return v_b, v_s


# ============================================================================
# ЦЕЛЕВАЯ ФУНКЦИЯ И ГРАДИЕНТ
# ============================================================================

def _check_alpha_positive(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise AlphaOutOfRange(
            "Целевая функция DPD определена только для α > 0 (α = 0 — это МНК)",
            alpha=alpha,
        )
    return alpha


def _check_params(data: DesignResponse, params: RegressionParams) -> Tuple[np.ndarray, float]:
    if params.sigma2 <= 0:
        raise NonPositiveSigma("sigma2 должна быть положительной", sigma2=params.sigma2)
    if params.beta.shape[0] != data.n:
        raise DimensionMismatch(
            "Длина beta не совпадает с числом столбцов X",
            beta=params.beta.shape[0], columns=data.n,
        )
    return params.beta, params.sigma


def _density_terms(f: ErrorDensity, s: np.ndarray, alpha: float):
    """f(s)^α и u(s) для вектора стандартизованных остатков."""
    if f.kind == "standard_normal":
        return np.exp(-0.5 * alpha * (s * s + LOG_2PI)), -s
    return np.power(f.pdf(s), alpha), f.score(s)


def _objective_parts(X, y, beta, sigma, alpha, f, mass):
    """H, ∂H/∂β и ∂H/∂σ в одной проходке по данным."""
    s = (y - X @ beta) / sigma
    fa, u = _density_terms(f, s, alpha)
    scale = sigma ** (-alpha)
    value = scale * (mass - (1.0 + 1.0 / alpha) * fa.mean())
    g_beta = scale / sigma * (1.0 + alpha) * (X.T @ (fa * u)) / len(y)
    g_sigma = scale / sigma * (-alpha * mass + (1.0 + alpha) * np.mean(fa * (1.0 + s * u)))
    return value, g_beta, g_sigma


def dpd_objective(data: DesignResponse, params: RegressionParams, alpha: float,
                  f: ErrorDensity = STANDARD_NORMAL) -> float:
    """
    H_{T₁}^{(α)}(θ) = σ^{−α}[M_f^{(α)} − (1 + 1/α)·T₁⁻¹·Σₜ f((y₁ₜ − β′xₜ)/σ)^α].
    """
    alpha = _check_alpha_positive(alpha)
    beta, sigma = _check_params(data, params)
    mass = moment_integral(f, 0, 0, alpha)
    value, _, _ = _objective_parts(data.X, data.y, beta, sigma, alpha, f, mass)
    return float(value)


def dpd_gradient(data: DesignResponse, params: RegressionParams, alpha: float,
                 f: ErrorDensity = STANDARD_NORMAL) -> np.ndarray:
    """
    Аналитический градиент H по (β, σ), вектор длины N+1.

    Нули градиента совпадают с решениями оценочных уравнений MDPDE:
    Σ f^α u xₜ = 0 и T₁⁻¹Σ (1 + s u) f^α = α M_f/(1+α).
    """
    alpha = _check_alpha_positive(alpha)
    beta, sigma = _check_params(data, params)
    mass = moment_integral(f, 0, 0, alpha)
    _, g_beta, g_sigma = _objective_parts(data.X, data.y, beta, sigma, alpha, f, mass)
    return np.append(g_beta, g_sigma)


# ============================================================================
# ОЦЕНИВАНИЕ
# ============================================================================

def _require_dof(data: DesignResponse, strict_sigma: bool) -> None:
    t1, n = data.X.shape
    needed = n + 2 if strict_sigma else n
    if t1 < needed:
        raise InsufficientPreperiod(
            f"Недостаточно наблюдений: T₁ = {t1}, нужно не меньше {needed}",
            t1=t1, n=n,
        )


def ols_fit(data: DesignResponse) -> RegressionFit:
    """
    МНК (предел MDPDE при α → 0): β̂ = (X′X)⁻¹X′y, σ̂² = T₁⁻¹Σ остатков².

    objective_value — средний отрицательный гауссов лог-правдоподобие.
    """
    _require_dof(data, strict_sigma=False)
    check_design(data.X)
    X, y = data.X, data.y
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    sigma2 = float(np.mean(resid ** 2))
    objective = 0.5 * (LOG_2PI + math.log(sigma2) + 1.0) if sigma2 > 0 else -math.inf
    fit = RegressionFit(
        params=RegressionParams(beta, sigma2),
        alpha=0.0,
        objective_value=objective,
        gradient_norm=float(np.max(np.abs(X.T @ resid)) / len(y)),
        vcov=np.zeros((data.n + 1, data.n + 1)),
        converged=True,
        iterations=0,
        exact_fit=sigma2 == 0.0,
    )
    return replace(fit, vcov=asymptotic_vcov(fit, data, STANDARD_NORMAL))


def _sigma_floor(y: np.ndarray) -> float:
    scale = float(np.std(y))
    if scale <= 0:
        scale = max(float(np.max(np.abs(y))), 1.0)
    return SIGMA_FLOOR * scale


def _mad_sigma(data: DesignResponse, ols: RegressionFit) -> float:
    resid = data.y - data.X @ ols.beta
    return 1.4826 * float(np.median(np.abs(resid - np.median(resid))))


def _unbounded(data: DesignResponse, alpha: float, f: ErrorDensity, mass: float) -> bool:
    """Точная интерполяция N точек при σ → 0 даёт H → −∞."""
    peak = float(_density_terms(f, np.zeros(1), alpha)[0][0])
    return (1.0 + 1.0 / alpha) * data.n / data.t1 * peak >= mass


def _starts(data: DesignResponse, ols: RegressionFit, count: int, options: FitOptions,
            sigma_min: float):
    """Стартовые точки (β, log σ) в фиксированном порядке."""
    X, y = data.X, data.y
    sigma_ols = max(math.sqrt(ols.sigma2), sigma_min)
    starts = []
    if options.init is not None:
        starts.append(np.append(options.init.beta, math.log(max(options.init.sigma, sigma_min))))
    starts.append(np.append(ols.beta, math.log(sigma_ols)))
    if count >= 2:
        starts.append(np.append(ols.beta, math.log(max(_mad_sigma(data, ols), sigma_min))))
    if count > len(starts):
        rng = np.random.default_rng(options.seed)
        spread = sigma_ols / np.sqrt(np.diag(X.T @ X) / len(y))
        while len(starts) < count:
            beta = ols.beta + spread * rng.standard_normal(data.n)
            starts.append(np.append(beta, math.log(sigma_ols)))
    return starts


def fit_mdpde(data: DesignResponse, alpha: float, f: ErrorDensity = STANDARD_NORMAL,
              options: Optional[FitOptions] = None, strict: bool = False) -> RegressionFit:
    """
    MDPDE параметров (β, σ²) при параметре робастности α.

    α = 0 передаётся в ols_fit. Для α > 0 — L-BFGS-B по (β, log σ) из
    нескольких стартов, выбор лучшего значения H (при равенстве — меньший
    индекс старта), затем полировка trust-exact до ‖∇H‖∞ ≤ tol. max_iter —
    общий лимит на все старты и полировку.

    Если H не ограничена снизу при σ → 0 (мало наблюдений на число
    регрессоров), поиск ведётся из МНК с σ ≥ BASIN_SIGMA_SHARE·min(σ МНК, σ MAD);
    на этой границе сходимость проверяется по проекции градиента.

    Raises:
        AlphaOutOfRange: α < 0
        InsufficientPreperiod: T₁ ≤ N + 1
        SingularDesign: X′X вырождена
        NoConvergence: только при strict=True, если градиент не сошёлся
    """
    options = options or FitOptions()
    alpha = float(alpha)
    if alpha < 0:
        raise AlphaOutOfRange("α должно быть неотрицательным", alpha=alpha)
    _require_dof(data, strict_sigma=True)
    if alpha == 0.0:
        return ols_fit(data)

    if options.max_iter < 1 or not options.tol > 0:
        raise InvalidArgument("max_iter должно быть ≥ 1, tol — положительным",
                              max_iter=options.max_iter, tol=options.tol)

    X, y = data.X, data.y
    ols = ols_fit(data)
    sigma_min = _sigma_floor(y)
    mass = moment_integral(f, 0, 0, alpha)

    # Точная подгонка: нулевые остатки минимизируют каждое слагаемое
    if math.sqrt(ols.sigma2) <= sigma_min:
        params = RegressionParams(ols.beta, sigma_min ** 2)
        fit = RegressionFit(
            params=params, alpha=alpha,
            objective_value=dpd_objective(data, params, alpha, f),
            gradient_norm=0.0, vcov=np.zeros((data.n + 1, data.n + 1)),
            converged=True, iterations=0, density=f, tol=options.tol, exact_fit=True,
        )
        logger.debug("Точная подгонка: остатки МНК нулевые, σ на нижней границе")
        return replace(fit, vcov=asymptotic_vcov(fit, data, f))

    count = options.multistart_count
    unbounded = _unbounded(data, alpha, f, mass)
    if unbounded:
        sigma_ols = math.sqrt(ols.sigma2)
        mad = _mad_sigma(data, ols)
        sigma_min = max(sigma_min, BASIN_SIGMA_SHARE * min(sigma_ols, mad if mad > 0 else sigma_ols))
        if count is None:
            count = 1
        logger.warning(
            f"При α={alpha}, N={data.n}, T₁={data.t1} целевая функция не ограничена снизу "
            f"при σ → 0; поиск ограничен σ ≥ {sigma_min:.4g} вокруг МНК"
        )
    elif count is None:
        count = MULTISTART_DEFAULT if alpha >= MULTISTART_ALPHA else 1
    log_floor = math.log(sigma_min)

    def fun(theta):
        sigma = math.exp(theta[-1])
        value, g_beta, g_sigma = _objective_parts(X, y, theta[:-1], sigma, alpha, f, mass)
        return value, np.append(g_beta, sigma * g_sigma)

    def at_bound(t):
        return t[-1] <= log_floor + BOUND_ATOL

    def grad_norm(t):
        """∞-норма градиента по (β, σ); на нижней границе σ положительная ∂H/∂σ не учитывается."""
        s = math.exp(t[-1])
        _, g_beta, g_sigma = _objective_parts(X, y, t[:-1], s, alpha, f, mass)
        if at_bound(t) and g_sigma > 0:
            g_sigma = 0.0
        return float(np.max(np.abs(np.append(g_beta, g_sigma))))

    def newton(t, free, gtol, budget):
        """trust-exact по координатам free с конечно-разностным гессианом, остальные фиксированы."""
        def part(z):
            full = t.copy()
            full[free] = z
            value, grad = fun(full)
            return value, grad[free]

        res = optimize.minimize(
            lambda z: part(z)[0], t[free].copy(),
            jac=lambda z: part(z)[1],
            hess=lambda z: _fd_hessian(lambda w: part(w)[1], z),
            method="trust-exact",
            options={"gtol": gtol, "maxiter": budget},
        )
        full = t.copy()
        full[free] = res.x
        return full, float(res.fun), min(int(res.nit), budget)

    # Лимит итераций общий на все старты и полировку
    bounds = [(None, None)] * data.n + [(log_floor, None)]
    best = None
    iterations = 0
    for index, theta0 in enumerate(_starts(data, ols, max(1, int(count)), options, sigma_min)):
        remaining = options.max_iter - iterations
        if remaining <= 0:
            logger.debug(f"Лимит итераций исчерпан, старты с {index} пропущены")
            break
        res = optimize.minimize(
            fun, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": remaining, "gtol": options.tol, "ftol": 1e-15},
        )
        iterations += min(int(res.nit), remaining)
        value = float(res.fun)
        logger.debug(f"Старт {index}: H = {value:.10g}, итераций {res.nit}, {res.message}")
        if best is None or value < best[1]:
            best = (np.asarray(res.x, dtype=float), value, index)

    theta, value, start_index = best
    beta_only = slice(0, data.n)

    remaining = options.max_iter - iterations
    if grad_norm(theta) > options.tol and remaining > 0:
        if at_bound(theta):
            theta[-1] = log_floor
            candidate, cand_value, nit = newton(theta, beta_only, 0.5 * options.tol, remaining)
        else:
            gtol = 0.5 * options.tol * min(1.0, math.exp(theta[-1]))
            candidate, cand_value, nit = newton(theta, slice(None), gtol, remaining)
            if candidate[-1] < log_floor:
                # Ньютон без ограничений ушёл за нижнюю границу σ
                iterations += nit
                candidate[-1] = log_floor
                nit = 0
                if options.max_iter - iterations > 0:
                    candidate, cand_value, nit = newton(candidate, beta_only, 0.5 * options.tol,
                                                        options.max_iter - iterations)
                else:
                    cand_value = fun(candidate)[0]
        iterations += nit
        if cand_value <= value + 1e-12 * max(1.0, abs(value)):
            theta, value = candidate, cand_value

    gnorm = grad_norm(theta)
    sigma = math.exp(theta[-1])
    fit = RegressionFit(
        params=RegressionParams(theta[:-1], sigma ** 2),
        alpha=alpha,
        objective_value=value,
        gradient_norm=gnorm,
        vcov=np.zeros((data.n + 1, data.n + 1)),
        converged=gnorm <= options.tol,
        iterations=iterations,
        density=f,
        tol=options.tol,
        start=start_index,
        sigma_at_bound=at_bound(theta),
    )
    fit = replace(fit, vcov=asymptotic_vcov(fit, data, f))
    if fit.sigma_at_bound:
        logger.info(f"MDPDE (α={alpha}): σ на нижней границе {sigma_min:.4g}, β оценена при фиксированной σ")

    if not fit.converged:
        message = (f"MDPDE (α={alpha}) не сошлась: ‖∇H‖∞ = {gnorm:.3e} > {options.tol:.3e} "
                   f"за {iterations} итераций")
        if strict:
            raise NoConvergence(message, fit=fit, gradient_norm=gnorm, tol=options.tol)
        logger.warning(message)
    return fit


def _fd_hessian(grad: Callable, theta: np.ndarray) -> np.ndarray:
    """Симметризованный якобиан аналитического градиента."""
    hess = optimize.approx_fprime(theta, grad, 1.49e-8)
    return 0.5 * (hess + hess.T)


# ============================================================================
# АСИМПТОТИЧЕСКАЯ КОВАРИАЦИЯ
# ============================================================================

def asymptotic_vcov(fit: RegressionFit, data: DesignResponse,
                    f: Optional[ErrorDensity] = None, method: str = "auto") -> np.ndarray:
    """
    Асимптотическая ковариация (β̂, σ̂²), делённая на T₁: σ̂²Ψ̃⁻¹Ω̃Ψ̃⁻¹/T₁.

    Σₓ оценивается как T₁⁻¹X′X, μₓ — как T₁⁻¹X′1. Для нормальной плотности
    (method="auto") используется замкнутая блочно-диагональная форма
    σ̂²v_β(α)(X′X)⁻¹ и σ̂⁴v_σ(α)/T₁; method="general" форсирует общий путь.
    """
    f = f or fit.density
    if method not in ("auto", "closed", "general"):
        raise InvalidArgument(f"Неизвестный метод ковариации: {method}")
    if not fit.converged:
        logger.warning("Ковариация считается для несошедшейся оценки")
    X = data.X
    t1, n = X.shape
    if fit.params.beta.shape[0] != n:
        raise DimensionMismatch("Размерность оценки не совпадает с дизайном",
                                beta=fit.params.beta.shape[0], columns=n)
    check_design(X)
    xtx = X.T @ X
    s2 = fit.params.sigma2
    alpha = fit.alpha

    if method == "closed" or (method == "auto" and f.kind == "standard_normal"):
        v_b, v_s = vbeta(alpha), vsigma(alpha)
        vcov = np.zeros((n + 1, n + 1))
        vcov[:n, :n] = s2 * v_b * np.linalg.inv(xtx)
        vcov[n, n] = s2 ** 2 * v_s / t1
        return 0.5 * (vcov + vcov.T)

    sigma = math.sqrt(s2)
    if sigma <= 0:
        raise NonPositiveSigma("Общая формула ковариации требует σ̂ > 0", sigma2=s2)
    sx = xtx / t1
    mu = X.sum(axis=0) / t1
    one = _zeta_phi(f, alpha)
    two = _zeta_phi(f, 2.0 * alpha)

    psi = np.block([
        [one["z11"] * sx, (one["z12"] / sigma) * mu[:, None]],
        [(one["z12"] / sigma) * mu[None, :], np.array([[one["z22"] / s2]])],
    ])
    c11 = two["z11"] - one["phi1"] ** 2
    c12 = two["z12"] - one["phi1"] * one["phi2"]
    c22 = two["z22"] - one["phi2"] ** 2
    omega = np.block([
        [c11 * sx, (c12 / sigma) * mu[:, None]],
        [(c12 / sigma) * mu[None, :], np.array([[c22 / s2]])],
    ])
    psi_inv = np.linalg.inv(psi)
    vcov = s2 * psi_inv @ omega @ psi_inv / t1
    return 0.5 * (vcov + vcov.T)
