"""
============================================================================
CLI И ВВОД-ВЫВОД: ПАНЕЛИ CSV, КОНФИГУРАЦИЯ, КОМАНДЫ
============================================================================

Назначение:
    Загрузка панелей из CSV по JSON-схеме, сборка конфигурации запуска
    (флаги > --config JSON > переменные окружения), выполнение команд
    и запись таблиц результатов в CSV и JSON с блоком происхождения.

Команды:
    estimate         - оценки ATE по сетке α (mean/median/both)
    test             - одновыборочный тест и кривая p-значения от α
    two-sample-test  - сравнение ATE двух панелей
    influence        - кривые функции влияния (y, IF) для каждой α
    simulate         - Монте-Карло: --mode bias | power | variance
    efficiency       - таблица v_β(α), v_σ(α)

Использование:
    python run.py estimate --data data/gdp_fixture.csv --schema data/gdp_schema.json \
        --alpha 0.1 --alpha 0.5 --aggregate both
    python run.py simulate --mode bias --reps 500 --contamination pre --rate 0.2

Коды выхода:
    0 - успех
    1 - ошибка вычислений или данных (JSON-запись в stderr)
    2 - ошибка использования или конфигурации

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import os
import re
import sys
import json
import math
import hashlib
import logging
import argparse
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import settings
from ate_estimator import (
    AGGREGATE_KINDS,
    PanelDataset,
    Sigma2Mode,
    aggregate_effects,
    fitted_values,
    r_squared,
)
from dpd_regression import fit_mdpde, vbeta, vsigma
from errors import (
    ConfigError,
    MdpdeError,
    MissingColumn,
    MissingValue,
    NonMonotoneTime,
    ParseError,
    UsageError,
)
from hypothesis_tests import normalize_alternative, one_sample_test, two_sample_test
from influence import config_from_fit, figure_config, if_curve
from sim_harness import Contamination, SimConfig, run_bias_mse, run_power, run_variance_law

logger = logging.getLogger(__name__)

COMMANDS = ("estimate", "test", "two-sample-test", "influence", "simulate", "efficiency")
DEFAULT_ALPHAS = (0.0, 0.1, 0.3, 0.5, 0.7)
TABLE_FLOAT_FORMAT = "%.6g"
PANEL_FLOAT_FORMAT = "%.17g"


# ============================================================================
# СХЕМА И ЗАГРУЗКА ПАНЕЛЕЙ
# ============================================================================

@dataclass(frozen=True)
class PanelCsvSchema:
    """
    Описание CSV: колонка времени, обрабатываемая единица (или несколько,
    каждая анализируется отдельно), контрольные колонки, первый момент
    воздействия и преобразование (none | log).
    """

    time_column: str
    treated_columns: Tuple[str, ...]
    control_columns: Tuple[str, ...]
    treatment_start: float
    transform: str = "none"

    def __post_init__(self):
        if self.transform not in ("none", "log"):
            raise ConfigError(f"Неизвестное преобразование: {self.transform}")
        treated = (self.treated_columns,) if isinstance(self.treated_columns, str) else tuple(self.treated_columns)
        if not treated:
            raise ConfigError("В схеме не указана обрабатываемая колонка")
        if not self.control_columns:
            raise ConfigError("В схеме не указаны контрольные колонки")
        object.__setattr__(self, "treated_columns", treated)
        object.__setattr__(self, "control_columns", tuple(self.control_columns))

    @property
    def treated_column(self) -> str:
        return self.treated_columns[0]

    @classmethod
    def from_dict(cls, raw: dict) -> "PanelCsvSchema":
        try:
            return cls(
                time_column=raw["time"],
                treated_columns=raw["treated"],
                control_columns=raw["controls"],
                treatment_start=raw["treatment_start"],
                transform=raw.get("transform", "none"),
            )
        except KeyError as e:
            raise ConfigError(f"В схеме нет ключа {e}")

    @classmethod
    def load(cls, path: str) -> "PanelCsvSchema":
        return cls.from_dict(_read_json(path))

    def to_dict(self) -> dict:
        return {
            "time": self.time_column,
            "treated": list(self.treated_columns),
            "controls": list(self.control_columns),
            "treatment_start": self.treatment_start,
            "transform": self.transform,
        }


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"Файл не найден: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Некорректный JSON в {path}: {e}")


def _numeric_column(frame: pd.DataFrame, column: str, positive: bool = False) -> np.ndarray:
    """Колонка как float; первая плохая ячейка сообщается с номером строки данных (с 1)."""
    values = []
    for i, cell in enumerate(frame[column]):
        text = str(cell).strip()
        if text == "" or text.lower() in ("na", "nan", "null"):
            raise MissingValue(f"Пустая ячейка: строка {i + 1}, колонка {column}", row=i + 1, column=column)
        try:
            value = float(text)
        except ValueError:
            raise ParseError(f"Не число {text!r}: строка {i + 1}, колонка {column}", row=i + 1, column=column)
        if not math.isfinite(value):
            raise ParseError(f"Бесконечное значение: строка {i + 1}, колонка {column}", row=i + 1, column=column)
        if positive and value <= 0:
            raise ParseError(
                f"Логарифм неположительного значения {text}: строка {i + 1}, колонка {column}",
                row=i + 1, column=column,
            )
        values.append(value)
    return np.array(values, dtype=float)


def _read_frame(path: str, schema: PanelCsvSchema) -> Tuple[pd.DataFrame, np.ndarray, np.ndarray]:
    """Сырая таблица, порядок сортировки по времени и отсортированное время."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, comment="#", encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"Файл данных не найден: {path}")
    except pd.errors.EmptyDataError:
        raise ParseError(f"Файл данных пуст: {path}", file=path)
    except pd.errors.ParserError as e:
        # pandas нумерует строки файла с заголовком, строки данных — без него
        found = re.search(r"line (\d+)", str(e))
        row = int(found.group(1)) - 1 if found else None
        raise ParseError(f"Нарушена структура CSV {path}: {str(e).strip()}", row=row, file=path)
    except UnicodeDecodeError as e:
        raise ParseError(f"Файл {path} не в кодировке UTF-8: {e.reason}", file=path)
    frame.columns = [str(c).strip() for c in frame.columns]
    needed = [schema.time_column, *schema.treated_columns, *schema.control_columns]
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise MissingColumn(f"В {path} нет колонок: {', '.join(missing)}", columns=", ".join(missing))

    time = _numeric_column(frame, schema.time_column)
    order = np.argsort(time, kind="stable")
    time_sorted = time[order]
    if np.any(np.diff(time_sorted) <= 0):
        dup = float(time_sorted[1:][np.diff(time_sorted) <= 0][0])
        raise NonMonotoneTime(f"Повторяющееся значение времени {dup:g}", time=dup)
    return frame, order, time_sorted


def _build_panel(frame, order, time, schema: PanelCsvSchema, treated_column: str) -> PanelDataset:
    positive = schema.transform == "log"
    treated = _numeric_column(frame, treated_column, positive)[order]
    controls = np.column_stack([_numeric_column(frame, c, positive) for c in schema.control_columns])[order]
    if positive:
        treated, controls = np.log(treated), np.log(controls)

    start = float(schema.treatment_start)
    if not time[0] < start <= time[-1]:
        raise ConfigError(
            f"Начало воздействия {start:g} вне диапазона времени [{time[0]:g}, {time[-1]:g}]",
            treatment_start=start,
        )
    t1 = int(np.sum(time < start))
    time_out = time.astype(np.int64) if np.all(time == np.round(time)) else time
    return PanelDataset(treated, controls, t1, time_out, treated_column, schema.control_columns)


def load_panel_csv(path: str, schema: PanelCsvSchema) -> PanelDataset:
    """Панель для первой обрабатываемой колонки схемы (строки сортируются по времени)."""
    frame, order, time = _read_frame(path, schema)
    return _build_panel(frame, order, time, schema, schema.treated_column)


def load_panels_csv(path: str, schema: PanelCsvSchema) -> List[PanelDataset]:
    """По панели на каждую обрабатываемую колонку с общими контрольными рядами."""
    frame, order, time = _read_frame(path, schema)
    return [_build_panel(frame, order, time, schema, col) for col in schema.treated_columns]


def save_panel_csv(panel: PanelDataset, path: str, time_column: str = "time") -> PanelCsvSchema:
    """Сохраняет панель с полной точностью; возвращает схему для обратной загрузки."""
    time = panel.time if panel.time is not None else np.arange(panel.t)
    frame = pd.DataFrame({time_column: time, panel.treated_name: panel.treated})
    for j, name in enumerate(panel.control_names):
        frame[name] = panel.controls[:, j]
    frame.to_csv(path, index=False, float_format=PANEL_FLOAT_FORMAT, encoding="utf-8")
    start = time[panel.t1]
    return PanelCsvSchema(
        time_column=time_column,
        treated_columns=(panel.treated_name,),
        control_columns=panel.control_names,
        treatment_start=start.item() if hasattr(start, "item") else start,
    )


# ============================================================================
# КОНФИГУРАЦИЯ ЗАПУСКА
# ============================================================================

@dataclass(frozen=True)
class RunConfig:
    command: str
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    aggregate: str = "mean"
    sigma2: str = "iid"
    delta0: float = 0.0
    alt: str = "two_sided"
    level: float = 0.05
    data: Optional[str] = None
    schema: Optional[str] = None
    data2: Optional[str] = None
    schema2: Optional[str] = None
    out_dir: str = settings.OUT_DIR
    format: str = "both"
    seed: int = settings.DEFAULT_SEED
    reps: int = 100
    mode: str = "bias"
    contamination: str = "none"
    rate: float = 0.2
    t1: int = 100
    t2: int = 20
    workers: int = settings.WORKERS
    deltas: Tuple[float, ...] = ()
    emit_fitted: bool = False
    kind: str = "pre"
    sweep: str = "response"
    t: float = 1.0
    grid_min: float = -10.0
    grid_max: float = 10.0
    grid_points: int = 401
    allow_large_alpha: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"Неизвестная команда: {self.command}")
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise UsageError("Список α пуст")
        if any(a < 0 for a in alphas):
            raise ConfigError("α должны быть неотрицательными")
        if not self.allow_large_alpha and any(a > 1 for a in alphas):
            raise ConfigError("α > 1 требует --allow-large-alpha")
        if self.aggregate not in (*AGGREGATE_KINDS, "both"):
            raise ConfigError(f"Неизвестный агрегат: {self.aggregate}")
        if not 0.0 < float(self.level) < 1.0:
            raise ConfigError("Уровень значимости должен лежать в (0, 1)", level=self.level)
        if self.format not in ("csv", "json", "both"):
            raise ConfigError(f"Неизвестный формат: {self.format}")
        if self.mode not in ("bias", "power", "variance"):
            raise ConfigError(f"Неизвестный режим симуляции: {self.mode}")
        if self.kind not in ("pre", "post", "both"):
            raise ConfigError(f"Неизвестный тип загрязнения: {self.kind}")
        if self.grid_points < 2 or not self.grid_min < self.grid_max:
            raise ConfigError("Некорректная сетка влияния")
        if not 0.0 <= float(self.rate) < 1.0:
            raise ConfigError("Доля загрязнения должна лежать в [0, 1)", rate=self.rate)
        if self.reps < 1 or self.workers < 1:
            raise ConfigError("reps и workers должны быть положительными", reps=self.reps, workers=self.workers)
        try:
            Sigma2Mode.parse(self.sigma2)
            alt = normalize_alternative(self.alt)
        except MdpdeError as e:
            raise ConfigError(e.message)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alt", alt)
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))

    @property
    def sigma2_mode(self) -> Sigma2Mode:
        return Sigma2Mode.parse(self.sigma2)

    @property
    def kinds(self) -> Tuple[str, ...]:
        return AGGREGATE_KINDS if self.aggregate == "both" else (self.aggregate,)

    def provenance(self) -> dict:
        """Параметры, влияющие на результат (без путей вывода и числа процессов)."""
        skip = {"out_dir", "format", "workers"}
        raw = {k: v for k, v in asdict(self).items() if k not in skip}
        for key in ("data", "schema", "data2", "schema2"):
            if raw.get(key):
                raw[f"{key}_sha256"] = _file_sha256(raw[key])
                raw[key] = os.path.basename(raw[key])
        return raw

    def config_hash(self) -> str:
        text = json.dumps(self.provenance(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _file_sha256(path: str) -> str:
    try:
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()
    except OSError:
        return ""


_FLAG_KEYS = {"alpha": "alphas", "delta": "deltas"}


def _normalize_key(key: str) -> str:
    key = key.replace("-", "_")
    return _FLAG_KEYS.get(key, key)


def build_config(command: str, cli: dict, config_path: Optional[str] = None) -> RunConfig:
    """
    Флаги CLI перекрывают JSON-файл --config, тот перекрывает окружение
    (значения по умолчанию RunConfig уже учитывают .env).
    """
    merged: Dict[str, object] = {}
    if config_path:
        raw = _read_json(config_path)
        if not isinstance(raw, dict):
            raise ConfigError("Файл --config должен содержать JSON-объект")
        merged.update({_normalize_key(k): v for k, v in raw.items()})
    merged.update({_normalize_key(k): v for k, v in cli.items() if v is not None})
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"Неизвестные параметры конфигурации: {', '.join(unknown)}")
    if isinstance(merged.get("alphas"), (int, float)):
        merged["alphas"] = (merged["alphas"],)
    merged["command"] = command
    try:
        return RunConfig(**merged)
    except TypeError as e:
        raise ConfigError(str(e))


# ============================================================================
# ЗАПИСЬ РЕЗУЛЬТАТОВ
# ============================================================================

def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating,)):
        return _json_safe(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def metadata(config: RunConfig) -> dict:
    return {
        "command": config.command,
        "version": settings.VERSION,
        "seed": config.seed,
        "alphas": list(config.alphas),
        "config_hash": config.config_hash(),
    }


def write_table(frame: pd.DataFrame, name: str, config: RunConfig) -> List[str]:
    """CSV (6 значащих цифр, заголовок-комментарий) и/или JSON (полная точность)."""
    os.makedirs(config.out_dir, exist_ok=True)
    meta = metadata(config)
    written = []
    if config.format in ("csv", "both"):
        path = os.path.join(config.out_dir, f"{name}.csv")
        header = "".join(f"# {k}: {json.dumps(v)}\n" for k, v in meta.items())
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(header)
            frame.to_csv(fh, index=False, float_format=TABLE_FLOAT_FORMAT, lineterminator="\n")
        written.append(path)
    if config.format in ("json", "both"):
        path = os.path.join(config.out_dir, f"{name}.json")
        rows = [{k: _json_safe(v) for k, v in row.items()} for row in frame.to_dict(orient="records")]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"metadata": meta, "rows": rows}, fh, indent=2, ensure_ascii=False, default=str)
            fh.write("\n")
        written.append(path)
    for path in written:
        logger.info(f"Записан файл {path}")
    return written


# ============================================================================
# КОМАНДЫ
# ============================================================================

def _require_data(config: RunConfig, second: bool = False) -> List[PanelDataset]:
    data, schema = (config.data2, config.schema2 or config.schema) if second else (config.data, config.schema)
    if not data or not schema:
        flag = "--data2" if second else "--data/--schema"
        raise UsageError(f"Команде {config.command} нужны входные данные ({flag})")
    return load_panels_csv(data, PanelCsvSchema.load(schema))


def _estimates(panel: PanelDataset, config: RunConfig):
    """(α, kind, оценка) по сетке: одна подгонка на α, оба агрегата из неё."""
    design = panel.pre_design()
    for alpha in config.alphas:
        fit = fit_mdpde(design, alpha)
        for kind in config.kinds:
            yield alpha, kind, aggregate_effects(panel, fit, kind, config.sigma2_mode)


def cmd_estimate(config: RunConfig) -> Dict[str, pd.DataFrame]:
    rows, fitted_rows = [], []
    for panel in _require_data(config):
        for alpha, kind, est in _estimates(panel, config):
            r2_pre, r2_post = r_squared(panel, est.fit)
            rows.append({
                "unit": panel.treated_name, "alpha": alpha, "aggregate": kind,
                "estimate": est.value, "se": est.se, "sigma_hat": est.sigma_hat,
                "sigma2_hat": est.sigma2_hat, "sigma2_mode": est.sigma2_mode.label(),
                "sigma2_clamped": est.sigma2_clamped, "se_approximate": est.se_approximate,
                "omega": est.omega, "r2_pre": r2_pre, "r2_post": r2_post,
                "converged": est.converged, "iterations": est.fit.iterations,
                "sigma_at_bound": est.fit.sigma_at_bound,
            })
            if config.emit_fitted and kind == config.kinds[0]:
                fitted = fitted_values(panel, est.fit)
                time = panel.time if panel.time is not None else np.arange(panel.t)
                for i in range(panel.t):
                    fitted_rows.append({
                        "unit": panel.treated_name, "alpha": alpha, "time": time[i],
                        "period": "pre" if i < panel.t1 else "post",
                        "observed": panel.treated[i], "fitted": fitted[i],
                    })
    tables = {"estimate": pd.DataFrame(rows)}
    if config.emit_fitted:
        tables["fitted"] = pd.DataFrame(fitted_rows)
    return tables


def cmd_test(config: RunConfig) -> Dict[str, pd.DataFrame]:
    rows = []
    for panel in _require_data(config):
        for alpha, kind, est in _estimates(panel, config):
            res = one_sample_test(est, config.delta0, config.alt, config.level)
            rows.append({
                "unit": panel.treated_name, "alpha": alpha, "aggregate": kind,
                "estimate": est.value, "statistic": res.statistic, "p_value": res.p_value,
                "reject": res.reject, "critical_value": res.critical_value,
                "alternative": res.alternative, "level": res.level, "delta0": res.delta0,
            })
    return {"test": pd.DataFrame(rows)}


def cmd_two_sample_test(config: RunConfig) -> Dict[str, pd.DataFrame]:
    first = _require_data(config)[0]
    second = _require_data(config, second=True)[0]
    rows = []
    for (alpha, kind, est1), (_, _, est2) in zip(_estimates(first, config), _estimates(second, config)):
        res = two_sample_test(est1, est2, config.alt, config.level)
        rows.append({
            "unit1": first.treated_name, "unit2": second.treated_name, "alpha": alpha,
            "aggregate": kind, "estimate1": est1.value, "estimate2": est2.value,
            "statistic": res.statistic, "p_value": res.p_value, "reject": res.reject,
            "critical_value": res.critical_value, "alternative": res.alternative,
        })
    return {"two_sample_test": pd.DataFrame(rows)}


def cmd_influence(config: RunConfig) -> Dict[str, pd.DataFrame]:
    """Кривые по данным (если заданы --data/--schema) или по стилизованному примеру."""
    grid = np.linspace(config.grid_min, config.grid_max, config.grid_points)
    kinds = ("pre", "post") if config.kind == "both" else (config.kind,)
    panel = _require_data(config)[0] if config.data else None
    frames = []
    for alpha in config.alphas:
        if panel is not None:
            fit = fit_mdpde(panel.pre_design(), alpha)
            cfg = config_from_fit(panel, aggregate_effects(panel, fit, "mean", config.sigma2_mode))
        else:
            cfg = figure_config(alpha, config.t)
        for kind in kinds:
            frames.append(if_curve(kind, cfg, grid, config.sweep).to_frame())
    return {"influence": pd.concat(frames, ignore_index=True)}


def cmd_simulate(config: RunConfig) -> Dict[str, pd.DataFrame]:
    sim = SimConfig(
        t1=config.t1, t2=config.t2, reps=config.reps, seed=config.seed,
        contamination=Contamination(config.contamination, config.rate if config.contamination != "none" else 0.0),
        alphas=tuple(a for a in config.alphas if a > 0) or config.alphas,
        sigma2_mode=config.sigma2_mode, workers=config.workers,
        level=config.level, alternative=config.alt,
    )
    if config.mode == "power":
        report = run_power(sim, config.delta0, config.deltas or None)
    elif config.mode == "variance":
        report = run_variance_law(sim)
    else:
        report = run_bias_mse(sim)
    return {f"simulate_{config.mode}": report.to_frame()}


def cmd_efficiency(config: RunConfig) -> Dict[str, pd.DataFrame]:
    rows = [{"alpha": a, "vbeta": vbeta(a), "vsigma": vsigma(a),
             "efficiency_beta": 1.0 / vbeta(a), "efficiency_sigma": 2.0 / vsigma(a)}
            for a in config.alphas]
    return {"efficiency": pd.DataFrame(rows)}


HANDLERS = {
    "estimate": cmd_estimate,
    "test": cmd_test,
    "two-sample-test": cmd_two_sample_test,
    "influence": cmd_influence,
    "simulate": cmd_simulate,
    "efficiency": cmd_efficiency,
}


def run_command(config: RunConfig) -> List[str]:
    """Выполняет команду и пишет все её таблицы; возвращает пути файлов."""
    written = []
    for name, frame in HANDLERS[config.command](config).items():
        written.extend(write_table(frame, name, config))
    return written


# ============================================================================
# ПАРСЕР АРГУМЕНТОВ
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON-файл с параметрами (ключи как у длинных флагов)")
    common.add_argument("--data", help="CSV с панелью")
    common.add_argument("--schema", help="JSON-схема CSV")
    common.add_argument("--alpha", type=float, action="append", help="α (можно повторять)")
    common.add_argument("--aggregate", choices=["mean", "median", "both"])
    common.add_argument("--sigma2", help="iid | hac[:l] | nw[:l]")
    common.add_argument("--delta0", type=float)
    common.add_argument("--alt", choices=["greater", "less", "two-sided"])
    common.add_argument("--level", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--format", choices=["csv", "json", "both"])
    common.add_argument("--allow-large-alpha", dest="allow_large_alpha", action="store_true", default=None)
    common.add_argument("--log-level", dest="log_level", help="DEBUG | INFO | WARNING")

    parser = argparse.ArgumentParser(
        prog="run.py", description="Робастная оценка ATE методом MDPDE"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", parents=[common], help="Оценки ATE по сетке α")
    est.add_argument("--emit-fitted", dest="emit_fitted", action="store_true", default=None)

    sub.add_parser("test", parents=[common], help="Одновыборочный тест по сетке α")

    two = sub.add_parser("two-sample-test", parents=[common], help="Двухвыборочный тест")
    two.add_argument("--data2")
    two.add_argument("--schema2")

    inf = sub.add_parser("influence", parents=[common], help="Кривые функции влияния")
    inf.add_argument("--kind", choices=["pre", "post", "both"])
    inf.add_argument("--sweep", choices=["response", "diagonal"])
    inf.add_argument("--t", type=float)
    inf.add_argument("--grid-min", dest="grid_min", type=float)
    inf.add_argument("--grid-max", dest="grid_max", type=float)
    inf.add_argument("--grid-points", dest="grid_points", type=int)

    sim = sub.add_parser("simulate", parents=[common], help="Монте-Карло")
    sim.add_argument("--mode", choices=["bias", "power", "variance"])
    sim.add_argument("--reps", type=int)
    sim.add_argument("--contamination", choices=["none", "pre", "post"])
    sim.add_argument("--rate", type=float)
    sim.add_argument("--t1", type=int)
    sim.add_argument("--t2", type=int)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--delta", type=float, action="append", help="Δ для кривой мощности (можно повторять)")

    sub.add_parser("efficiency", parents=[common], help="Таблица v_β(α), v_σ(α)")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    settings.setup_logging(args.pop("log_level"))
    try:
        config = build_config(command, args, config_path)
        for path in run_command(config):
            print(path)
        return 0
    except MdpdeError as e:
        print(json.dumps(e.to_record(), ensure_ascii=False), file=sys.stderr)
        return 2 if isinstance(e, (UsageError, ConfigError)) else 1


if __name__ == "__main__":
    sys.exit(main())
