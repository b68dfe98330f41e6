#!/usr/bin/env python3
"""
============================================================================
ГЕНЕРАЦИЯ СИНТЕТИЧЕСКИХ ПАНЕЛЕЙ В ФОРМАТЕ ЗАГРУЗКИ
============================================================================

Назначение: Создаёт CSV с панелью «ВВП на душу населения» (годы × страны)
и JSON-схему к нему — в той же форме, что и реальный набор данных
(пре-период 1981–2004, пост-период 2005–2019, 14 контрольных стран).

Возможности:
- Общий стохастический тренд + страновые нагрузки + AR(1)-шум
- Несколько обрабатываемых единиц (каждая анализируется отдельно)
- Выбросы в пре-периоде обрабатываемых единиц (--outliers)
- Истинный эффект воздействия задаётся в логарифмах (--effect)

Использование:
    python execution/make_fixture.py                          # data/gdp_fixture.csv
    python execution/make_fixture.py --seed 7 --outliers 3 --out /tmp/panel.csv
    python execution/make_fixture.py --effect 0.1 --treated 1

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import sys
import json
import argparse
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import signal

# ============================================================================
# КОНФИГУРАЦИЯ
# ============================================================================

# Путь к проекту (автоматически определяется)
PROJECT_DIR = Path(__file__).parent.parent.resolve()

FIRST_YEAR = 1981
LAST_YEAR = 2019
TREATMENT_START = 2005
N_CONTROLS = 14

# Средний уровень ВВП на душу (тыс. долл.) и годовой рост тренда
BASE_LEVEL = 8.0
TREND_GROWTH = 0.025
TREND_SD = 0.02
NOISE_AR = 0.5
NOISE_SD = 0.015

# Сдвиг выброса в логарифмах
OUTLIER_SHIFT = 0.35


# ============================================================================
# ФУНКЦИИ
# ============================================================================

def log(message: str, level: str = "INFO"):
    """Логирование с временной меткой"""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(f"[{timestamp}] [{level}] {message}")


def make_gdp_panel(seed: int = 2005, n_treated: int = 3, n_controls: int = N_CONTROLS,
                   effect: float = 0.0, outliers: int = 3) -> pd.DataFrame:
    """
    Панель уровней (не логарифмов) ВВП на душу.

    log yᵢₜ = log BASE_LEVEL + aᵢ + bᵢ·trendₜ + eᵢₜ, eᵢₜ — AR(1);
    у обрабатываемых единиц после TREATMENT_START добавляется effect,
    а в `outliers` случайных годах пре-периода — OUTLIER_SHIFT.
    """
    rng = np.random.default_rng(seed)
    years = np.arange(FIRST_YEAR, LAST_YEAR + 1)
    t = years.shape[0]
    t1 = int(np.sum(years < TREATMENT_START))
    units = n_treated + n_controls

    trend = np.cumsum(TREND_GROWTH + TREND_SD * rng.standard_normal(t))
    offsets = rng.normal(0.0, 0.6, size=units)
    loadings = rng.uniform(0.6, 1.4, size=units)
    noise = signal.lfilter([1.0], [1.0, -NOISE_AR], NOISE_SD * rng.standard_normal((units, t)), axis=1)

    logs = np.log(BASE_LEVEL) + offsets[:, None] + loadings[:, None] * trend[None, :] + noise
    for i in range(n_treated):
        logs[i, t1:] += effect
        if outliers > 0:
            idx = rng.choice(t1, size=min(outliers, t1), replace=False)
            logs[i, idx] += OUTLIER_SHIFT

    columns = {"year": years}
    for i in range(n_treated):
        columns[f"treated_{chr(ord('A') + i)}"] = np.exp(logs[i])
    for j in range(n_controls):
        columns[f"country_{j + 1:02d}"] = np.exp(logs[n_treated + j])
    return pd.DataFrame(columns)


def schema_for(frame: pd.DataFrame) -> dict:
    """JSON-схема загрузки для панели make_gdp_panel."""
    return {
        "time": "year",
        "treated": [c for c in frame.columns if c.startswith("treated_")],
        "controls": [c for c in frame.columns if c.startswith("country_")],
        "treatment_start": TREATMENT_START,
        "transform": "log",
    }


def write_fixture(frame: pd.DataFrame, csv_path: Path, schema_path: Path) -> None:
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(csv_path, index=False, float_format="%.4f")
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema_for(frame), fh, indent=2)
        fh.write("\n")


def main():
    """Главная функция"""
    parser = argparse.ArgumentParser(description="Синтетическая панель ВВП в формате загрузки")
    parser.add_argument("--seed", type=int, default=2005, help="Seed генератора")
    parser.add_argument("--treated", type=int, default=3, help="Число обрабатываемых единиц")
    parser.add_argument("--controls", type=int, default=N_CONTROLS, help="Число контрольных стран")
    parser.add_argument("--effect", type=float, default=0.0, help="Эффект воздействия (в логарифмах)")
    parser.add_argument("--outliers", type=int, default=3, help="Выбросов в пре-периоде на единицу")
    parser.add_argument("--out", default=str(PROJECT_DIR / "data" / "gdp_fixture.csv"))
    parser.add_argument("--schema-out", default=None, help="Путь к схеме (по умолчанию рядом с CSV)")

    args = parser.parse_args()

    if args.treated < 1 or args.controls < 1:
        log("Нужна хотя бы одна обрабатываемая и одна контрольная единица", "ERROR")
        sys.exit(1)

    csv_path = Path(args.out)
    schema_path = Path(args.schema_out) if args.schema_out else csv_path.with_name(
        csv_path.stem.replace("_fixture", "") + "_schema.json"
    )

    frame = make_gdp_panel(args.seed, args.treated, args.controls, args.effect, args.outliers)
    write_fixture(frame, csv_path, schema_path)
    log(f"Панель {frame.shape[0]}×{frame.shape[1] - 1} записана в {csv_path}")
    log(f"Схема записана в {schema_path}")


if __name__ == "__main__":
    main()
