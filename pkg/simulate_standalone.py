#!/usr/bin/env python3
"""
============================================================================
АВТОНОМНЫЙ СКРИПТ МОНТЕ-КАРЛО ДЛЯ CRON
============================================================================

Назначение: Пересчитывает все ячейки таблиц смещения/MSE (чистые данные,
загрязнение пре- и пост-периода) для набора размеров выборок.

Преимущества:
- Долгий прогон не зависит от интерактивной сессии
- Использует блокировку для предотвращения параллельных запусков
- Каждый сценарий пишется в свою папку results/tables/<сценарий>/

Использование:
    python3 simulate_standalone.py
    python3 simulate_standalone.py --reps 200 --workers 4

Cron (каждую ночь в 2:00):
    0 2 * * * /root/MDPDE/venv/bin/python3 /root/MDPDE/simulate_standalone.py >> /var/log/mdpde/cron.log 2>&1

@version 1.0.0
@lastUpdated 2026-10-18
"""

import sys
import os
import fcntl
import argparse
from datetime import datetime

# Добавляем путь к проекту
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Файл блокировки для предотвращения параллельных запусков
LOCK_FILE = "/tmp/mdpde_simulate.lock"

# Размеры выборок (T₁, T₂) и сценарии загрязнения (период, доля)
SAMPLE_SIZES = [(100, 20), (100, 80), (400, 100), (400, 320)]
CONTAMINATIONS = [("none", 0.0), ("pre", 0.05), ("pre", 0.20), ("post", 0.05), ("post", 0.20)]


def log(message: str):
    """Логирование с временной меткой"""
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(f"[{timestamp}] {message}")


def scenario_name(t1: int, t2: int, period: str, rate: float) -> str:
    label = "pure" if period == "none" else f"{period}_{int(round(rate * 100))}"
    return f"t1_{t1}_t2_{t2}_{label}"


def run_all(reps: int, workers: int, out_dir: str) -> int:
    """Прогоняет все сценарии; возвращает число упавших."""
    from cli_io import build_config, run_command
    from errors import MdpdeError

    failed = 0
    for t1, t2 in SAMPLE_SIZES:
        for period, rate in CONTAMINATIONS:
            name = scenario_name(t1, t2, period, rate)
            log(f"▶️  Сценарий {name} ({reps} репликаций)...")
            try:
                config = build_config("simulate", {
                    "mode": "bias", "t1": t1, "t2": t2, "reps": reps,
                    "contamination": period, "rate": rate,
                    "alphas": [0.1, 0.3, 0.5, 0.7, 1.0],
                    "workers": workers, "out_dir": os.path.join(out_dir, name),
                })
                for path in run_command(config):
                    log(f"   📄 {path}")
            except MdpdeError as e:
                failed += 1
                log(f"❌ Сценарий {name}: {e.to_record()}")
    return failed


def main():
    """
    Главная функция.

    Использует файловую блокировку для предотвращения параллельных запусков.
    Если прогон уже выполняется, скрипт завершится с сообщением.
    """
    import settings

    parser = argparse.ArgumentParser(description="Пересчёт таблиц Монте-Карло")
    parser.add_argument("--reps", type=int, default=2500, help="Число репликаций на сценарий")
    parser.add_argument("--workers", type=int, default=settings.WORKERS, help="Число процессов")
    parser.add_argument("--out-dir", default=os.path.join(settings.OUT_DIR, "tables"))
    args = parser.parse_args()

    settings.setup_logging()
    log("🔄 Запуск пересчёта таблиц Монте-Карло...")

    # Пробуем получить эксклюзивную блокировку
    lock_file = open(LOCK_FILE, 'w')
    try:
        fcntl.flock(lock_file, fcntl.LOCK_EX | fcntl.LOCK_NB)
    except IOError:
        log("⚠️  Прогон уже выполняется (заблокировано). Пропускаем.")
        sys.exit(0)

    try:
        failed = run_all(args.reps, args.workers, args.out_dir)
        if failed == 0:
            log("✅ Все сценарии пересчитаны!")
            sys.exit(0)
        else:
            log(f"❌ Сценариев с ошибкой: {failed}")
            sys.exit(1)

    except Exception as e:
        log(f"❌ Критическая ошибка: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)

    finally:
        # Снимаем блокировку
        fcntl.flock(lock_file, fcntl.LOCK_UN)
        lock_file.close()


if __name__ == "__main__":
    main()
