#!/usr/bin/env python3
"""
============================================================================
ГЛАВНЫЙ СКРИПТ MDPDE ATE
============================================================================

Назначение:
    Точка входа командной строки: разбирает подкоманду и передаёт её
    в cli_io. Коды выхода: 0 - успех, 1 - ошибка вычислений или данных,
    2 - ошибка использования или конфигурации.

Использование:
    python run.py estimate --data data/gdp_fixture.csv --schema data/gdp_schema.json --alpha 0.5
    python run.py test --data data/gdp_fixture.csv --schema data/gdp_schema.json --alt two-sided
    python run.py influence --alpha 0.1 --alpha 0.5 --sweep diagonal --grid-min -3 --grid-max 3
    python run.py simulate --mode power --reps 1000 --t1 400 --t2 100 --workers 4
    python run.py efficiency --alpha 0 --alpha 0.5 --alpha 1

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import os
import sys

# ============================================================================
# КОНФИГУРАЦИЯ
# ============================================================================

REPO_PATH = os.path.dirname(os.path.abspath(__file__))

# Добавляем путь к проекту
sys.path.insert(0, REPO_PATH)


def main() -> int:
    """Главная функция"""
    from cli_io import main as cli_main

    try:
        return cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        print("👋 Остановлено пользователем", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
