"""
============================================================================
НАСТРОЙКИ И ЛОГИРОВАНИЕ
============================================================================

Назначение:
    Загружает переменные окружения из .env и настраивает логирование
    для CLI и автономных скриптов.

Переменные окружения (.env):
    MDPDE_WORKERS   - число процессов для Монте-Карло (по умолчанию 1)
    MDPDE_OUT_DIR   - папка для результатов (по умолчанию results)
    MDPDE_LOG_LEVEL - уровень логирования (по умолчанию INFO)
    MDPDE_SEED      - seed симуляций и мультистарта (по умолчанию 20240601)

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""

import os
import logging

from dotenv import load_dotenv

# ============================================================================
# КОНФИГУРАЦИЯ
# ============================================================================

# Загружаем переменные окружения
load_dotenv()

VERSION = "1.0.0"


def _env_int(name: str, default: int) -> int:
    """Целое из окружения; мусор в переменной не роняет импорт."""
    raw = os.getenv(name, "")
    try:
        return int(raw) if raw.strip() else default
    except ValueError:
        logging.getLogger(__name__).warning(
            f"Переменная {name}={raw!r} не является целым числом, используем {default}"
        )
        return default


# Количество процессов для параллельных репликаций
WORKERS = max(1, _env_int("MDPDE_WORKERS", 1))

# Папка для CSV/JSON результатов
OUT_DIR = os.getenv("MDPDE_OUT_DIR", "results")

# Уровень логирования
LOG_LEVEL = os.getenv("MDPDE_LOG_LEVEL", "INFO").upper()

# Seed по умолчанию
DEFAULT_SEED = _env_int("MDPDE_SEED", 20240601)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: str = None) -> None:
    """Настройка логирования для точек входа (CLI, скрипты)."""
    logging.basicConfig(
        format=LOG_FORMAT,
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
    )
