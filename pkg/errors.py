"""
============================================================================
ИСКЛЮЧЕНИЯ БИБЛИОТЕКИ MDPDE ATE
============================================================================

Назначение:
    Единая иерархия ошибок для оценивания, тестов, симуляций и CLI.
    У каждой ошибки есть стабильный машиночитаемый код (атрибут code),
    который CLI выводит в JSON-записи об ошибке.

Иерархия:
    MdpdeError
    ├── ошибки входных данных (ValueError): размерности, σ, α, периоды
    ├── численные сбои (RuntimeError): NoConvergence, QuadratureFailure
    ├── ошибки загрузки CSV: ParseError, MissingColumn, NonMonotoneTime, MissingValue
    └── ошибки CLI: ConfigError, UsageError

@author MDPDE ATE Team
@version 1.0.0
@lastUpdated 2026-10-18
"""


class MdpdeError(Exception):
    """Базовая ошибка библиотеки."""

    code = "mdpde_error"

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_record(self) -> dict:
        """Машиночитаемая запись для вывода в stderr."""
        return {
            "error": self.code,
            "message": self.message,
            "details": {k: _plain(v) for k, v in self.details.items()},
        }


def _plain(value):
    # numpy-скаляры и прочее приводим к JSON-совместимым типам
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


# ============================================================================
# ОШИБКИ ВХОДНЫХ ДАННЫХ
# ============================================================================

class InvalidArgument(MdpdeError, ValueError):
    code = "invalid_argument"


class DimensionMismatch(InvalidArgument):
    code = "dimension_mismatch"


class NonPositiveSigma(InvalidArgument):
    code = "non_positive_sigma"


class AlphaOutOfRange(InvalidArgument):
    code = "alpha_out_of_range"


class InsufficientPreperiod(InvalidArgument):
    code = "insufficient_preperiod"


class InsufficientPostPeriod(InvalidArgument):
    code = "insufficient_post_period"


class SingularDesign(InvalidArgument):
    code = "singular_design"


class AlphaMismatch(InvalidArgument):
    code = "alpha_mismatch"


class ZeroStandardError(InvalidArgument):
    code = "zero_standard_error"


# ============================================================================
# ЧИСЛЕННЫЕ СБОИ
# ============================================================================

class NoConvergence(MdpdeError, RuntimeError):
    """Оптимизатор исчерпал итерации; частичный результат лежит в .fit"""

    code = "no_convergence"

    def __init__(self, message: str = "", fit=None, **details):
        super().__init__(message, **details)
        self.fit = fit


class QuadratureFailure(MdpdeError, RuntimeError):
    code = "quadrature_failure"


# ============================================================================
# ОШИБКИ ЗАГРУЗКИ ДАННЫХ
# ============================================================================

class ParseError(MdpdeError, ValueError):
    """Строка CSV не разбирается или ячейка не читается как число (или не годится для логарифма)."""

    code = "parse_error"

    def __init__(self, message: str = "", row=None, column=None, **details):
        super().__init__(message, row=row, column=column, **details)
        self.row = row
        self.column = column


class MissingColumn(MdpdeError, ValueError):
    code = "missing_column"


class NonMonotoneTime(MdpdeError, ValueError):
    code = "non_monotone_time"


class MissingValue(MdpdeError, ValueError):
    code = "missing_value"


# ============================================================================
# ОШИБКИ CLI
# ============================================================================

class ConfigError(MdpdeError, ValueError):
    code = "config_error"


class UsageError(MdpdeError, ValueError):
    code = "usage_error"
