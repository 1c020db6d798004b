# -*- coding: utf-8 -*-
"""Исключения лаборатории самоэкспандеров"""

from typing import Any, Dict, List, Optional


class ExpanderLabError(Exception):
    """Базовая ошибка лаборатории"""

    kind = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'message': str(self), 'details': self.details}


class InvalidParameterError(ExpanderLabError, ValueError):
    kind = "invalid-parameter"


class ConfigError(ExpanderLabError, ValueError):
    kind = "config"


class UnknownKindError(ExpanderLabError, ValueError):
    kind = "unknown-kind"


class TraceNotConvergedError(ExpanderLabError):
    """Оценки следа на бесконечности расходятся сильнее допуска"""
    kind = "non-convergence"


class TraceMismatchError(ExpanderLabError):
    kind = "trace-mismatch"


class BlowUpError(ExpanderLabError):
    """Решение покинуло графический режим (|u'| превысил предел)"""
    kind = "blow-up"


class StepUnderflowError(ExpanderLabError):
    kind = "step-underflow"


class BracketError(ExpanderLabError):
    """Сканирование не нашло (или нашло несколько) смен знака"""
    kind = "bracket-failure"

    def __init__(self, message: str, scan_table: List[Dict[str, float]]):
        super().__init__(message, {'scan_table': scan_table})
        self.scan_table = scan_table


class ToleranceNotMetError(ExpanderLabError):
    kind = "tolerance-not-met"


class CFLUnderflowError(ExpanderLabError):
    kind = "cfl-underflow"


class SlopeCapExceededError(ExpanderLabError):
    kind = "slope-cap-exceeded"


class PastExtinctionError(ExpanderLabError):
    kind = "past-extinction"


class QuadratureToleranceError(ExpanderLabError):
    kind = "quadrature-tolerance-not-met"


class SearchRadiusOverflowError(ExpanderLabError):
    kind = "search-radius-overflow"


class HypothesisViolationError(ExpanderLabError):
    """Нарушено предположение проверки (например, H <= 0)"""
    kind = "hypothesis-violation"


class WindowEscapesGridError(ExpanderLabError):
    kind = "window-escapes-grid"


class StageError(ExpanderLabError):
    """Ошибка одного из этапов конвейера, с меткой этапа"""
    kind = "stage-failure"

    def __init__(self, stage: str, cause: Exception):
        message = f"Этап '{stage}' завершился ошибкой: {cause}"
        details = {'stage': stage, 'cause_kind': getattr(cause, 'kind', type(cause).__name__)}
        super().__init__(message, details)
        self.stage = stage
        self.cause = cause
