from __future__ import annotations

from typing import Any

from .types import FailureType


class InoueLabError(Exception):
    failure_type: FailureType = FailureType.UNKNOWN

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotUnimodular(InoueLabError):
    failure_type = FailureType.CONSTRUCTION_ERROR


class WrongSpectrum(InoueLabError):
    failure_type = FailureType.CONSTRUCTION_ERROR


class NotHyperbolic(InoueLabError):
    failure_type = FailureType.CONSTRUCTION_ERROR


class ZeroR(InoueLabError):
    failure_type = FailureType.CONSTRUCTION_ERROR


class NonConvergent(InoueLabError):
    failure_type = FailureType.DOMAIN_ERROR


class SingularMetric(InoueLabError):
    failure_type = FailureType.SINGULAR_METRIC


class BadKind(InoueLabError):
    failure_type = FailureType.BAD_KIND


class NotStronglyFlat(InoueLabError):
    failure_type = FailureType.NOT_STRONGLY_FLAT


class PositivityLoss(InoueLabError):
    failure_type = FailureType.POSITIVITY_LOSS


class StepFailure(InoueLabError):
    failure_type = FailureType.STEP_FAILURE


class InvalidInitialData(InoueLabError):
    failure_type = FailureType.INVALID_INITIAL_DATA


class InsufficientData(InoueLabError):
    failure_type = FailureType.INSUFFICIENT_DATA


class Disconnected(InoueLabError):
    failure_type = FailureType.DISCONNECTED


class SchemaViolation(InoueLabError):
    failure_type = FailureType.SCHEMA_VIOLATION

    def __init__(self, message: str, errors: list[dict[str, str]] | None = None) -> None:
        super().__init__(message, {"errors": errors or []})
        self.errors = errors or []


class MissingSeries(InoueLabError):
    failure_type = FailureType.MISSING_SERIES
