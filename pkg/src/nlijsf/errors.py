"""Exception types and structured diagnostics shared across the package."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


class NliJsfError(Exception):
    """Base class for all errors raised by nlijsf."""


class DomainError(NliJsfError, ValueError):
    """An input lies outside the domain of a formula (e.g. non-positive width)."""


class ConfigError(NliJsfError, ValueError):
    """Configuration failed to parse or validate.

    ``key`` holds the dotted key path that triggered the failure, when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class InterpolationRangeError(NliJsfError, ValueError):
    """Tabulated samples do not cover the requested frequencies."""


class OutOfWindowError(NliJsfError, ValueError):
    """A requested island or band lies outside the sampled grid."""


class UndefinedMetricError(NliJsfError, ArithmeticError):
    """A metric would require dividing by a zero transmitted mass."""


@dataclass(frozen=True)
class Diagnostic:
    """A numerical-validity note attached to a result instead of raising.

    ``code`` is a short machine-readable tag such as ``"truncation"`` or
    ``"convergence"``; ``detail`` carries the numbers behind it.
    """

    code: str
    message: str
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "detail": dict(self.detail)}
