"""Diagnostic records shared by every pipeline phase.

Phases never raise for recoverable problems in the input; they append a
Diagnostic to a caller-supplied list and keep going. The CLI decides what a
diagnostic means for the exit code (errors fail the run, warnings only under
--werror).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    WARNING = "warning"
    ERROR = "error"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    file: str | None = None
    line: int | None = None

    def format(self) -> str:
        """Render as ``file:line: severity: message [code]``."""
        prefix = ""
        if self.file:
            prefix = f"{self.file}:"
            if self.line is not None:
                prefix += f"{self.line}:"
            prefix += " "
        return f"{prefix}{self.severity.value}: {self.message} [{self.code}]"


def warning(code: str, message: str, file: str | None = None, line: int | None = None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, file, line)


def error(code: str, message: str, file: str | None = None, line: int | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, file, line)


def sink(diags: list[Diagnostic] | None) -> list[Diagnostic]:
    """Return a usable diagnostic list (a throwaway one when None is passed)."""
    return diags if diags is not None else []
