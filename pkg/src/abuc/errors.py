"""Exception hierarchy shared by every abuc module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"span starts after it ends: {self}")

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}-{self.end_line}:{self.end_col}"


class AbucError(Exception):
    """Base class. ``span`` is set when the error can be tied to source text."""

    def __init__(self, message: str, span: SourceSpan | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class PolicySyntaxError(AbucError):
    pass


class UnknownAttribute(AbucError):
    pass


class KindMismatch(AbucError):
    pass


class DuplicateRuleId(AbucError):
    pass


class DuplicateAttribute(AbucError):
    pass


class DuplicateAssignment(AbucError):
    pass


class EmptyDomain(AbucError):
    pass


class ClockSkew(AbucError):
    pass


class InsufficientResource(AbucError):
    pass


class UniverseTooLarge(AbucError):
    pass


class VocabularyMismatch(AbucError):
    pass
