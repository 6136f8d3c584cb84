"""Exception hierarchy for the intempo engine."""

from __future__ import annotations


class IntempoError(Exception):
    """Base class for all engine errors."""


class SchemaError(IntempoError):
    """Invalid type schema (duplicate names, cyclic inheritance, bad endpoints)."""


class UnknownTypeError(IntempoError):
    """A node or edge type name is not declared in the schema."""


class UnknownElementError(IntempoError):
    """An element reference does not resolve to a stored element."""


class DuplicateNameError(IntempoError):
    """A symbolic element name is already taken by a stored element."""


class EndpointMissingOrDeadError(IntempoError):
    """An edge creation referenced a missing or logically deleted endpoint."""


class DoubleDeletionError(IntempoError):
    """Logical deletion of an element that is already deleted."""


class TimestampRegressionError(IntempoError):
    """An event carried a timestamp smaller than a previously applied one."""


class EventFileError(IntempoError):
    """Malformed event file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormulaError(IntempoError):
    """Base class for rule-language errors."""


class FormulaSyntaxError(FormulaError):
    """Surface-syntax error, with position information."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class MalformedIntervalError(FormulaError):
    """A temporal interval [a, b] with a < 0 or a > b."""


class UnsupportedOperatorError(FormulaError):
    """The formula uses an operator or shape outside the translatable fragment."""


class UnboundVariableError(FormulaError):
    """A pattern connection or constraint references an undeclared variable."""


class NoTriggerError(FormulaError):
    """The formula has no top-level creation-triggered quantifier."""


class SchemaMismatchError(IntempoError):
    """A query does not fit the schema of the graph it is attached to."""


class RuleTypeUnknownError(IntempoError):
    """A pruning rule names a type that the graph schema does not declare."""


class InvalidConfigError(IntempoError):
    """A simulator or benchmark configuration is out of range or inconsistent."""
