"""Shared exception types for the syntax and execution layers."""
from __future__ import annotations


class ParseError(Exception):
    """Raised when source text cannot be read as a program or term."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        loc = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{loc}")


# Stable machine-readable tags for runtime errors.  Verdicts and logs carry
# these strings, so they must never be renamed casually.
KIND_ZERO_DIVIDE = "zero_divide"
KIND_TYPE = "type_error"
KIND_UNBOUND = "unbound"
KIND_DOMAIN = "domain_error"
KIND_UNKNOWN_PREDICATE = "unknown_predicate"
KIND_NO_SEMANTICS = "no_semantics"
KIND_NO_SOLUTION = "no_solution"


class PrologError(Exception):
    """Runtime error raised during goal execution; never used for plain failure."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        self.message = message
        super().__init__(f"{kind}: {message}")


class BudgetExceededError(Exception):
    """Raised internally when a query exhausts its step or wall-clock budget."""


class ManifestError(Exception):
    """Raised when an operator manifest file is malformed."""
