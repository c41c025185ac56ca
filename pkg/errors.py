"""
Exception hierarchy for the toolkit.

Every error carries the CLI exit status it maps to and can render itself as the
machine-readable payload written by `main.py`:
- 2: input document does not match its schema
- 3: a mathematical precondition failed
- 4: an internal invariant was breached
"""

from typing import Any, Dict, Optional


class ClosureToolkitError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 4
    kind = "internal"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": "v1",
            "error": {
                "kind": self.kind,
                "type": type(self).__name__,
                "message": self.message,
                "details": self.details,
                "exit_code": self.exit_code,
            },
        }


class SchemaError(ClosureToolkitError):
    exit_code = 2
    kind = "schema"


class MathPreconditionError(ClosureToolkitError):
    exit_code = 3
    kind = "precondition"


class FieldMismatchError(MathPreconditionError):
    pass


class FieldDivisionError(MathPreconditionError, ZeroDivisionError):
    pass


class DimensionMismatchError(MathPreconditionError):
    pass


class NumberFieldError(MathPreconditionError):
    """Minimal polynomial rejected (not monic, reducible, degree out of range, bad hint)."""


class FieldExtensionError(MathPreconditionError):
    """A computation needs a field extension beyond what is supported."""


class ConjugationError(MathPreconditionError):
    """The coefficient field is not closed under complex conjugation."""


class UncertifiedValuationError(MathPreconditionError):
    pass


class UnboundedError(MathPreconditionError):
    """Standard part requested for a series of negative valuation."""


class ParameterDependenceError(MathPreconditionError):
    """A leading coefficient vanishes on part of the parameter domain."""


class IncompatibleParametersError(MathPreconditionError):
    pass


class NotSquarefreeError(MathPreconditionError):
    pass


class ContainmentError(MathPreconditionError):
    pass


class EmptyFamilyError(MathPreconditionError):
    pass


class SamplerError(MathPreconditionError):
    pass


class PrecisionError(MathPreconditionError):
    """Interval too wide to decide; the caller should escalate precision."""


class InvariantBreach(ClosureToolkitError):
    exit_code = 4
    kind = "invariant"
