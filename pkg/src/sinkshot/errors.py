"""Exception hierarchy. The CLI maps each class to a distinct exit code."""


class SinkshotError(Exception):
    """Base class for all package errors."""


class ValidationError(SinkshotError, ValueError):
    """Invalid data or configuration (bad values, violated invariants)."""


class BankFormatError(SinkshotError, ValueError):
    """Malformed feature-bank file (bad magic, truncation, trailing bytes)."""


class SolverError(SinkshotError, RuntimeError):
    """Transport solver failed (non-finite scalings in the requested domain)."""


class EvaluationError(SinkshotError, RuntimeError):
    """Episode evaluation failed; message carries the episode index."""
