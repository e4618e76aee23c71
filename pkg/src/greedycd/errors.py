"""Exception hierarchy shared across the package."""


class GreedyCDError(Exception):
    """Base class for all package errors."""


class UsageError(GreedyCDError, ValueError):
    """Bad argument: out-of-range index, shape mismatch, wrong call order."""


class DegenerateInputError(GreedyCDError, ValueError):
    """Input violates the full-column-rank assumption (e.g. a zero column)."""


class NumericalError(GreedyCDError, ArithmeticError):
    """An internal iteration failed to converge or an invariant drifted."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({extra})"


class GenerationError(GreedyCDError, RuntimeError):
    """Random problem generation exhausted its retries."""


class ConfigError(GreedyCDError, ValueError):
    """Inconsistent solver or benchmark configuration."""


class ParseError(GreedyCDError, ValueError):
    """Malformed input file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
