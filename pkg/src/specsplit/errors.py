"""Shared exception types.

Three failure families cover the whole package:

* ``DomainError`` -- a caller violated a documented precondition (bad shapes,
  values outside the model class, empty inputs).
* ``NumericError`` -- an iteration or quadrature failed to reach its
  tolerance; carries diagnostics so callers can report the failing state.
* ``ConfigError`` -- a config file could not be parsed; carries the file/line
  position.
"""


class DomainError(ValueError):
    """A documented precondition was violated."""


class NumericError(RuntimeError):
    """An iterative routine failed to converge to its stated tolerance."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} [{extra}]"


class ConfigError(ValueError):
    """A config file is malformed; points at the offending line."""

    def __init__(self, message: str, path: str = "<config>", line: int = 0):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}" if line else f"{path}: {message}")
