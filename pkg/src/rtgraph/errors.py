"""Exception hierarchy shared by every module.

Each class carries a stable ``code`` string and the process exit status the
command line uses when the error escapes a subcommand.
"""

from __future__ import annotations


class RTGraphError(Exception):
    code = "error"
    exit_status = 1

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InvalidInput(RTGraphError, ValueError):
    code = "invalid_input"
    exit_status = 2


class UnsupportedOperation(RTGraphError):
    code = "unsupported_operation"
    exit_status = 2


class NumericalFailure(RTGraphError):
    """Quadrature or Monte Carlo could not meet its tolerance.

    ``partial`` holds whatever estimate was reached, ``diagnostics`` a dict
    of free-form numbers useful for a bug report.
    """

    code = "numerical_failure"
    exit_status = 3

    def __init__(self, message, partial=None, diagnostics=None):
        super().__init__(message)
        self.partial = partial
        self.diagnostics = dict(diagnostics or {})

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["partial"] = self.partial
        out["diagnostics"] = self.diagnostics
        return out


class ResourceRefused(RTGraphError):
    code = "resource_refused"
    exit_status = 4


class ConfigError(RTGraphError):
    """One or more configuration violations, each tagged with a line number."""

    code = "config_error"
    exit_status = 2

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["violations"] = self.violations
        return out
