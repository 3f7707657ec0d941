"""Errors raised by chi_verify.

The CLI maps these onto its exit codes, see :mod:`chi_verify.cli`.
"""


class ChiVerifyError(Exception):
    """Base class of all errors raised by chi_verify."""


class ContractViolation(ChiVerifyError, ValueError):
    """An argument violates the precondition of an operation."""


class CapabilityError(ChiVerifyError, NotImplementedError):
    """The request is outside what the tool can decide (e.g. n too large)."""


class ExpansionError(ChiVerifyError):
    """An expansion produced an impossible result, this signals a bug."""


class IdentityMismatch(ChiVerifyError, AssertionError):
    """Two routes that must agree on a value disagree."""


class CacheCorruptError(ChiVerifyError):
    """A line of the zero cache file could not be parsed."""

    def __init__(self, path: str, line_no: int, line: str):
        self.path = path
        self.line_no = line_no
        self.line = line
        super().__init__(f"{path}:{line_no}: corrupt cache line {line!r}")
