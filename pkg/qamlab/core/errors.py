"""Exception hierarchy shared by the engines, the CLI and the HTTP surface.

Every error carries the process exit code the CLI reports for it: 2 for
anything the caller can fix (bad files, bad machines, bad instances) and 3
for internal exactness checks that should never fail.
"""


class QamlabError(Exception):
    exit_code: int = 3


class SpecError(QamlabError):
    """Input, file or machine specification error."""

    exit_code = 2


class ParseError(SpecError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MachineError(SpecError):
    """Invalid machine description or an illegal step on a configuration."""


class DimensionMismatch(SpecError):
    pass


class MalformedInstance(SpecError):
    pass


class InvalidCase(SpecError):
    pass


class NotCertifiedHalting(SpecError):
    pass


class InvariantViolation(QamlabError):
    """An exact identity the simulator relies on did not hold."""

    exit_code = 3
