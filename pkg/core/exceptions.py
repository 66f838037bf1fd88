"""
Exception hierarchy shared by every multirate app.

Two branches matter to callers: ``DomainError`` for inputs that violate a
precondition, and ``NumericalFailure`` for computations that ran but did not
produce a usable result. Management commands map them to exit codes.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3


class MultirateError(Exception):
    """Base class for all errors raised by the multirate apps."""

    exit_code = EXIT_DOMAIN


class DomainError(MultirateError, ValueError):
    """An input violates a documented precondition."""

    exit_code = EXIT_DOMAIN


class NumericalFailure(MultirateError, ArithmeticError):
    """A computation finished without a trustworthy result."""

    exit_code = EXIT_NUMERICAL


class UnknownName(DomainError, KeyError):
    """Lookup of a table, method or problem by a name that is not registered."""

    def __init__(self, kind, name, known=()):
        self.kind = kind
        self.name = name
        self.known = tuple(known)
        super().__init__(f"Unknown {kind} '{name}'. Known: {', '.join(self.known) or 'none'}")

    def __str__(self):
        return self.args[0]
