from typing import Optional

from core.exceptions import DomainError, NumericalFailure


class NonFiniteState(NumericalFailure):
    """A stage value or right-hand side evaluation produced inf or nan."""

    def __init__(self, stage: str, t: float, t_n: Optional[float] = None):
        self.stage = stage
        self.t = t
        self.t_n = t_n
        where = f" in the step from t_n={t_n!r}" if t_n is not None else ""
        super().__init__(f"Non-finite value at {stage}, t={t!r}{where}")


class NotExplicitlyOrderable(DomainError):
    """The combined fast/slow stage dependencies contain a cycle."""


class InvalidMethod(DomainError):
    """Method specification inconsistent with its tables or subcycle schedule."""
