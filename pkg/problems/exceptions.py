from core.exceptions import DomainError, NumericalFailure


class InvalidParameters(DomainError):
    """Problem parameters outside their documented ranges."""


class NoConvergence(NumericalFailure):
    """The reference engine did not meet its target within the allowed halvings."""

    def __init__(self, achieved: float, target: float, halvings: int):
        self.achieved = achieved
        self.target = target
        self.halvings = halvings
        super().__init__(
            f"Reference did not converge: RMS difference {achieved:.3e} > {target:.1e} "
            f"after {halvings} halvings"
        )
