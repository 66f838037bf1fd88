from core.exceptions import DomainError


class ParameterOutOfRange(DomainError):
    """Stability parameters outside kappa > 0, -1 < xi < 0, -1 < eta < 1."""


class NoAdmissibleSample(DomainError):
    """No sampled family member satisfies 0 < c2 < c3 < 1 away from the singular lines."""

    def __init__(self, family: str, tried: int):
        self.family = family
        self.tried = tried
        super().__init__(f"No admissible {family} family member among {tried} samples")
