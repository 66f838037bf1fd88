from core.exceptions import DomainError


class InvalidTable(DomainError):
    """A Butcher table with mismatched shapes or inconsistent abscissae."""


class SingularFamilyPoint(DomainError):
    """The fourth-order family is undefined at the requested (c2, c3)."""

    def __init__(self, denominator: str, c2: float, c3: float):
        self.denominator = denominator
        self.c2 = c2
        self.c3 = c3
        super().__init__(
            f"Family undefined at c2={c2!r}, c3={c3!r}: denominator {denominator} vanishes"
        )
