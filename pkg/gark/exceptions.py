from typing import Optional

from core.exceptions import DomainError, NumericalFailure


class InvalidOuter(DomainError):
    """Outer table is not explicit or its abscissae are not in [0, 1] and ordered."""


class InnerNotExplicitFirstStage(DomainError):
    """RMIS requires inner tables whose first stage is explicit (c_1 = 0, A_1 = 0)."""


class NotInternallyConsistent(DomainError):
    """Row sums of the coupling blocks disagree with the stage abscissae."""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"Tableau is not internally consistent: residual {residual:.3e} > {tol:.1e}")


class RankDeficient(NumericalFailure):
    """The fast order conditions admit no solution to the requested tolerance."""

    def __init__(self, rank: int, residual: float, unknowns: int, independent: Optional[int] = None):
        self.rank = rank
        self.residual = residual
        self.unknowns = unknowns
        self.independent = rank if independent is None else independent
        super().__init__(
            f"Fast order conditions not solvable: rank {rank} of {self.independent} independent "
            f"conditions, {unknowns} unknowns, residual {residual:.3e}"
        )
