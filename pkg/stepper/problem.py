from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from core.exceptions import DomainError

RightHandSide = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MultirateProblem:
    """
    Additively split ODE y' = f_fast(t, y) + f_slow(t, y).

    Component-partitioned systems are expressed through zero-padded
    callbacks (see ``problems.benchmarks.partition_rhs``). The callbacks
    must also accept stacked states whose leading axes are batch axes when
    used by the linear stability analysis.
    """

    name: str
    dim: int
    f_fast: RightHandSide
    f_slow: RightHandSide
    y0: np.ndarray
    t_span: Tuple[float, float]
    analytic: Optional[Callable[[float], np.ndarray]] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        y0 = np.array(self.y0, dtype=float)
        y0.setflags(write=False)
        object.__setattr__(self, "y0", y0)
        t0, tf = (float(t) for t in self.t_span)
        object.__setattr__(self, "t_span", (t0, tf))
        if self.dim < 1:
            raise DomainError(f"Problem dimension must be positive, got {self.dim}")
        if not t0 < tf:
            raise DomainError(f"Time span must satisfy t0 < tf, got {self.t_span}")
        if y0.shape != (self.dim,):
            raise DomainError(f"Initial state has shape {y0.shape}, expected ({self.dim},)")

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.f_fast(t, y) + self.f_slow(t, y)
