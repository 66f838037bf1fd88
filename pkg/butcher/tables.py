"""
Butcher tables for explicit Runge-Kutta methods.

Provides the immutable ``ButcherTable`` value type, the shipped tables
(3/8-Rule, a third-order Kutta/Heun variant, forward Euler) and the
two-parameter family of explicit 4-stage fourth-order methods.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.exceptions import UnknownName
from .exceptions import InvalidTable, SingularFamilyPoint

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-14
SINGULAR_TOL = 1e-12


def _frozen(values, ndim: int, label: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise InvalidTable(f"{label} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ButcherTable:
    """
    Coefficients (A, b, c) of an s-stage Runge-Kutta method.

    Rows of A must sum to the matching entry of c. The tolerance scales
    with the absolute row sum so that composed tables with large
    coefficients are judged on relative round-off.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = _frozen(self.A, 2, "A")
        b = _frozen(self.b, 1, "b")
        c = _frozen(self.c, 1, "c")
        s = b.shape[0]
        if s < 1 or A.shape != (s, s) or c.shape != (s,):
            raise InvalidTable(
                f"Inconsistent shapes: A {A.shape}, b {b.shape}, c {c.shape}"
            )
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise InvalidTable("Butcher table entries must be finite")
        scale = np.maximum(1.0, np.abs(A).sum(axis=1))
        mismatch = np.abs(A.sum(axis=1) - c)
        if np.any(mismatch > ROW_SUM_TOL * scale):
            worst = int(np.argmax(mismatch / scale))
            raise InvalidTable(
                f"Row {worst} of A sums to {A[worst].sum()!r}, expected c={c[worst]!r}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return int(self.b.shape[0])

    @property
    def explicit(self) -> bool:
        return bool(np.all(np.triu(self.A) == 0.0))

    @property
    def explicit_first_stage(self) -> bool:
        return bool(np.all(self.A[0] == 0.0) and self.c[0] == 0.0)

    def renamed(self, name: str) -> "ButcherTable":
        return ButcherTable(self.A, self.b, self.c, name=name)

    def __repr__(self):
        return f"ButcherTable(name={self.name!r}, s={self.s})"


def make_three_eighths() -> ButcherTable:
    """Kutta's 3/8-Rule, fourth order."""
    return ButcherTable(
        A=[
            [0.0, 0.0, 0.0, 0.0],
            [1.0 / 3.0, 0.0, 0.0, 0.0],
            [-1.0 / 3.0, 1.0, 0.0, 0.0],
            [1.0, -1.0, 1.0, 0.0],
        ],
        b=[1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0],
        c=[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        name="38",
    )


def make_kw3() -> ButcherTable:
    """Third-order three-stage table with abscissae (0, 1/3, 3/4)."""
    return ButcherTable(
        A=[
            [0.0, 0.0, 0.0],
            [1.0 / 3.0, 0.0, 0.0],
            [-3.0 / 16.0, 15.0 / 16.0, 0.0],
        ],
        b=[1.0 / 6.0, 3.0 / 10.0, 8.0 / 15.0],
        c=[0.0, 1.0 / 3.0, 3.0 / 4.0],
        name="kw3",
    )


def make_forward_euler() -> ButcherTable:
    return ButcherTable(A=[[0.0]], b=[1.0], c=[0.0], name="euler")


SHIPPED_TABLES: Dict[str, Callable[[], ButcherTable]] = {
    "38": make_three_eighths,
    "kw3": make_kw3,
    "euler": make_forward_euler,
}


def get_table(name: str) -> ButcherTable:
    try:
        return SHIPPED_TABLES[name]()
    except KeyError:
        raise UnknownName("Butcher table", name, SHIPPED_TABLES) from None


def _family_denominators(c2: float, c3: float) -> List[Tuple[str, float]]:
    return [
        ("c2", c2),
        ("2c2-1", 2.0 * c2 - 1.0),
        ("c2-1", c2 - 1.0),
        ("c3", c3),
        ("c3-1", c3 - 1.0),
        ("c3-c2", c3 - c2),
        ("6c2c3-4c2-4c3+3", 6.0 * c3 * c2 - 4.0 * c3 - 4.0 * c2 + 3.0),
    ]


def family_singularity(c2: float, c3: float) -> Optional[str]:
    """Name of the first vanishing family denominator, or None."""
    for label, value in _family_denominators(c2, c3):
        if abs(value) <= SINGULAR_TOL:
            return label
    return None


def butcher_family(c2: float, c3: float) -> ButcherTable:
    """
    Explicit 4-stage fourth-order table with c = (0, c2, c3, 1).

    Raises:
        SingularFamilyPoint: when one of the closed-form denominators vanishes.
    """
    c2 = float(c2)
    c3 = float(c3)
    singular = family_singularity(c2, c3)
    if singular is not None:
        raise SingularFamilyPoint(singular, c2, c3)

    d = -4.0 * c3 + 6.0 * c3 * c2 + 3.0 - 4.0 * c2

    a32 = -c3 * (c3 - c2) / (2.0 * c2 * (2.0 * c2 - 1.0))
    a42 = (c2 - 1.0) * (4.0 * c3 ** 2 - 5.0 * c3 + 2.0 - c2) / (2.0 * c2 * (c3 - c2) * d)
    a43 = -(2.0 * c2 - 1.0) * (c2 - 1.0) * (c3 - 1.0) / (c3 * (c3 - c2) * d)
    # First-column entries come from the row-sum condition; their closed forms
    # lose digits to cancellation near the singular lines.
    a21 = c2
    a31 = c3 - a32
    a41 = 1.0 - a42 - a43

    b1 = (6.0 * c3 * c2 - 2.0 * c3 - 2.0 * c2 + 1.0) / (12.0 * c3 * c2)
    b2 = -(2.0 * c3 - 1.0) / (12.0 * c2 * (c2 - 1.0) * (c3 - c2))
    b3 = (2.0 * c2 - 1.0) / (12.0 * c3 * (c2 - c3 * c2 + c3 ** 2 - c3))
    b4 = d / (12.0 * (c3 - 1.0) * (c2 - 1.0))

    A = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [a21, 0.0, 0.0, 0.0],
        [a31, a32, 0.0, 0.0],
        [a41, a42, a43, 0.0],
    ])
    c = np.array([0.0, c2, c3, 1.0])
    return ButcherTable(A=A, b=[b1, b2, b3, b4], c=c, name=f"family({c2!r},{c3!r})")


def family_intersection_points() -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """(c2, c3) pairs where both the MIS and RMIS family conditions vanish."""
    return (
        (1.0 / 3.0, 2.0 / 3.0),
        (2502984374488603.0 / 9007199254740992.0, 2843567935040037.0 / 4503599627370496.0),
    )
