"""
Order conditions of two-partition GARK tableaux up to order four.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from butcher.conditions import rmis_v_vector
from butcher.tables import ButcherTable
from .exceptions import NotInternallyConsistent
from .tableau import GarkTableau, assemble_rmis

logger = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-10
ORDER_TOL = 1e-10
PARTITIONS = ("f", "s")

_TARGETS = {
    "1": 1.0, "2": 1.0 / 2.0, "3a": 1.0 / 3.0, "3b": 1.0 / 6.0,
    "4a": 1.0 / 4.0, "4b": 1.0 / 8.0, "4c": 1.0 / 12.0, "4d": 1.0 / 24.0,
}


def condition_order(label: str) -> int:
    return int(label[0])


def _blocks(g: GarkTableau):
    A = {
        ("f", "f"): g.A_ff, ("f", "s"): g.A_fs,
        ("s", "f"): g.A_sf, ("s", "s"): g.A_ss,
    }
    c = {"f": g.c_f, "s": g.c_s}
    return A, c


def condition_rows(g: GarkTableau, sigma: str) -> "OrderedDict[str, Tuple[np.ndarray, float]]":
    """
    Conditions on the weights of partition ``sigma``, each linear in b_sigma.

    Returns:
        label -> (coefficient vector r, target t) such that b_sigma . r = t.
    """
    A, c = _blocks(g)
    cs = c[sigma]
    rows: "OrderedDict[str, Tuple[np.ndarray, float]]" = OrderedDict()
    rows[f"1:{sigma}"] = (np.ones_like(cs), _TARGETS["1"])
    rows[f"2:{sigma}"] = (cs, _TARGETS["2"])
    rows[f"3a:{sigma}"] = (cs ** 2, _TARGETS["3a"])
    for nu in PARTITIONS:
        rows[f"3b:{sigma},{nu}"] = (A[sigma, nu] @ c[nu], _TARGETS["3b"])
    rows[f"4a:{sigma}"] = (cs ** 3, _TARGETS["4a"])
    for nu in PARTITIONS:
        rows[f"4b:{sigma},{nu}"] = (cs * (A[sigma, nu] @ c[nu]), _TARGETS["4b"])
    for nu in PARTITIONS:
        rows[f"4c:{sigma},{nu}"] = (A[sigma, nu] @ c[nu] ** 2, _TARGETS["4c"])
    for mu, nu in product(PARTITIONS, PARTITIONS):
        rows[f"4d:{sigma},{mu},{nu}"] = (A[sigma, mu] @ (A[mu, nu] @ c[nu]), _TARGETS["4d"])
    return rows


def fast_condition_system(g: GarkTableau) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """The 14 fast-partition conditions as M b_f = t."""
    rows = condition_rows(g, "f")
    labels = list(rows)
    matrix = np.vstack([rows[label][0] for label in labels])
    targets = np.array([rows[label][1] for label in labels])
    return matrix, targets, labels


@dataclass
class ConditionReport:
    """Residuals |lhs - rhs| of the 28 GARK conditions plus derived summary values."""

    residuals: "OrderedDict[str, float]"
    satisfied_order: int
    v_outer: np.ndarray
    tol: float = ORDER_TOL

    def max_residual(self, order: Optional[int] = None, partition: Optional[str] = None) -> float:
        values = [
            abs(value)
            for label, value in self.residuals.items()
            if (order is None or condition_order(label) == order)
            and (partition is None or label.split(":")[1].startswith(partition))
        ]
        return max(values) if values else 0.0

    def failing(self) -> List[str]:
        return [label for label, value in self.residuals.items() if not abs(value) < self.tol]


def check_conditions(g: GarkTableau, tol: float = ORDER_TOL) -> ConditionReport:
    """
    Evaluate every GARK order condition up to order four.

    Raises:
        NotInternallyConsistent: if any block row sum differs from its abscissa by more than 1e-10.
    """
    consistency = g.consistency_residual()
    if consistency > CONSISTENCY_TOL:
        raise NotInternallyConsistent(consistency, CONSISTENCY_TOL)

    weights = {"f": g.b_f, "s": g.b_s}
    residuals: "OrderedDict[str, float]" = OrderedDict()
    for sigma in PARTITIONS:
        for label, (row, target) in condition_rows(g, sigma).items():
            residuals[label] = abs(float(weights[sigma] @ row - target))
    # Keep canonical ordering: by order first, then partition.
    residuals = OrderedDict(
        sorted(residuals.items(), key=lambda item: (condition_order(item[0]), item[0]))
    )

    satisfied = 0
    for p in (1, 2, 3, 4):
        if all(abs(v) < tol for label, v in residuals.items() if condition_order(label) == p):
            satisfied = p
        else:
            break

    report = ConditionReport(
        residuals=residuals,
        satisfied_order=satisfied,
        v_outer=rmis_v_vector(g.b_s, g.c_s),
        tol=tol,
    )
    logger.debug(f"Conditions of {g.provenance.get('kind', 'gark')} tableau: order {satisfied}")
    return report


def lemma_identity_residuals(outer: ButcherTable, inner, q_max: int = 4) -> Dict[str, float]:
    """
    Residuals of the identities tying the RMIS fast weights to the slow ones.

    With RMIS weights and an inner table whose first stage is explicit, every
    fast-side quantity below equals its slow-side counterpart.
    """
    g = assemble_rmis(outer, inner)
    bf, bs = g.b_f, g.b_s
    residuals = OrderedDict()
    for q in range(q_max + 1):
        residuals[f"b c^{q}"] = abs(bf @ g.c_f ** q - bs @ g.c_s ** q)
    residuals["b A_ff"] = np.abs(bf @ g.A_ff - bs @ g.A_sf).max()
    residuals["b A_fs"] = np.abs(bf @ g.A_fs - bs @ g.A_ss).max()
    residuals["(b*c) A_ff"] = np.abs((bf * g.c_f) @ g.A_ff - (bs * g.c_s) @ g.A_sf).max()
    residuals["(b*c) A_fs"] = np.abs((bf * g.c_f) @ g.A_fs - (bs * g.c_s) @ g.A_ss).max()
    return OrderedDict((label, float(value)) for label, value in residuals.items())


def verify_lemma_identities(outer: ButcherTable, inner, q_max: int = 4) -> float:
    return max(lemma_identity_residuals(outer, inner, q_max).values())
