"""
Order conditions of single Butcher tables.

Covers the classical conditions up to order four and the extra conditions
an outer table must satisfy for the multirate constructions to reach order
three (MIS) or four (RMIS), plus the same two conditions written as
polynomials on the fourth-order family.
"""

import logging
from typing import Dict, List, Tuple

import numpy as np

from .tables import ButcherTable

logger = logging.getLogger(__name__)

ORDER_TOL = 1e-10


def classical_residuals(table: ButcherTable) -> Dict[int, List[float]]:
    """Residuals of the eight tree conditions of order <= 4, grouped by order."""
    A, b, c = table.A, table.b, table.c
    Ac = A @ c
    return {
        1: [b.sum() - 1.0],
        2: [b @ c - 1.0 / 2.0],
        3: [b @ c ** 2 - 1.0 / 3.0, b @ Ac - 1.0 / 6.0],
        4: [
            b @ c ** 3 - 1.0 / 4.0,
            (b * c) @ Ac - 1.0 / 8.0,
            b @ (A @ c ** 2) - 1.0 / 12.0,
            b @ (A @ Ac) - 1.0 / 24.0,
        ],
    }


def classical_order(table: ButcherTable, tol: float = ORDER_TOL) -> int:
    """Largest p <= 4 such that every condition up to order p holds within tol."""
    order = 0
    for p, residuals in sorted(classical_residuals(table).items()):
        if max(abs(r) for r in residuals) >= tol:
            break
        order = p
    return order


def rfsmr3_residual(table: ButcherTable) -> float:
    """
    Residual of the extra third-order condition of MIS methods.

    Zero exactly when an MIS method built on this outer table (with an inner
    method of order >= 3) is of order three.
    """
    c = table.c
    Ac = table.A @ c
    s = table.s
    total = 0.0
    for i in range(1, s):
        total += (c[i] - c[i - 1]) * (Ac[i] + Ac[i - 1])
    total += (1.0 - c[s - 1]) * (0.5 + Ac[s - 1])
    return float(total - 1.0 / 3.0)


def rmis_v_vector(b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """
    Weights v with v_1 = 0, v_s = b_s (c_s - c_{s-1}) and, in between,
    v_i = b_i (c_i - c_{i-1}) + (c_{i+1} - c_{i-1}) * sum_{j>i} b_j.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    s = b.shape[0]
    v = np.zeros(s)
    if s == 1:
        return v
    tail = np.cumsum(b[::-1])[::-1]
    for i in range(1, s - 1):
        v[i] = b[i] * (c[i] - c[i - 1]) + (c[i + 1] - c[i - 1]) * tail[i + 1]
    v[s - 1] = b[s - 1] * (c[s - 1] - c[s - 2])
    return v


def rmis4_residual(table: ButcherTable) -> float:
    """Residual v . (A c) - 1/12 of the extra fourth-order condition of RMIS methods."""
    v = rmis_v_vector(table.b, table.c)
    return float(v @ (table.A @ table.c) - 1.0 / 12.0)


def family_condition_curves(c2: float, c3: float) -> Tuple[float, float]:
    """
    The MIS and RMIS conditions as polynomials on the fourth-order family.

    Returns:
        (mis_curve, rmis_curve); each vanishes exactly where the matching
        residual of ``butcher_family(c2, c3)`` does.
    """
    mis_curve = 3.0 * (c2 - 1.0) * (
        6.0 * c2 ** 2 * c3 ** 2 - 4.0 * c2 ** 2 * c3 - 6.0 * c2 * c3 ** 3
        + 8.0 * c2 * c3 ** 2 - 11.0 * c2 * c3 + 6.0 * c2 + 4.0 * c3 ** 3
        - 7.0 * c3 ** 2 + 7.0 * c3 - 3.0
    ) - 2.0 * (2.0 * c2 - 1.0) * (4.0 * c2 + 4.0 * c3 - 6.0 * c2 * c3 - 3.0)
    rmis_curve = (
        36.0 * c3 ** 4 - 120.0 * c3 ** 3 + 80.0 * c3 ** 2 - 12.0 * c3 + 1.0
        - (4.0 * c2 * (3.0 * c3 + 1.0) - 6.0 * c3 ** 2 + 2.0 * c3 - 3.0) ** 2
    )
    return float(mis_curve), float(rmis_curve)


def describe_table(table: ButcherTable) -> Dict[str, float]:
    """Summary used by the ``tableau`` command and JSON export."""
    summary = {
        "order": classical_order(table),
        "rfsmr3": rfsmr3_residual(table),
    }
    if table.s >= 2:
        summary["rmis4"] = rmis4_residual(table)
    logger.debug(f"Described table {table.name}: {summary}")
    return summary


def _real_roots(fn, degree: int) -> np.ndarray:
    # fn is a polynomial of known degree in one variable; sample and fit it exactly.
    nodes = np.linspace(-1.0, 2.0, degree + 3)
    coefficients = np.polyfit(nodes, [fn(x) for x in nodes], degree)
    scale = np.max(np.abs(coefficients))
    if scale == 0.0:
        return np.array([])
    coefficients = np.where(np.abs(coefficients) < 1e-13 * scale, 0.0, coefficients)
    coefficients = np.trim_zeros(coefficients, "f")
    if coefficients.size < 2:
        return np.array([])
    roots = np.roots(coefficients)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    return np.sort(real)


def mis_curve_c3(c2: float) -> np.ndarray:
    """Real c3 on the MIS family curve for a fixed c2 (cubic in c3)."""
    return _real_roots(lambda c3: family_condition_curves(c2, c3)[0], 3)


def rmis_curve_c2(c3: float) -> np.ndarray:
    """Real c2 on the RMIS family curve for a fixed c3 (quadratic in c2)."""
    discriminant = 36.0 * c3 ** 4 - 120.0 * c3 ** 3 + 80.0 * c3 ** 2 - 12.0 * c3 + 1.0
    if discriminant < 0.0:
        return np.array([])
    centre = 6.0 * c3 ** 2 - 2.0 * c3 + 3.0
    denominator = 4.0 * (3.0 * c3 + 1.0)
    root = np.sqrt(discriminant)
    return np.sort(np.array([(centre - root) / denominator, (centre + root) / denominator]))
