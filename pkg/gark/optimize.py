"""
Minimum-norm fast weights satisfying the fast-partition order conditions.
"""

import logging

import numpy as np
from scipy import linalg

from butcher.tables import ButcherTable
from .conditions import fast_condition_system
from .exceptions import RankDeficient
from .tableau import InnerTables, assemble_mis

logger = logging.getLogger(__name__)

RANK_TOL = 1e-9
RESIDUAL_TOL = 1e-11


def _pivoted_rank(rows: np.ndarray):
    """Numerical rank of ``rows`` and the pivot order of its rows."""
    _, r_factor, pivots = linalg.qr(rows.T, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r_factor))
    if not diagonal.size or diagonal[0] == 0.0:
        return 0, pivots
    return int(np.sum(diagonal > RANK_TOL * diagonal[0])), pivots


def optimize_fast_weights(
    outer: ButcherTable,
    inner: InnerTables,
    include_collapsed: bool = False,
    residual_tol: float = RESIDUAL_TOL,
) -> np.ndarray:
    """
    Smallest-norm b_f meeting all 14 fast conditions up to order four.

    Stages of intervals with zero width are left out of the unknowns unless
    ``include_collapsed`` is set, so the result has one entry per active fast
    stage (see ``GarkTableau.scatter_active``).
    Linearly dependent conditions are dropped with a column-pivoted QR before
    solving the underdetermined system through an orthogonal factorization.

    Raises:
        RankDeficient: when the condition matrix has lower rank than the
            conditions with their targets, or when the solve misses ``residual_tol``.
    """
    g = assemble_mis(outer, inner)
    matrix, targets, labels = fast_condition_system(g)
    active = np.ones(g.s_f, dtype=bool) if include_collapsed else g.active_fast_stages()
    system = matrix[:, active]
    unknowns = int(active.sum())

    # Pivoted QR of the transpose ranks the conditions themselves.
    rank, pivots = _pivoted_rank(system)
    independent, _ = _pivoted_rank(np.column_stack([system, targets]))
    if rank < independent:
        logger.warning(
            f"⚠️ Fast conditions: matrix rank {rank} below {independent} independent conditions"
        )
        residual = float(np.max(np.abs(system @ linalg.lstsq(system, targets)[0] - targets)))
        raise RankDeficient(rank, residual, unknowns, independent=independent)

    kept = np.sort(pivots[:rank])
    dropped = [labels[i] for i in sorted(set(range(len(labels))) - set(kept.tolist()))]
    if dropped:
        logger.info(f"Dropping dependent fast conditions: {', '.join(dropped)}")

    # Minimum-norm solution x = Q R^{-T} t of the kept rows.
    q_factor, r_kept = linalg.qr(system[kept].T, mode="economic")
    y = linalg.solve_triangular(r_kept, targets[kept], trans="T")
    solution = q_factor @ y

    residual = float(np.max(np.abs(system @ solution - targets)))
    logger.info(
        f"Fast weight optimization: {unknowns} unknowns, rank {rank}, residual {residual:.2e}"
    )
    if not residual < residual_tol:
        raise RankDeficient(rank, residual, unknowns, independent=independent)

    return solution
