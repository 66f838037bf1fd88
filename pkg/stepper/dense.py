"""
Literal evaluation of a two-partition GARK step from its full tableau.

Slow but independent of the subcycled loop; serves as a reference for it.
"""

import logging
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import List, Optional, Tuple

import numpy as np

from gark.tableau import GarkTableau
from .exceptions import NonFiniteState, NotExplicitlyOrderable
from .problem import MultirateProblem

logger = logging.getLogger(__name__)

Stage = Tuple[str, int]


@dataclass
class DenseStepResult:
    y_next: np.ndarray
    y_embedded: Optional[np.ndarray] = None


def stage_order(g: GarkTableau) -> List[Stage]:
    """
    An evaluation order of all fast and slow stages in which each stage only
    uses stages computed before it.

    Raises:
        NotExplicitlyOrderable: on self-dependence or a dependency cycle.
    """
    if np.any(np.diag(g.A_ff) != 0.0) or np.any(np.diag(g.A_ss) != 0.0):
        raise NotExplicitlyOrderable("A stage depends on itself (nonzero diagonal)")
    coupling = {
        ("f", "f"): g.A_ff, ("f", "s"): g.A_fs,
        ("s", "f"): g.A_sf, ("s", "s"): g.A_ss,
    }
    sizes = {"f": g.s_f, "s": g.s_s}
    sorter = TopologicalSorter()
    for target in ("s", "f"):
        for i in range(sizes[target]):
            predecessors = []
            for source in ("s", "f"):
                predecessors.extend((source, int(j)) for j in np.flatnonzero(coupling[target, source][i]))
            sorter.add((target, i), *predecessors)
    try:
        return list(sorter.static_order())
    except CycleError as exc:
        raise NotExplicitlyOrderable(f"Stage dependencies contain a cycle: {exc.args[1]}") from exc


def dense_gark_step(
    g: GarkTableau,
    problem: MultirateProblem,
    t_n: float,
    y_n: np.ndarray,
    h: float,
    check_finite: bool = True,
    order: Optional[List[Stage]] = None,
) -> DenseStepResult:
    """
    One step computed stage by stage from the full tableau.

    ``order`` may carry a precomputed ``stage_order(g)`` when stepping the same
    tableau repeatedly.
    """
    y_n = np.asarray(y_n, dtype=float)
    fast = np.zeros((g.s_f,) + y_n.shape)
    slow = np.zeros((g.s_s,) + y_n.shape)
    for partition, i in order or stage_order(g):
        if partition == "f":
            rows, c, rhs = (g.A_ff[i], g.A_fs[i]), g.c_f[i], problem.f_fast
        else:
            rows, c, rhs = (g.A_sf[i], g.A_ss[i]), g.c_s[i], problem.f_slow
        stage = y_n + h * (np.tensordot(rows[0], fast, axes=1) + np.tensordot(rows[1], slow, axes=1))
        value = np.asarray(rhs(t_n + c * h, stage), dtype=float)
        if check_finite and not np.all(np.isfinite(value)):
            raise NonFiniteState(f"{partition} stage {i + 1}", t_n + c * h, t_n=t_n)
        if partition == "f":
            fast[i] = value
        else:
            slow[i] = value

    slow_update = np.tensordot(g.b_s, slow, axes=1)
    y_next = y_n + h * (np.tensordot(g.b_f, fast, axes=1) + slow_update)
    y_embedded = None
    if g.b_f_embedded is not None:
        y_embedded = y_n + h * (np.tensordot(g.b_f_embedded, fast, axes=1) + slow_update)
    return DenseStepResult(y_next=y_next, y_embedded=y_embedded)
