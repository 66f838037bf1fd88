"""
Method specifications: which construction (MIS, RMIS, ...) runs with which
outer and inner tables and how many subcycles each outer interval gets.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from butcher.tables import ButcherTable, get_table
from core.exceptions import UnknownName
from gark.exceptions import InnerNotExplicitFirstStage
from gark.optimize import optimize_fast_weights
from gark.tableau import GarkTableau, assemble_mis, assemble_rmis, outer_widths, validate_outer
from .exceptions import InvalidMethod

logger = logging.getLogger(__name__)


class MethodKind(str, Enum):
    MIS = "mis"
    RMIS = "rmis"
    RMIS_WITH_MIS_EMBEDDING = "rmis+mis"
    OPTIMIZED = "optimized"


def subcycle_inner(table: ButcherTable, n: int) -> ButcherTable:
    """
    Single-step form of n equal substeps of ``table`` over the unit interval.

    The composition has n * s stages; substep p has abscissae (p + c) / n
    and sees every earlier substep through its full weights.
    """
    if n < 1:
        raise ValueError(f"Subcycle count must be positive, got {n}")
    if n == 1:
        return table
    s = table.s
    A = (np.kron(np.eye(n), table.A) + np.kron(np.tril(np.ones((n, n)), -1), np.outer(np.ones(s), table.b))) / n
    b = np.tile(table.b, n) / n
    c = (np.repeat(np.arange(n), s) + np.tile(table.c, n)) / n
    return ButcherTable(A=A, b=b, c=c, name=f"{table.name}x{n}")


@dataclass(frozen=True, eq=False)
class MethodSpec:
    """
    A runnable multirate method.

    ``subcycles`` lists n_i for each outer interval of nonzero width, in order,
    including the trailing interval [c_s, 1] when c_s < 1. ``fast_weights`` is
    used by the OPTIMIZED kind only and may cover either every fast stage or
    only the stages of nonzero-width intervals.
    """

    kind: MethodKind
    t_outer: ButcherTable
    t_inner: ButcherTable
    subcycles: Tuple[int, ...]
    fast_weights: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", MethodKind(self.kind))
        object.__setattr__(self, "subcycles", tuple(int(n) for n in self.subcycles))
        validate_outer(self.t_outer)
        if not self.t_inner.explicit:
            raise InvalidMethod(f"Inner table '{self.t_inner.name}' must be explicit")
        if self.kind in (MethodKind.RMIS, MethodKind.RMIS_WITH_MIS_EMBEDDING):
            if not self.t_inner.explicit_first_stage:
                raise InnerNotExplicitFirstStage(
                    f"Inner table '{self.t_inner.name}' must have an explicit first stage"
                )
        intervals = int(np.count_nonzero(self.widths > 0.0))
        if len(self.subcycles) != intervals:
            raise InvalidMethod(
                f"Expected {intervals} subcycle counts for '{self.t_outer.name}', got {len(self.subcycles)}"
            )
        if any(n < 1 for n in self.subcycles):
            raise InvalidMethod(f"Subcycle counts must be positive, got {self.subcycles}")
        if self.kind == MethodKind.OPTIMIZED:
            if self.fast_weights is None:
                raise InvalidMethod("Optimized methods need a fast weight vector")
            object.__setattr__(self, "fast_weights", np.array(self.fast_weights, dtype=float))
        elif self.fast_weights is not None:
            raise InvalidMethod(f"{self.kind.value} methods take their fast weights from the construction")

    @property
    def label(self) -> str:
        return self.name or f"{self.kind.value}-{self.t_outer.name}/{self.t_inner.name}"

    @cached_property
    def widths(self) -> np.ndarray:
        return outer_widths(self.t_outer)

    @cached_property
    def block_subcycles(self) -> Tuple[int, ...]:
        """n_i per outer stage, 0 where the interval has zero width."""
        counts = iter(self.subcycles)
        return tuple(next(counts) if width > 0.0 else 0 for width in self.widths)

    def inner_tables(self) -> List[ButcherTable]:
        return [
            subcycle_inner(self.t_inner, n) if n > 0 else self.t_inner
            for n in self.block_subcycles
        ]

    @cached_property
    def tableau(self) -> GarkTableau:
        """The equivalent GARK tableau, one composed inner table per interval."""
        inners = self.inner_tables()
        if self.kind == MethodKind.MIS:
            return assemble_mis(self.t_outer, inners)
        if self.kind == MethodKind.RMIS:
            return assemble_rmis(self.t_outer, inners)
        if self.kind == MethodKind.RMIS_WITH_MIS_EMBEDDING:
            return assemble_rmis(self.t_outer, inners, with_embedding=True)
        base = assemble_mis(self.t_outer, inners)
        try:
            return base.with_fast_weights(self.fast_weights)
        except ValueError as exc:
            raise InvalidMethod(str(exc)) from exc

    def _split(self, weights: Optional[np.ndarray]) -> Optional[List[np.ndarray]]:
        if weights is None:
            return None
        s_inner = self.t_inner.s
        return [
            weights[block].reshape(max(n, 1), s_inner)
            for block, n in zip(self.tableau.block_slices(), self.block_subcycles)
        ]

    @cached_property
    def fast_weight_blocks(self) -> List[np.ndarray]:
        """Fast weights per interval, shaped (substeps, inner stages)."""
        return self._split(self.tableau.b_f)

    @cached_property
    def embedded_weight_blocks(self) -> Optional[List[np.ndarray]]:
        return self._split(self.tableau.b_f_embedded)

    @property
    def calls_per_step(self) -> int:
        """s_O + s_I * sum(n_i)."""
        return self.t_outer.s + self.t_inner.s * sum(self.subcycles)


# name -> (kind, outer/inner table)
METHOD_CATALOG: Dict[str, Tuple[MethodKind, str]] = {
    "mis-38": (MethodKind.MIS, "38"),
    "rmis-38": (MethodKind.RMIS, "38"),
    "rmis-38-emb": (MethodKind.RMIS_WITH_MIS_EMBEDDING, "38"),
    "mis-kw3": (MethodKind.MIS, "kw3"),
    "rmis-kw3": (MethodKind.RMIS, "kw3"),
    "rmis-kw3-emb": (MethodKind.RMIS_WITH_MIS_EMBEDDING, "kw3"),
    "opt-38-minnorm": (MethodKind.OPTIMIZED, "38"),
}


def default_subcycles(
    outer: ButcherTable,
    m: int,
    schedules: Optional[Mapping[str, Mapping[int, Sequence[int]]]] = None,
) -> Tuple[int, ...]:
    """
    Subcycle counts for a multirate ratio m.

    A configured schedule for (outer name, m) wins; otherwise every nonzero
    interval gets ceil(m / number of nonzero intervals) substeps.
    """
    if m < 1:
        raise InvalidMethod(f"Multirate ratio must be positive, got {m}")
    if schedules is None:
        schedules = getattr(settings, "MULTIRATE_SUBCYCLE_SCHEDULES", {})
    intervals = int(np.count_nonzero(outer_widths(outer) > 0.0))
    configured = schedules.get(outer.name, {}).get(m)
    if configured is not None and len(configured) == intervals:
        return tuple(int(n) for n in configured)
    return (int(math.ceil(m / intervals)),) * intervals


def method_from_tables(
    kind: MethodKind,
    outer: ButcherTable,
    inner: Optional[ButcherTable] = None,
    m: int = 100,
    subcycles: Optional[Sequence[int]] = None,
    name: str = "",
) -> MethodSpec:
    inner = inner or outer
    counts = tuple(subcycles) if subcycles is not None else default_subcycles(outer, m)
    fast_weights = None
    if MethodKind(kind) == MethodKind.OPTIMIZED:
        layout = MethodSpec(MethodKind.MIS, outer, inner, counts)
        fast_weights = optimize_fast_weights(outer, layout.inner_tables())
    return MethodSpec(kind, outer, inner, counts, fast_weights=fast_weights, name=name)


def build_method(name: str, m: int = 100, subcycles: Optional[Sequence[int]] = None) -> MethodSpec:
    """Catalog method by name with the default (or given) subcycle schedule."""
    try:
        kind, table_name = METHOD_CATALOG[name]
    except KeyError:
        raise UnknownName("method", name, METHOD_CATALOG) from None
    table = get_table(table_name)
    spec = method_from_tables(kind, table, table, m=m, subcycles=subcycles, name=name)
    logger.debug(f"Built method {name}: subcycles {spec.subcycles}, {spec.calls_per_step} calls/step")
    return spec
