"""
Assembly of partitioned (GARK) tableaux for MIS and RMIS methods.

The fast partition integrates an auxiliary ODE across each outer interval
with a (possibly subcycled) inner table; the slow partition is the outer
table itself. Both constructions share every block except the fast weights.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from butcher.tables import ButcherTable
from .exceptions import InnerNotExplicitFirstStage, InvalidOuter

logger = logging.getLogger(__name__)

InnerTables = Union[ButcherTable, Sequence[ButcherTable]]


def _readonly(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GarkTableau:
    """Blocks of a two-partition GARK method; fast stages grouped by outer interval."""

    A_ff: np.ndarray
    A_fs: np.ndarray
    A_sf: np.ndarray
    A_ss: np.ndarray
    b_f: np.ndarray
    b_s: np.ndarray
    c_f: np.ndarray
    c_s: np.ndarray
    b_f_embedded: Optional[np.ndarray] = None
    block_sizes: Tuple[int, ...] = ()
    block_widths: Tuple[float, ...] = ()
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("A_ff", "A_fs", "A_sf", "A_ss", "b_f", "b_s", "c_f", "c_s"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.b_f_embedded is not None:
            object.__setattr__(self, "b_f_embedded", _readonly(self.b_f_embedded))
        s_f, s_s = self.s_f, self.s_s
        expected = {
            "A_ff": (s_f, s_f), "A_fs": (s_f, s_s), "A_sf": (s_s, s_f), "A_ss": (s_s, s_s),
            "c_f": (s_f,), "c_s": (s_s,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if self.b_f_embedded is not None and self.b_f_embedded.shape != (s_f,):
            raise ValueError("Embedded fast weights must match the fast stage count")
        if self.block_sizes and sum(self.block_sizes) != s_f:
            raise ValueError("Block sizes must add up to the fast stage count")

    @property
    def s_f(self) -> int:
        return int(self.b_f.shape[0])

    @property
    def s_s(self) -> int:
        return int(self.b_s.shape[0])

    def with_fast_weights(self, b_f, embedded: Optional[np.ndarray] = None) -> "GarkTableau":
        provenance = dict(self.provenance, fast_weights="custom")
        if embedded is not None:
            embedded = self.scatter_active(embedded)
        return dataclasses.replace(
            self, b_f=self.scatter_active(b_f), b_f_embedded=embedded, provenance=provenance
        )

    def consistency_residual(self) -> float:
        """Max |row sum - c| over all four coupling blocks."""
        residuals = [
            np.abs(self.A_ff.sum(axis=1) - self.c_f),
            np.abs(self.A_fs.sum(axis=1) - self.c_f),
            np.abs(self.A_sf.sum(axis=1) - self.c_s),
            np.abs(self.A_ss.sum(axis=1) - self.c_s),
        ]
        return float(max(r.max() for r in residuals))

    def block_slices(self) -> List[slice]:
        slices, start = [], 0
        for size in self.block_sizes:
            slices.append(slice(start, start + size))
            start += size
        return slices

    def active_fast_stages(self) -> np.ndarray:
        """Mask of fast stages that lie inside an outer interval of nonzero width."""
        mask = np.zeros(self.s_f, dtype=bool)
        for block, width in zip(self.block_slices(), self.block_widths):
            if width > 0.0:
                mask[block] = True
        return mask

    def scatter_active(self, weights) -> np.ndarray:
        """Full-length fast weights from values given on the active stages only."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape == (self.s_f,):
            return weights
        mask = self.active_fast_stages()
        if weights.shape != (int(mask.sum()),):
            raise ValueError(
                f"Expected {self.s_f} or {int(mask.sum())} fast weights, got {weights.shape}"
            )
        full = np.zeros(self.s_f)
        full[mask] = weights
        return full


def validate_outer(outer: ButcherTable) -> None:
    if not outer.explicit:
        raise InvalidOuter(f"Outer table '{outer.name}' must be explicit")
    c = outer.c
    if c[0] != 0.0:
        raise InvalidOuter(f"Outer table '{outer.name}' must start at c_1 = 0")
    if np.any(np.diff(c) < 0.0) or c[-1] > 1.0:
        raise InvalidOuter(
            f"Outer abscissae of '{outer.name}' must be nondecreasing and at most 1, got {c.tolist()}"
        )


def outer_widths(outer: ButcherTable) -> np.ndarray:
    """Interval widths c_{i+1} - c_i with c_{s+1} = 1."""
    return np.diff(np.append(outer.c, 1.0))


def _inner_per_block(outer: ButcherTable, inner: InnerTables) -> List[ButcherTable]:
    if isinstance(inner, ButcherTable):
        return [inner] * outer.s
    tables = list(inner)
    if len(tables) != outer.s:
        raise ValueError(f"Expected {outer.s} inner tables, got {len(tables)}")
    return tables


def _assemble_blocks(outer: ButcherTable, inners: List[ButcherTable]) -> Dict[str, Any]:
    validate_outer(outer)
    s_o = outer.s
    widths = outer_widths(outer)
    sizes = [table.s for table in inners]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    s_f = int(offsets[-1])
    coupling_rows = np.vstack([outer.A, outer.b])

    A_ff = np.zeros((s_f, s_f))
    A_fs = np.zeros((s_f, s_o))
    A_sf = np.zeros((s_o, s_f))
    c_f = np.zeros(s_f)
    mis_weights = np.zeros(s_f)

    for i, table in enumerate(inners):
        rows = slice(offsets[i], offsets[i + 1])
        A_ff[rows, rows] = widths[i] * table.A
        for k in range(i):
            cols = slice(offsets[k], offsets[k + 1])
            A_ff[rows, cols] = widths[k] * np.outer(np.ones(table.s), inners[k].b)
            # Slow stage i sees every fast interval that ends before it starts.
            A_sf[i, cols] = widths[k] * inners[k].b
        jump = coupling_rows[i + 1] - coupling_rows[i]
        A_fs[rows, :] = np.outer(np.ones(table.s), coupling_rows[i]) + np.outer(table.c, jump)
        c_f[rows] = outer.c[i] + widths[i] * table.c
        mis_weights[rows] = widths[i] * table.b

    return {
        "A_ff": A_ff,
        "A_fs": A_fs,
        "A_sf": A_sf,
        "A_ss": outer.A,
        "b_s": outer.b,
        "c_f": c_f,
        "c_s": outer.c,
        "mis_weights": mis_weights,
        "block_sizes": tuple(sizes),
        "block_widths": tuple(float(w) for w in widths),
    }


def _provenance(kind: str, outer: ButcherTable, inners: List[ButcherTable]) -> Dict[str, Any]:
    return {
        "kind": kind,
        "outer": outer.name,
        "inner": [table.name for table in inners],
    }


def assemble_mis(outer: ButcherTable, inner: InnerTables) -> GarkTableau:
    """
    GARK form of the MIS method with the given outer and inner tables.

    Args:
        outer: explicit table with nondecreasing c in [0, 1]
        inner: one table for every interval, or a sequence with one per outer stage

    Returns:
        GarkTableau whose fast weights integrate each interval with the inner table.
    """
    inners = _inner_per_block(outer, inner)
    blocks = _assemble_blocks(outer, inners)
    mis_weights = blocks.pop("mis_weights")
    tableau = GarkTableau(
        b_f=mis_weights, provenance=_provenance("mis", outer, inners), **blocks
    )
    logger.debug(f"Assembled MIS tableau ({outer.name}): s_f={tableau.s_f}, s_s={tableau.s_s}")
    return tableau


def rmis_fast_weights(outer: ButcherTable, inners: List[ButcherTable]) -> np.ndarray:
    """Fast weights b_i^O placed on the first stage of each interval."""
    weights = np.zeros(sum(table.s for table in inners))
    start = 0
    for i, table in enumerate(inners):
        weights[start] = outer.b[i]
        start += table.s
    return weights


def assemble_rmis(outer: ButcherTable, inner: InnerTables, with_embedding: bool = False) -> GarkTableau:
    """
    GARK form of the RMIS method.

    Identical to the MIS tableau except for the fast weights, which reuse the
    outer weights at the start of every interval. With ``with_embedding`` the
    MIS weights are attached as the embedded solution.

    Raises:
        InnerNotExplicitFirstStage: when any inner table has an implicit first stage.
    """
    inners = _inner_per_block(outer, inner)
    for table in inners:
        if not table.explicit_first_stage:
            raise InnerNotExplicitFirstStage(
                f"Inner table '{table.name}' must have c_1 = 0 and an empty first row"
            )
    blocks = _assemble_blocks(outer, inners)
    mis_weights = blocks.pop("mis_weights")
    kind = "rmis+mis" if with_embedding else "rmis"
    tableau = GarkTableau(
        b_f=rmis_fast_weights(outer, inners),
        b_f_embedded=mis_weights if with_embedding else None,
        provenance=_provenance(kind, outer, inners),
        **blocks,
    )
    logger.debug(f"Assembled RMIS tableau ({outer.name}): s_f={tableau.s_f}, s_s={tableau.s_s}")
    return tableau
