"""
High-accuracy reference solutions by step halving, with an on-disk cache.

The engine integrates the unsplit right-hand side with the 3/8-Rule. Its
base step is the spacing of the output grid; each refinement halves the step
until two successive solutions agree on the grid to the target RMS.
"""

import hashlib
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from django.utils import timezone

from butcher.tables import ButcherTable, make_three_eighths
from core.exceptions import DomainError
from core.io import atomic_write_bytes, read_json, write_json
from core.metrics import rms_error
from stepper.problem import MultirateProblem
from .exceptions import NoConvergence

logger = logging.getLogger(__name__)

DEFAULT_TARGET_RMS = 1e-11
DEFAULT_MAX_HALVINGS = 24
GRID_TOL = 1e-9


@dataclass
class ReferenceResult:
    states: np.ndarray
    h_ref: float
    halvings: int
    last_difference: float


def grid_indices(problem: MultirateProblem, t_grid) -> Tuple[np.ndarray, float]:
    """
    Integer positions of the grid points on the uniform grid of finest spacing.

    Raises:
        DomainError: if the grid does not start at t0, is not increasing, leaves
            the time span, or has points off the finest-spacing lattice.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    t0, tf = problem.t_span
    if t_grid.ndim != 1 or t_grid.size < 2:
        raise DomainError("Reference grid needs at least two points")
    spacing = np.diff(t_grid)
    if np.any(spacing <= 0.0):
        raise DomainError("Reference grid must be strictly increasing")
    if abs(t_grid[0] - t0) > GRID_TOL * max(1.0, abs(t0)) or t_grid[-1] > tf + GRID_TOL * max(1.0, abs(tf)):
        raise DomainError(f"Reference grid must start at t0={t0} and end by tf={tf}")
    base = float(spacing.min())
    positions = (t_grid - t0) / base
    indices = np.rint(positions).astype(int)
    if np.any(np.abs(positions - indices) > GRID_TOL * np.maximum(1.0, positions)):
        raise DomainError("Reference grid points must be integer multiples of the finest spacing")
    return indices, base


def _rk_step(rhs, table: ButcherTable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    stages = []
    for i in range(table.s):
        state = y
        for j in range(i):
            if table.A[i, j] != 0.0:
                state = state + (h * table.A[i, j]) * stages[j]
        stages.append(rhs(t + table.c[i] * h, state))
    update = y
    for i, b in enumerate(table.b):
        if b != 0.0:
            update = update + (h * b) * stages[i]
    return update


def _solve_on_grid(problem, table, indices, base, t0, refinement) -> np.ndarray:
    h = base / refinement
    states = np.empty((indices.size, problem.dim))
    y = problem.y0.copy()
    position = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for row, target in enumerate(indices):
            while position < target * refinement:
                y = _rk_step(problem.rhs, table, t0 + position * h, y, h)
                position += 1
            states[row] = y
    return states


def compute_reference(
    problem: MultirateProblem,
    t_grid,
    target_rms: float = DEFAULT_TARGET_RMS,
    max_halvings: int = DEFAULT_MAX_HALVINGS,
    table: Optional[ButcherTable] = None,
) -> ReferenceResult:
    """
    Halve the step until two successive grid solutions differ by less than
    ``target_rms``; the finer of the two is returned.

    Raises:
        NoConvergence: after ``max_halvings`` halvings without meeting the target.
    """
    table = table or make_three_eighths()
    indices, base = grid_indices(problem, t_grid)
    t0 = problem.t_span[0]
    previous = _solve_on_grid(problem, table, indices, base, t0, 1)
    difference = float("inf")
    for halving in range(1, max_halvings + 1):
        refinement = 2 ** halving
        current = _solve_on_grid(problem, table, indices, base, t0, refinement)
        difference = rms_error(current, previous)
        logger.info(
            f"Reference {problem.name}: h={base / refinement:.3e}, RMS difference {difference:.3e}"
        )
        if difference < target_rms:
            return ReferenceResult(
                states=current, h_ref=base / refinement, halvings=halving, last_difference=difference
            )
        previous = current
    raise NoConvergence(difference, target_rms, max_halvings)


def reference_solution(
    problem: MultirateProblem,
    t_grid,
    target_rms: float = DEFAULT_TARGET_RMS,
    max_halvings: int = DEFAULT_MAX_HALVINGS,
) -> np.ndarray:
    """Reference states at ``t_grid`` (shape len(t_grid) x dim)."""
    return compute_reference(problem, t_grid, target_rms, max_halvings).states


class ReferenceCache:
    """
    Reference solutions keyed by problem, parameters, grid and target.

    Each entry is a ``<key>.npy`` array with a ``<key>.json`` manifest; both
    are written atomically so concurrent workers never read partial files.
    """

    def __init__(self, directory):
        self.directory = Path(directory)

    @staticmethod
    def key(problem: MultirateProblem, t_grid, target_rms: float) -> str:
        t_grid = np.ascontiguousarray(t_grid, dtype=float)
        document = {
            "problem": problem.name,
            "params": problem.params,
            "grid": hashlib.sha256(t_grid.tobytes()).hexdigest(),
            "target_rms": float(target_rms),
            "engine": "38",
        }
        encoded = json.dumps(document, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()[:32]

    def paths(self, key: str) -> Tuple[Path, Path]:
        return self.directory / f"{key}.npy", self.directory / f"{key}.json"

    def load(self, key: str) -> Optional[ReferenceResult]:
        array_path, manifest_path = self.paths(key)
        if not (array_path.exists() and manifest_path.exists()):
            return None
        manifest = read_json(manifest_path)
        states = np.load(array_path)
        return ReferenceResult(
            states=states,
            h_ref=manifest["h_ref"],
            halvings=manifest["halvings"],
            last_difference=manifest["last_difference"],
        )

    def store(self, key: str, problem: MultirateProblem, t_grid, target_rms: float, result: ReferenceResult) -> Path:
        array_path, manifest_path = self.paths(key)
        buffer = io.BytesIO()
        np.save(buffer, result.states)
        atomic_write_bytes(array_path, buffer.getvalue())
        t_grid = np.asarray(t_grid, dtype=float)
        manifest: Dict[str, Any] = {
            "problem": problem.name,
            "params": problem.params,
            "grid": {"t0": t_grid[0], "tf": t_grid[-1], "points": int(t_grid.size)},
            "target_rms": target_rms,
            "h_ref": result.h_ref,
            "halvings": result.halvings,
            "last_difference": result.last_difference,
            "created_at": timezone.now().isoformat(),
        }
        # Manifest last: its presence marks a complete entry.
        write_json(manifest_path, manifest)
        return array_path

    def get_or_compute(
        self,
        problem: MultirateProblem,
        t_grid,
        target_rms: float = DEFAULT_TARGET_RMS,
        max_halvings: int = DEFAULT_MAX_HALVINGS,
    ) -> Tuple[ReferenceResult, str]:
        key = self.key(problem, t_grid, target_rms)
        cached = self.load(key)
        if cached is not None:
            logger.info(f"Reference cache hit for {problem.name} ({key})")
            return cached, key
        logger.info(f"Computing reference for {problem.name} ({key})")
        result = compute_reference(problem, t_grid, target_rms, max_halvings)
        self.store(key, problem, t_grid, target_rms, result)
        return result, key
