"""
Convergence and efficiency studies.

A study runs one method on one problem for a decreasing list of step sizes,
compares each run to a cached reference solution on the finest grid, and fits
the observed order on log-log axes.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from core.exceptions import DomainError
from core.io import write_csv, write_json
from core.metrics import rms_error
from problems.benchmarks import build_problem
from problems.reference import ReferenceCache, ReferenceResult
from stepper.exceptions import NonFiniteState
from stepper.methods import build_method
from stepper.stepping import integrate
from .serializers import ConvergenceReportSerializer

logger = logging.getLogger(__name__)

CONVERGENCE_METHODS = ("mis-38", "mis-kw3", "rmis-38", "rmis-kw3", "opt-38-minnorm")
REPORT_COLUMNS = ("method", "problem", "h", "steps", "total_calls", "rms_error")
LATTICE_TOL = 1e-9


def fit_order(h_values: Sequence[float], errors: Sequence[float], window: Optional[Tuple[float, float]] = None) -> float:
    """
    Least-squares slope of log(error) against log(h).

    Only points with window[0] <= error <= window[1] enter the fit; with fewer
    than two such points the order is undefined and NaN is returned.
    """
    low, high = window or settings.MULTIRATE_FIT_WINDOW
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.shape != e.shape:
        raise ValueError(f"Got {h.size} step sizes for {e.size} errors")
    keep = np.isfinite(e) & (e >= low) & (e <= high) & (e > 0.0)
    if np.count_nonzero(keep) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)
    return float(slope)


def default_h_values(problem_name: str) -> List[float]:
    """h_max * 2^-k for the configured (h_max, count) of the problem."""
    try:
        largest, count = settings.MULTIRATE_DEFAULT_H[problem_name]
    except KeyError:
        raise DomainError(f"No default step sizes for problem '{problem_name}'; pass --h") from None
    return [largest * 2.0 ** -k for k in range(count)]


def reference_grid(t_span: Tuple[float, float], h_values: Sequence[float]) -> np.ndarray:
    """
    Output grid of the finest step size.

    Raises:
        DomainError: if the step sizes are not strictly decreasing, if a coarser
            h is not an integer multiple of the finest, or if the finest h does
            not divide the time span.
    """
    h = np.asarray(h_values, dtype=float)
    if h.ndim != 1 or h.size < 1 or np.any(h <= 0.0):
        raise DomainError("Step sizes must be a non-empty list of positive numbers")
    if np.any(np.diff(h) >= 0.0):
        raise DomainError(f"Step sizes must be strictly decreasing, got {list(h)}")
    finest = h[-1]
    ratios = h / finest
    if np.any(np.abs(ratios - np.rint(ratios)) > LATTICE_TOL * ratios):
        raise DomainError("Every step size must be an integer multiple of the finest one")
    t0, tf = t_span
    intervals = (tf - t0) / finest
    if abs(intervals - round(intervals)) > LATTICE_TOL * intervals:
        raise DomainError(f"Finest step {finest} does not divide the time span {t_span}")
    return t0 + np.arange(int(round(intervals)) + 1) * finest


def evaluate_convergence_point(
    method: str,
    problem: str,
    h: float,
    m: int,
    reference_states: np.ndarray,
    reference_spacing: float,
    overrides: Optional[Mapping[str, Any]] = None,
    subcycles: Optional[Sequence[int]] = None,
) -> Dict[str, Any]:
    """
    One (method, h) run scored against the reference.

    A run that blows up is reported with an infinite error and the call count
    it would have cost.
    """
    spec = build_method(method, m=m, subcycles=subcycles)
    ode = build_problem(problem, overrides)
    t0, tf = ode.t_span
    planned_steps = int(np.ceil((tf - t0) / h - LATTICE_TOL))
    try:
        trajectory = integrate(ode, spec, h)
    except NonFiniteState as exc:
        logger.warning(f"⚠️ {method} on {problem} unstable at h={h:.3e}: {exc}")
        return {
            "h": h,
            "steps": planned_steps,
            "total_calls": planned_steps * spec.calls_per_step,
            "rms_error": float("inf"),
            "unstable": True,
        }
    indices = np.rint((trajectory.times - t0) / reference_spacing).astype(int)
    error = rms_error(trajectory.states, reference_states[indices])
    logger.info(f"📈 {method} on {problem}: h={h:.3e}, RMS error {error:.3e}, {trajectory.total_calls} calls")
    return {
        "h": h,
        "steps": trajectory.steps,
        "total_calls": trajectory.total_calls,
        "rms_error": error,
        "unstable": not np.isfinite(error),
    }


@dataclass
class ConvergenceReport:
    method: str
    problem: str
    m: int
    h_values: List[float]
    rms_errors: List[float]
    total_calls: List[int]
    steps: List[int] = field(default_factory=list)
    fit_window: Tuple[float, float] = (1e-9, 1.0)
    fitted_order: float = float("nan")
    reference: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.rms_errors) != len(self.h_values) or len(self.total_calls) != len(self.h_values):
            raise ValueError("One error and one call count per step size are required")

    def refit(self) -> float:
        self.fitted_order = fit_order(self.h_values, self.rms_errors, self.fit_window)
        return self.fitted_order

    def rows(self):
        for k, h in enumerate(self.h_values):
            steps = self.steps[k] if k < len(self.steps) else ""
            yield self.method, self.problem, h, steps, self.total_calls[k], self.rms_errors[k]

    def write(self, directory, stem: Optional[str] = None) -> Tuple[Path, Path]:
        directory = Path(directory)
        stem = stem or f"converge_{self.method}_{self.problem}"
        csv_path = write_csv(directory / f"{stem}.csv", REPORT_COLUMNS, self.rows())
        json_path = write_json(directory / f"{stem}.json", ConvergenceReportSerializer(self).data)
        return csv_path, json_path


class ConvergenceStudyService:
    """
    Runs convergence studies against cached references.

    Points are dispatched as Celery tasks when ``use_workers`` is set (eager
    mode runs them in-process); otherwise they are evaluated directly.
    """

    def __init__(
        self,
        refcache: Optional[str] = None,
        target_rms: Optional[float] = None,
        max_halvings: Optional[int] = None,
        use_workers: Optional[bool] = None,
        timeout: Optional[int] = None,
    ):
        self.cache = ReferenceCache(refcache or settings.MULTIRATE_REFCACHE)
        self.target_rms = target_rms if target_rms is not None else settings.MULTIRATE_REF_TOL
        self.max_halvings = max_halvings if max_halvings is not None else settings.MULTIRATE_REF_MAX_HALVINGS
        self.use_workers = settings.MULTIRATE_USE_WORKERS if use_workers is None else use_workers
        self.timeout = timeout or settings.MULTIRATE_TASK_TIMEOUT

    def prepare_reference(
        self,
        problem: str,
        h_values: Sequence[float],
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> Tuple[ReferenceResult, str, np.ndarray]:
        ode = build_problem(problem, overrides)
        grid = reference_grid(ode.t_span, h_values)
        result, key = self.cache.get_or_compute(ode, grid, self.target_rms, self.max_halvings)
        return result, key, grid

    def _collect(self, method, problem, h_values, m, overrides, subcycles, key, reference, spacing):
        if not self.use_workers:
            return [
                evaluate_convergence_point(method, problem, h, m, reference.states, spacing, overrides, subcycles)
                for h in h_values
            ]
        from .tasks import run_convergence_point

        pending = [
            run_convergence_point.delay(
                method=method,
                problem=problem,
                h=float(h),
                m=int(m),
                refcache=str(self.cache.directory),
                reference_key=key,
                reference_spacing=float(spacing),
                overrides=dict(overrides or {}),
                subcycles=list(subcycles) if subcycles is not None else None,
            )
            for h in h_values
        ]
        points = []
        for h, result in zip(h_values, pending):
            outcome = result.get(timeout=self.timeout)
            if not outcome.get("success"):
                raise DomainError(f"Convergence point h={h} failed: {outcome.get('error', 'Unknown error')}")
            points.append(dict(outcome, rms_error=float(outcome["rms_error"])))
        return points

    def converge(
        self,
        method: str,
        problem: str,
        h_values: Optional[Sequence[float]] = None,
        m: int = 100,
        overrides: Optional[Mapping[str, Any]] = None,
        subcycles: Optional[Sequence[int]] = None,
    ) -> ConvergenceReport:
        h_values = [float(h) for h in (h_values or default_h_values(problem))]
        # Fails fast on unknown method names before the reference is computed.
        build_method(method, m=m, subcycles=subcycles)
        reference, key, grid = self.prepare_reference(problem, h_values, overrides)
        spacing = float(grid[1] - grid[0])
        logger.info(f"🚀 Convergence study {method} on {problem}: {len(h_values)} step sizes, m={m}")
        points = self._collect(method, problem, h_values, m, overrides, subcycles, key, reference, spacing)
        report = ConvergenceReport(
            method=method,
            problem=problem,
            m=m,
            h_values=h_values,
            rms_errors=[p["rms_error"] for p in points],
            total_calls=[int(p["total_calls"]) for p in points],
            steps=[int(p["steps"]) for p in points],
            fit_window=tuple(settings.MULTIRATE_FIT_WINDOW),
            reference={
                "key": key,
                "h_ref": reference.h_ref,
                "halvings": reference.halvings,
                "last_difference": reference.last_difference,
            },
        )
        report.refit()
        logger.info(f"✅ {method} on {problem}: fitted order {report.fitted_order:.3f}")
        return report

    def efficiency(
        self,
        methods: Sequence[str],
        problem: str,
        h_values: Optional[Sequence[float]] = None,
        m: int = 100,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> List[ConvergenceReport]:
        return [self.converge(method, problem, h_values, m=m, overrides=overrides) for method in methods]


EFFICIENCY_COLUMNS = ("method", "h", "total_calls", "rms_error")


def write_efficiency_table(reports: Sequence[ConvergenceReport], path) -> Path:
    rows = (
        (report.method, h, calls, error)
        for report in reports
        for h, calls, error in zip(report.h_values, report.total_calls, report.rms_errors)
    )
    return write_csv(path, EFFICIENCY_COLUMNS, rows)
