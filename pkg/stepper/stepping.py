"""
Memory-lean multirate step.

Each outer interval is integrated by n_i physical substeps of the inner table
applied to the auxiliary ODE v' = f_fast(v) + (slow coupling), where the slow
coupling is the constant increment between consecutive rows of the outer
table. Only the current interval's inner stage derivatives, the slow stage
derivatives and the running fast-weight accumulators are kept.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.io import write_csv, write_json
from .exceptions import NonFiniteState
from .methods import MethodSpec
from .problem import MultirateProblem

logger = logging.getLogger(__name__)


@dataclass
class StepOutput:
    y_next: np.ndarray
    y_embedded: Optional[np.ndarray]
    n_fast_calls: int
    n_slow_calls: int
    # Fast evaluations at zero-width intervals, outside the s_I * sum(n_i) count.
    n_aux_fast_calls: int = 0


def _evaluate(rhs, t: float, y: np.ndarray, stage: str, check_finite: bool) -> np.ndarray:
    value = np.asarray(rhs(t, y), dtype=float)
    if check_finite and not np.all(np.isfinite(value)):
        raise NonFiniteState(stage, t)
    return value


def _nonzero_terms(row: np.ndarray) -> List[Tuple[int, float]]:
    return [(j, float(a)) for j, a in enumerate(row) if a != 0.0]


def step(
    problem: MultirateProblem,
    spec: MethodSpec,
    t_n: float,
    y_n: np.ndarray,
    h: float,
    check_finite: bool = True,
) -> StepOutput:
    """
    Advance one step of size h.

    ``y_n`` may carry leading batch axes; all arithmetic is elementwise in the
    state so that batches of independent linear systems advance together.

    Raises:
        NonFiniteState: when a right-hand side evaluation is not finite
            (only if ``check_finite``).
    """
    if not h > 0.0:
        raise ValueError(f"Step size must be positive, got {h}")
    outer, inner = spec.t_outer, spec.t_inner
    s_outer, s_inner = outer.s, inner.s
    c_outer, c_inner = outer.c, inner.c
    coupling = np.vstack([outer.A, outer.b])
    inner_rows = [_nonzero_terms(inner.A[k]) for k in range(s_inner)]
    inner_weights = _nonzero_terms(inner.b)
    weights = spec.fast_weight_blocks
    embedded = spec.embedded_weight_blocks

    y_n = np.asarray(y_n, dtype=float)
    v = y_n.copy()
    fast_acc = np.zeros_like(y_n)
    emb_acc = np.zeros_like(y_n) if embedded is not None else None
    slow = [None] * s_outer
    fast = [None] * s_inner
    n_fast = n_slow = n_aux = 0

    for i in range(s_outer):
        t_i = t_n + c_outer[i] * h
        slow[i] = _evaluate(problem.f_slow, t_i, v, f"slow stage {i + 1}", check_finite)
        n_slow += 1

        jump = np.zeros_like(y_n)
        for j, coefficient in _nonzero_terms(coupling[i + 1] - coupling[i]):
            jump += (h * coefficient) * slow[j]

        n = spec.block_subcycles[i]
        w_block = weights[i]
        e_block = embedded[i] if embedded is not None else None

        if n == 0:
            # Zero-width interval: fast stages collapse onto the slow stage state,
            # shifted along the coupling increment.
            for k in range(s_inner):
                wk = w_block[0, k]
                ek = e_block[0, k] if e_block is not None else 0.0
                if wk == 0.0 and ek == 0.0:
                    continue
                stage = v + c_inner[k] * jump
                value = _evaluate(problem.f_fast, t_i, stage, f"fast stage {k + 1} of interval {i + 1}", check_finite)
                n_aux += 1
                if wk != 0.0:
                    fast_acc += (h * wk) * value
                if ek != 0.0:
                    emb_acc += (h * ek) * value
            v = v + jump
            continue

        dt = spec.widths[i] * h / n
        increment = jump / n
        for p in range(n):
            t_p = t_i + p * dt
            for k in range(s_inner):
                stage = v + c_inner[k] * increment
                for l, a in inner_rows[k]:
                    stage = stage + (dt * a) * fast[l]
                fast[k] = _evaluate(
                    problem.f_fast, t_p + c_inner[k] * dt, stage,
                    f"fast stage {k + 1}, substep {p + 1} of interval {i + 1}", check_finite,
                )
                n_fast += 1
                wk = w_block[p, k]
                if wk != 0.0:
                    fast_acc += (h * wk) * fast[k]
                if e_block is not None and e_block[p, k] != 0.0:
                    emb_acc += (h * e_block[p, k]) * fast[k]
            update = v + increment
            for l, b in inner_weights:
                update = update + (dt * b) * fast[l]
            v = update

    slow_sum = np.zeros_like(y_n)
    for j, b in _nonzero_terms(outer.b):
        slow_sum += (h * b) * slow[j]
    y_next = y_n + fast_acc + slow_sum
    y_embedded = y_n + emb_acc + slow_sum if emb_acc is not None else None
    if check_finite and not np.all(np.isfinite(y_next)):
        raise NonFiniteState("step output", t_n + h)
    return StepOutput(
        y_next=y_next,
        y_embedded=y_embedded,
        n_fast_calls=n_fast,
        n_slow_calls=n_slow,
        n_aux_fast_calls=n_aux,
    )


@dataclass
class Trajectory:
    """Fixed-step solution with cumulative right-hand side counts."""

    method: str
    problem: str
    h: float
    times: np.ndarray
    states: np.ndarray
    steps: int = 0
    fast_calls: int = 0
    slow_calls: int = 0
    aux_fast_calls: int = 0
    embedded: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def total_calls(self) -> int:
        return self.fast_calls + self.slow_calls

    def counts(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "fast_calls": self.fast_calls,
            "slow_calls": self.slow_calls,
            "aux_fast_calls": self.aux_fast_calls,
        }

    def write(self, path) -> Tuple[Path, Path]:
        """CSV `t, y_1..y_dim` plus a JSON sidecar with the call counts."""
        path = Path(path)
        header = ["t"] + [f"y_{k + 1}" for k in range(self.states.shape[1])]
        rows = ([t, *state] for t, state in zip(self.times, self.states))
        csv_path = write_csv(path, header, rows)
        sidecar = dict(self.counts(), method=self.method, problem=self.problem, h=self.h)
        json_path = write_json(path.with_suffix(".json"), sidecar)
        return csv_path, json_path


def integrate(
    problem: MultirateProblem,
    spec: MethodSpec,
    h: float,
    t_span: Optional[Tuple[float, float]] = None,
    check_finite: bool = True,
) -> Trajectory:
    """
    Fixed steps of size h across the time span; a shorter last step closes the
    span when it is not a whole multiple of h.

    Raises:
        NonFiniteState: with ``t_n`` set to the start of the failing step.
    """
    t0, tf = t_span or problem.t_span
    span = tf - t0
    full_steps = int(np.floor(span / h + 1e-9))
    remainder = span - full_steps * h
    step_sizes = [h] * full_steps
    if remainder > 1e-12 * max(1.0, abs(span)):
        step_sizes.append(remainder)

    times = np.empty(len(step_sizes) + 1)
    states = np.empty((len(step_sizes) + 1, problem.dim))
    embedded = None
    times[0] = t0
    states[0] = problem.y0
    y = problem.y0.copy()
    trajectory = Trajectory(method=spec.label, problem=problem.name, h=h, times=times, states=states)

    for n, size in enumerate(step_sizes):
        t_n = t0 + n * h
        try:
            out = step(problem, spec, t_n, y, size, check_finite=check_finite)
        except NonFiniteState as exc:
            logger.warning(f"Run {spec.label} on {problem.name} blew up at t_n={t_n} (h={h})")
            raise NonFiniteState(exc.stage, exc.t, t_n=t_n) from exc
        y = out.y_next
        times[n + 1] = t0 + (n + 1) * h if size == h else tf
        states[n + 1] = y
        if out.y_embedded is not None:
            if embedded is None:
                embedded = np.empty_like(states)
                embedded[0] = problem.y0
            embedded[n + 1] = out.y_embedded
        trajectory.steps += 1
        trajectory.fast_calls += out.n_fast_calls
        trajectory.slow_calls += out.n_slow_calls
        trajectory.aux_fast_calls += out.n_aux_fast_calls

    trajectory.embedded = embedded
    logger.debug(
        f"Integrated {problem.name} with {spec.label}: {trajectory.steps} steps, "
        f"{trajectory.total_calls} calls"
    )
    return trajectory
