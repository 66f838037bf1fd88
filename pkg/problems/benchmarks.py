"""
Benchmark problems for multirate integration.

Each factory returns a ``MultirateProblem`` with additively split right-hand
sides; parameters come from small dataclasses so that runs can override them
from JSON.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import UnknownName
from stepper.problem import MultirateProblem, RightHandSide
from .exceptions import InvalidParameters

logger = logging.getLogger(__name__)


def partition_rhs(
    rhs: RightHandSide, fast_components: Union[slice, Sequence[int]]
) -> Tuple[RightHandSide, RightHandSide]:
    """
    Split a component-partitioned right-hand side into zero-padded fast and
    slow parts that add up to ``rhs``.
    """

    def _mask(y: np.ndarray) -> np.ndarray:
        mask = np.zeros(y.shape[-1], dtype=bool)
        mask[fast_components] = True
        return mask

    def f_fast(t, y):
        value = np.asarray(rhs(t, y), dtype=float)
        return np.where(_mask(value), value, 0.0)

    def f_slow(t, y):
        value = np.asarray(rhs(t, y), dtype=float)
        return np.where(_mask(value), 0.0, value)

    return f_fast, f_slow


@dataclass(frozen=True)
class InverterChainParams:
    n_inverters: int = 100
    n_fast: int = 3
    gamma: float = 100.0
    y_op: float = 5.0
    y_threshold: float = 1.0
    y_source: float = 0.0
    t_span: Tuple[float, float] = (0.0, 7.0)

    def __post_init__(self):
        if self.n_inverters < 1:
            raise InvalidParameters("Inverter chain needs at least one inverter")
        if not 1 <= self.n_fast <= self.n_inverters:
            raise InvalidParameters(f"n_fast must lie in [1, {self.n_inverters}], got {self.n_fast}")
        # gamma = 0 is kept legal: it decouples the chain into y' = y_op - y.
        if self.gamma < 0.0:
            raise InvalidParameters(f"gamma must be non-negative, got {self.gamma}")


@dataclass(frozen=True)
class LinearCoupledParams:
    matrix: Tuple[Tuple[float, float], Tuple[float, float]] = ((-5.0, -1900.0), (5.0, -50.0))
    y0: Tuple[float, float] = (1.0, 1.0)
    t_span: Tuple[float, float] = (0.0, 1.0)


@dataclass(frozen=True)
class BrusselatorParams:
    a: float = 1.2
    b: float = 2.5
    epsilon: float = 1e-2
    y0: Tuple[float, float, float] = (3.9, 1.1, 2.8)
    t_span: Tuple[float, float] = (0.0, 10.0)

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise InvalidParameters(f"epsilon must be positive, got {self.epsilon}")


def inverter_input(t: float) -> float:
    """Input ramp: 0 before t = 5, then rising with unit slope."""
    return 0.0 if t < 5.0 else t - 5.0


def _drain_current(gate, drain, source, threshold):
    return (
        np.maximum(gate - source - threshold, 0.0) ** 2
        - np.maximum(gate - drain - threshold, 0.0) ** 2
    )


def inverter_chain(p: Optional[InverterChainParams] = None) -> MultirateProblem:
    """
    Chain of MOS inverters; the first ``n_fast`` nodes switch on the fast
    scale once the input ramp starts.
    """
    p = p or InverterChainParams()

    def rhs(t, y):
        gates = np.empty_like(y)
        gates[..., 0] = inverter_input(t)
        gates[..., 1:] = y[..., :-1]
        return p.y_op - y - p.gamma * _drain_current(gates, y, p.y_source, p.y_threshold)

    f_fast, f_slow = partition_rhs(rhs, slice(0, p.n_fast))
    return MultirateProblem(
        name="inverter",
        dim=p.n_inverters,
        f_fast=f_fast,
        f_slow=f_slow,
        y0=np.zeros(p.n_inverters),
        t_span=p.t_span,
        params=dataclasses.asdict(p),
    )


def linear_coupled(p: Optional[LinearCoupledParams] = None) -> MultirateProblem:
    """2x2 linear system: first component fast, second slow; exact solution known."""
    p = p or LinearCoupledParams()
    G = np.array(p.matrix, dtype=float)
    f_fast, f_slow = partition_rhs(lambda t, y: y @ G.T, [0])

    analytic = None
    default = LinearCoupledParams()
    if p.matrix == default.matrix and p.y0 == default.y0:
        omega = 5.0 * np.sqrt(1439.0) / 2.0

        def analytic(t):
            t = float(t) - p.t_span[0]
            decay = np.exp(-55.0 * t / 2.0)
            cos, sin = np.cos(omega * t), np.sin(omega * t)
            return decay * np.array([
                cos - 751.0 / np.sqrt(1439.0) * sin,
                cos - 7.0 / np.sqrt(1439.0) * sin,
            ])

    return MultirateProblem(
        name="linear",
        dim=2,
        f_fast=f_fast,
        f_slow=f_slow,
        y0=np.array(p.y0),
        t_span=p.t_span,
        analytic=analytic,
        params=dataclasses.asdict(p),
    )


def brusselator(p: Optional[BrusselatorParams] = None) -> MultirateProblem:
    """Brusselator with a stiff fast relaxation of the third component."""
    p = p or BrusselatorParams()

    def f_fast(t, y):
        out = np.zeros_like(y)
        out[..., 2] = (p.b - y[..., 2]) / p.epsilon
        return out

    def f_slow(t, y):
        y1, y2, y3 = y[..., 0], y[..., 1], y[..., 2]
        return np.stack([
            p.a - (y3 + 1.0) * y1 + y2 * y1 ** 2,
            y3 * y1 - y2 * y1 ** 2,
            -y3 * y1,
        ], axis=-1)

    return MultirateProblem(
        name="brusselator",
        dim=3,
        f_fast=f_fast,
        f_slow=f_slow,
        y0=np.array(p.y0),
        t_span=p.t_span,
        params=dataclasses.asdict(p),
    )


def zero_problem(dim: int = 2, t_span: Tuple[float, float] = (0.0, 1.0)) -> MultirateProblem:
    """y' = 0 with y0 = (1, ..., 1)."""

    def nothing(t, y):
        return np.zeros_like(y)

    return MultirateProblem(
        name="zero",
        dim=dim,
        f_fast=nothing,
        f_slow=nothing,
        y0=np.ones(dim),
        t_span=t_span,
        analytic=lambda t: np.ones(dim),
        params={"dim": dim, "t_span": list(t_span)},
    )


@dataclass(frozen=True)
class _ZeroParams:
    dim: int = 2
    t_span: Tuple[float, float] = (0.0, 1.0)


PROBLEM_REGISTRY: Dict[str, Tuple[Callable[..., MultirateProblem], type]] = {
    "inverter": (inverter_chain, InverterChainParams),
    "linear": (linear_coupled, LinearCoupledParams),
    "brusselator": (brusselator, BrusselatorParams),
    "zero": (lambda p: zero_problem(p.dim, p.t_span), _ZeroParams),
}


def _coerce(value: Any, default: Any) -> Any:
    # JSON gives lists where the dataclasses hold tuples.
    if isinstance(default, tuple) and isinstance(value, (list, tuple)):
        return tuple(_coerce(v, d) for v, d in zip(value, default)) if len(value) == len(default) else tuple(value)
    return value


def build_problem(name: str, overrides: Optional[Mapping[str, Any]] = None) -> MultirateProblem:
    """
    Registered problem with optional parameter overrides.

    Raises:
        UnknownName: for an unregistered problem name.
        InvalidParameters: for an unknown parameter or out-of-range value.
    """
    try:
        factory, params_cls = PROBLEM_REGISTRY[name]
    except KeyError:
        raise UnknownName("problem", name, PROBLEM_REGISTRY) from None
    params = params_cls()
    if overrides:
        known = {f.name for f in dataclasses.fields(params_cls)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise InvalidParameters(f"Unknown parameters for {name}: {', '.join(unknown)}")
        coerced = {key: _coerce(value, getattr(params, key)) for key, value in overrides.items()}
        try:
            params = dataclasses.replace(params, **coerced)
        except TypeError as exc:
            raise InvalidParameters(str(exc)) from exc
    logger.debug(f"Built problem {name} with {dataclasses.asdict(params)}")
    return factory(params)
