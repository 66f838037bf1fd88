"""
Linear stability of multirate methods on the coupled 2x2 test equation

    y' = Z y / h,   Z = [[hg11, hg12], [hg21, hg22]],

with the first component fast and the second slow. The amplification matrix
S(Z) is obtained by running one step of the method with h = 1 on the two unit
vectors, so every construction the stepper supports is covered without a
separate closed form.
"""

import logging
from dataclasses import dataclass

import numpy as np

from stepper.exceptions import NonFiniteState
from stepper.methods import MethodSpec
from stepper.problem import MultirateProblem
from stepper.stepping import step
from .exceptions import ParameterOutOfRange

logger = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-12


@dataclass(frozen=True)
class StabilityPoint:
    kappa: float
    xi: float
    eta: float
    spectral_radius: float

    @property
    def stable(self) -> bool:
        return is_stable(self.spectral_radius)


def _check_parameters(kappa, xi, eta) -> None:
    kappa, xi, eta = (np.asarray(value, dtype=float) for value in (kappa, xi, eta))
    if not np.all(kappa > 0.0):
        raise ParameterOutOfRange(f"kappa must be positive, got {kappa}")
    if not np.all((xi > -1.0) & (xi < 0.0)):
        raise ParameterOutOfRange(f"xi must lie in (-1, 0), got {xi}")
    if not np.all((eta > -1.0) & (eta < 1.0)):
        raise ParameterOutOfRange(f"eta must lie in (-1, 1), got {eta}")


def coefficient_matrices(kappa, xi, eta) -> np.ndarray:
    """
    Vectorised map (kappa, xi, eta) -> Z.

    Arguments broadcast against each other; the result has the broadcast
    shape followed by (2, 2).

    Raises:
        ParameterOutOfRange: if any value leaves its open interval.
    """
    _check_parameters(kappa, xi, eta)
    kappa, xi, eta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (kappa, xi, eta)))
    hg11 = xi / (1.0 + xi)
    hg22 = kappa * hg11
    beta = 2.0 * eta / (1.0 + eta)
    coupling = np.sqrt(np.abs(beta * hg11 * hg22))
    Z = np.empty(kappa.shape + (2, 2))
    Z[..., 0, 0] = hg11
    Z[..., 0, 1] = np.sign(beta) * coupling
    Z[..., 1, 0] = coupling
    Z[..., 1, 1] = hg22
    return Z


def point_from_parameters(kappa: float, xi: float, eta: float) -> np.ndarray:
    """Single 2x2 coefficient matrix for one parameter triple."""
    return coefficient_matrices(kappa, xi, eta)


def _test_problem(Z: np.ndarray) -> MultirateProblem:
    fast_rows = Z.copy()
    fast_rows[..., 1, :] = 0.0
    slow_rows = Z.copy()
    slow_rows[..., 0, :] = 0.0

    def f_fast(t, y):
        return np.matmul(fast_rows, y)

    def f_slow(t, y):
        return np.matmul(slow_rows, y)

    return MultirateProblem(
        name="dahlquist-2x2",
        dim=2,
        f_fast=f_fast,
        f_slow=f_slow,
        y0=np.ones(2),
        t_span=(0.0, 1.0),
    )


def amplification_matrices(spec: MethodSpec, Z: np.ndarray, check_finite: bool = False) -> np.ndarray:
    """
    S(Z) for a stack of coefficient matrices of shape (..., 2, 2).

    Column j of S is the image of the unit vector e_j after one step.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape[-2:] != (2, 2):
        raise ValueError(f"Coefficient matrices must end in (2, 2), got {Z.shape}")
    batch = Z.reshape(-1, 2, 2)
    identity = np.broadcast_to(np.eye(2), batch.shape).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        result = step(_test_problem(batch), spec, 0.0, identity, 1.0, check_finite=check_finite)
    return result.y_next.reshape(Z.shape)


def amplification_matrix(spec: MethodSpec, Z: np.ndarray) -> np.ndarray:
    """
    Raises:
        NonFiniteState: when the step overflows for this Z.
    """
    return amplification_matrices(spec, np.asarray(Z, dtype=float)[None], check_finite=True)[0]


def spectral_radius(S: np.ndarray) -> np.ndarray:
    """
    Largest eigenvalue modulus of each 2x2 matrix in ``S``, from trace and
    determinant. Non-finite matrices map to +inf.
    """
    S = np.asarray(S, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        trace = S[..., 0, 0] + S[..., 1, 1]
        det = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
        root = np.sqrt((trace * trace - 4.0 * det).astype(complex))
        radius = np.maximum(np.abs(0.5 * (trace + root)), np.abs(0.5 * (trace - root)))
    finite = np.all(np.isfinite(S), axis=(-2, -1)) & np.isfinite(radius)
    return np.where(finite, radius, np.inf)


def is_stable(radius) -> np.ndarray:
    """rho < 1 - 1e-12; the margin keeps rho = 1 round-off on the unstable side."""
    return np.asarray(radius) < 1.0 - STABILITY_MARGIN


def evaluate_point(spec: MethodSpec, kappa: float, xi: float, eta: float) -> StabilityPoint:
    Z = point_from_parameters(kappa, xi, eta)
    try:
        radius = float(spectral_radius(amplification_matrix(spec, Z)))
    except NonFiniteState:
        logger.warning(f"{spec.label}: non-finite amplification at kappa={kappa}, xi={xi}, eta={eta}")
        radius = float("inf")
    return StabilityPoint(kappa=float(kappa), xi=float(xi), eta=float(eta), spectral_radius=radius)
