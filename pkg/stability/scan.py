"""
Stability-region scans over the (xi, eta) square and the area search along
the fourth-order family curves.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from butcher.conditions import mis_curve_c3, rmis_curve_c2
from butcher.tables import butcher_family, family_intersection_points, family_singularity
from core.exceptions import DomainError, UnknownName
from stepper.methods import MethodKind, MethodSpec, method_from_tables
from .analysis import amplification_matrices, coefficient_matrices, is_stable, spectral_radius
from .exceptions import NoAdmissibleSample, ParameterOutOfRange

logger = logging.getLogger(__name__)

DEFAULT_N_XI = 100
DEFAULT_N_ETA = 200

FAMILY_KINDS: Dict[str, MethodKind] = {
    "mis": MethodKind.MIS,
    "rmis": MethodKind.RMIS,
}


def cell_centered_grid(lower: float, upper: float, n: int) -> np.ndarray:
    """n cell midpoints of (lower, upper); never touches the endpoints."""
    if n < 1:
        raise DomainError(f"Grid size must be positive, got {n}")
    return lower + (np.arange(n) + 0.5) * (upper - lower) / n


@dataclass
class StabilityScan:
    """
    Result of a scan at fixed kappa.

    ``spectral_radius`` and ``stable`` are indexed [eta, xi].
    """

    method: str
    kappa: float
    xi_grid: np.ndarray
    eta_grid: np.ndarray
    spectral_radius: np.ndarray
    stable: np.ndarray
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def area_fraction(self) -> float:
        return float(np.count_nonzero(self.stable)) / self.stable.size

    def nearest(self, xi: float, eta: float) -> Tuple[int, int]:
        """(eta index, xi index) of the grid cell closest to (xi, eta)."""
        return int(np.argmin(np.abs(self.eta_grid - eta))), int(np.argmin(np.abs(self.xi_grid - xi)))

    def stable_at(self, xi: float, eta: float) -> bool:
        return bool(self.stable[self.nearest(xi, eta)])

    def rows(self) -> Iterable[Tuple[float, float, float, int]]:
        for j, eta in enumerate(self.eta_grid):
            for i, xi in enumerate(self.xi_grid):
                yield float(xi), float(eta), float(self.spectral_radius[j, i]), int(self.stable[j, i])


def scan(
    spec: MethodSpec,
    kappa: float,
    n_xi: int = DEFAULT_N_XI,
    n_eta: int = DEFAULT_N_ETA,
    coupling_scale: float = 1.0,
) -> StabilityScan:
    """
    Spectral radius of S over a cell-centred (xi, eta) grid.

    ``coupling_scale`` multiplies hg12 and divides hg21, a diagonal
    similarity of Z that leaves the spectrum unchanged.

    Raises:
        ParameterOutOfRange: if kappa is not positive.
    """
    if not kappa > 0.0:
        raise ParameterOutOfRange(f"kappa must be positive, got {kappa}")
    if not coupling_scale > 0.0:
        raise DomainError(f"coupling_scale must be positive, got {coupling_scale}")
    xi_grid = cell_centered_grid(-1.0, 0.0, n_xi)
    eta_grid = cell_centered_grid(-1.0, 1.0, n_eta)
    eta_mesh, xi_mesh = np.meshgrid(eta_grid, xi_grid, indexing="ij")
    Z = coefficient_matrices(kappa, xi_mesh, eta_mesh)
    if coupling_scale != 1.0:
        Z[..., 0, 1] *= coupling_scale
        Z[..., 1, 0] /= coupling_scale
    radius = spectral_radius(amplification_matrices(spec, Z))
    stable = is_stable(radius)
    result = StabilityScan(
        method=spec.label,
        kappa=float(kappa),
        xi_grid=xi_grid,
        eta_grid=eta_grid,
        spectral_radius=radius,
        stable=stable,
        meta={"subcycles": list(spec.subcycles), "kind": spec.kind.value},
    )
    logger.info(f"Scanned {spec.label} at kappa={kappa}: stable area {result.area_fraction:.4f}")
    return result


def _admissible(c2: float, c3: float) -> bool:
    return 0.0 < c2 < c3 < 1.0 and family_singularity(c2, c3) is None


def family_samples(family: str, n_samples: int) -> List[Tuple[float, float]]:
    """
    Admissible (c2, c3) points on a family curve, sorted by c2.

    The free coordinate (c2 for MIS, c3 for RMIS) runs over n_samples cell
    midpoints of (0, 1); every admissible real root of the curve equation is
    kept. The two points shared by both curves are always included.
    """
    if family not in FAMILY_KINDS:
        raise UnknownName("family", family, FAMILY_KINDS)
    points = set()
    for free in cell_centered_grid(0.0, 1.0, n_samples):
        if family == "mis":
            points.update((float(free), float(c3)) for c3 in mis_curve_c3(free))
        else:
            points.update((float(c2), float(free)) for c2 in rmis_curve_c2(free))
    points.update(family_intersection_points())
    return sorted(p for p in points if _admissible(*p))


def maximize_area(
    family: str,
    kappa: float,
    n_samples: int = 100,
    samples: Optional[Iterable[Tuple[float, float]]] = None,
    m: Optional[int] = None,
    n_xi: int = DEFAULT_N_XI,
    n_eta: int = DEFAULT_N_ETA,
) -> Tuple[Tuple[float, float], StabilityScan]:
    """
    Family member with the largest stable area at ``kappa``.

    Each candidate table serves as both outer and inner table of an MIS or
    RMIS method with multirate ratio m (default: kappa rounded). Ties keep the
    smaller c2.

    Raises:
        NoAdmissibleSample: when no candidate is admissible.
    """
    if family not in FAMILY_KINDS:
        raise UnknownName("family", family, FAMILY_KINDS)
    kind = FAMILY_KINDS[family]
    ratio = int(m) if m is not None else max(1, int(round(kappa)))
    if samples is None:
        candidates = family_samples(family, n_samples)
    else:
        candidates = sorted((float(c2), float(c3)) for c2, c3 in samples)
    tried = len(candidates)

    best: Optional[Tuple[Tuple[float, float], StabilityScan]] = None
    for c2, c3 in candidates:
        if not _admissible(c2, c3):
            logger.debug(f"Skipping inadmissible sample c2={c2}, c3={c3}")
            continue
        table = butcher_family(c2, c3)
        spec = method_from_tables(kind, table, table, m=ratio, name=f"{family}-family({c2:.6f},{c3:.6f})")
        result = scan(spec, kappa, n_xi=n_xi, n_eta=n_eta)
        result.meta.update({"c2": c2, "c3": c3})
        if best is None or result.area_fraction > best[1].area_fraction:
            best = ((c2, c3), result)

    if best is None:
        raise NoAdmissibleSample(family, tried)
    logger.info(
        f"Best {family} member at kappa={kappa}: c2={best[0][0]:.6f}, c3={best[0][1]:.6f}, "
        f"area {best[1].area_fraction:.4f} of {tried} samples"
    )
    return best
