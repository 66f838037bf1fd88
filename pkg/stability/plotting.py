"""Scan export: CSV table and SVG heat map."""

import io
import logging
from pathlib import Path
from typing import Tuple

import matplotlib

matplotlib.use("Agg")

from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from core.io import atomic_write_bytes, write_csv  # noqa: E402
from .scan import StabilityScan  # noqa: E402

logger = logging.getLogger(__name__)

SCAN_COLUMNS = ("xi", "eta", "spectral_radius", "stable")
# unstable, stable
STABILITY_COLORS = ListedColormap(["#1f3a93", "#f7d716"])


def write_scan_csv(result: StabilityScan, path) -> Path:
    return write_csv(path, SCAN_COLUMNS, result.rows())


def render_scan_svg(result: StabilityScan) -> bytes:
    figure = Figure(figsize=(5.0, 6.0))
    axes = figure.add_subplot(1, 1, 1)
    axes.pcolormesh(
        result.xi_grid,
        result.eta_grid,
        result.stable.astype(float),
        cmap=STABILITY_COLORS,
        vmin=0.0,
        vmax=1.0,
        shading="nearest",
    )
    axes.set_xlim(-1.0, 0.0)
    axes.set_ylim(-1.0, 1.0)
    axes.set_xlabel("ξ")
    axes.set_ylabel("η")
    axes.set_title(f"{result.method}, κ = {result.kappa:g} (stable area {result.area_fraction:.3f})")
    buffer = io.BytesIO()
    figure.savefig(buffer, format="svg", bbox_inches="tight")
    return buffer.getvalue()


def write_scan_svg(result: StabilityScan, path) -> Path:
    target = atomic_write_bytes(path, render_scan_svg(result))
    logger.debug(f"Wrote stability plot {target}")
    return target


def export_scan(result: StabilityScan, directory, stem: str) -> Tuple[Path, Path]:
    directory = Path(directory)
    return (
        write_scan_csv(result, directory / f"{stem}.csv"),
        write_scan_svg(result, directory / f"{stem}.svg"),
    )
