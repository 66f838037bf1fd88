"""
File helpers for harness output: atomic writes, CSV tables and JSON documents.
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


def ensure_directory(path: PathLike) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """
    Write bytes to ``path`` through a temporary sibling and rename it in place.

    Readers never observe a partially written file.
    """
    target = Path(path)
    ensure_directory(target.parent)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars into plain JSON values."""
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()] if value.ndim else to_jsonable(value.item())
    if isinstance(value, (np.floating, float)):
        number = float(value)
        # JSON has no inf/nan literals; keep them readable as strings.
        if np.isnan(number):
            return "nan"
        if np.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: PathLike, document: Dict[str, Any]) -> Path:
    text = json.dumps(to_jsonable(document), indent=2, sort_keys=False)
    logger.debug(f"Writing JSON document to {path}")
    return atomic_write_text(path, text + "\n")


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(cell) for cell in row])
    logger.debug(f"Writing CSV table to {path}")
    return atomic_write_text(path, buffer.getvalue())


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def _csv_cell(cell: Any) -> Any:
    if isinstance(cell, (float, np.floating)):
        return repr(float(cell))
    if isinstance(cell, np.integer):
        return int(cell)
    return cell
