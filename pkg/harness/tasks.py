"""
Celery tasks for convergence and efficiency studies
"""

import logging
from typing import Any, Dict, List, Optional

from celery import shared_task

from core.exceptions import MultirateError
from core.io import to_jsonable
from problems.reference import ReferenceCache
from .services import evaluate_convergence_point

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_convergence_point(
    self,
    method: str,
    problem: str,
    h: float,
    m: int,
    refcache: str,
    reference_key: str,
    reference_spacing: float,
    overrides: Optional[Dict[str, Any]] = None,
    subcycles: Optional[List[int]] = None,
):
    """
    Integrate one (method, h) pair and score it against a cached reference.

    The reference is read from the cache by key, so the caller must have
    stored it before dispatching.
    """
    try:
        reference = ReferenceCache(refcache).load(reference_key)
        if reference is None:
            return {
                'success': False,
                'error': f"Reference {reference_key} not found in {refcache}",
            }
        point = evaluate_convergence_point(
            method, problem, h, m, reference.states, reference_spacing, overrides, subcycles
        )
        return to_jsonable(dict(point, success=True))
    except MultirateError as exc:
        logger.error(f"❌ Convergence point {method}/{problem} h={h} failed: {exc}")
        return {
            'success': False,
            'error': str(exc),
        }
