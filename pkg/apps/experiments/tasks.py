"""
Experiment Tasks
Celery tasks for sweep rows
"""
import logging
import math
from typing import Any, Dict

from celery import shared_task

from apps.experiments.services.sweep_service import run_point

logger = logging.getLogger(__name__)


@shared_task(name='experiments.run_sweep_point')
def run_sweep_point(config_data: Dict[str, Any], a1: float, a2: float) -> Dict[str, Any]:
    """Run one (a1, a2) point; the row is JSON-serialisable"""
    logger.info(f"Sweep task a1={a1} a2={a2} ({config_data.get('scenario')})")
    row = run_point(config_data, a1, a2)
    for key in ('value', 'min_h'):
        row[key] = None if math.isnan(row[key]) else float(row[key])
    return row
