"""
Sweep Service
Parameter sweeps over the volume flux parameters (a1, a2). Each grid point
is an independent run scored by the scenario metric; rows are merged in
(a1, a2) order regardless of how they were executed.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from django.conf import settings

from apps.experiments.config import RunConfig, parse_run_config
from apps.experiments.services.run_service import get_run_service
from apps.solver.exceptions import ConfigurationError, SolverError

logger = logging.getLogger(__name__)

TIED = 'tied'
DEFAULT_RANGE = '-3:0.1:3'
SWEEP_COLUMNS = ['a1', 'a2', 'metric', 'value', 'steps', 'min_h', 'status']


def parse_range(spec: str) -> np.ndarray:
    """
    'lo:step:hi' -> lo, lo + step, ..., hi (inclusive), or a single number

    Raises:
        ConfigurationError: malformed range, non-positive step or hi < lo
    """
    parts = spec.split(':')
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigurationError(f"Malformed range '{spec}' (expected lo:step:hi)") from None
    if len(values) == 1:
        return np.array(values)
    if len(values) != 3:
        raise ConfigurationError(f"Malformed range '{spec}' (expected lo:step:hi)")
    lo, step, hi = values
    if not step > 0 or hi < lo:
        raise ConfigurationError(f"Empty range '{spec}'")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def tied_a2(a1: float) -> float:
    """a2 = (2 - a1) / 3, the choice without the extra velocity term"""
    return (2.0 - a1) / 3.0


def sweep_grid(a1_spec: str, a2_spec: str) -> List[Tuple[float, float]]:
    a1_values = parse_range(a1_spec)
    if a2_spec == TIED:
        return [(float(a1), tied_a2(float(a1))) for a1 in a1_values]
    a2_values = parse_range(a2_spec)
    return [(float(a1), float(a2)) for a1 in a1_values for a2 in a2_values]


def run_point(config_data: Dict[str, Any], a1: float, a2: float) -> Dict[str, Any]:
    """
    One sweep row; solver failures become a row with status 'failed'

    Configuration errors propagate since every row would fail the same way.
    """
    data = dict(config_data, a1=a1, a2=a2)
    config = parse_run_config(data)
    scenario = config.build_scenario()
    row = {'a1': a1, 'a2': a2, 'metric': scenario.metric}
    try:
        outcome = get_run_service().execute(config, track_entropy_rate=False)
        row.update({
            'value': outcome.metric_value(),
            'steps': int(outcome.diagnostics['step'].iloc[-1]),
            'min_h': float(outcome.diagnostics['min_h'].min()),
            'status': 'ok',
        })
    except ConfigurationError:
        raise
    except SolverError as e:
        logger.error(f"Sweep point a1={a1} a2={a2} failed: {str(e)}")
        row.update({'value': np.nan, 'steps': -1, 'min_h': np.nan, 'status': 'failed'})
    return row


class SweepService:
    """Runs (a1, a2) grids in-process or as Celery tasks"""

    def __init__(self):
        self.use_celery = settings.EXPERIMENTS['SWEEP_USE_CELERY']

    def sweep(self, config: RunConfig, a1_spec: str = DEFAULT_RANGE,
              a2_spec: str = DEFAULT_RANGE, use_celery: Optional[bool] = None) -> pd.DataFrame:
        """
        Evaluate every grid point

        Args:
            config: base run; its a1/a2 are replaced per point
            a1_spec: 'lo:step:hi'
            a2_spec: 'lo:step:hi' or 'tied' for a2 = (2 - a1) / 3

        Returns:
            DataFrame sorted by (a1, a2) with SWEEP_COLUMNS
        """
        grid = sweep_grid(a1_spec, a2_spec)
        base = config.model_dump(exclude_none=True)
        use_celery = self.use_celery if use_celery is None else use_celery
        logger.info(f"Sweep {config.scenario}: {len(grid)} points ({'celery' if use_celery else 'in-process'})")

        if use_celery:
            from celery import group
            from apps.experiments.tasks import run_sweep_point

            job = group(run_sweep_point.s(base, a1, a2) for a1, a2 in grid)
            rows = job.apply_async().get()
        else:
            rows = []
            for i, (a1, a2) in enumerate(grid, start=1):
                rows.append(run_point(base, a1, a2))
                logger.debug(f"Sweep point {i}/{len(grid)} a1={a1} a2={a2}: {rows[-1]['value']}")

        frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
        return frame.sort_values(['a1', 'a2'], kind='mergesort').reset_index(drop=True)

    def write(self, frame: pd.DataFrame, directory: Path) -> Path:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / 'sweep.csv'
        precision = settings.EXPERIMENTS['CSV_PRECISION']
        frame.to_csv(path, index=False, float_format=f"%.{precision - 1}e")
        logger.info(f"Wrote {len(frame)} sweep rows to {path}")
        return path


def optimal_a2_per_a1(frame: pd.DataFrame) -> pd.DataFrame:
    """Row with the smallest value for each a1"""
    ok = frame[frame['status'] == 'ok']
    return ok.loc[ok.groupby('a1')['value'].idxmin()].reset_index(drop=True)


# Singleton instance
_sweep_service = None


def get_sweep_service() -> SweepService:
    """Get or create sweep service instance"""
    global _sweep_service
    if _sweep_service is None:
        _sweep_service = SweepService()
    return _sweep_service
