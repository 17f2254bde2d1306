"""
Flux Study Service
Relative entropy change of the smooth perturbation run for each surface
flux and a range of polynomial degrees at a fixed number of unknowns.
"""
import logging
from pathlib import Path
from typing import Iterable, List

import pandas as pd
from django.conf import settings

from apps.experiments.config import RunConfig, parse_run_config
from apps.experiments.services.run_service import get_run_service
from apps.solver.exceptions import ConfigurationError, SolverError

logger = logging.getLogger(__name__)

STUDY_FLUXES = ('ec', 'llf_type', 'suliciu', 'kinetic', 'llf')
STUDY_COLUMNS = ['p', 'N', 'flux', 'entropy_initial', 'entropy_final', 'entropy_drift', 'status']


class FluxStudyService:
    """Surface-flux comparison at N = dofs / (p + 1)"""

    def study(self, config: RunConfig, degrees: Iterable[int] = range(6), dofs: int = 120,
              fluxes: Iterable[str] = STUDY_FLUXES) -> pd.DataFrame:
        """
        Run every (p, flux) combination on the configured scenario

        Raises:
            ConfigurationError: dofs not divisible by p + 1
        """
        base = config.model_dump(exclude_none=True)
        rows: List[dict] = []
        for p in degrees:
            if dofs % (p + 1):
                raise ConfigurationError(f"{dofs} unknowns cannot be split into elements of degree {p}")
            n_elements = dofs // (p + 1)
            for flux in fluxes:
                run = parse_run_config(dict(base, p=p, N=n_elements, flux=flux))
                row = {'p': p, 'N': n_elements, 'flux': flux}
                try:
                    outcome = get_run_service().execute(run, track_entropy_rate=False)
                    row.update({
                        'entropy_initial': float(outcome.diagnostics['entropy'].iloc[0]),
                        'entropy_final': float(outcome.diagnostics['entropy'].iloc[-1]),
                        'entropy_drift': outcome.entropy_drift,
                        'status': 'ok',
                    })
                except ConfigurationError:
                    raise
                except SolverError as e:
                    logger.error(f"Flux study p={p} flux={flux} failed: {str(e)}")
                    row.update({'entropy_initial': None, 'entropy_final': None,
                                'entropy_drift': None, 'status': 'failed'})
                logger.info(f"Flux study p={p} N={n_elements} {flux}: {row['entropy_drift']}")
                rows.append(row)
        return pd.DataFrame(rows, columns=STUDY_COLUMNS)

    def write(self, frame: pd.DataFrame, directory: Path) -> Path:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / 'flux_study.csv'
        precision = settings.EXPERIMENTS['CSV_PRECISION']
        frame.to_csv(path, index=False, float_format=f"%.{precision - 1}e")
        return path


# Singleton instance
_flux_study_service = None


def get_flux_study_service() -> FluxStudyService:
    """Get or create flux study service instance"""
    global _flux_study_service
    if _flux_study_service is None:
        _flux_study_service = FluxStudyService()
    return _flux_study_service
