"""
Compare surface fluxes by their entropy change and write flux_study.csv
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.experiments.config import load_run_config
from apps.experiments.services.flux_study_service import STUDY_FLUXES, get_flux_study_service
from apps.experiments.services.run_service import get_run_service
from apps.experiments.services.sweep_service import parse_range
from apps.solver.exceptions import ConfigurationError, SolverError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Entropy change per surface flux for p in a range at a fixed number of unknowns'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Base run config (usually smooth_perturbation)')
        parser.add_argument('--degrees', default='0:1:5', help='lo:step:hi polynomial degrees')
        parser.add_argument('--dofs', type=int, default=120, help='Unknowns per component')
        parser.add_argument('--fluxes', default=','.join(STUDY_FLUXES), help='Comma separated flux names')
        parser.add_argument('--output-dir', help='Override the output directory')

    def handle(self, *args, **options):
        try:
            config = load_run_config(options['config'])
            degrees = [int(p) for p in parse_range(options['degrees'])]
            fluxes = [f.strip() for f in options['fluxes'].split(',') if f.strip()]
            service = get_flux_study_service()
            frame = service.study(config, degrees=degrees, dofs=options['dofs'], fluxes=fluxes)
            directory = Path(options['output_dir']) if options.get('output_dir') else \
                get_run_service().output_dir(config)
            path = service.write(frame, directory)
        except ConfigurationError as e:
            logger.error(f"Configuration error: {str(e)}")
            raise CommandError(str(e), returncode=1)
        except SolverError as e:
            logger.error(f"Flux study aborted: {str(e)}")
            raise CommandError(str(e), returncode=2)

        self.stdout.write(frame.to_string(index=False))
        self.stdout.write(self.style.SUCCESS(f"Flux study written to {path}"))
