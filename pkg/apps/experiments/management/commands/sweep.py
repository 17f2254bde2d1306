"""
Sweep the volume flux parameters (a1, a2) and write sweep.csv
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.experiments.config import load_run_config
from apps.experiments.services.run_service import get_run_service
from apps.experiments.services.sweep_service import DEFAULT_RANGE, get_sweep_service
from apps.solver.exceptions import ConfigurationError, SolverError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Sweep (a1, a2) over 'lo:step:hi' ranges; --a2 tied sets a2 = (2 - a1) / 3"

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to the base run config')
        parser.add_argument('--a1', default=DEFAULT_RANGE, help='lo:step:hi (default -3:0.1:3)')
        parser.add_argument('--a2', default=DEFAULT_RANGE, help="lo:step:hi or 'tied'")
        parser.add_argument('--output-dir', help='Override the output directory')
        parser.add_argument('--celery', action='store_true', help='Dispatch points as Celery tasks')

    def handle(self, *args, **options):
        try:
            config = load_run_config(options['config'])
            service = get_sweep_service()
            frame = service.sweep(config, options['a1'], options['a2'],
                                  use_celery=True if options['celery'] else None)
            directory = Path(options['output_dir']) if options.get('output_dir') else \
                get_run_service().output_dir(config)
            path = service.write(frame, directory)
        except ConfigurationError as e:
            logger.error(f"Configuration error: {str(e)}")
            raise CommandError(str(e), returncode=1)
        except SolverError as e:
            logger.error(f"Sweep aborted: {str(e)}")
            raise CommandError(str(e), returncode=2)

        failed = int((frame['status'] != 'ok').sum())
        self.stdout.write(f"{len(frame)} points, {failed} failed")
        self.stdout.write(self.style.SUCCESS(f"Sweep written to {path}"))
        if failed:
            raise CommandError(f"{failed} sweep points failed", returncode=2)
