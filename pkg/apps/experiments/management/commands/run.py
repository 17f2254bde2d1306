"""
Run one configured experiment and write solution.csv, diagnostics.csv and summary.json
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from apps.experiments.config import load_run_config
from apps.experiments.services.run_service import get_run_service
from apps.solver.exceptions import ConfigurationError, SolverError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run a scenario from a JSON or YAML config'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to the run config (.json, .yaml or .yml)')
        parser.add_argument('--output-dir', help='Override the output directory')

    def handle(self, *args, **options):
        try:
            config = load_run_config(options['config'])
            if options.get('output_dir'):
                config = config.model_copy(update={'output_dir': options['output_dir']})
            summary = get_run_service().run(config)
        except ConfigurationError as e:
            logger.error(f"Configuration error: {str(e)}")
            raise CommandError(str(e), returncode=1)
        except SolverError as e:
            logger.error(f"Solver aborted: {str(e)}")
            raise CommandError(str(e), returncode=2)

        self.stdout.write(f"steps={summary['steps']} t={summary['t_final']:.6g} "
                          f"min_h={summary['min_h']:.3e} entropy_drift={summary['entropy_drift']:.3e}")
        if summary['errors'] is not None:
            self.stdout.write(f"max_error={summary['errors']['max_error']:.3e}")
        self.stdout.write(self.style.SUCCESS(f"Output written to {summary['output_dir']}"))
