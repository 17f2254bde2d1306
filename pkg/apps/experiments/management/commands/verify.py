"""
Run the property suite and print pass/fail per invariant
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from apps.experiments.config import load_run_config
from apps.experiments.services.verification_service import get_verification_service
from apps.solver.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run the discretisation property suite'

    def add_arguments(self, parser):
        parser.add_argument('config', nargs='?', help='Run config; only its seed is used')
        parser.add_argument('--seed', type=int, help='Overrides the config seed')
        parser.add_argument('--quick', action='store_true', help='Reduced sample sizes')

    def handle(self, *args, **options):
        seed = options.get('seed')
        if seed is None and options.get('config'):
            try:
                seed = load_run_config(options['config']).seed
            except ConfigurationError as e:
                logger.error(f"Configuration error: {str(e)}")
                raise CommandError(str(e), returncode=1)

        report = get_verification_service().run(seed=seed, quick=options['quick'])
        self.stdout.write(report.render(), ending='')
        if not report.passed:
            raise CommandError('Verification failed', returncode=2)
