# apps/scenarios/management/base.py
import json
import logging

from django.core.management.base import BaseCommand, CommandError

from utils.constants import ExitCodes
from utils.exceptions import GiantAtomError

logger = logging.getLogger(__name__)


class ScenarioCommand(BaseCommand):
    """
    Shared error mapping for the scenario commands: domain errors and
    unreadable JSON become CommandError with the exit code of the table
    0 success, 2 config error, 3 convergence error, 4 regression failure.
    """

    def execute_command(self, *args, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.execute_command(*args, **options)
        except GiantAtomError as exc:
            logger.error('%s failed: [%s] %s', self.__module__.rsplit('.', 1)[-1], exc.code, exc,
                         exc_info=exc.exit_code not in (ExitCodes.CONFIG_ERROR, ExitCodes.REGRESSION_FAILURE))
            self.stderr.write(self.style.ERROR(f'[{exc.code}] {exc}'))
            raise CommandError(str(exc), returncode=exc.exit_code)
        except json.JSONDecodeError as exc:
            self.stderr.write(self.style.ERROR(f'[config_error] Malformed JSON: {exc}'))
            raise CommandError(f'Malformed JSON: {exc}', returncode=ExitCodes.CONFIG_ERROR)

    def print_report(self, report):
        for headline in report.headlines:
            if not headline.is_scalar:
                continue
            line = f'{headline.name:<28} {float(headline.value): .10e}  [{headline.provenance}]'
            if headline.passed is not None:
                status = self.style.SUCCESS('pass') if headline.passed else self.style.ERROR('FAIL')
                line += f'  expected {headline.expected} ± {headline.tolerance}: {status}'
            self.stdout.write(line)
        for flag in report.flags:
            self.stdout.write(self.style.WARNING(f'flag: {flag}'))
        if report.directory is not None:
            self.stdout.write(f'Artifacts in {report.directory}')
