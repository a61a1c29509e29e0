# apps/scenarios/management/commands/run.py
import json
from pathlib import Path

from apps.scenarios.management.base import ScenarioCommand
from apps.scenarios.runner import run_scenario
from apps.scenarios.serializers import parse_config
from utils.exceptions import ConfigError


class Command(ScenarioCommand):
    help = 'Run a scenario described by a JSON configuration file'

    def add_arguments(self, parser):
        parser.add_argument('config', type=str, help='Path to the scenario JSON file')
        parser.add_argument('--output-root', type=str, default=None,
                            help='Directory that receives the run directory (default: GLA_OUTPUT_ROOT)')
        parser.add_argument('--export-hamiltonian', action='store_true',
                            help='Also write the one-excitation Hamiltonian as a coordinate list')

    def execute_command(self, *args, **options):
        path = Path(options['config'])
        if not path.is_file():
            raise ConfigError(f"No configuration file at {path}.")
        with open(path, encoding='utf-8') as handle:
            config = parse_config(json.load(handle))

        report = run_scenario(config, options['output_root'], export_hamiltonian=options['export_hamiltonian'])
        self.print_report(report)
        if report.passed:
            self.stdout.write(self.style.SUCCESS(f'{config.run_name}: done'))
        else:
            failing = ', '.join(h.name for h in report.failures()) or 'sweep points'
            self.stdout.write(self.style.WARNING(f'{config.run_name}: expectations not met ({failing})'))
