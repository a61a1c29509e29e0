# apps/scenarios/management/commands/scenario.py
import json

from apps.scenarios import catalog
from apps.scenarios.management.base import ScenarioCommand
from apps.scenarios.runner import run_chain_scaling, run_scenario
from apps.scenarios.serializers import scenario_config
from utils.constants import Outputs, Scenarios


class Command(ScenarioCommand):
    help = 'Run a named scenario from its defaults, with optional key=value overrides'

    def add_arguments(self, parser):
        parser.add_argument('name', choices=[name for name, _ in Scenarios.CHOICES])
        parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                            help='Override a default, e.g. --set g=0.1 or --set lattice.size=[41,41]')
        parser.add_argument('--outputs', nargs='+', choices=[name for name, _ in Outputs.CHOICES],
                            help='Artifacts to produce instead of the scenario defaults')
        parser.add_argument('--output-root', type=str, default=None)
        parser.add_argument('--export-hamiltonian', action='store_true')
        parser.add_argument('--chain-scaling', nargs='*', type=int, metavar='LENGTH',
                            help='Lieb scenarios only: VDS along strings of the given lengths (default 5 11 17)')
        parser.add_argument('--show-defaults', action='store_true', help='Print the defaults and exit')

    def execute_command(self, *args, **options):
        name = options['name']
        if options['show_defaults']:
            self.stdout.write(json.dumps(catalog.scenario_defaults(name), indent=2))
            return
        config = scenario_config(name, options['overrides'], options['outputs'])

        if options['chain_scaling'] is not None:
            lengths = tuple(options['chain_scaling']) or (5, 11, 17)
            frame = run_chain_scaling(config, lengths, options['output_root'])
            self.stdout.write(frame.to_string(index=False))
            return

        report = run_scenario(config, options['output_root'], export_hamiltonian=options['export_hamiltonian'])
        self.print_report(report)
        status = self.style.SUCCESS('pass') if report.passed else self.style.ERROR('FAIL')
        self.stdout.write(f'{config.run_name}: {status}')
