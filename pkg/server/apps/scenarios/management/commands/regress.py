# apps/scenarios/management/commands/regress.py
from apps.scenarios.management.base import ScenarioCommand
from apps.scenarios.regression import REGRESSION_ROWS, emit_regression_suite
from apps.scenarios.reports import write_frame
from utils.exceptions import RegressionFailure


class Command(ScenarioCommand):
    help = 'Run the regression suite and print the pass/fail table'

    def add_arguments(self, parser):
        parser.add_argument('--rows', nargs='+', choices=sorted(REGRESSION_ROWS), help='Run only these rows')
        parser.add_argument('--perturb', action='store_true',
                            help='Shrink Im-tolerances and the convergence threshold a thousandfold')
        parser.add_argument('--out', type=str, default=None, help='Also write the table as CSV')
        parser.add_argument('--list', action='store_true', help='List the rows and exit')

    def execute_command(self, *args, **options):
        if options['list']:
            for name, (criterion, _) in REGRESSION_ROWS.items():
                self.stdout.write(f'{name:<28} {criterion}')
            return

        table = emit_regression_suite(options['rows'], perturb=options['perturb'])
        self.stdout.write(table.drop(columns=['criterion']).to_string(index=False))
        if options['out']:
            write_frame(table, options['out'])

        failing = table[table['status'] != 'pass']
        if failing.empty:
            self.stdout.write(self.style.SUCCESS(f'{len(table)} rows passed'))
            return
        raise RegressionFailure(
            f'{len(failing)} of {len(table)} rows did not pass: {", ".join(failing["row"])}',
            diagnostics={'rows': failing['row'].tolist()},
        )
