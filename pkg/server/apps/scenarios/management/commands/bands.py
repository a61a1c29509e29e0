# apps/scenarios/management/commands/bands.py
from apps.bath.builders import UNIT_CELLS
from apps.bath.spectra import band_frame, band_structure
from apps.scenarios.management.base import ScenarioCommand
from apps.scenarios.reports import write_frame
from utils.conf import gla_settings
from utils.constants import Lattices
from utils.exceptions import InvalidArgument


class Command(ScenarioCommand):
    help = 'Write the Bloch band structure of a lattice as CSV'

    def add_arguments(self, parser):
        parser.add_argument('lattice', choices=sorted(UNIT_CELLS))
        parser.add_argument('--out', type=str, default=None, help='CSV path (default: print to stdout)')
        parser.add_argument('--J', type=float, default=1.0, help='Hopping rate')
        parser.add_argument('--J2', type=float, default=0.5, help='Weak hopping of the dimerized chain')
        parser.add_argument('--omega-c', type=float, default=0.0, help='Cavity frequency')
        parser.add_argument('--k-resolution', type=int, default=None,
                            help='k points per reciprocal axis (default 4096 in 1D, 256 in 2D)')

    def execute_command(self, *args, **options):
        kind, J = options['lattice'], options['J']
        if J <= 0:
            raise InvalidArgument(f'Hopping rate must be positive, got {J}.')
        if kind == Lattices.LIEB_NNN:
            cell = UNIT_CELLS[kind](J)
        elif kind == Lattices.DIMERIZED_CHAIN:
            cell = UNIT_CELLS[kind](J, options['J2'], options['omega_c'])
        else:
            cell = UNIT_CELLS[kind](J, options['omega_c'])

        resolution = options['k_resolution'] or (
            gla_settings.K_RESOLUTION if cell.dimension == 1 else gla_settings.K_RESOLUTION_2D
        )
        frame = band_frame(band_structure(cell, resolution))
        if options['out']:
            write_frame(frame, options['out'])
            self.stdout.write(self.style.SUCCESS(f'{len(frame)} rows written to {options["out"]}'))
        else:
            self.stdout.write(frame.to_csv(index=False, float_format='%.12e', lineterminator='\n'))
