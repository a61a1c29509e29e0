# apps/bath/builders.py
"""
Lattice builders.

Sign conventions: the chain, dimerized chain and square lattice use hopping
matrix elements -J; graphene and the Lieb lattice use +J. Sites are ordered
row-major over cells with the sublattice index running fastest.
"""
import itertools
import logging

import numpy as np

from apps.bath.models import BathGraph, BlochSpec
from utils.constants import Boundary, Lattices
from utils.exceptions import InvalidGeometry, UnsupportedConfiguration

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)


def chain_cell(J=1.0, omega_c=0.0):
    return BlochSpec(
        dimension=1,
        bravais_vectors=[[1.0]],
        sublattice_count=1,
        onsite=(omega_c,),
        inter_cell=((0, 0, (1,), -J),),
    )


def dimerized_chain_cell(J1=1.0, J2=0.5, omega_c=0.0):
    return BlochSpec(
        dimension=1,
        bravais_vectors=[[1.0]],
        sublattice_count=2,
        onsite=(omega_c, omega_c),
        intra_cell=((0, 1, (0,), -J1),),
        inter_cell=((1, 0, (1,), -J2),),
        basis_positions=[[0.0], [0.5]],
    )


def graphene_cell(J=1.0, omega_c=0.0):
    """Honeycomb cell with unit bond length; B sits one bond above A."""
    return BlochSpec(
        dimension=2,
        bravais_vectors=[[SQRT3, 0.0], [SQRT3 / 2, 1.5]],
        sublattice_count=2,
        onsite=(omega_c, omega_c),
        intra_cell=((0, 1, (0, 0), J),),
        inter_cell=((1, 0, (0, 1), J), (1, 0, (-1, 1), J)),
        basis_positions=[[0.0, 0.0], [0.0, 1.0]],
    )


def square_cell(J=1.0, omega_c=0.0):
    return BlochSpec(
        dimension=2,
        bravais_vectors=[[1.0, 0.0], [0.0, 1.0]],
        sublattice_count=1,
        onsite=(omega_c,),
        inter_cell=((0, 0, (1, 0), -J), (0, 0, (0, 1), -J)),
    )


def lieb_nnn_cell(J=1.0):
    """
    Lieb cell: A corner (0, 0), B edge (1/2, 0), C edge (0, 1/2).
    Nearest neighbours A-B and A-C, next-nearest neighbours B-C; no B-B or C-C bonds.
    """
    return BlochSpec(
        dimension=2,
        bravais_vectors=[[1.0, 0.0], [0.0, 1.0]],
        sublattice_count=3,
        onsite=(0.0, 0.0, 0.0),
        intra_cell=((0, 1, (0, 0), J), (0, 2, (0, 0), J), (1, 2, (0, 0), J)),
        inter_cell=(
            (1, 0, (1, 0), J),
            (2, 0, (0, 1), J),
            (1, 2, (1, 0), J),
            (1, 2, (0, -1), J),
            (1, 2, (1, -1), J),
        ),
        basis_positions=[[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
    )


def _cell_strides(cells):
    return np.cumprod((1,) + tuple(cells)[:0:-1])[::-1]


def tile(spec: BlochSpec, cells, boundary, kind=Lattices.CUSTOM, parameters=None) -> BathGraph:
    """
    Finite lattice of ``cells`` unit cells. Periodic images that land on the
    same pair of sites are summed, so the spectrum of a periodic lattice is the
    union of h(k) over its discrete k set.
    """
    cells = tuple(int(c) for c in cells)
    if len(cells) != spec.dimension:
        raise InvalidGeometry(f'Expected {spec.dimension} cell counts, got {cells}.')
    if any(c < 2 for c in cells):
        raise InvalidGeometry(f'Every lattice direction needs at least 2 cells, got {cells}.')
    if boundary not in (Boundary.OPEN, Boundary.PERIODIC):
        raise InvalidGeometry(f"Unknown boundary '{boundary}'.")

    n_sub = spec.sublattice_count
    cell_list = list(itertools.product(*(range(c) for c in cells)))
    strides = _cell_strides(cells)

    def index_of(cell, beta):
        return int(np.dot(cell, strides)) * n_sub + beta

    if spec.dimension == 1 and n_sub == 1:
        labels = [cell[0] for cell in cell_list]
    else:
        labels = [(cell, beta) for cell in cell_list for beta in range(n_sub)]

    frequencies = np.tile(np.asarray(spec.onsite, dtype=float), len(cell_list))
    elements = {}
    for cell in cell_list:
        for beta, beta2, offset, amplitude in spec.hoppings:
            target = np.add(cell, offset)
            if boundary == Boundary.PERIODIC:
                target = np.mod(target, cells)
            elif np.any(target < 0) or np.any(target >= np.asarray(cells)):
                continue
            x, x2 = index_of(cell, beta), index_of(target, beta2)
            if x == x2:
                frequencies[x] += 2 * amplitude.real
                continue
            if x > x2:
                x, x2, amplitude = x2, x, np.conj(amplitude)
            elements[(x, x2)] = elements.get((x, x2), 0j) + amplitude

    hoppings = tuple((x, x2, amplitude) for (x, x2), amplitude in sorted(elements.items()))
    return BathGraph(
        site_labels=tuple(labels),
        frequencies=frequencies,
        hoppings=hoppings,
        boundary=boundary,
        kind=kind,
        unit_cell=spec,
        cells=cells,
        parameters=dict(parameters or {}),
    )


def build_chain(length, J=1.0, omega_c=0.0, boundary=Boundary.OPEN) -> BathGraph:
    if length < 2:
        raise InvalidGeometry(f'A chain needs at least 2 cavities, got {length}.')
    if J <= 0:
        raise InvalidGeometry(f'Hopping rate J must be positive, got {J}.')
    return tile(chain_cell(J, omega_c), (length,), boundary, Lattices.CHAIN,
                {'J': J, 'omega_c': omega_c})


def build_dimerized_chain(cells, J1=1.0, J2=0.5, omega_c=0.0, boundary=Boundary.OPEN) -> BathGraph:
    if J1 <= 0 or J2 <= 0:
        raise InvalidGeometry(f'Hopping rates must be positive, got J1={J1}, J2={J2}.')
    return tile(dimerized_chain_cell(J1, J2, omega_c), (cells,), boundary, Lattices.DIMERIZED_CHAIN,
                {'J': max(J1, J2), 'J1': J1, 'J2': J2, 'omega_c': omega_c})


def build_graphene(cells_a, cells_b, J=1.0, omega_c=0.0, boundary=Boundary.OPEN) -> BathGraph:
    return tile(graphene_cell(J, omega_c), (cells_a, cells_b), boundary, Lattices.GRAPHENE,
                {'J': J, 'omega_c': omega_c})


def build_square(side_a, side_b, J=1.0, omega_c=0.0, boundary=Boundary.OPEN) -> BathGraph:
    return tile(square_cell(J, omega_c), (side_a, side_b), boundary, Lattices.SQUARE,
                {'J': J, 'omega_c': omega_c})


def build_lieb_nnn(cells_a, cells_b, J=1.0, boundary=Boundary.OPEN) -> BathGraph:
    return tile(lieb_nnn_cell(J), (cells_a, cells_b), boundary, Lattices.LIEB_NNN,
                {'J': J, 'omega_c': 0.0})


LATTICE_BUILDERS = {
    Lattices.CHAIN: build_chain,
    Lattices.DIMERIZED_CHAIN: build_dimerized_chain,
    Lattices.GRAPHENE: build_graphene,
    Lattices.SQUARE: build_square,
    Lattices.LIEB_NNN: build_lieb_nnn,
}

UNIT_CELLS = {
    Lattices.CHAIN: chain_cell,
    Lattices.DIMERIZED_CHAIN: dimerized_chain_cell,
    Lattices.GRAPHENE: graphene_cell,
    Lattices.SQUARE: square_cell,
    Lattices.LIEB_NNN: lieb_nnn_cell,
}


def apply_vacancy(bath: BathGraph, site: int) -> BathGraph:
    """Remove cavity ``site`` and every hopping touching it."""
    site = bath.check_index(site)
    keep = np.delete(np.arange(bath.n_sites), site)
    new_index = {old: new for new, old in enumerate(keep)}
    hoppings = tuple(
        (new_index[x], new_index[x2], amplitude)
        for x, x2, amplitude in bath.hoppings
        if site not in (x, x2)
    )
    parameters = dict(bath.parameters)
    parameters['vacancies'] = tuple(parameters.get('vacancies', ())) + (bath.site_labels[site],)
    logger.debug('Removed site %s from %s bath', bath.site_labels[site], bath.kind)
    return BathGraph(
        site_labels=tuple(bath.site_labels[i] for i in keep),
        frequencies=bath.frequencies[keep],
        hoppings=hoppings,
        boundary=bath.boundary,
        kind=bath.kind,
        unit_cell=bath.unit_cell,
        cells=bath.cells,
        parameters=parameters,
    )


def enlarge(bath: BathGraph, factor=1.5):
    """
    The same lattice with every cell count scaled by ``factor`` and the
    original lattice centred inside it. Returns the larger bath and the
    index of every original site in it.
    """
    if not bath.supports_bloch:
        raise UnsupportedConfiguration(
            'Only vacancy-free lattices built from a unit cell can be enlarged.',
            diagnostics={'kind': bath.kind, 'vacancies': list(bath.parameters.get('vacancies', ()))},
        )
    cells = np.asarray(bath.cells, dtype=int)
    larger_cells = np.maximum(np.ceil(cells * factor).astype(int), cells + 1)
    offset = (larger_cells - cells) // 2
    larger = tile(bath.unit_cell, tuple(larger_cells), bath.boundary, bath.kind, bath.parameters)
    cell_index = (bath.cell_indices + offset) @ _cell_strides(larger_cells)
    site_map = cell_index * bath.unit_cell.sublattice_count + bath.sublattices
    return larger, site_map.astype(int)
