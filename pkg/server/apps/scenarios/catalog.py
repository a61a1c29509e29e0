# apps/scenarios/catalog.py
"""
Named scenarios: default parameters, geometry rules, atom placement and the
published values a run is checked against.

Expected couplings for decoherence-free scenarios come from the closed-form
vacancy-like patterns of each geometry. A pattern is trusted only after it
is verified to be an eigenvector of the χ-projected bath at ω₀ on the
lattice actually built, so overriding ω₀ or the geometry silently turns a
check into a computed-only number.
"""
import json
import logging
from functools import lru_cache
from pathlib import Path

import numpy as np

from apps.bath.models import BathGraph
from apps.bath.spectra import hamiltonian_matrix
from apps.dynamics.closed_form import (
    braided_rates_closed_form,
    decay_rate_closed_form,
    nested_cancellation,
)
from apps.emitters.hamiltonians import site_state
from apps.emitters.models import GiantAtom
from apps.greens.analytic import chain_wavevector
from apps.scenarios.models import Expectation
from utils.constants import Backend, Lattices, Outputs, Scenarios
from utils.exceptions import ConfigError, OutOfBand

logger = logging.getLogger(__name__)

DATA_FILE = Path(__file__).resolve().parent / 'management' / 'commands' / 'data.json'

A, B, C = 0, 1, 2
MAX_CHAIN_ATOMS = 10
PATTERN_TOL = 1e-10

SCENARIO_LATTICES = {
    Scenarios.GRAPHENE3: Lattices.GRAPHENE,
    Scenarios.GRAPHENE4: Lattices.GRAPHENE,
    Scenarios.GRAPHENE_CHAIN: Lattices.GRAPHENE,
    Scenarios.WAVEGUIDE_SERIAL: Lattices.CHAIN,
    Scenarios.WAVEGUIDE_BRAIDED: Lattices.CHAIN,
    Scenarios.WAVEGUIDE_NESTED: Lattices.CHAIN,
    Scenarios.SQUARE_BRAIDED: Lattices.SQUARE,
    Scenarios.SQUARE_NESTED: Lattices.SQUARE,
    Scenarios.LIEB_PAIR: Lattices.LIEB_NNN,
    Scenarios.LIEB_MISMATCHED: Lattices.LIEB_NNN,
}

GRAPHENE_PARAMETERS = ('g', 'omega0', 'centre')
WAVEGUIDE_PARAMETERS = ('g', 'omega0', 'theta', 'origin', 'd', 'x21', 'x22')
SQUARE_PARAMETERS = ('g', 'omega0', 'centre', 'mu', 'mu2', 'offset')
LIEB_PARAMETERS = ('g', 'omega0', 'origin', 'length', 'offset')

PARAMETERS = {
    Scenarios.GRAPHENE3: GRAPHENE_PARAMETERS,
    Scenarios.GRAPHENE4: GRAPHENE_PARAMETERS,
    Scenarios.GRAPHENE_CHAIN: GRAPHENE_PARAMETERS + ('n_atoms',),
    Scenarios.SQUARE_BRAIDED: SQUARE_PARAMETERS,
    Scenarios.SQUARE_NESTED: SQUARE_PARAMETERS,
    **{name: WAVEGUIDE_PARAMETERS for name in Scenarios.WAVEGUIDE},
    **{name: LIEB_PARAMETERS for name in Scenarios.LIEB},
    Scenarios.CUSTOM: ('g', 'omega0'),
}

# relative tolerance on K, in units of g²/J
K_TOLERANCE = {
    Scenarios.GRAPHENE3: 1e-6,
    Scenarios.GRAPHENE4: 1e-6,
    Scenarios.GRAPHENE_CHAIN: 1e-6,
}
K_TOLERANCE_DEFAULT = 0.02
ZERO_TOLERANCE = 1e-6
ANALYTIC_TOLERANCE = 1e-10


@lru_cache(maxsize=4)
def load_defaults(path=DATA_FILE) -> dict:
    with open(path, 'r', encoding='utf-8') as handle:
        data = json.load(handle)
    return data['scenarios']


def scenario_defaults(name) -> dict:
    defaults = load_defaults()
    if name not in defaults:
        raise ConfigError(f"Unknown scenario '{name}'.", diagnostics={'known': sorted(defaults)})
    return json.loads(json.dumps(defaults[name]))


def parse_override(text):
    """``key=value`` with a JSON value, falling back to the raw string."""
    if '=' not in text:
        raise ConfigError(f"Override '{text}' is not of the form key=value.")
    key, raw = text.split('=', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def apply_overrides(data: dict, overrides) -> dict:
    """
    Apply ``key=value`` strings. Dotted keys address nested sections
    (``lattice.size=[21, 21]``); bare keys go to ``parameters`` unless they
    name a top-level field.
    """
    top_level = {'backend', 'outputs', 'sweep', 'atoms', 'lattice', 'scenario', 'schema'}
    for text in overrides or ():
        key, value = parse_override(text)
        path = key.split('.')
        if len(path) == 1 and path[0] not in top_level:
            path = ['parameters', path[0]]
        target = data
        for part in path[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"Override '{key}' does not address a section.")
        target[path[-1]] = value
    return data


# geometry ---------------------------------------------------------------

def _shift(point, offset):
    return [int(p) + int(o) for p, o in zip(point, offset)]


def graphene_three_point(centre, sublattice):
    """Three same-sublattice neighbours of one site; the site itself stays uncoupled."""
    i, j = centre
    if sublattice == B:
        return [[i, j, B], [i, j - 1, B], [i + 1, j - 1, B]]
    return [[i, j, A], [i, j + 1, A], [i - 1, j + 1, A]]


def graphene_four_point(centre):
    """Outer neighbours of the bond A(c)-B(c)."""
    i, j = centre
    return [[i, j - 1, B], [i + 1, j - 1, B], [i, j + 1, A], [i - 1, j + 1, A]]


def square_vertices(centre, mu):
    x, y = centre
    return [[x + mu, y, 0], [x - mu, y, 0], [x, y + mu, 0], [x, y - mu, 0]]


def square_diamond(centre, mu):
    """{(x, y): sign} of the checkerboard pattern inside a diamond of odd μ."""
    x, y = centre
    half = (mu - 1) // 2
    pattern = {}
    for a in range(-half, half + 1):
        for b in range(-half, half + 1):
            pattern[(x + a + b, y + a - b)] = (-1) ** ((a + b) % 2)
    return pattern


def lieb_string(origin, length, vertical=False):
    """
    (sites, signs, points) for a straight string of ``length`` sites. The
    two coupling points sit one site past each end on the edge sublattice
    of the string; the pattern repeats +, -, 0 along it.
    """
    x, y = origin
    edge = C if vertical else B

    def label(along, beta):
        return [x, y + along, beta] if vertical else [x + along, y, beta]

    sites, signs = [], []
    for p in range(1, length + 1):
        sites.append(label((p - 1) // 2, A) if p % 2 else label(p // 2 - 1, edge))
        signs.append({1: 1, 2: -1, 0: 0}[p % 3])
    points = (label(-1, edge), label((length - 1) // 2, edge))
    return sites, signs, points


def size_law_error(length):
    if not isinstance(length, int) or length < 5 or (length - 5) % 6:
        return f'Lieb string length must be 5 + 6ν for ν = 0, 1, 2, ... (got {length}).'
    return None


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _pair(value):
    return isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_int(v) for v in value)


def _waveguide_errors(scenario, p):
    d, x21, x22 = p['d'], p['x21'], p['x22']
    if not all(_is_int(v) for v in (p['origin'], d, x21, x22)):
        return ['Waveguide positions (origin, d, x21, x22) are integer site offsets.']
    if not 0 <= p['theta'] <= np.pi / 2:
        return [f"Mixing angle theta must lie in [0, π/2] (got {p['theta']})."]
    rules = {
        Scenarios.WAVEGUIDE_SERIAL: (0 < d < x21 < x22, 'A serial pair needs 0 < d < x21 < x22.'),
        Scenarios.WAVEGUIDE_BRAIDED: (0 < x21 < d < x22, 'A braided pair needs 0 < x21 < d < x22.'),
        Scenarios.WAVEGUIDE_NESTED: (0 < x21 < x22 < d, 'A nested pair needs 0 < x21 < x22 < d.'),
    }
    holds, message = rules[scenario]
    return [] if holds else [f'{message} Got d = {d}, x21 = {x21}, x22 = {x22}.']


def _square_errors(scenario, p):
    mu, mu2, offset = p['mu'], p['mu2'], p['offset']
    if not (_is_int(mu) and _is_int(mu2) and _pair(offset) and _pair(p['centre'])):
        return ['Square-lattice vertex distances are integers; centre and offset are [x, y] pairs.']
    errors = [f'Square-lattice atoms need an odd vertex distance μ ≥ 1 (got {value}).'
              for value in (mu, mu2) if value < 1 or value % 2 == 0]
    if errors:
        return errors
    dx, dy = offset
    if scenario == Scenarios.SQUARE_NESTED:
        if not abs(dx) + abs(dy) + mu2 < mu:
            errors.append(f'A nested square pair needs |dx| + |dy| + μ2 < μ (got offset {offset}, '
                          f'μ = {mu}, μ2 = {mu2}).')
        return errors
    first = {tuple(v[:2]) for v in square_vertices((0, 0), mu)}
    second = {tuple(v[:2]) for v in square_vertices((dx, dy), mu2)}
    inside_first = len(second & set(square_diamond((0, 0), mu)))
    inside_second = len(first & set(square_diamond((dx, dy), mu2)))
    if inside_first != 1 or inside_second != 1:
        errors.append(
            'A braided square pair needs exactly one coupling point of each atom inside the other '
            f'atom\'s diamond (got {inside_first} and {inside_second} for offset {offset}).'
        )
    return errors


def _lieb_errors(scenario, p):
    errors = [message for message in (size_law_error(p['length']),) if message]
    if not (_pair(p['origin']) and _pair(p['offset'])):
        errors.append('Lieb origin and offset are [x, y] cell pairs.')
    return errors


def geometry_errors(scenario, parameters: dict, lattice: dict = None) -> list:
    """Human-readable violations of the geometric rules of ``scenario``; empty when valid."""
    if scenario == Scenarios.CUSTOM:
        return []
    missing = [name for name in PARAMETERS[scenario] if name not in parameters]
    if missing:
        return [f"Scenario '{scenario}' needs parameter(s) {', '.join(missing)}."]

    errors = []
    kind = (lattice or {}).get('kind')
    if kind is not None and kind != SCENARIO_LATTICES[scenario]:
        errors.append(f"Scenario '{scenario}' runs on a '{SCENARIO_LATTICES[scenario]}' lattice, got '{kind}'.")
    if not parameters['g'] > 0:
        errors.append(f"Coupling strength g must be positive (got {parameters['g']}).")

    if scenario in Scenarios.WAVEGUIDE:
        errors += _waveguide_errors(scenario, parameters)
    elif scenario in (Scenarios.SQUARE_BRAIDED, Scenarios.SQUARE_NESTED):
        errors += _square_errors(scenario, parameters)
    elif scenario in Scenarios.LIEB:
        errors += _lieb_errors(scenario, parameters)
    else:
        if not _pair(parameters['centre']):
            errors.append('Graphene centre is an [i, j] cell pair.')
        if scenario == Scenarios.GRAPHENE_CHAIN:
            n_atoms = parameters['n_atoms']
            if not _is_int(n_atoms) or not 2 <= n_atoms <= MAX_CHAIN_ATOMS:
                errors.append(f'A graphene atom chain has 2 to {MAX_CHAIN_ATOMS} atoms (got {n_atoms}).')
    return errors


# placement --------------------------------------------------------------

def _atom(bath, omega0, points, strengths, label):
    couplings = tuple((bath.site_index(site), g) for site, g in zip(points, strengths))
    return GiantAtom(omega0=omega0, couplings=couplings, label=label)


def place_atoms(scenario, bath: BathGraph, parameters: dict) -> tuple:
    """
    Atoms of a named scenario on ``bath``; sites off the lattice raise SiteIndexError.

    Every other graphene atom couples with -g, and the second atom of a Lieb
    pair carries the opposite strengths of the first. The sign only fixes
    the relative phase of the excited states; with ψ_BS = ḡ G_B(ω₀)|χ⟩
    it gives K₁₂ = +g²/J on graphene and -g²/J on the Lieb lattice.
    Decay rates do not depend on it.
    """
    g, omega0 = float(parameters['g']), float(parameters['omega0'])

    if scenario == Scenarios.GRAPHENE3:
        centre = parameters['centre']
        return (
            _atom(bath, omega0, graphene_three_point(centre, B), [g] * 3, 'atom1'),
            _atom(bath, omega0, graphene_three_point(centre, A), [-g] * 3, 'atom2'),
        )
    if scenario in (Scenarios.GRAPHENE4, Scenarios.GRAPHENE_CHAIN):
        n_atoms = parameters.get('n_atoms', 2) if scenario == Scenarios.GRAPHENE_CHAIN else 2
        return tuple(
            _atom(bath, omega0, graphene_four_point(_shift(parameters['centre'], (0, n))),
                  [(-1) ** n * g] * 4, f'atom{n + 1}')
            for n in range(n_atoms)
        )
    if scenario in Scenarios.WAVEGUIDE:
        origin, theta = int(parameters['origin']), float(parameters['theta'])
        strengths = [np.sqrt(2) * g * np.cos(theta), np.sqrt(2) * g * np.sin(theta)]
        return (
            _atom(bath, omega0, [origin, origin + parameters['d']], strengths, 'atom1'),
            _atom(bath, omega0, [origin + parameters['x21'], origin + parameters['x22']], strengths, 'atom2'),
        )
    if scenario in (Scenarios.SQUARE_BRAIDED, Scenarios.SQUARE_NESTED):
        centre = parameters['centre']
        return (
            _atom(bath, omega0, square_vertices(centre, parameters['mu']), [g] * 4, 'atom1'),
            _atom(bath, omega0, square_vertices(_shift(centre, parameters['offset']), parameters['mu2']),
                  [g] * 4, 'atom2'),
        )
    if scenario in Scenarios.LIEB:
        origin, length = parameters['origin'], parameters['length']
        second = _shift(origin, parameters['offset'])
        _, _, points = lieb_string(origin, length)
        first = _atom(bath, omega0, points, [g, -g], 'atom1')
        if scenario == Scenarios.LIEB_PAIR:
            _, _, points2 = lieb_string(second, length)
            return first, _atom(bath, omega0, points2, [-g, g], 'atom2')
        _, _, points2 = lieb_string(second, length, vertical=True)
        return first, _atom(bath, omega0, points2, [g, -g], 'atom2')
    raise ConfigError(f"Scenario '{scenario}' has no built-in placement.")


# published values -------------------------------------------------------

def _pattern_vector(bath, pattern: dict) -> np.ndarray:
    vector = np.zeros(bath.n_sites, dtype=complex)
    for site, amplitude in pattern.items():
        vector[bath.site_index(list(site))] = amplitude
    return vector


def _chain_wavevector(bath, omega0):
    try:
        return chain_wavevector(omega0, bath.hopping_scale, float(bath.frequencies[0]))
    except OutOfBand:
        return None


def _waveguide_pattern(bath, atom, k0):
    """sin k₀(n - x) strictly between the two coupling points."""
    if k0 is None:
        return None
    start, stop = sorted(atom.sites)
    vector = np.zeros(bath.n_sites, dtype=complex)
    n = np.arange(start + 1, stop)
    vector[n] = np.sin(k0 * (n - start))
    return vector


def vds_patterns(scenario, bath: BathGraph, parameters: dict, atoms) -> list:
    """Closed-form vacancy-like photon pattern per atom (unnormalized), or None where there is none."""
    if scenario == Scenarios.GRAPHENE3:
        i, j = parameters['centre']
        return [{(i, j, A): 1.0}, {(i, j, B): 1.0}]
    if scenario in (Scenarios.GRAPHENE4, Scenarios.GRAPHENE_CHAIN):
        centres = [_shift(parameters['centre'], (0, n)) for n in range(len(atoms))]
        return [{(i, j, A): 1.0, (i, j, B): 1.0} for i, j in centres]
    if scenario in (Scenarios.SQUARE_BRAIDED, Scenarios.SQUARE_NESTED):
        centre = parameters['centre']
        second = _shift(centre, parameters['offset'])
        return [
            {(x, y, 0): s for (x, y), s in square_diamond(centre, parameters['mu']).items()},
            {(x, y, 0): s for (x, y), s in square_diamond(second, parameters['mu2']).items()},
        ]
    if scenario in Scenarios.LIEB:
        origin, length = parameters['origin'], parameters['length']
        second = _shift(origin, parameters['offset'])
        patterns = []
        for start, vertical in ((origin, False), (second, scenario == Scenarios.LIEB_MISMATCHED)):
            sites, signs, _ = lieb_string(start, length, vertical)
            patterns.append({tuple(site): s for site, s in zip(sites, signs) if s})
        return patterns
    if scenario in Scenarios.WAVEGUIDE:
        k0 = _chain_wavevector(bath, float(parameters['omega0']))
        return [_waveguide_pattern(bath, atom, k0) for atom in atoms]
    return [None] * len(atoms)


def verified_pattern(pattern, atom: GiantAtom, bath: BathGraph, omega0, H=None):
    """
    (ψ normalized, c = ⟨χ|H_B|ψ⟩) when ``pattern`` is orthogonal to χ and
    (H_B - ω₀)ψ is parallel to χ with a non-zero overlap; None otherwise.
    """
    if pattern is None:
        return None
    vector = pattern if isinstance(pattern, np.ndarray) else _pattern_vector(bath, pattern)
    norm = np.linalg.norm(vector)
    if norm == 0:
        return None
    psi = vector / norm
    H = hamiltonian_matrix(bath, as_sparse=True) if H is None else H
    chi = site_state(atom).dense(bath.n_sites)
    image = H @ psi
    c = complex(np.vdot(chi, image))
    scale = bath.hopping_scale
    if abs(np.vdot(chi, psi)) > PATTERN_TOL or abs(c) <= PATTERN_TOL * scale:
        return None
    if np.linalg.norm(image - omega0 * psi - c * chi) > PATTERN_TOL * scale:
        return None
    return psi, c


def verified_patterns(scenario, bath: BathGraph, parameters: dict, atoms) -> list:
    omega0 = float(parameters['omega0'])
    H = hamiltonian_matrix(bath, as_sparse=True)
    return [verified_pattern(pattern, atom, bath, omega0, H)
            for pattern, atom in zip(vds_patterns(scenario, bath, parameters, atoms), atoms)]


def pattern_bound_states(atoms, verified) -> np.ndarray:
    """Columns ψ_BS^j = -ḡ_j ψ_j / c_j."""
    return np.column_stack([-atom.g_bar * psi / c for atom, (psi, c) in zip(atoms, verified)])


def expected_k_matrix(scenario, parameters: dict, bath: BathGraph, atoms):
    """K_jj' = ḡ_j⟨χ_j|ψ_BS^j'⟩ from the closed-form patterns, or None when one of them fails."""
    verified = verified_patterns(scenario, bath, parameters, atoms)
    if any(item is None for item in verified):
        return None
    chis = np.column_stack([site_state(atom).dense(bath.n_sites) for atom in atoms])
    psis = pattern_bound_states(atoms, verified)
    g_bars = np.array([atom.g_bar for atom in atoms])
    return g_bars[:, None] * (chis.conj().T @ psis)


def _k_tolerance(scenario, expected, kappa, backend):
    if backend == Backend.ANALYTIC_CHAIN:
        return ANALYTIC_TOLERANCE * kappa
    if abs(expected) <= ZERO_TOLERANCE * kappa:
        return ZERO_TOLERANCE * kappa
    return K_TOLERANCE.get(scenario, K_TOLERANCE_DEFAULT) * kappa


def _waveguide_expectations(scenario, parameters, bath, atoms, outputs, backend):
    """Closed-form rates of the infinite array, when ω₀ lies inside the band."""
    J = bath.hopping_scale
    k0 = _chain_wavevector(bath, float(parameters['omega0']))
    if k0 is None or not (Outputs.RATES in outputs or Outputs.DFH_REPORT in outputs):
        return {}
    theta, g_bar = float(parameters['theta']), atoms[0].g_bar
    d, x21, x22 = parameters['d'], parameters['x21'], parameters['x22']
    rate_scale = g_bar ** 2 / (2 * J * np.sin(k0))
    relative = ANALYTIC_TOLERANCE if backend == Backend.ANALYTIC_CHAIN else 0.02

    expected = {
        'gamma11': Expectation(decay_rate_closed_form(theta, k0, d, g_bar, J), relative * rate_scale),
        'gamma22': Expectation(decay_rate_closed_form(theta, k0, x22 - x21, g_bar, J), relative * rate_scale),
    }
    if scenario == Scenarios.WAVEGUIDE_BRAIDED and x22 - x21 == d:
        K12, gamma12, _ = braided_rates_closed_form(theta, k0, d, x21, g_bar, J)
        tolerance = relative * max(abs(K12), rate_scale)
        expected['K12'] = Expectation(K12, tolerance)
        expected['gamma12'] = Expectation(gamma12, tolerance)
    return expected


def analytic_checks(scenario, parameters: dict, bath: BathGraph) -> dict:
    """Closed-form quantities reported next to a run, with the value they must take."""
    if scenario != Scenarios.WAVEGUIDE_NESTED:
        return {}
    k0 = _chain_wavevector(bath, float(parameters['omega0']))
    if k0 is None or np.sin(k0 * (parameters['x22'] - parameters['x21'])) ** 2 > PATTERN_TOL:
        return {}
    value = nested_cancellation(k0, parameters['x21'], parameters['x22'])
    return {'nested_cancellation': (value, Expectation(0.0, 1e-12))}


def expectations(scenario, parameters: dict, bath: BathGraph, atoms, outputs=(), backend=None) -> dict:
    """
    {headline name: Expectation} for a named scenario. Empty for ``custom``
    and for every check whose closed form does not hold on this lattice.
    """
    if scenario == Scenarios.CUSTOM:
        return {}
    outputs = tuple(outputs)
    J = bath.hopping_scale
    kappa = float(parameters['g']) ** 2 / J
    verified = verified_patterns(scenario, bath, parameters, atoms)

    expected = {}
    if scenario in Scenarios.WAVEGUIDE:
        expected.update(_waveguide_expectations(scenario, parameters, bath, atoms, outputs, backend))

    if Outputs.VDS in outputs:
        for j, item in enumerate(verified, start=1):
            if item is None:
                continue
            psi, c = item
            expected[f'vds_fidelity_{j}'] = Expectation(1.0, 1e-8)
            expected[f'vds_coupling_{j}'] = Expectation(abs(c), 1e-8 * J)
            expected[f'bs_peak_{j}'] = Expectation(atoms[j - 1].g_bar * float(np.abs(psi).max()) / abs(c), 1e-8)

    if any(item is None for item in verified):
        logger.info('Closed-form patterns do not hold for every atom of %s at ω₀ = %s',
                    scenario, parameters['omega0'])
        return expected

    chis = np.column_stack([site_state(atom).dense(bath.n_sites) for atom in atoms])
    psis = pattern_bound_states(atoms, verified)
    K = np.array([atom.g_bar for atom in atoms])[:, None] * (chis.conj().T @ psis)

    if Outputs.RATES in outputs or Outputs.DFH_REPORT in outputs:
        if len(atoms) == 2 and 'K12' not in expected:
            value = float(K[0, 1].real)
            expected['K12'] = Expectation(value, _k_tolerance(scenario, value, kappa, backend))
        elif len(atoms) > 2:
            nearest = float(K[0, 1].real)
            expected['K_nearest'] = Expectation(nearest, _k_tolerance(scenario, nearest, kappa, backend))
            expected['K_beyond_nearest'] = Expectation(0.0, ZERO_TOLERANCE * kappa)
    if Outputs.DFH_REPORT in outputs:
        expected['is_dfh'] = Expectation(True)
        floor = PATTERN_TOL * float(np.abs(psis).max())
        zero = [[j + 1, j2 + 1] for j in range(len(atoms)) for j2 in range(j + 1, len(atoms))
                if np.all(np.abs(psis[atoms[j2].sites, j]) <= floor)
                or np.all(np.abs(psis[atoms[j].sites, j2]) <= floor)]
        expected['zero_interaction_pairs'] = Expectation(zero)
    return expected
