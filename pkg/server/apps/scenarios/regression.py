# apps/scenarios/regression.py
"""
Release gate: one row per quantitative check against published results.

Rows never raise; a computation error becomes an ``error`` row carrying
the error code, so a perturbed configuration shows up as data.
"""
import logging
import time
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import pandas as pd

from apps.bath.builders import build_chain, build_dimerized_chain, build_graphene
from apps.bath.spectra import bath_bands, diagonalize, spectral_gaps
from apps.boundstates.equations import pole_function
from apps.boundstates.poles import find_ingap_bs, find_inband_bs
from apps.boundstates.vds import vds_search
from apps.dynamics.closed_form import braided_rates_closed_form, decay_rate_closed_form
from apps.dynamics.evolution import eigenspace_weights
from apps.dynamics.lindblad import lindblad_evolve, product_state
from apps.dynamics.rates import rates_green, rates_spectral
from apps.emitters.hamiltonians import as_ensemble, total_hamiltonian_1ex
from apps.emitters.models import EmitterEnsemble, GiantAtom
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import total_green
from apps.scenarios import catalog
from apps.scenarios.models import Expectation, matches
from apps.scenarios.runner import run_chain_scaling, run_single
from apps.scenarios.serializers import scenario_config
from utils.conf import gla_settings
from utils.constants import Backend, Outputs, Scenarios
from utils.exceptions import GiantAtomError

logger = logging.getLogger(__name__)

REGRESSION_ROWS = {}
COLUMNS = ['row', 'criterion', 'status', 'value', 'expected', 'tolerance', 'seconds', 'detail']
PERTURBED_SETTINGS = ('IM_TOL_FLOOR', 'IM_TOL_FACTOR', 'CONVERGENCE_RTOL')
PERTURBATION = 1e-3
SEED = 20240917

G = 0.05
WAVEGUIDE_CHAIN = 2001
WAVEGUIDE_CENTRE = 1000
PINNING_STRENGTHS = (0.05, 0.5, 1.0)


@dataclass
class RowResult:
    value: Any
    expected: Any
    tolerance: float = 0.0
    detail: str = ''
    passed: Optional[bool] = None

    def status(self) -> str:
        if self.value is None or self.expected is None:
            return 'pass' if self.passed else 'fail'
        passed = matches(self.value, Expectation(self.expected, self.tolerance))
        if self.passed is not None:
            passed = passed and self.passed
        return 'pass' if passed else 'fail'


def regression_row(name, criterion):
    def register(check):
        REGRESSION_ROWS[name] = (criterion, check)
        return check
    return register


def two_point(first, d, g_bar=np.sqrt(2) * G, theta=np.pi / 4, omega0=0.0):
    return GiantAtom(omega0, [(first, g_bar * np.cos(theta)), (first + d, g_bar * np.sin(theta))])


def _scenario_row(name, headline, outputs, overrides=()) -> RowResult:
    report = run_single(scenario_config(name, overrides, outputs))
    target = report.headline(headline)
    failures = [h.name for h in report.failures()]
    detail = f'failing: {", ".join(failures)}' if failures else ''
    return RowResult(target.value, target.expected, target.tolerance or 0.0, detail, passed=report.passed)


@regression_row('graphene3_vds', 'graphene 3-point VDS at the Dirac point, |ψ_BS| = g/J on the central site')
def graphene3_vds():
    return _scenario_row(Scenarios.GRAPHENE3, 'vds_fidelity_1', (Outputs.VDS,))


@regression_row('graphene4_vds', 'graphene 4-point VDS coupling ⟨χ|H_B|ψ₊⟩ = √2 J')
def graphene4_vds():
    row = _scenario_row(Scenarios.GRAPHENE4, 'vds_coupling_1', (Outputs.VDS,))
    row.tolerance = min(row.tolerance, 1e-10)
    return row


@regression_row('graphene4_dfh', 'graphene 4-point pair K12 = +g²/J within 1e-6')
def graphene4_dfh():
    return _scenario_row(Scenarios.GRAPHENE4, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('graphene3_dfh', 'graphene 3-point pair K12 = +g²/J within 1e-6')
def graphene3_dfh():
    return _scenario_row(Scenarios.GRAPHENE3, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('graphene_chain', 'graphene atom chain couples nearest neighbours only, K = +g²/J')
def graphene_chain():
    return _scenario_row(Scenarios.GRAPHENE_CHAIN, 'K_nearest', (Outputs.RATES,))


@regression_row('waveguide_braided_finite', 'braided pair K12 = (2g²/v) sin k₀x₂₁ within 2%, L = 2001')
def waveguide_braided_finite():
    return _scenario_row(Scenarios.WAVEGUIDE_BRAIDED, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('waveguide_braided_analytic', 'braided pair K12 within 1e-10 on the analytic backend')
def waveguide_braided_analytic():
    return _scenario_row(Scenarios.WAVEGUIDE_BRAIDED, 'K12', (Outputs.RATES,),
                         ('backend=analytic_chain',))


@regression_row('waveguide_serial', 'serial pair is decoherence-free with |K12| ≤ 1e-6 g²/J')
def waveguide_serial():
    return _scenario_row(Scenarios.WAVEGUIDE_SERIAL, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('waveguide_nested', 'nested pair: K12 = 0, sin k₀x₂₁ + sin k₀x₂₂ = 0, zero-interaction pair')
def waveguide_nested():
    return _scenario_row(Scenarios.WAVEGUIDE_NESTED, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('square_braided', 'square braided pair K12 = +g²/J within 2% on 41×41')
def square_braided():
    return _scenario_row(Scenarios.SQUARE_BRAIDED, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('square_nested', 'square nested pair K12 = 0 within 1e-6 g²/J')
def square_nested():
    return _scenario_row(Scenarios.SQUARE_NESTED, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('lieb_pair', 'Lieb pair: VDS at -J with ±1/2 amplitudes, K12 = -g²/J within 2%')
def lieb_pair():
    return _scenario_row(Scenarios.LIEB_PAIR, 'K12', (Outputs.VDS, Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('lieb_mismatched', 'Lieb mismatched orientations: decoherence-free with K12 = 0')
def lieb_mismatched():
    return _scenario_row(Scenarios.LIEB_MISMATCHED, 'K12', (Outputs.RATES, Outputs.DFH_REPORT))


@regression_row('lieb_size_law', 'Lieb VDS for lengths 5, 11, 17; lengths 7 and 9 rejected')
def lieb_size_law():
    frame = run_chain_scaling(scenario_config(Scenarios.LIEB_PAIR), write=False)
    deviation = float(np.abs(frame['amplitude'] - frame['expected_amplitude']).max())
    rejected = all(catalog.size_law_error(length) for length in (7, 9))
    found = bool(frame['vds_found'].all())
    nodes = bool((frame['nodes'] == frame['expected_nodes']).all())
    return RowResult(deviation, 0.0, 1e-8, f'found={found} nodes={nodes} rejected={rejected}',
                     passed=found and nodes and rejected)


def _decay_errors(query, tolerance_scale):
    chain = build_chain(WAVEGUIDE_CHAIN)
    g_bar = np.sqrt(2) * G
    errors = []
    for theta in (0.0, np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2):
        for d in (1, 2, 3):
            rates = rates_green(two_point(WAVEGUIDE_CENTRE, d, g_bar, theta), chain, query)
            expected = decay_rate_closed_form(theta, np.pi / 2, d, g_bar)
            errors.append(abs(rates.gamma[0, 0].real - expected) / tolerance_scale(g_bar))
    return float(max(errors))


@regression_row('decay_law_analytic', 'γ(θ, d) of one two-point atom within 1e-10, analytic backend')
def decay_law_analytic():
    error = _decay_errors(ResolventQuery(0.0, backend=Backend.ANALYTIC_CHAIN), lambda g_bar: 1.0)
    return RowResult(error, 0.0, 1e-10)


@regression_row('decay_law_finite', 'γ(θ, d) of one two-point atom within 2%, finite backend')
def decay_law_finite():
    error = _decay_errors(ResolventQuery(0.0), lambda g_bar: g_bar ** 2)
    return RowResult(error, 0.0, 0.02)


@regression_row('decay_quadratic', 'γ grows quadratically away from the decoherence-free angle')
def decay_quadratic():
    chain = build_chain(WAVEGUIDE_CHAIN)
    query = ResolventQuery(0.0, backend=Backend.ANALYTIC_CHAIN)
    g_bar = np.sqrt(2) * G
    ratios = []
    for delta in (1e-2, 2e-3):
        gamma = rates_green(two_point(WAVEGUIDE_CENTRE, 2, g_bar, np.pi / 4 + delta), chain, query).gamma[0, 0].real
        ratios.append(gamma / (2 * g_bar ** 2 / 2 * 2 * delta ** 2))
    return RowResult(float(max(abs(r - 1) for r in ratios)), 0.0, 1e-2)


@regression_row('resolvent_identity', 'assembled G(z) equals (z - H)⁻¹ for 10 random z, chain(101)')
def resolvent_identity():
    rng = np.random.default_rng(SEED)
    bath = build_chain(101)
    atom = GiantAtom(0.2, [(40, 0.3), (47, -0.2 + 0.1j), (52, 0.15)])
    hamiltonian = total_hamiltonian_1ex(bath, as_ensemble([atom], bath))
    identity = np.eye(hamiltonian.shape[0])
    worst = 0.0
    for _ in range(10):
        z = complex(rng.uniform(-3, 3), rng.uniform(0.05, 1.0))
        direct = np.linalg.inv(z * identity - hamiltonian)
        worst = max(worst, float(np.abs(total_green(bath, atom, z).assemble() - direct).max()))
    return RowResult(worst, 0.0, 1e-10)


def _random_atom(rng, bath, omega_range):
    n_points = int(rng.integers(1, 4))
    sites = rng.choice(np.arange(bath.n_sites // 4, 3 * bath.n_sites // 4), size=n_points, replace=False)
    strengths = rng.uniform(0.05, 0.5, n_points) * rng.choice([-1, 1], n_points)
    return GiantAtom(rng.uniform(*omega_range), list(zip(sites.tolist(), strengths.tolist())))


@regression_row('ingap_uniqueness', 'at most one root of F per gap, F increasing, 50 atoms per lattice')
def ingap_uniqueness():
    rng = np.random.default_rng(SEED)
    lattices = {
        'chain': build_chain(101),
        'dimerized_chain': build_dimerized_chain(50, 1.0, 0.5),
        'graphene': build_graphene(8, 8),
    }
    violations = []
    for name, bath in lattices.items():
        eigenvalues = diagonalize(bath).eigenvalues
        for _ in range(50):
            atom = _random_atom(rng, bath, (eigenvalues[0] - 1.0, eigenvalues[-1] + 1.0))
            for lower, upper in spectral_gaps(bath):
                lower = max(lower, eigenvalues[0] - 4.0)
                upper = min(upper, eigenvalues[-1] + 4.0)
                grid = np.linspace(lower, upper, 40)
                values = np.array([np.real(pole_function(atom, bath, omega)) for omega in grid])
                roots = int(np.sum(np.diff(np.sign(values)) != 0))
                found = find_ingap_bs(atom, bath, (lower, upper)) is not None
                if np.any(np.diff(values) <= 0) or roots > 1 or found != (roots == 1):
                    violations.append(f'{name} gap ({lower:.3f}, {upper:.3f})')
    return RowResult(len(violations), 0, 0, '; '.join(violations[:3]))


@regression_row('inband_null', 'single-point atoms have no bound state inside the band, 20 atoms')
def inband_null():
    rng = np.random.default_rng(SEED + 1)
    bath = build_chain(201)
    bands = bath_bands(bath)
    found = 0
    for _ in range(20):
        atom = GiantAtom(rng.uniform(-1.8, 1.8), [(int(rng.integers(50, 150)), rng.uniform(0.05, 0.3))])
        query = ResolventQuery(atom.omega0, backend=Backend.BLOCH_SUM)
        found += len(find_inband_bs(atom, bath, (-1.95, 1.95), grid=60, query=query, bands=bands))
    return RowResult(found, 0, 0)


@regression_row('rate_routes', 'Green, spectral and closed-form rates agree within 2% on chains')
def rate_routes():
    chain = build_chain(WAVEGUIDE_CHAIN)
    g_bar = np.sqrt(2) * G
    scale = g_bar ** 2 / 2
    worst = 0.0
    for theta, d, x21 in ((np.pi / 4, 2, 1), (np.pi / 3, 3, 1)):
        ensemble = EmitterEnsemble((two_point(WAVEGUIDE_CENTRE, d, g_bar, theta),
                                    two_point(WAVEGUIDE_CENTRE + x21, d, g_bar, theta)))
        K12, gamma12, gamma11 = braided_rates_closed_form(theta, np.pi / 2, d, x21, g_bar)
        closed = np.array([K12, gamma12, gamma11])
        for rates in (rates_green(ensemble, chain), rates_spectral(ensemble, chain)):
            values = np.array([rates.K[0, 1].real, rates.gamma[0, 1].real, rates.gamma[0, 0].real])
            worst = max(worst, float(np.abs(values - closed).max()) / scale)
    return RowResult(worst, 0.0, 0.02)


@regression_row('lindblad_decay', 'single-atom population follows exp(-γt) up to γt = 5, trace kept')
def lindblad_decay():
    chain = build_chain(WAVEGUIDE_CHAIN)
    atom = GiantAtom(0.0, [(WAVEGUIDE_CENTRE, G)])
    gamma = 2 * G ** 2 / 2
    times = np.linspace(0.0, 5 / gamma, 101)
    trajectory = lindblad_evolve(product_state([0], 1), rates_green(atom, chain), t_grid=times)
    deviation = float(np.abs(trajectory.populations[:, 0] - np.exp(-gamma * times)).max())
    drift = float(np.abs(trajectory.traces - 1).max()) / times[-1]
    return RowResult(deviation, 0.0, 0.02, f'trace drift {drift:.2e} per unit time', passed=drift <= 1e-8)


@regression_row('lindblad_dfh_exchange', 'decoherence-free pair exchanges as cos²(K12 t) over K12 t ≤ 4π')
def lindblad_dfh_exchange():
    chain = build_chain(WAVEGUIDE_CHAIN)
    ensemble = EmitterEnsemble((two_point(WAVEGUIDE_CENTRE, 2), two_point(WAVEGUIDE_CENTRE + 1, 2)))
    rates = rates_green(ensemble, chain, ResolventQuery(0.0, backend=Backend.ANALYTIC_CHAIN))
    K12 = abs(rates.K[0, 1])
    times = np.linspace(0.0, 4 * np.pi / K12, 201)
    trajectory = lindblad_evolve(product_state([0], 2), rates, t_grid=times)
    deviation = float(np.abs(trajectory.populations[:, 0] - np.cos(K12 * times) ** 2).max())
    return RowResult(deviation, 0.0, 1e-6)


@regression_row('vds_pinning_plateau', 'VDS stays an eigenstate for g ∈ {0.05, 0.5, 1}J; plateau cos⁴θ at g = J')
def vds_pinning_plateau():
    bath = build_graphene(21, 21)
    J = bath.hopping_scale
    points = catalog.graphene_three_point((10, 10), catalog.B)
    geometry = GiantAtom(0.0, [(bath.site_index(site), 1.0) for site in points])
    residuals, deviation, plateau = [], None, None
    for g in PINNING_STRENGTHS:
        atom = geometry.with_strength(g * J)
        found = vds_search(atom, bath, pinning=(g,))
        if not found:
            return RowResult(None, 0.0, 0.03, f'no VDS at the Dirac point for g = {g}J', passed=False)
        vds, = found
        residuals.append(max(vds.pinning_residuals))
        if g == 1.0:
            plateau = np.cos(vds.theta) ** 4
            energies, weights = eigenspace_weights(bath, atom)
            weight = float(np.abs(weights[np.argmin(np.abs(energies - atom.omega0))]) ** 2)
            deviation = abs(weight - plateau) / plateau
    pinned = max(residuals) <= 1e-8
    detail = f'plateau {plateau:.6f}, pinning ' + ', '.join(f'{r:.2e}' for r in residuals)
    return RowResult(deviation, 0.0, 0.03, detail, passed=pinned)


def _run_row(name) -> dict:
    criterion, check = REGRESSION_ROWS[name]
    started = time.perf_counter()
    row = {'row': name, 'criterion': criterion}
    try:
        result = check()
        row.update(status=result.status(), value=result.value, expected=result.expected,
                   tolerance=result.tolerance, detail=result.detail)
    except GiantAtomError as exc:
        logger.warning('Regression row %s raised %s: %s', name, exc.code, exc)
        row.update(status='error', value=None, expected=None, tolerance=None, detail=f'[{exc.code}] {exc}')
    except Exception as exc:
        logger.exception('Regression row %s failed', name)
        row.update(status='error', value=None, expected=None, tolerance=None,
                   detail=f'[{type(exc).__name__}] {exc}')
    row['seconds'] = round(time.perf_counter() - started, 3)
    logger.info('%-28s %s (%.1f s)', name, row['status'], row['seconds'])
    return row


def emit_regression_suite(names=None, perturb=False) -> pd.DataFrame:
    """
    Run the named rows (all by default) and return the table. ``perturb``
    shrinks the Im-tolerances and the convergence threshold a thousandfold.
    """
    names = list(names or REGRESSION_ROWS)
    unknown = sorted(set(names) - set(REGRESSION_ROWS))
    if unknown:
        raise KeyError(f'Unknown regression rows: {", ".join(unknown)}')
    overrides = {}
    if perturb:
        overrides = {name: getattr(gla_settings, name) * PERTURBATION for name in PERTURBED_SETTINGS}
        logger.info('Perturbed tolerances: %s', overrides)
    with gla_settings.override(**overrides):
        rows = [_run_row(name) for name in names]
    return pd.DataFrame(rows, columns=COLUMNS)
