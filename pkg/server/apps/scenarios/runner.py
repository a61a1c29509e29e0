# apps/scenarios/runner.py
"""
Scenario execution: build the bath and atoms, evaluate the requested
outputs, attach the published values and write the run directory.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from functools import cached_property

import numpy as np
import pandas as pd

from apps.bath.serializers import build_bath
from apps.bath.spectra import bath_bands, diagonalize, hamiltonian_frame
from apps.boundstates.poles import find_gap_states
from apps.boundstates.vds import vds_search
from apps.boundstates.wavefunctions import weak_coupling_bs
from apps.dynamics.dfh import dfh_check
from apps.dynamics.evolution import exact_1ex_evolve, reflection_horizon
from apps.dynamics.lindblad import lindblad_evolve, product_state
from apps.dynamics.rates import rates_green
from apps.emitters.hamiltonians import as_ensemble, site_state
from apps.emitters.serializers import build_atom
from apps.greens.ldos import ldos, self_energy_frame
from apps.greens.limits import default_epsilon
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import self_energy
from apps.scenarios import catalog, reports
from apps.scenarios.models import Headline, RunReport, ScenarioConfig
from utils.conf import gla_settings
from utils.constants import Backend, Outputs, Scenarios
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

OUTPUT_HANDLERS = {}
DEFAULT_GRID = 201


def output(name):
    def register(handler):
        OUTPUT_HANDLERS[name] = handler
        return handler
    return register


class RunContext:
    """Lazily built objects shared by the output handlers of one run."""

    def __init__(self, config: ScenarioConfig, directory=None, sweep_point=None):
        self.config = config
        self.directory = directory
        self.artifacts = {}
        self.values = {}
        self.results = {}
        self.flags = []
        self.log_context = {'scenario': config.scenario, 'sweep_point': sweep_point}

    @property
    def parameters(self):
        return self.config.parameters

    @cached_property
    def bath(self):
        return build_bath(self.config.lattice)

    @cached_property
    def atoms(self):
        if self.config.scenario != Scenarios.CUSTOM:
            return catalog.place_atoms(self.config.scenario, self.bath, self.parameters)
        atoms = [build_atom(data, self.bath) for data in self.config.atoms]
        if 'g' in self.parameters:
            atoms = [atom.with_strength(float(self.parameters['g'])) for atom in atoms]
        if 'omega0' in self.parameters:
            atoms = [replace(atom, omega0=float(self.parameters['omega0'])) for atom in atoms]
        return tuple(atoms)

    @cached_property
    def ensemble(self):
        return as_ensemble(self.atoms, self.bath)

    @cached_property
    def bands(self):
        if self.config.backend != Backend.BLOCH_SUM:
            return None
        return bath_bands(self.bath)

    @cached_property
    def query(self):
        return ResolventQuery(self.atoms[0].omega0, backend=self.config.backend)

    @cached_property
    def rates(self):
        return rates_green(self.ensemble, self.bath, self.query, self.bands)

    @cached_property
    def dfh(self):
        return dfh_check(self.rates, self.ensemble, self.bath, self.query, self.bands)

    @cached_property
    def vds(self):
        return [vds_search(atom, self.bath) for atom in self.atoms]

    @cached_property
    def patterns(self):
        if self.config.scenario == Scenarios.CUSTOM:
            return [None] * len(self.atoms)
        return catalog.verified_patterns(self.config.scenario, self.bath, self.parameters, self.atoms)

    @cached_property
    def energy_window(self):
        if self.bands is not None:
            lower, upper = self.bands.energies.min(), self.bands.energies.max()
        else:
            eigenvalues = diagonalize(self.bath).eigenvalues
            lower, upper = eigenvalues[0], eigenvalues[-1]
        margin = 0.5 * self.bath.hopping_scale
        return float(lower - margin), float(upper + margin)

    @property
    def rate_scale(self):
        """Largest |K| or |γ| entry, or g²/J when both vanish."""
        scale = max(float(np.abs(self.rates.K).max()), float(np.abs(self.rates.gamma).max()))
        return scale or float(np.max(self.ensemble.g_bars)) ** 2 / self.bath.hopping_scale

    def grid(self, name='n_omega'):
        lower, upper = self.energy_window
        return np.linspace(lower, upper, int(self.parameters.get(name, DEFAULT_GRID)))

    def save_frame(self, name, frame):
        if self.directory is None:
            return
        self.artifacts[name] = reports.write_frame(frame, self.directory / name).name

    def save_json(self, name, payload):
        if self.directory is None:
            return
        self.artifacts[name] = reports.write_json(payload, self.directory / name).name

    def record(self, name, value):
        self.values[name] = value


def site_frame(bath, amplitudes) -> pd.DataFrame:
    coordinates = bath.coordinates
    frame = pd.DataFrame({'site': np.arange(bath.n_sites)})
    for axis in range(coordinates.shape[1]):
        frame[f'x{axis + 1}'] = coordinates[:, axis]
    frame['re'] = np.real(amplitudes)
    frame['im'] = np.imag(amplitudes)
    return frame


@output(Outputs.SELF_ENERGY)
def self_energy_output(ctx: RunContext):
    grid = ctx.grid()
    epsilon = default_epsilon(ctx.bath, ctx.bands)
    for j, atom in enumerate(ctx.atoms, start=1):
        samples = []
        for omega in grid:
            sample = self_energy(atom, ctx.bath, ctx.query.at(omega).with_epsilon(epsilon), ctx.bands)
            samples.append(replace(sample, value=atom.g_bar ** 2 * sample.value))
        ctx.save_frame(f'self_energy_{j}.csv', self_energy_frame(samples))

        at_omega0 = self_energy(atom, ctx.bath, ctx.query.at(atom.omega0), ctx.bands, strict=False)
        value = atom.g_bar ** 2 * at_omega0.value
        ctx.record(f'lamb_shift_{j}', float(value.real))
        ctx.record(f'decay_rate_{j}', float(-2 * value.imag))
    ctx.results['self_energy'] = {'epsilon': epsilon, 'n_omega': int(grid.size)}


@output(Outputs.LDOS)
def ldos_output(ctx: RunContext):
    bands = ctx.bands if ctx.bands is not None else bath_bands(ctx.bath)
    grid = ctx.grid()
    for j, atom in enumerate(ctx.atoms, start=1):
        curve = ldos(site_state(atom), ctx.bath, bands, grid)
        ctx.save_frame(f'ldos_{j}.csv', curve.to_frame())
        ctx.record(f'ldos_at_omega0_{j}', float(curve.at(atom.omega0)))
        ctx.results.setdefault('ldos', {})[f'kernel_width_{j}'] = curve.kernel_width


@output(Outputs.BOUND_STATES)
def bound_states_output(ctx: RunContext):
    summary = []
    for j, atom in enumerate(ctx.atoms, start=1):
        states = find_gap_states(atom, ctx.bath, ctx.query)
        weak = weak_coupling_bs(atom, ctx.bath, ctx.query, ctx.bands)
        if weak is not None:
            states.append(weak)
        for k, state in enumerate(states, start=1):
            ctx.record(f'bs_energy_{j}_{k}', state.omega_bs)
            ctx.record(f'bs_atom_fraction_{j}_{k}', state.atom_fraction)
            if state.photon_amplitudes is not None:
                ctx.save_frame(f'bound_state_{j}_{k}.csv', state.to_frame(ctx.bath))
            summary.append({'atom': j, 'index': k, **state.header()})
        logger.info('%s: %d bound state(s)', ctx.ensemble.labels[j - 1], len(states), extra=ctx.log_context)
    ctx.results['bound_states'] = summary


@output(Outputs.VDS)
def vds_output(ctx: RunContext):
    summary = []
    for j, (atom, found, pattern) in enumerate(zip(ctx.atoms, ctx.vds, ctx.patterns), start=1):
        if not found:
            if pattern is not None:
                ctx.record(f'vds_fidelity_{j}', 0.0)
            summary.append({'atom': j, 'found': False})
            continue
        vds = found[0]
        ctx.record(f'vds_coupling_{j}', abs(vds.coupling_overlap))
        ctx.record(f'bs_peak_{j}', float(np.abs(vds.eta * vds.psi_vds).max()))
        ctx.record(f'vds_theta_{j}', vds.theta)
        if pattern is not None:
            expected, _ = pattern
            ctx.record(f'vds_fidelity_{j}', float(abs(np.vdot(expected, vds.psi_vds)) ** 2))
        if vds.pinning_residuals:
            ctx.record(f'vds_pinning_{j}', float(np.max(vds.pinning_residuals)))
        ctx.save_frame(f'vds_{j}.csv', site_frame(ctx.bath, vds.psi_vds))
        summary.append({
            'atom': j,
            'found': True,
            'omega': vds.omega,
            'coupling_overlap': vds.coupling_overlap,
            'eta': vds.eta,
            'theta': vds.theta,
            'degeneracy': vds.degeneracy,
            'pinning_residuals': list(vds.pinning_residuals),
        })
    ctx.results['vds'] = summary


@output(Outputs.RATES)
def rates_output(ctx: RunContext):
    rates = ctx.rates
    ctx.save_json('rates.json', {**rates.to_dict(), 'labels': list(ctx.ensemble.labels)})
    n = rates.n_atoms
    if n <= 2:
        for j in range(n):
            for j2 in range(j, n):
                if j != j2:
                    ctx.record(f'K{j + 1}{j2 + 1}', float(rates.K[j, j2].real))
                ctx.record(f'gamma{j + 1}{j2 + 1}', float(rates.gamma[j, j2].real))
    else:
        offsets = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        ctx.record('K_nearest', float(rates.K[0, 1].real))
        ctx.record('K_beyond_nearest', float(np.abs(rates.K[offsets > 1]).max()))
    ctx.record('max_gamma_eigenvalue', rates.max_gamma_eigenvalue)
    ctx.results['rates'] = {'method': rates.method, 'epsilon': rates.epsilon, 'converged': rates.converged}
    ctx.flags += list(rates.flags)


@output(Outputs.DFH_REPORT)
def dfh_output(ctx: RunContext):
    report = ctx.dfh
    payload = report.to_dict()
    ctx.save_json('dfh_report.json', payload)
    ctx.record('is_dfh', report.is_dfh)
    ctx.record('zero_interaction_pairs', payload['zero_interaction_pairs'])
    ctx.record('dfh_consistent', report.consistent)
    ctx.record('max_gamma_eigenvalue', report.max_gamma_eigenvalue)
    if not report.consistent:
        ctx.flags.append('dfh_inconsistent')


@output(Outputs.LINDBLAD)
def lindblad_output(ctx: RunContext):
    n = len(ctx.atoms)
    t_max = float(ctx.parameters.get('t_max', 4 * np.pi / ctx.rate_scale))
    times = np.linspace(0.0, t_max, int(ctx.parameters.get('n_times', DEFAULT_GRID)))
    trajectory = lindblad_evolve(product_state([0], n), ctx.rates, t_grid=times)
    ctx.save_frame('lindblad.csv', trajectory.to_frame())
    ctx.record('lindblad_final_population_1', float(trajectory.populations[-1, 0]))
    ctx.record('lindblad_trace_drift', float(np.abs(trajectory.traces - 1).max()))
    ctx.record('lindblad_min_eigenvalue', float(trajectory.min_eigenvalues.min()))
    ctx.results['lindblad'] = {**trajectory.frame, 't_max': t_max}
    ctx.flags += list(trajectory.flags)


@output(Outputs.EXACT_EVOLUTION)
def exact_evolution_output(ctx: RunContext):
    horizon = reflection_horizon(ctx.bath, ctx.ensemble)
    if 't_max' in ctx.parameters:
        t_max = float(ctx.parameters['t_max'])
    elif np.isfinite(horizon):
        t_max = 0.9 * horizon
    else:
        t_max = 4 * np.pi / ctx.rate_scale
    times = np.linspace(0.0, t_max, int(ctx.parameters.get('n_times', DEFAULT_GRID)))
    trajectory = exact_1ex_evolve(ctx.bath, ctx.ensemble, times)
    ctx.save_frame('exact_evolution.csv', trajectory.to_frame())
    ctx.record('exact_final_population_1', float(trajectory.excited_population(0)[-1]))
    ctx.results['exact_evolution'] = {'t_max': t_max, 'reflection_horizon': horizon}
    ctx.flags += list(trajectory.flags)


def _headlines(ctx: RunContext) -> list:
    config = ctx.config
    expected = {}
    if config.scenario != Scenarios.CUSTOM:
        expected = catalog.expectations(config.scenario, config.parameters, ctx.bath, ctx.atoms,
                                        config.outputs, config.backend)
    headlines = []
    for name, value in ctx.values.items():
        if name in expected:
            headlines.append(Headline.checked(name, value, expected[name]))
        else:
            headlines.append(Headline.computed(name, value))
    if config.scenario != Scenarios.CUSTOM:
        for name, (value, expectation) in catalog.analytic_checks(config.scenario, config.parameters,
                                                                  ctx.bath).items():
            headlines.append(Headline.checked(name, value, expectation))
    missing = sorted(set(expected) - set(ctx.values))
    if missing:
        logger.debug('Published values without a computed counterpart: %s', missing, extra=ctx.log_context)
    return headlines


def run_single(config: ScenarioConfig, directory=None, export_hamiltonian=False, sweep_point=None) -> RunReport:
    ctx = RunContext(config, directory, sweep_point)
    logger.info('Running %s (%s backend, outputs %s)', config.run_name, config.backend,
                ', '.join(config.outputs), extra=ctx.log_context)
    if export_hamiltonian:
        ctx.save_frame('hamiltonian.csv', hamiltonian_frame(ctx.bath))
    for name in config.outputs:
        OUTPUT_HANDLERS[name](ctx)

    ctx.results['atoms'] = [
        {'label': label, 'sites': atom.sites.tolist(), 'omega0': atom.omega0, 'g_bar': atom.g_bar}
        for label, atom in zip(ctx.ensemble.labels, ctx.atoms)
    ]
    report = RunReport(config=config, directory=directory, artifacts=ctx.artifacts,
                       headlines=_headlines(ctx), results=ctx.results, flags=tuple(dict.fromkeys(ctx.flags)))
    for headline in report.failures():
        logger.warning('%s = %s differs from the published %s (tolerance %s)', headline.name, headline.value,
                       headline.expected, headline.tolerance, extra=ctx.log_context)
    if directory is not None:
        report.artifacts['report.json'] = 'report.json'
        reports.write_report(report)
    return report


def _point_row(parameter, value, report: RunReport) -> dict:
    row = {parameter: value, 'passed': report.passed}
    for headline in report.headlines:
        if headline.is_scalar:
            row[headline.name] = float(headline.value)
    return row


def run_scenario(config: ScenarioConfig, output_root=None, write=True, export_hamiltonian=False) -> RunReport:
    """
    Run a scenario, or every point of its sweep. Sweep points run in a
    thread pool and land in ``point_NN`` subdirectories; ``sweep.csv`` is
    written after all of them finish.
    """
    directory = reports.run_directory(config, output_root) if write else None
    if not config.sweep:
        return run_single(config, directory, export_hamiltonian)

    parameter, values = config.sweep['parameter'], config.sweep['values']
    points = [config.at_point(parameter, value) for value in values]

    def run_point(index):
        point_directory = None
        if directory is not None:
            point_directory = directory / f'point_{index:02d}'
            point_directory.mkdir(exist_ok=True)
        return run_single(points[index], point_directory, export_hamiltonian, sweep_point=index)

    with ThreadPoolExecutor(max_workers=gla_settings.SWEEP_WORKERS) as executor:
        point_reports = list(executor.map(run_point, range(len(points))))

    rows = [_point_row(parameter, value, report) for value, report in zip(values, point_reports)]
    report = RunReport(
        config=config,
        directory=directory,
        points=[{'index': i, parameter: value, 'passed': r.passed, 'directory': f'point_{i:02d}'}
                for i, (value, r) in enumerate(zip(values, point_reports))],
        results={'sweep': rows},
        flags=tuple(dict.fromkeys(flag for r in point_reports for flag in r.flags)),
    )
    if directory is not None:
        report.artifacts['sweep.csv'] = reports.write_frame(pd.DataFrame(rows), directory / 'sweep.csv').name
        report.artifacts['report.json'] = 'report.json'
        reports.write_report(report)
    logger.info('Sweep over %s finished: %d point(s), %s', parameter, len(points),
                'pass' if report.passed else 'FAIL', extra={'scenario': config.scenario})
    return report


def run_chain_scaling(config: ScenarioConfig, lengths=(5, 11, 17), output_root=None, write=True) -> pd.DataFrame:
    """
    Lieb string lengths 5 + 6ν: VDS amplitude against 1/√(2(N+1)/3), number
    of nodes along the string, and K12 of the pair.
    """
    if config.scenario not in Scenarios.LIEB:
        raise ConfigError('Chain scaling applies to the Lieb scenarios.')
    errors = [error for error in map(catalog.size_law_error, lengths) if error]
    if errors:
        raise ConfigError(' '.join(errors), diagnostics={'lengths': list(lengths)})
    rows = []
    for length in lengths:
        point = replace(config, parameters={**config.parameters, 'length': length}, sweep=None,
                        outputs=(Outputs.VDS, Outputs.RATES))
        ctx = RunContext(point, sweep_point=length)
        found = vds_search(ctx.atoms[0], ctx.bath)
        sites, signs, _ = catalog.lieb_string(point.parameters['origin'], length)
        amplitudes = np.zeros(len(sites))
        if found:
            psi = found[0].psi_vds
            amplitudes = np.array([abs(psi[ctx.bath.site_index(site)]) for site in sites])
        rows.append({
            'length': length,
            'vds_found': bool(found),
            'amplitude': float(amplitudes.max()),
            'expected_amplitude': float(1 / np.sqrt(2 * (length + 1) / 3)),
            'nodes': int(np.sum(amplitudes < 1e-8)),
            'expected_nodes': int(sum(1 for s in signs if s == 0)),
            'K12': float(ctx.rates.K[0, 1].real),
        })
        logger.info('Lieb string N = %d: amplitude %.6f', length, rows[-1]['amplitude'], extra=ctx.log_context)
    frame = pd.DataFrame(rows)
    if write:
        directory = reports.run_directory(config, output_root)
        reports.write_frame(frame, directory / 'chain_scaling.csv')
    return frame
