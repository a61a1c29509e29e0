import json
import logging
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.bath.serializers import build_bath
from apps.scenarios import catalog
from apps.scenarios.models import Expectation, Headline, matches
from apps.scenarios.regression import REGRESSION_ROWS, emit_regression_suite, regression_row
from apps.scenarios.runner import run_chain_scaling, run_scenario, run_single
from apps.scenarios.serializers import parse_config, scenario_config
from config.settings.log_config import ColorFormatter
from config.settings.logging import LOGGING
from utils.conf import gla_settings
from utils.constants import ExitCodes, Outputs, Provenance, Scenarios
from utils.exceptions import ConfigError

G = 0.05


def defaults_geometry(name):
    data = catalog.scenario_defaults(name)
    bath = build_bath(data['lattice'])
    return data['parameters'], bath, catalog.place_atoms(name, bath, data['parameters'])


class OverrideTests(SimpleTestCase):
    def test_parse_override(self):
        self.assertEqual(catalog.parse_override('g=0.1'), ('g', 0.1))
        self.assertEqual(catalog.parse_override('centre=[10, 10]'), ('centre', [10, 10]))
        self.assertEqual(catalog.parse_override('backend=analytic_chain'), ('backend', 'analytic_chain'))
        with self.assertRaises(ConfigError):
            catalog.parse_override('g')

    def test_apply_overrides(self):
        data = catalog.apply_overrides(
            catalog.scenario_defaults(Scenarios.GRAPHENE3),
            ['g=0.1', 'lattice.size=[21, 21]', 'backend=finite_spectral'],
        )
        self.assertEqual(data['parameters']['g'], 0.1)
        self.assertEqual(data['lattice']['size'], [21, 21])
        self.assertEqual(data['backend'], 'finite_spectral')

    def test_unknown_scenario(self):
        with self.assertRaises(ConfigError):
            catalog.scenario_defaults('hexagon')


class ScenarioConfigTests(SimpleTestCase):
    def test_defaults_are_valid(self):
        for name, _ in Scenarios.CHOICES:
            config = scenario_config(name)
            self.assertEqual(config.scenario, name)
            self.assertTrue(config.outputs)

    def test_round_trip(self):
        for name in (Scenarios.GRAPHENE4, Scenarios.WAVEGUIDE_BRAIDED, Scenarios.CUSTOM):
            config = scenario_config(name)
            self.assertEqual(parse_config(config.to_dict()), config)
            self.assertEqual(parse_config(json.loads(json.dumps(config.to_dict()))).fingerprint,
                             config.fingerprint)

    def test_fingerprint_tracks_parameters(self):
        first = scenario_config(Scenarios.WAVEGUIDE_BRAIDED)
        second = scenario_config(Scenarios.WAVEGUIDE_BRAIDED, ['g=0.1'])
        self.assertNotEqual(first.run_name, second.run_name)
        self.assertTrue(first.run_name.startswith('waveguide_braided_'))

    def test_braided_rule(self):
        with self.assertRaisesMessage(ConfigError, 'braided pair needs 0 < x21 < d < x22'):
            scenario_config(Scenarios.WAVEGUIDE_BRAIDED, ['x21=3', 'x22=5'])

    def test_serial_and_nested_rules(self):
        with self.assertRaisesMessage(ConfigError, 'serial pair'):
            scenario_config(Scenarios.WAVEGUIDE_SERIAL, ['x21=1'])
        with self.assertRaisesMessage(ConfigError, 'nested pair'):
            scenario_config(Scenarios.WAVEGUIDE_NESTED, ['x22=7'])

    def test_lieb_size_law(self):
        for length in (7, 9):
            with self.assertRaisesMessage(ConfigError, '5 + 6ν'):
                scenario_config(Scenarios.LIEB_PAIR, [f'length={length}'])
        self.assertEqual(scenario_config(Scenarios.LIEB_PAIR, ['length=11']).parameters['length'], 11)

    def test_square_rules(self):
        with self.assertRaisesMessage(ConfigError, 'odd vertex distance'):
            scenario_config(Scenarios.SQUARE_BRAIDED, ['mu=4'])
        with self.assertRaisesMessage(ConfigError, 'nested square pair'):
            scenario_config(Scenarios.SQUARE_NESTED, ['offset=[2, 1]'])
        with self.assertRaisesMessage(ConfigError, 'exactly one coupling point'):
            scenario_config(Scenarios.SQUARE_BRAIDED, ['offset=[0, 0]'])

    def test_sweep_points_are_checked(self):
        data = catalog.scenario_defaults(Scenarios.WAVEGUIDE_BRAIDED)
        data.update(scenario=Scenarios.WAVEGUIDE_BRAIDED, sweep={'parameter': 'x21', 'values': [1, 2]})
        with self.assertRaisesMessage(ConfigError, 'x21 = 2'):
            parse_config(data)
        data['sweep'] = {'parameter': 'length', 'values': [1]}
        with self.assertRaisesMessage(ConfigError, "Cannot sweep 'length'"):
            parse_config(data)

    def test_schema_backend_and_atoms(self):
        with self.assertRaisesMessage(ConfigError, 'schema version'):
            parse_config({'scenario': Scenarios.GRAPHENE3, 'schema': 2})
        with self.assertRaisesMessage(ConfigError, 'analytic backend'):
            scenario_config(Scenarios.GRAPHENE3, ['backend=analytic_chain'])
        with self.assertRaisesMessage(ConfigError, 'places its own atoms'):
            parse_config({
                'scenario': Scenarios.GRAPHENE3,
                'atoms': [{'omega0': 0.0, 'couplings': [{'site': 0, 'g_re': 0.1}]}],
            })
        with self.assertRaises(ConfigError):
            parse_config(['not', 'an', 'object'])

    def test_graphene_chain_atom_count(self):
        with self.assertRaisesMessage(ConfigError, '2 to 10 atoms'):
            scenario_config(Scenarios.GRAPHENE_CHAIN, ['n_atoms=11'])


class HeadlineTests(SimpleTestCase):
    def test_matches(self):
        self.assertTrue(matches(0.0025, Expectation(0.0025, 1e-9)))
        self.assertFalse(matches(0.0026, Expectation(0.0025, 1e-9)))
        self.assertTrue(matches(True, Expectation(True)))
        self.assertTrue(matches([[1, 2]], Expectation([[1, 2]])))
        self.assertFalse(matches([], Expectation([[1, 2]])))

    def test_provenance(self):
        checked = Headline.checked('K12', 0.0025, Expectation(0.0025, 1e-8))
        self.assertEqual(checked.provenance, Provenance.PUBLISHED)
        self.assertTrue(checked.passed)
        computed = Headline.computed('lamb_shift_1', 0.1)
        self.assertEqual(computed.provenance, Provenance.COMPUTED)
        self.assertIsNone(computed.passed)


class ExpectedCouplingTests(SimpleTestCase):
    """Closed-form patterns of the default geometries give the published exchange rates, sign included."""

    # K12 in units of g²/J
    published = {
        Scenarios.GRAPHENE3: 1.0,
        Scenarios.GRAPHENE4: 1.0,
        Scenarios.SQUARE_BRAIDED: 1.0,
        Scenarios.SQUARE_NESTED: 0.0,
        Scenarios.LIEB_PAIR: -1.0,
        Scenarios.LIEB_MISMATCHED: 0.0,
    }

    def assertCoupling(self, name, value):
        parameters, bath, atoms = defaults_geometry(name)
        K = catalog.expected_k_matrix(name, parameters, bath, atoms)
        self.assertIsNotNone(K)
        assert_allclose(K[0, 1].real, value, atol=1e-12)
        assert_allclose(K[0, 1].imag, 0.0, atol=1e-12)
        assert_allclose(K, K.conj().T, atol=1e-12)

    def test_graphene(self):
        self.assertCoupling(Scenarios.GRAPHENE3, self.published[Scenarios.GRAPHENE3] * G ** 2)
        self.assertCoupling(Scenarios.GRAPHENE4, self.published[Scenarios.GRAPHENE4] * G ** 2)

    def test_square(self):
        self.assertCoupling(Scenarios.SQUARE_BRAIDED, self.published[Scenarios.SQUARE_BRAIDED] * G ** 2)
        self.assertCoupling(Scenarios.SQUARE_NESTED, 0.0)

    def test_lieb(self):
        self.assertCoupling(Scenarios.LIEB_PAIR, self.published[Scenarios.LIEB_PAIR] * G ** 2)
        self.assertCoupling(Scenarios.LIEB_MISMATCHED, 0.0)

    def test_waveguide(self):
        parameters, _, _ = defaults_geometry(Scenarios.WAVEGUIDE_BRAIDED)
        # ω₀ = 0 sits at k₀ = π/2, where v = 2J
        k0, v = np.pi / 2, 2.0
        braided = 2 * G ** 2 / v * np.sin(k0 * parameters['x21'])
        self.assertCoupling(Scenarios.WAVEGUIDE_BRAIDED, braided)
        assert_allclose(braided, G ** 2, atol=1e-15)
        self.assertCoupling(Scenarios.WAVEGUIDE_SERIAL, 0.0)
        self.assertCoupling(Scenarios.WAVEGUIDE_NESTED, 0.0)

    def test_braided_closed_form_agrees_with_pattern(self):
        parameters, bath, atoms = defaults_geometry(Scenarios.WAVEGUIDE_BRAIDED)
        expected = catalog.expectations(Scenarios.WAVEGUIDE_BRAIDED, parameters, bath, atoms, (Outputs.RATES,))
        K = catalog.expected_k_matrix(Scenarios.WAVEGUIDE_BRAIDED, parameters, bath, atoms)
        assert_allclose(expected['K12'].value, K[0, 1].real, atol=1e-12)

    def test_coupling_sign_follows_relative_phase(self):
        parameters, bath, atoms = defaults_geometry(Scenarios.GRAPHENE3)
        same_phase = (atoms[0], atoms[1].scaled(-1))
        K = catalog.expected_k_matrix(Scenarios.GRAPHENE3, parameters, bath, same_phase)
        assert_allclose(K[0, 1].real, -G ** 2, atol=1e-12)
        assert_allclose(np.diag(K), np.diag(catalog.expected_k_matrix(
            Scenarios.GRAPHENE3, parameters, bath, atoms)), atol=1e-12)

    def test_graphene_chain_nearest_neighbours(self):
        parameters, bath, atoms = defaults_geometry(Scenarios.GRAPHENE_CHAIN)
        K = catalog.expected_k_matrix(Scenarios.GRAPHENE_CHAIN, parameters, bath, atoms)
        offsets = np.abs(np.subtract.outer(np.arange(len(atoms)), np.arange(len(atoms))))
        assert_allclose(K[offsets == 1].real, G ** 2, atol=1e-12)
        assert_allclose(K[offsets > 1], 0.0, atol=1e-12)

    def test_nested_cancellation_check(self):
        parameters, bath, _ = defaults_geometry(Scenarios.WAVEGUIDE_NESTED)
        value, expectation = catalog.analytic_checks(Scenarios.WAVEGUIDE_NESTED, parameters, bath)[
            'nested_cancellation']
        self.assertTrue(matches(value, expectation))


class RunScenarioTests(SimpleTestCase):
    def test_graphene4_small_lattice(self):
        config = scenario_config(Scenarios.GRAPHENE4, ['lattice.size=[11, 11]', 'centre=[5, 5]'],
                                 [Outputs.VDS])
        report = run_single(config)
        assert_allclose(report.headline('vds_coupling_1').value, np.sqrt(2), atol=1e-10)
        assert_allclose(report.headline('vds_fidelity_1').value, 1.0, atol=1e-8)
        self.assertEqual(report.headline('vds_coupling_1').provenance, Provenance.PUBLISHED)
        self.assertTrue(report.passed)

    def test_waveguide_nested_zero_interaction(self):
        config = scenario_config(Scenarios.WAVEGUIDE_NESTED, ['backend=analytic_chain'],
                                 [Outputs.RATES, Outputs.DFH_REPORT])
        report = run_single(config)
        self.assertEqual(report.headline('zero_interaction_pairs').value, [[1, 2]])
        self.assertTrue(report.headline('is_dfh').value)
        self.assertTrue(report.headline('nested_cancellation').passed)
        self.assertTrue(report.passed, [h.name for h in report.failures()])

    def test_lieb_mismatched_is_decoherence_free(self):
        report = run_single(scenario_config(Scenarios.LIEB_MISMATCHED, outputs=[Outputs.RATES, Outputs.DFH_REPORT]))
        self.assertTrue(report.headline('is_dfh').value)
        self.assertLessEqual(abs(report.headline('K12').value), 1e-6 * G ** 2)
        self.assertTrue(report.passed, [h.name for h in report.failures()])

    def test_custom_scenario_has_no_expectations(self):
        report = run_single(scenario_config(Scenarios.CUSTOM, ['backend=analytic_chain'], [Outputs.RATES]))
        self.assertTrue(all(h.provenance == Provenance.COMPUTED for h in report.headlines))
        self.assertGreater(report.headline('gamma11').value, 0)

    def test_identical_configs_write_identical_files(self):
        config = parse_config({
            'scenario': Scenarios.CUSTOM,
            'lattice': {'kind': 'chain', 'size': [101]},
            'atoms': [{'omega0': 0.0, 'couplings': [{'site': 50, 'g_re': 0.05}, {'site': 52, 'g_re': 0.05}]}],
            'outputs': [Outputs.SELF_ENERGY, Outputs.VDS],
        })
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            run_scenario(config, first)
            run_scenario(config, second)
            first_dir, second_dir = Path(first) / config.run_name, Path(second) / config.run_name
            csv_files = sorted(path.name for path in first_dir.glob('*.csv'))
            self.assertTrue(csv_files)
            for name in csv_files:
                self.assertEqual((first_dir / name).read_bytes(), (second_dir / name).read_bytes(), name)
            report = json.loads((first_dir / 'report.json').read_text())
            self.assertEqual(report['run'], config.run_name)

    def test_sweep_writes_points(self):
        data = scenario_config(Scenarios.WAVEGUIDE_BRAIDED, ['backend=analytic_chain'], [Outputs.RATES]).to_dict()
        data['sweep'] = {'parameter': 'g', 'values': [0.05, 0.1]}
        config = parse_config(data)
        with tempfile.TemporaryDirectory() as root:
            report = run_scenario(config, root)
            directory = Path(root) / config.run_name
            self.assertTrue((directory / 'point_00' / 'report.json').is_file())
            self.assertTrue((directory / 'point_01' / 'report.json').is_file())
            self.assertTrue((directory / 'sweep.csv').is_file())
        self.assertEqual(len(report.points), 2)
        self.assertTrue(report.passed)


class ChainScalingTests(SimpleTestCase):
    def test_amplitudes_follow_size_law(self):
        frame = run_chain_scaling(scenario_config(Scenarios.LIEB_PAIR), lengths=(5, 11), write=False)
        self.assertTrue(frame['vds_found'].all())
        assert_allclose(frame['amplitude'], [0.5, 1 / (2 * np.sqrt(2))], atol=1e-8)
        assert_allclose(frame['amplitude'], frame['expected_amplitude'], atol=1e-8)
        self.assertTrue((frame['nodes'] == frame['expected_nodes']).all())

    def test_off_family_length(self):
        with self.assertRaisesMessage(ConfigError, '5 + 6ν'):
            run_chain_scaling(scenario_config(Scenarios.LIEB_PAIR), lengths=(7,), write=False)

    def test_lengths_are_checked_before_any_solve(self):
        with self.assertNoLogs('apps.scenarios.runner', 'INFO'):
            with self.assertRaisesMessage(ConfigError, 'got 7'):
                run_chain_scaling(scenario_config(Scenarios.LIEB_PAIR), lengths=(5, 7), write=False)

    def test_lieb_only(self):
        with self.assertRaises(ConfigError):
            run_chain_scaling(scenario_config(Scenarios.GRAPHENE3), write=False)


class RegressionSuiteTests(SimpleTestCase):
    def test_inventory(self):
        self.assertGreaterEqual(len(REGRESSION_ROWS), 14)

    def test_fast_rows_pass(self):
        table = emit_regression_suite(['resolvent_identity', 'decay_law_analytic', 'decay_quadratic'])
        self.assertEqual(list(table['row']), ['resolvent_identity', 'decay_law_analytic', 'decay_quadratic'])
        self.assertEqual(set(table['status']), {'pass'}, table.to_string())
        self.assertEqual(list(table.columns),
                         ['row', 'criterion', 'status', 'value', 'expected', 'tolerance', 'seconds', 'detail'])

    def test_misconfiguration_surfaces_as_error_row(self):
        with gla_settings.override(CONVERGENCE_RTOL=1e-12):
            table = emit_regression_suite(['decay_law_finite'])
        self.assertEqual(table.loc[0, 'status'], 'error')
        self.assertIn('convergence_error', table.loc[0, 'detail'])

    def test_unexpected_exception_surfaces_as_error_row(self):
        @regression_row('broken_row', 'raises outside the library errors')
        def broken_row():
            raise ValueError('index out of range')

        self.addCleanup(REGRESSION_ROWS.pop, 'broken_row')
        with self.assertLogs('apps.scenarios.regression', 'ERROR'):
            table = emit_regression_suite(['broken_row'])
        self.assertEqual(table.loc[0, 'status'], 'error')
        self.assertEqual(table.loc[0, 'detail'], '[ValueError] index out of range')

    def test_perturbation_is_scoped(self):
        emit_regression_suite(['resolvent_identity'], perturb=True)
        self.assertEqual(gla_settings.CONVERGENCE_RTOL, 1e-3)

    def test_unknown_row(self):
        with self.assertRaises(KeyError):
            emit_regression_suite(['no_such_row'])


class SettingsOverrideTests(SimpleTestCase):
    def test_nested_overrides_unwind(self):
        e_tol, c_tol = gla_settings.E_TOL, gla_settings.C_TOL
        with gla_settings.override(E_TOL=1e-4):
            with gla_settings.override(E_TOL=1e-5, C_TOL=1e-5):
                self.assertEqual(gla_settings.E_TOL, 1e-5)
            self.assertEqual(gla_settings.E_TOL, 1e-4)
            self.assertEqual(gla_settings.C_TOL, c_tol)
        self.assertEqual(gla_settings.E_TOL, e_tol)

    def test_overlapping_threads_do_not_leak(self):
        e_tol, c_tol = gla_settings.E_TOL, gla_settings.C_TOL
        entered, release = threading.Event(), threading.Event()
        seen = []

        def first():
            with gla_settings.override(E_TOL=1e-3):
                entered.set()
                release.wait(5)
                seen.append(gla_settings.E_TOL)

        def second():
            entered.wait(5)
            with gla_settings.override(C_TOL=1e-3):
                seen.append(gla_settings.E_TOL)

        with ThreadPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(first), pool.submit(second)]
            entered.wait(5)
            release.set()
            for future in futures:
                future.result()
        self.assertEqual(seen, [1e-3, e_tol])
        self.assertEqual(gla_settings.E_TOL, e_tol)
        self.assertEqual(gla_settings.C_TOL, c_tol)


class RunLoggingTests(SimpleTestCase):
    def test_run_records_reach_the_runs_log(self):
        self.assertIn('runs_file', LOGGING['loggers']['apps.scenarios']['handlers'])
        only_runs = LOGGING['filters']['run_context']['callback']
        record = logging.makeLogRecord({'msg': 'graphene3 passed', 'scenario': 'graphene3', 'sweep_point': 2})
        self.assertTrue(only_runs(record))
        self.assertFalse(only_runs(logging.makeLogRecord({'msg': 'bands written'})))
        formatted = ColorFormatter(use_colors=False).format(record)
        self.assertTrue(formatted.endswith('graphene3 passed (scenario=graphene3, sweep_point=2)'))


class CommandTests(SimpleTestCase):
    def test_bands_command(self):
        with tempfile.TemporaryDirectory() as root:
            path = Path(root) / 'bands.csv'
            call_command('bands', 'chain', '--out', str(path), '--k-resolution', '16', stdout=StringIO())
            lines = path.read_text().splitlines()
        self.assertEqual(lines[0].split(',')[0], 'k1')
        self.assertEqual(len(lines), 17)

    def test_config_error_exit_code(self):
        with self.assertRaises(CommandError) as raised:
            call_command('scenario', Scenarios.LIEB_PAIR, '--set', 'length=7', stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, ExitCodes.CONFIG_ERROR)

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as root:
            path = Path(root) / 'broken.json'
            path.write_text('{"scenario": ')
            with self.assertRaises(CommandError) as raised:
                call_command('run', str(path), stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, ExitCodes.CONFIG_ERROR)

    def test_regression_failure_exit_code(self):
        with gla_settings.override(CONVERGENCE_RTOL=1e-12):
            with self.assertRaises(CommandError) as raised:
                call_command('regress', '--rows', 'decay_law_finite', stdout=StringIO(), stderr=StringIO())
        self.assertEqual(raised.exception.returncode, ExitCodes.REGRESSION_FAILURE)
