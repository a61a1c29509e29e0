import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.bath.builders import build_chain, build_graphene
from apps.boundstates.vds import vds_search
from apps.boundstates.wavefunctions import weak_coupling_bs
from apps.dynamics.closed_form import braided_rates_closed_form, decay_rate_closed_form, nested_cancellation
from apps.dynamics.dfh import dfh_check, heff_from_bs
from apps.dynamics.evolution import eigenspace_weights, exact_1ex_evolve, stationary_population
from apps.dynamics.lindblad import lindblad_evolve, product_state
from apps.dynamics.rates import rates_green, rates_spectral, split_rates
from apps.emitters.models import EmitterEnsemble, GiantAtom
from apps.greens.analytic import chain_wavevector
from apps.greens.limits import Methods
from apps.greens.models import ResolventQuery
from utils.constants import Backend
from utils.exceptions import InvalidArgument, InvalidState, NotDecoherenceFree, UnsupportedConfiguration

LONG_CHAIN = 2001
CENTRE = 1000
G = 0.05
A, B = 0, 1
ANALYTIC = ResolventQuery(0.0, backend=Backend.ANALYTIC_CHAIN)


def two_point(first, d, g_bar=np.sqrt(2) * G, theta=np.pi / 4, omega0=0.0, label=''):
    return GiantAtom(omega0, [(first, g_bar * np.cos(theta)), (first + d, g_bar * np.sin(theta))], label)


def pair(first, second):
    return EmitterEnsemble((first, second))


def graphene_pair(bath, centre, g):
    """Three B sites around A(c) and three A sites around B(c): each one's bound site is the other's point."""
    cx, cy = centre
    first = [[cx, cy, B], [cx, cy - 1, B], [cx + 1, cy - 1, B]]
    second = [[cx, cy, A], [cx, cy + 1, A], [cx - 1, cy + 1, A]]
    return pair(
        GiantAtom(0.0, [(bath.site_index(label), g) for label in first]),
        GiantAtom(0.0, [(bath.site_index(label), g) for label in second]),
    )


class RatesGreenTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.chain = build_chain(LONG_CHAIN)

    def test_invariants(self):
        ensemble = pair(GiantAtom(0.0, [(CENTRE, G)]), GiantAtom(0.0, [(CENTRE + 3, G)]))
        rates = rates_green(ensemble, self.chain)
        self.assertLess(rates.hermiticity_residual(), 1e-10)
        self.assertLess(rates.reconstruction_residual(), 1e-12)
        self.assertGreaterEqual(rates.min_gamma_eigenvalue, -1e-8)
        self.assertEqual(rates.flags, ())

    def test_braided_pair_couples_without_loss(self):
        ensemble = pair(two_point(CENTRE, 2), two_point(CENTRE + 1, 2))
        rates = rates_green(ensemble, self.chain)
        self.assertEqual(rates.method, Methods.EXACT)
        self.assertAlmostEqual(rates.K[0, 1].real, G ** 2, delta=0.02 * G ** 2)
        self.assertLess(np.abs(rates.gamma).max(), 1e-10)

        analytic = rates_green(ensemble, self.chain, ANALYTIC)
        self.assertAlmostEqual(analytic.K[0, 1].real, G ** 2, delta=1e-10)
        self.assertLess(np.abs(analytic.gamma).max(), 1e-10)

    def test_graphene_pair(self):
        bath = build_graphene(11, 11)
        g = 0.05
        rates = rates_green(graphene_pair(bath, (5, 5), g), bath)
        self.assertAlmostEqual(rates.K[0, 1].real, -g ** 2, delta=1e-6 * g ** 2)
        self.assertAlmostEqual(rates.K[1, 0].real, -g ** 2, delta=1e-6 * g ** 2)
        self.assertLess(np.abs(rates.gamma).max(), 1e-10)

    def test_decay_law_against_closed_form(self):
        g_bar = 0.1
        k0 = np.pi / 2
        for theta in (0, np.pi / 8, np.pi / 4, 3 * np.pi / 8, np.pi / 2):
            for d in (1, 2, 3):
                atom = two_point(CENTRE, d, g_bar, theta)
                expected = decay_rate_closed_form(theta, k0, d, g_bar)
                analytic = rates_green(atom, self.chain, ANALYTIC)
                self.assertAlmostEqual(analytic.gamma[0, 0].real, expected, delta=1e-10)
                finite = rates_green(atom, self.chain)
                self.assertLess(abs(finite.gamma[0, 0].real - expected), 0.02 * g_bar ** 2)

    def test_braided_rates_against_closed_form(self):
        g_bar = 0.1
        for omega0 in (0.0, -1.0, 0.7):
            k0 = chain_wavevector(omega0)
            query = ResolventQuery(omega0, backend=Backend.ANALYTIC_CHAIN)
            for theta in (np.pi / 8, np.pi / 4, np.pi / 3):
                for d, x21 in ((2, 1), (3, 1), (3, 2), (5, 2)):
                    ensemble = pair(two_point(CENTRE, d, g_bar, theta, omega0),
                                    two_point(CENTRE + x21, d, g_bar, theta, omega0))
                    rates = rates_green(ensemble, self.chain, query)
                    K12, gamma12, gamma11 = braided_rates_closed_form(theta, k0, d, x21, g_bar)
                    self.assertAlmostEqual(rates.K[0, 1].real, K12, delta=1e-10)
                    self.assertAlmostEqual(rates.gamma[0, 1].real, gamma12, delta=1e-10)
                    self.assertAlmostEqual(rates.gamma[0, 0].real, gamma11, delta=1e-10)

    def test_mixed_frequencies_rejected(self):
        ensemble = pair(GiantAtom(0.0, [(CENTRE, G)]), GiantAtom(0.1, [(CENTRE + 3, G)]))
        with self.assertRaises(UnsupportedConfiguration):
            rates_green(ensemble, self.chain)

    def test_non_psd_gamma_is_flagged(self):
        with self.assertLogs('apps.dynamics.rates', 'WARNING'):
            rates = split_rates(np.diag([0.5, -0.1]).astype(complex), 0.0, psd_tol=1e-8)
        self.assertIn('non_psd_gamma', rates.flags)
        assert_allclose(np.linalg.eigvalsh(rates.gamma), [-0.2, 1.0])


class RatesSpectralTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.chain = build_chain(LONG_CHAIN)

    def test_agrees_with_green_route_on_braided_pair(self):
        ensemble = pair(two_point(CENTRE, 2), two_point(CENTRE + 1, 2))
        spectral = rates_spectral(ensemble, self.chain)
        green = rates_green(ensemble, self.chain)
        self.assertAlmostEqual(spectral.K[0, 1].real, green.K[0, 1].real, delta=0.02 * G ** 2)
        self.assertLess(np.abs(spectral.gamma).max(), 0.02 * 2 * G ** 2)
        self.assertLess(spectral.reconstruction_residual(), 1e-12)

    def test_normal_pair_oscillation(self):
        for separation in (1, 2, 3):
            ensemble = pair(GiantAtom(0.0, [(CENTRE, G)]), GiantAtom(0.0, [(CENTRE + separation, G)]))
            spectral = rates_spectral(ensemble, self.chain)
            expected = G ** 2 * np.cos(np.pi / 2 * separation)
            self.assertAlmostEqual(spectral.gamma[0, 1].real, expected, delta=0.02 * G ** 2)
            self.assertAlmostEqual(spectral.gamma[0, 0].real, G ** 2, delta=0.02 * G ** 2)
            self.assertGreaterEqual(spectral.gamma[1, 1].real, 0.0)


class ClosedFormTests(SimpleTestCase):
    def test_braided_decoherence_free_point(self):
        g_bar = np.sqrt(2) * G
        for x21 in (1, 3, 5):
            K12, gamma12, _ = braided_rates_closed_form(np.pi / 4, np.pi / 2, 6, x21, g_bar)
            self.assertAlmostEqual(gamma12, 0.0, places=15)
            self.assertAlmostEqual(K12, 2 * G ** 2 / 2 * np.sin(np.pi / 2 * x21), places=15)

    def test_node_gives_no_coupling(self):
        K12, gamma12, gamma11 = braided_rates_closed_form(np.pi / 4, np.pi / 2, 6, 2, 0.1)
        self.assertAlmostEqual(K12, 0.0, places=15)
        self.assertAlmostEqual(gamma11, 0.0, places=15)

    def test_single_live_point(self):
        self.assertAlmostEqual(decay_rate_closed_form(0.0, np.pi / 3, 4, 0.1), 2 * 0.01 / np.sqrt(3), places=15)

    def test_quadratic_robustness(self):
        g_bar = 0.1
        reference = decay_rate_closed_form(np.pi / 4, np.pi / 2, 2, g_bar)
        ratios = []
        for delta in (0.01, 0.02, 0.04):
            shifted = decay_rate_closed_form(np.pi / 4 + delta, np.pi / 2, 2, g_bar)
            _, gamma12, _ = braided_rates_closed_form(np.pi / 4 + delta, np.pi / 2, 2, 1, g_bar)
            self.assertLessEqual(abs(gamma12), g_bar ** 2 * 2 * delta ** 2)
            ratios.append(abs(shifted - reference) / delta ** 2)
        self.assertLessEqual(max(ratios), 2 * g_bar ** 2 / 2 * 2 * 1.01)
        self.assertAlmostEqual(ratios[0] / ratios[-1], 1.0, delta=1e-2)

    def test_quadratic_robustness_of_green_route(self):
        chain = build_chain(201)
        g_bar = 0.1

        def gamma(theta):
            return rates_green(two_point(100, 2, g_bar, theta), chain, ANALYTIC).gamma[0, 0].real

        reference = gamma(np.pi / 4)
        for delta in (0.01, 0.02, 0.04):
            self.assertLessEqual(abs(gamma(np.pi / 4 + delta) - reference), 2 * g_bar ** 2 * delta ** 2 * 1.01)

    def test_nested_cancellation(self):
        self.assertAlmostEqual(nested_cancellation(np.pi / 2, 1, 3), 0.0, places=15)
        self.assertAlmostEqual(nested_cancellation(np.pi / 2, 1, 2), 1.0, places=15)

    def test_domain_errors(self):
        for args in ((np.pi / 4, np.pi / 2, 2, 2, 0.1), (np.pi / 4, np.pi / 2, 2, 0, 0.1),
                     (-0.1, np.pi / 2, 2, 1, 0.1), (np.pi / 4, 0.0, 2, 1, 0.1), (np.pi / 4, np.pi / 2, 2.5, 1, 0.1)):
            with self.assertRaises(InvalidArgument):
                braided_rates_closed_form(*args)
        with self.assertRaises(InvalidArgument):
            nested_cancellation(np.pi / 2, 3, 1)


class DFHTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.chain = build_chain(LONG_CHAIN)

    def check(self, ensemble):
        rates = rates_green(ensemble, self.chain)
        return rates, dfh_check(rates, ensemble, self.chain)

    def test_braided(self):
        rates, report = self.check(pair(two_point(CENTRE, 2), two_point(CENTRE + 1, 2)))
        self.assertTrue(report.is_dfh)
        self.assertTrue(report.consistent)
        self.assertEqual(report.per_atom_bs_exists, [True, True])
        self.assertAlmostEqual(report.K_effective[0, 1].real, G ** 2, delta=1e-6 * G ** 2)
        self.assertAlmostEqual(report.K_effective[0, 1].real, rates.K[0, 1].real, delta=1e-6 * G ** 2)
        self.assertEqual(report.zero_interaction_pairs, [])

    def test_serial(self):
        _, report = self.check(pair(two_point(CENTRE, 2), two_point(CENTRE + 3, 2)))
        self.assertTrue(report.is_dfh)
        self.assertLessEqual(abs(report.K_effective[0, 1]), 1e-6 * G ** 2)
        self.assertEqual(report.zero_interaction_pairs, [(0, 1)])

    def test_nested(self):
        ensemble = pair(two_point(CENTRE, 6), two_point(CENTRE + 1, 2))
        rates, report = self.check(ensemble)
        self.assertTrue(report.is_dfh)
        self.assertLessEqual(abs(rates.K[0, 1]), 1e-6 * G ** 2)
        self.assertLessEqual(abs(report.K_effective[0, 1]), 1e-6 * G ** 2)
        self.assertAlmostEqual(nested_cancellation(np.pi / 2, 1, 3), 0.0, places=15)
        self.assertEqual(report.zero_interaction_pairs, [(0, 1)])
        self.assertEqual(report.to_dict()['zero_interaction_pairs'], [[1, 2]])

    def test_normal_pair_is_not_decoherence_free(self):
        _, report = self.check(pair(GiantAtom(0.0, [(CENTRE, G)]), GiantAtom(0.0, [(CENTRE + 1, G)])))
        self.assertFalse(report.is_dfh)
        self.assertTrue(report.consistent)
        self.assertEqual(report.per_atom_bs_exists, [False, False])
        self.assertIsNone(report.K_effective)

    def test_criteria_agree_over_chain_configurations(self):
        chain = build_chain(401)
        decoherence_free = 0
        for omega0 in (0.0, -1.0, 1.0):
            query = ResolventQuery(omega0, backend=Backend.ANALYTIC_CHAIN)
            for theta in (np.pi / 8, np.pi / 4, np.pi / 3):
                for d in (1, 2, 3, 6):
                    x21 = 1 if d > 1 else 2
                    ensemble = pair(two_point(200, d, 0.05, theta, omega0),
                                    two_point(200 + x21, d, 0.05, theta, omega0))
                    rates = rates_green(ensemble, chain, query)
                    report = dfh_check(rates, ensemble, chain, query)
                    self.assertTrue(report.consistent, (omega0, theta, d))
                    decoherence_free += report.is_dfh
        self.assertGreater(decoherence_free, 0)

    def test_graphene_pair_from_bound_states(self):
        bath = build_graphene(11, 11)
        g = 0.05
        ensemble = graphene_pair(bath, (5, 5), g)
        rates = rates_green(ensemble, bath)
        bound_states = [weak_coupling_bs(atom, bath) for atom in ensemble]
        K = heff_from_bs(ensemble, bound_states, rates)
        self.assertAlmostEqual(K[0, 1].real, -g ** 2, delta=1e-6 * g ** 2)
        assert_allclose(K, rates.K, atol=1e-6 * g ** 2)
        overlap_12 = np.vdot(bound_states[1].photon_amplitudes[ensemble[0].sites], ensemble[0].alpha)
        overlap_21 = np.vdot(bound_states[0].photon_amplitudes[ensemble[1].sites], ensemble[1].alpha)
        self.assertAlmostEqual(overlap_12, np.conj(overlap_21), delta=1e-8)

    def test_missing_bound_state(self):
        ensemble = pair(two_point(CENTRE, 2), GiantAtom(0.0, [(CENTRE + 5, G)]))
        bound_states = [weak_coupling_bs(atom, self.chain) for atom in ensemble]
        self.assertIsNone(bound_states[1])
        with self.assertRaises(NotDecoherenceFree):
            heff_from_bs(ensemble, bound_states)


class LindbladTests(SimpleTestCase):
    def test_single_atom_decay(self):
        chain = build_chain(LONG_CHAIN)
        rates = rates_green(GiantAtom(0.0, [(CENTRE, G)]), chain)
        gamma = 2 * G ** 2 / 2
        times = np.linspace(0, 5 / gamma, 101)
        trajectory = lindblad_evolve(product_state([0], 1), rates, t_grid=times)
        assert_allclose(trajectory.populations[:, 0], np.exp(-gamma * times), rtol=0.02)
        self.assertLessEqual(np.abs(trajectory.traces - 1).max(), 1e-8 * times[-1])
        self.assertGreaterEqual(trajectory.min_eigenvalues.min(), -1e-8)
        self.assertEqual(trajectory.frame, {'frame': 'rotating', 'omega0': 0.0})

    def test_decoherence_free_exchange(self):
        kappa = G ** 2
        rates = split_rates(1j * np.array([[0, kappa], [kappa, 0]]), 0.0)
        times = np.linspace(0, 4 * np.pi / kappa, 201)
        trajectory = lindblad_evolve(product_state([0], 2), rates, t_grid=times)
        assert_allclose(trajectory.populations[:, 0], np.cos(kappa * times) ** 2, atol=1e-6)
        assert_allclose(trajectory.populations[:, 1], np.sin(kappa * times) ** 2, atol=1e-6)
        assert_allclose(trajectory.traces, 1.0, atol=1e-8)

    def test_no_rates_keep_state(self):
        rates = split_rates(np.zeros((2, 2)), 0.0)
        rho0 = 0.5 * (product_state([0], 2) + product_state([1], 2))
        trajectory = lindblad_evolve(rho0, rates, t_grid=np.linspace(0, 10, 5))
        for state in trajectory.states:
            assert_allclose(state, rho0, atol=1e-15)

    def test_frame_columns(self):
        rates = split_rates(np.diag([0.1, 0.1]).astype(complex), 0.0)
        frame = lindblad_evolve(product_state([0, 1], 2), rates, t_grid=[0.0, 1.0]).to_frame()
        self.assertEqual(list(frame.columns), ['t', 'population_1', 'population_2', 'trace', 'min_eig'])
        assert_allclose(frame['population_1'], [1.0, np.exp(-0.2)], rtol=1e-6)

    def test_invalid_initial_state(self):
        rates = split_rates(np.zeros((1, 1)), 0.0)
        with self.assertRaises(InvalidState):
            lindblad_evolve(np.diag([1.5, -0.5]), rates, t_grid=[0.0, 1.0])
        with self.assertRaises(InvalidState):
            lindblad_evolve(np.eye(4) / 4, rates, t_grid=[0.0, 1.0])

    def test_agrees_with_exact_evolution(self):
        chain = build_chain(LONG_CHAIN)
        g = 0.1
        atom = GiantAtom(0.0, [(CENTRE, g)])
        gamma = 2 * g ** 2 / 2
        times = np.linspace(0, 3 / gamma, 31)
        exact = exact_1ex_evolve(chain, atom, times)
        self.assertEqual(exact.flags, ())
        lindblad = lindblad_evolve(product_state([0], 1), rates_green(atom, chain), t_grid=times)
        assert_allclose(lindblad.populations[:, 0], exact.excited_population(0), atol=0.03)


class ExactEvolutionTests(SimpleTestCase):
    def test_vacancy_like_state_protects_atom(self):
        bath = build_graphene(21, 21)
        cx, cy = 10, 10
        labels = ([cx, cy, B], [cx, cy - 1, B], [cx + 1, cy - 1, B])
        atom = GiantAtom(0.0, [(bath.site_index(label), 0.1) for label in labels])
        trajectory = exact_1ex_evolve(bath, atom, np.linspace(0, 50, 101))
        self.assertGreaterEqual(trajectory.excited_population(0).min(), 0.95)
        assert_allclose(np.sum(np.abs(trajectory.amplitudes) ** 2, axis=1), 1.0, atol=1e-10)

    def test_fractional_decay_plateau(self):
        bath = build_graphene(21, 21)
        cx, cy = 10, 10
        labels = ([cx, cy, B], [cx, cy - 1, B], [cx + 1, cy - 1, B])
        atom = GiantAtom(0.0, [(bath.site_index(label), 1.0) for label in labels])
        vds, = vds_search(atom, bath)
        plateau = np.cos(vds.theta) ** 4
        self.assertAlmostEqual(plateau, 0.25, delta=1e-8)

        energies, weights = eigenspace_weights(bath, atom)
        at_omega0 = np.abs(weights[np.argmin(np.abs(energies))]) ** 2
        self.assertAlmostEqual(at_omega0, plateau, delta=0.03 * plateau)
        self.assertGreaterEqual(stationary_population(bath, atom), plateau - 1e-6)

    def test_reflection_horizon(self):
        bath = build_chain(201)
        atom = GiantAtom(0.0, [(100, 0.1)])
        with self.assertLogs('apps.dynamics.evolution', 'WARNING'):
            trajectory = exact_1ex_evolve(bath, atom, np.linspace(0, 100, 11))
        self.assertEqual(trajectory.flags, ('reflection',))
        self.assertAlmostEqual(trajectory.horizon, 50.0)

    def test_invalid_initial_amplitudes(self):
        bath = build_chain(21)
        atom = GiantAtom(0.0, [(10, 0.1)])
        with self.assertRaises(InvalidState):
            exact_1ex_evolve(bath, atom, [0.0, 1.0], initial=np.zeros(22))
        with self.assertRaises(InvalidState):
            exact_1ex_evolve(bath, atom, [0.0, 1.0], initial=np.ones(5))
