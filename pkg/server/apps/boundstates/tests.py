import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.bath.builders import apply_vacancy, build_chain, build_dimerized_chain, build_graphene
from apps.bath.models import BathGraph
from apps.bath.spectra import diagonalize, hamiltonian_matrix, spectral_gaps
from apps.boundstates.equations import pole_function
from apps.boundstates.localization import enlarged_retest, localization_check
from apps.boundstates.poles import find_gap_states, find_inband_bs, find_ingap_bs
from apps.boundstates.vds import projected_bath, vds_search
from apps.boundstates.wavefunctions import bs_wavefunction, weak_coupling_bs
from apps.emitters.hamiltonians import chi_frame, site_state, total_hamiltonian_1ex
from apps.emitters.models import GiantAtom
from apps.greens.analytic import bath_green_chain_gap
from utils.constants import Boundary, Classification
from utils.exceptions import NotAGap, StaleRoot

A, B = 0, 1


def graphene_three_point(bath, centre, g, omega0=0.0):
    cx, cy = centre
    labels = ([cx, cy, B], [cx, cy - 1, B], [cx + 1, cy - 1, B])
    return GiantAtom(omega0, [(bath.site_index(label), g) for label in labels])


def graphene_four_point(bath, centre, g, omega0=1.0):
    """Outer neighbours of the bond A(c)-B(c)."""
    cx, cy = centre
    labels = ([cx, cy - 1, B], [cx + 1, cy - 1, B], [cx, cy + 1, A], [cx - 1, cy + 1, A])
    return GiantAtom(omega0, [(bath.site_index(label), g) for label in labels])


def dense_bound_eigenpair(bath, atom):
    """Largest eigenvalue of the full Hamiltonian and its atom weight."""
    eigenvalues, vectors = np.linalg.eigh(total_hamiltonian_1ex(bath, atom))
    return eigenvalues[-1], abs(vectors[0, -1]) ** 2


class PoleFunctionTests(SimpleTestCase):
    def test_gap_value(self):
        bath = build_chain(201)
        atom = GiantAtom(2.5, [(100, 0.2)])
        F = pole_function(atom, bath, 3.0)
        self.assertIsInstance(F, float)
        self.assertAlmostEqual(F, 3.0 - 2.5 - 0.04 * bath_green_chain_gap(0, 0, 3.0), places=12)

    def test_vanishes_at_vds_condition(self):
        bath = build_chain(201)
        atom = GiantAtom(0.0, [(100, 0.1), (102, 0.1)])
        self.assertLess(abs(pole_function(atom, bath, 0.0)), 1e-12)

    def test_gap_root_matches_dense_eigenvalue(self):
        bath = build_chain(201)
        atom = GiantAtom(2.5, [(100, 0.2)])
        states = find_gap_states(atom, bath)
        self.assertEqual(len(states), 1)
        expected, _ = dense_bound_eigenpair(bath, atom)
        self.assertAlmostEqual(states[0].omega_bs, expected, delta=1e-10)


class InGapTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.bath = build_chain(201)

    def test_normal_atom_above_band(self):
        atom = GiantAtom(2.5, [(100, 0.5)])
        bound_state = find_ingap_bs(atom, self.bath, (2.2, np.inf))
        expected, atom_weight = dense_bound_eigenpair(self.bath, atom)
        self.assertEqual(bound_state.classification, Classification.IN_GAP)
        self.assertGreater(bound_state.omega_bs, 2.0)
        self.assertAlmostEqual(bound_state.omega_bs, expected, delta=1e-10)
        self.assertAlmostEqual(bound_state.atom_fraction, atom_weight, delta=1e-8)
        self.assertLess(bound_state.residual, 1e-8)
        norm = np.vdot(bound_state.photon_amplitudes, bound_state.photon_amplitudes).real
        self.assertAlmostEqual(bound_state.normalization ** 2 * (1 + norm), 1.0, places=10)
        self.assertTrue(localization_check(bound_state.photon_amplitudes, self.bath).localized)

    def test_weak_coupling_limit(self):
        atom = GiantAtom(2.5, [(100, 1e-3)])
        bound_state = find_ingap_bs(atom, self.bath, (2.2, np.inf))
        self.assertAlmostEqual(bound_state.omega_bs, 2.5, delta=1e-5)
        self.assertGreater(bound_state.atom_fraction, 1 - 1e-5)

    def test_constant_sign(self):
        atom = GiantAtom(2.5, [(100, 0.2)])
        self.assertIsNone(find_ingap_bs(atom, self.bath, (2.2, 2.4)))
        self.assertIsNone(find_ingap_bs(atom, self.bath, (-np.inf, -2.2)))

    def test_interval_touching_band(self):
        atom = GiantAtom(2.5, [(100, 0.2)])
        with self.assertRaises(NotAGap):
            find_ingap_bs(atom, self.bath, (1.0, 3.0))

    def test_at_most_one_root_per_gap(self):
        bath = build_dimerized_chain(60, J1=1.0, J2=0.5)
        gaps = spectral_gaps(bath)
        self.assertEqual(len(gaps), 3)
        rng = np.random.default_rng(11)
        for omega0, g in zip(rng.uniform(-2.0, 2.0, 20), rng.uniform(0.05, 0.6, 20)):
            atom = GiantAtom(omega0, [(60, g)])
            eigenvalues = np.linalg.eigvalsh(total_hamiltonian_1ex(bath, atom))
            for gap in gaps:
                bound_state = find_ingap_bs(atom, bath, gap)
                if bound_state is not None:
                    self.assertLess(np.abs(eigenvalues - bound_state.omega_bs).min(), 1e-9)
                lower, upper = np.clip(gap, -4.0, 4.0)
                values = [pole_function(atom, bath, omega) for omega in np.linspace(lower, upper, 25)]
                self.assertTrue(np.all(np.diff(values) > 0))


class InBandTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.bath = build_chain(2001)

    def test_two_point_atom_at_vds_condition(self):
        atom = GiantAtom(0.0, [(1000, 0.01), (1002, 0.01)])
        found = [state for state in find_inband_bs(atom, self.bath, (-1.9, 1.9), grid=39) if state.is_bound]
        self.assertEqual(len(found), 1)
        self.assertEqual(found[0].classification, Classification.IN_BAND)
        self.assertLessEqual(abs(found[0].omega_bs), 1e-3)
        weak = weak_coupling_bs(atom, self.bath)
        self.assertIsNotNone(weak)
        self.assertLessEqual(abs(found[0].omega_bs - weak.omega_bs), 1e-3)

    def test_normal_atom(self):
        atom = GiantAtom(0.0, [(1000, 0.01)])
        self.assertEqual(find_inband_bs(atom, self.bath, (-1.9, 1.9), grid=39), [])

    def test_unequal_couplings(self):
        atom = GiantAtom(0.0, [(1000, 0.05), (1002, 0.03)])
        self.assertEqual(find_inband_bs(atom, self.bath, (-1.9, 1.9), grid=39), [])


class WavefunctionTests(SimpleTestCase):
    def test_graphene_three_point_amplitudes(self):
        bath = build_graphene(11, 11)
        for g in (0.05, 0.3):
            atom = graphene_three_point(bath, (5, 5), g)
            bound_state = bs_wavefunction(atom, bath, 0.0)
            expected = np.zeros(bath.n_sites)
            expected[bath.site_index([5, 5, A])] = -g
            assert_allclose(bound_state.photon_amplitudes, expected, atol=1e-8)
            self.assertLess(bound_state.residual, 1e-8)

    def test_stale_root(self):
        atom = GiantAtom(2.5, [(100, 0.2)])
        with self.assertRaises(StaleRoot):
            bs_wavefunction(atom, build_chain(201), 2.3)

    def test_state_tends_to_bare_atom(self):
        bath = build_chain(201)
        atom = GiantAtom(2.5, [(100, 1e-4)])
        bound_state = find_ingap_bs(atom, bath, (2.2, np.inf))
        self.assertGreater(bound_state.atom_fraction, 1 - 1e-6)
        self.assertAlmostEqual(abs(bound_state.state_vector()[0]), 1.0, places=6)


class WeakCouplingTests(SimpleTestCase):
    def test_gap_state_always_exists(self):
        bath = build_chain(201)
        atom = GiantAtom(2.5, [(100, 0.05)])
        bound_state = weak_coupling_bs(atom, bath)
        self.assertEqual(bound_state.classification, Classification.WEAK_COUPLING)
        self.assertEqual(bound_state.omega_bs, 2.5)
        self.assertAlmostEqual(bound_state.photon_amplitudes[100], 0.05 * bath_green_chain_gap(0, 0, 2.5),
                               places=12)

    def test_normal_atom_in_band(self):
        atom = GiantAtom(0.3, [(1000, 0.05)])
        self.assertIsNone(weak_coupling_bs(atom, build_chain(2001)))

    def test_threshold_warning(self):
        bath = build_chain(201)
        atom = GiantAtom(2.5, [(100, 0.5)])
        with self.assertLogs('apps.boundstates.wavefunctions', level='WARNING'):
            bound_state = weak_coupling_bs(atom, bath)
        self.assertIn('perturbative_validity', bound_state.flags)

    def test_parallel_to_vds(self):
        bath = build_chain(201)
        atom = GiantAtom(0.0, [(100, 0.01), (102, 0.01)])
        weak = weak_coupling_bs(atom, bath)
        vds, = vds_search(atom, bath)
        assert_allclose(weak.photon_amplitudes, vds.eta * vds.psi_vds, atol=1e-8)


class ProjectedBathTests(SimpleTestCase):
    def test_normal_atom_is_a_vacancy(self):
        bath = build_chain(8)
        projected = projected_bath(GiantAtom(0.0, [(3, 0.1)]), bath).toarray()
        assert_allclose(projected, hamiltonian_matrix(apply_vacancy(bath, 3)), atol=1e-14)

    def test_spectra_interlace(self):
        bath = build_graphene(5, 5)
        atom = GiantAtom(0.0, [(4, 0.1), (11, 0.2 + 0.1j), (17, -0.05)])
        outer = diagonalize(bath).eigenvalues
        inner = np.linalg.eigvalsh(projected_bath(atom, bath).toarray())
        self.assertTrue(np.all(outer[:-1] <= inner + 1e-10))
        self.assertTrue(np.all(inner <= outer[1:] + 1e-10))

    def test_graphene_three_point_pins_centre(self):
        bath = build_graphene(7, 7)
        atom = graphene_three_point(bath, (3, 3), 0.1)
        frame = chi_frame(atom, bath)
        centre = bath.site_index([3, 3, A])
        vector = np.zeros(bath.n_sites - 1)
        vector[atom.n_points - 1 + np.searchsorted(frame.other_sites, centre)] = 1.0
        assert_allclose(projected_bath(atom, bath, frame) @ vector, 0.0, atol=1e-14)


class VDSSearchTests(SimpleTestCase):
    def test_chain_two_point_interior_site(self):
        bath = build_chain(201)
        atom = GiantAtom(0.0, [(100, 0.1), (102, 0.1)])
        vds, = vds_search(atom, bath)
        self.assertAlmostEqual(abs(vds.psi_vds[101]), 1.0, places=10)
        self.assertLess(np.delete(np.abs(vds.psi_vds), 101).max(), 1e-10)
        self.assertAlmostEqual(vds.coupling_overlap, np.sqrt(2), places=10)
        self.assertAlmostEqual(vds.eta, -0.1, places=10)
        self.assertAlmostEqual(vds.theta, np.arctan(0.1), places=10)
        self.assertAlmostEqual(abs(vds.phi), np.pi, places=10)
        self.assertLess(abs(site_state(atom).overlap(vds.psi_vds)), 1e-10)
        self.assertLess(max(vds.pinning_residuals), 1e-8)
        self.assertLess(vds.localization.size_change, 1e-10)
        self.assertIsNone(vds_search(atom, bath, resize=False)[0].localization.size_change)

    def test_chain_sinusoid_between_coupling_points(self):
        bath = build_chain(201)
        atom = GiantAtom(-1.0, [(100, 0.1), (103, 0.1)])
        vds, = vds_search(atom, bath)
        assert_allclose(np.abs(vds.psi_vds[[101, 102]]), [1 / np.sqrt(2)] * 2, atol=1e-10)
        outside = np.delete(np.abs(vds.psi_vds), [101, 102])
        self.assertLess(outside.max(), 1e-10)

    def test_graphene_four_point(self):
        bath = build_graphene(11, 11)
        atom = graphene_four_point(bath, (5, 5), 0.1)
        vds, = vds_search(atom, bath)
        expected = np.zeros(bath.n_sites)
        expected[[bath.site_index([5, 5, A]), bath.site_index([5, 5, B])]] = 1 / np.sqrt(2)
        self.assertAlmostEqual(abs(np.vdot(expected, vds.psi_vds)), 1.0, places=8)
        self.assertAlmostEqual(vds.coupling_overlap, np.sqrt(2), places=8)
        self.assertAlmostEqual(vds.eta, -np.sqrt(2) * 0.1, places=8)
        self.assertLess(max(vds.pinning_residuals), 1e-8)

    def test_degenerate_eigenspace(self):
        bath = build_graphene(6, 6, boundary=Boundary.PERIODIC)
        atom = graphene_three_point(bath, (3, 3), 0.1)
        vds, = vds_search(atom, bath)
        self.assertTrue(vds.degenerate)
        assert_allclose(vds.family.conj().T @ vds.family, np.eye(vds.degeneracy), atol=1e-10)
        self.assertLess(vds.localization.boundary_weight, 1e-6)
        self.assertLess(abs(site_state(atom).overlap(vds.psi_vds)), 1e-10)
        self.assertLess(max(vds.pinning_residuals), 1e-8)

    def test_pinned_across_coupling_strengths(self):
        bath = build_graphene(6, 6, boundary=Boundary.PERIODIC)
        strengths = (0.05, 0.5, 1.0)
        found = [vds_search(graphene_three_point(bath, (3, 3), g), bath, pinning=strengths) for g in strengths]
        for g, (vds,) in zip(strengths, found):
            self.assertEqual(len(vds.pinning_residuals), 3)
            self.assertLessEqual(max(vds.pinning_residuals), 1e-8)
            self.assertAlmostEqual(abs(vds.eta), g * abs(found[-1][0].eta), places=10)
            self.assertAlmostEqual(abs(np.vdot(vds.psi_vds, found[-1][0].psi_vds)), 1.0, places=10)

    def test_normal_atom_has_none(self):
        self.assertEqual(vds_search(GiantAtom(0.3, [(100, 0.1)]), build_chain(201)), [])


class LocalizationTests(SimpleTestCase):
    def test_plane_wave_fails(self):
        n = np.arange(101)
        state = np.sin(np.pi * 20 * (n + 1) / 102)
        self.assertFalse(localization_check(state, build_chain(101)).localized)

    def test_single_site(self):
        state = np.zeros(101)
        state[50] = 1.0
        result = localization_check(state, build_chain(101))
        self.assertTrue(result.localized)
        self.assertEqual(result.boundary_weight, 0.0)
        self.assertAlmostEqual(result.profile.sum(), 1.0)
        self.assertEqual(result.profile_frame()['weight'].idxmax(), 50)

    def test_too_small_lattice(self):
        bath = BathGraph(site_labels=(0, 1), frequencies=(0.0, 0.0), hoppings=((0, 1, -1.0),))
        result = localization_check([1.0, 0.0], bath)
        self.assertTrue(result.inconclusive)
        self.assertFalse(result.localized)

    def test_size_stable_gap_state(self):
        bath = build_chain(101)
        atom = GiantAtom(2.5, [(50, 0.5)])
        state = find_ingap_bs(atom, bath, (2.2, np.inf)).photon_amplitudes

        def solve_larger(larger, site_map):
            return find_ingap_bs(atom.relocated(site_map), larger, (2.2, np.inf)).photon_amplitudes

        result = localization_check(state, bath, resized=enlarged_retest(bath, solve_larger))
        self.assertTrue(result.localized)
        self.assertLess(result.size_change, 1e-5)

    def test_standing_wave_with_nodes_on_the_edge_fails_on_resizing(self):
        def standing_wave(length):
            return np.sin(np.pi * 7 * np.arange(length) / (length - 1))

        bath = build_chain(101)
        state = standing_wave(101)
        self.assertTrue(localization_check(state, bath).localized)

        resized = enlarged_retest(bath, lambda larger, site_map: standing_wave(larger.n_sites))
        result = localization_check(state, bath, resized=resized)
        self.assertFalse(result.localized)
        self.assertGreater(result.size_change, 0.2)

    def test_state_missing_on_larger_lattice(self):
        state = np.zeros(101)
        state[50] = 1.0
        bath = build_chain(101)
        result = localization_check(state, bath, resized=enlarged_retest(bath, lambda larger, site_map: None))
        self.assertFalse(result.localized)
        self.assertEqual(result.size_change, 1.0)

    def test_vacancy_lattice_skips_resizing(self):
        bath = apply_vacancy(build_chain(101), 10)
        self.assertIsNone(enlarged_retest(bath, lambda larger, site_map: None))
