import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose
from rest_framework.exceptions import ValidationError

from apps.bath.builders import build_chain, build_graphene, build_lieb_nnn
from apps.bath.spectra import diagonalize, hamiltonian_matrix
from apps.emitters.hamiltonians import chi_frame, effective_strength, site_state, total_hamiltonian_1ex
from apps.emitters.models import EmitterEnsemble, GiantAtom, SiteState
from apps.emitters.serializers import AtomSerializer, atom_to_dict, build_atom
from utils.exceptions import DegenerateEmitter, InvalidGeometry, SiteIndexError, UnsupportedConfiguration


def graphene_three_point(bath, centre, g, omega0=0.0):
    cx, cy = centre
    sites = [
        bath.site_index([cx, cy, 1]),
        bath.site_index([cx, cy - 1, 1]),
        bath.site_index([cx + 1, cy - 1, 1]),
    ]
    return GiantAtom(omega0=omega0, couplings=[(site, g) for site in sites])


class GiantAtomTests(SimpleTestCase):
    def test_effective_strength(self):
        self.assertAlmostEqual(effective_strength(GiantAtom(0.0, [(0, 0.1), (1, 0.1), (2, 0.1)])), np.sqrt(3) * 0.1)
        self.assertAlmostEqual(effective_strength(GiantAtom(0.0, [(i, 0.2) for i in range(4)])), 0.4)
        self.assertAlmostEqual(effective_strength(GiantAtom(0.0, [(5, -0.3j)])), 0.3)

    def test_all_zero_couplings_rejected(self):
        with self.assertRaises(DegenerateEmitter):
            GiantAtom(0.0, [(0, 0.0), (3, 0.0)])

    def test_repeated_site_rejected(self):
        with self.assertRaises(InvalidGeometry):
            GiantAtom(0.0, [(2, 0.1), (2, 0.1)])

    def test_giant_flag(self):
        self.assertFalse(GiantAtom(0.0, [(0, 0.1)]).is_giant)
        self.assertTrue(GiantAtom(0.0, [(0, 0.1), (4, 0.1)]).is_giant)

    def test_with_strength_rescales_strongest_point(self):
        atom = GiantAtom(0.0, [(0, 0.1), (4, -0.2)]).with_strength(1.0)
        assert_allclose(atom.strengths, [0.5, -1.0])


class SiteStateTests(SimpleTestCase):
    def test_three_point_symmetric_superposition(self):
        chi = site_state(GiantAtom(0.0, [(1, 0.05), (2, 0.05), (3, 0.05)]))
        assert_allclose(chi.amplitudes, np.ones(3) / np.sqrt(3))

    def test_normal_atom(self):
        chi = site_state(GiantAtom(0.0, [(7, 0.1)]))
        assert_allclose(chi.dense(10), np.eye(10)[7])

    def test_antisymmetric_lieb_state(self):
        chi = site_state(GiantAtom(-1.0, [(0, 0.05), (6, -0.05)]))
        assert_allclose(chi.amplitudes, np.array([1, -1]) / np.sqrt(2))

    def test_invariant_under_common_complex_factor(self):
        atom = GiantAtom(0.0, [(0, 0.1), (3, 0.2j), (5, -0.05)])
        scaled = atom.scaled(2.5 * np.exp(0.7j))
        overlap = np.vdot(site_state(atom).dense(6), site_state(scaled).dense(6))
        self.assertAlmostEqual(abs(overlap), 1.0, places=12)
        self.assertAlmostEqual(scaled.g_bar, 2.5 * atom.g_bar, places=12)

    def test_unnormalized_state_rejected(self):
        with self.assertRaises(DegenerateEmitter):
            SiteState(sites=[0, 1], amplitudes=[1.0, 1.0])


class ChiFrameTests(SimpleTestCase):
    def test_two_point_chain_complement(self):
        bath = build_chain(9)
        frame = chi_frame(GiantAtom(0.0, [(2, 0.1), (5, 0.1)]), bath)
        self.assertEqual(len(frame.chi_perp), 1)
        assert_allclose(frame.chi_perp[0].amplitudes, np.array([1, -1]) / np.sqrt(2), atol=1e-14)

    def test_frame_is_unitary_and_preserves_spectrum(self):
        bath = build_graphene(4, 4)
        atom = GiantAtom(0.0, [(3, 0.1), (8, 0.2 - 0.1j), (11, -0.05), (20, 0.3j)])
        frame = chi_frame(atom, bath)
        self.assertLess(frame.unitarity_residual(), 1e-12)
        assert_allclose(
            np.linalg.eigvalsh(frame.transformed_bath.toarray()), diagonalize(bath).eigenvalues, atol=1e-10
        )

    def test_orthonormal_completion(self):
        atom = GiantAtom(0.0, [(0, 1.0), (1, 2.0j), (2, -0.5), (3, 0.1)])
        frame = chi_frame(atom, build_chain(6))
        vectors = np.array([frame.chi.amplitudes] + [s.amplitudes for s in frame.chi_perp])
        assert_allclose(vectors.conj() @ vectors.T, np.eye(4), atol=1e-12)

    def test_normal_atom_at_first_site_is_identity(self):
        bath = build_chain(5)
        frame = chi_frame(GiantAtom(0.0, [(0, 0.1)]), bath)
        assert_allclose(frame.basis.toarray(), np.eye(5))
        assert_allclose(frame.transformed_bath.toarray(), hamiltonian_matrix(bath))

    def test_atom_couples_only_to_first_frame_vector(self):
        bath = build_chain(8)
        atom = GiantAtom(0.0, [(1, 0.1), (4, 0.3)])
        frame = chi_frame(atom, bath)
        couplings = (frame.basis.conj().T @ site_state(atom).dense(8)) * atom.g_bar
        assert_allclose(np.abs(couplings), np.eye(8)[0] * atom.g_bar, atol=1e-14)


class TotalHamiltonianTests(SimpleTestCase):
    def test_normal_atom_on_three_site_chain(self):
        g = 0.1
        matrix = total_hamiltonian_1ex(build_chain(3), GiantAtom(0.0, [(1, g)]))
        self.assertEqual(matrix.shape, (4, 4))
        self.assertEqual(np.abs(matrix - matrix.conj().T).max(), 0.0)
        edge = np.sqrt(2 + g ** 2)
        assert_allclose(np.linalg.eigvalsh(matrix), [-edge, 0.0, 0.0, edge], atol=1e-12)

    def test_uncoupled_atom_block_diagonal(self):
        bath = build_chain(6, omega_c=0.3)
        matrix = total_hamiltonian_1ex(bath, GiantAtom(1.7, [(2, 0.1)]))
        # switching the coupling off leaves the two blocks
        matrix[0, 1:] = 0
        matrix[1:, 0] = 0
        expected = np.sort(np.concatenate([[1.7], diagonalize(bath).eigenvalues]))
        assert_allclose(np.linalg.eigvalsh(matrix), expected, atol=1e-12)

    def test_dimension_counts_atoms_and_sites(self):
        bath = build_chain(10)
        ensemble = EmitterEnsemble((GiantAtom(0.0, [(1, 0.1), (3, 0.1)]), GiantAtom(0.0, [(2, 0.1), (3, 0.1)])))
        matrix = total_hamiltonian_1ex(bath, ensemble, as_sparse=True)
        self.assertEqual(matrix.shape, (12, 12))
        self.assertEqual(matrix[4, 1], 0.1)
        self.assertEqual(matrix[4, 0], 0.0)
        # both atoms share cavity 3
        self.assertEqual(matrix[5, 0], 0.1)
        self.assertEqual(matrix[5, 1], 0.1)

    def test_three_point_graphene_state_pinned_for_any_coupling(self):
        bath = build_graphene(7, 7)
        centre = bath.site_index([3, 3, 0])
        for g in (0.05, 0.5, 1.0):
            atom = graphene_three_point(bath, (3, 3), g)
            matrix = total_hamiltonian_1ex(bath, atom)
            state = np.zeros(matrix.shape[0])
            state[0] = 1.0
            state[1 + centre] = -g
            self.assertLess(np.linalg.norm(matrix @ state), 1e-12)

    def test_site_outside_bath(self):
        with self.assertRaises(SiteIndexError):
            total_hamiltonian_1ex(build_chain(4), GiantAtom(0.0, [(9, 0.1)]))


class EnsembleTests(SimpleTestCase):
    def test_mixed_frequencies(self):
        ensemble = EmitterEnsemble((GiantAtom(0.0, [(0, 0.1)]), GiantAtom(0.5, [(1, 0.1)])))
        self.assertFalse(ensemble.uniform_omega0)
        with self.assertRaises(UnsupportedConfiguration):
            ensemble.omega0

    def test_label_collision(self):
        with self.assertRaises(InvalidGeometry):
            EmitterEnsemble((GiantAtom(0.0, [(0, 0.1)], label='a'), GiantAtom(0.0, [(1, 0.1)], label='a')))

    def test_shared_coupling_cavities_allowed(self):
        ensemble = EmitterEnsemble((GiantAtom(0.0, [(0, 0.1), (2, 0.1)]), GiantAtom(0.0, [(2, 0.1)])), n_sites=4)
        self.assertEqual(ensemble.labels, ('atom1', 'atom2'))
        self.assertFalse(ensemble.uniform_g_bar)


class AtomSerializerTests(SimpleTestCase):
    def test_resolves_cell_labels(self):
        bath = build_lieb_nnn(5, 5)
        serializer = AtomSerializer(data={
            'omega0': -1.0,
            'couplings': [{'site': [1, 2, 1], 'g_re': 0.05}, {'site': [3, 2, 1], 'g_re': -0.05}],
        })
        self.assertTrue(serializer.is_valid(), serializer.errors)
        atom = build_atom(serializer.validated_data, bath)
        self.assertEqual(atom.sites.tolist(), [bath.site_index([1, 2, 1]), bath.site_index([3, 2, 1])])
        self.assertEqual(atom_to_dict(atom, bath)['couplings'][1], {'site': [3, 2, 1], 'g_re': -0.05, 'g_im': 0.0})

    def test_all_zero_rejected(self):
        serializer = AtomSerializer(data={'omega0': 0.0, 'couplings': [{'site': 1, 'g_re': 0.0}]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('couplings', serializer.errors)

    def test_missing_site_in_bath(self):
        serializer = AtomSerializer(data={'omega0': 0.0, 'couplings': [{'site': 40, 'g_re': 0.1}]})
        self.assertTrue(serializer.is_valid())
        with self.assertRaises(ValidationError):
            build_atom(serializer.validated_data, build_chain(5))
