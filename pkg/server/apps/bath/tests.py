import gc
import weakref

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.bath.builders import (
    apply_vacancy,
    build_chain,
    build_dimerized_chain,
    build_graphene,
    build_lieb_nnn,
    build_square,
    chain_cell,
    enlarge,
    graphene_cell,
    lieb_nnn_cell,
    square_cell,
)
from apps.bath.models import BathGraph, BlochSpec
from apps.bath.serializers import LatticeSerializer, build_bath
from apps.bath.shells import boundary_sites, max_hopping_speed, outer_region, travel_distance
from apps.bath.spectra import (
    band_structure,
    diagonalize,
    hamiltonian_frame,
    hamiltonian_matrix,
    in_certified_gap,
    spectral_gaps,
)
from utils.conf import gla_settings
from utils.constants import Boundary
from utils.exceptions import (
    InvalidArgument,
    InvalidGeometry,
    ResourceLimitError,
    SiteIndexError,
    SpecError,
    UnsupportedConfiguration,
)


class BuilderTests(SimpleTestCase):
    def test_chain_of_three(self):
        eigenvalues = diagonalize(build_chain(3, J=1.0)).eigenvalues
        assert_allclose(eigenvalues, [-np.sqrt(2), 0.0, np.sqrt(2)], atol=1e-12)

    def test_chain_of_two_with_offset(self):
        eigenvalues = diagonalize(build_chain(2, J=1.0, omega_c=5.0)).eigenvalues
        assert_allclose(eigenvalues, [4.0, 6.0], atol=1e-12)

    def test_chain_matrix_is_tridiagonal_with_minus_j(self):
        matrix = hamiltonian_matrix(build_chain(3, J=1.0))
        assert_allclose(matrix, [[0, -1, 0], [-1, 0, -1], [0, -1, 0]])
        self.assertEqual(np.abs(matrix - matrix.conj().T).max(), 0.0)

    def test_chain_rejects_short_length(self):
        with self.assertRaises(InvalidGeometry):
            build_chain(1)

    def test_chain_band_edges_converge_quadratically(self):
        scaled_errors = []
        for length in (50, 100, 200):
            top = diagonalize(build_chain(length, J=1.0)).eigenvalues[-1]
            scaled_errors.append((2.0 - top) * (length + 1) ** 2)
        assert_allclose(scaled_errors, np.pi ** 2, rtol=1e-3)

    def test_graphene_bulk_coordination(self):
        bath = build_graphene(6, 6)
        self.assertEqual(bath.coordination.max(), 3)
        centre = bath.site_index([3, 3, 0])
        self.assertEqual(bath.coordination[centre], 3)

    def test_graphene_periodic_spectrum_is_symmetric(self):
        eigenvalues = diagonalize(build_graphene(6, 6, boundary=Boundary.PERIODIC)).eigenvalues
        assert_allclose(np.sort(eigenvalues), np.sort(-eigenvalues), atol=1e-10)

    def test_graphene_too_small(self):
        with self.assertRaises(InvalidGeometry):
            build_graphene(1, 4)

    def test_square_periodic_band_spans_eight_j(self):
        eigenvalues = diagonalize(build_square(8, 8, boundary=Boundary.PERIODIC)).eigenvalues
        assert_allclose([eigenvalues[0], eigenvalues[-1]], [-4.0, 4.0], atol=1e-12)

    def test_square_bulk_coordination(self):
        self.assertEqual(build_square(5, 5).coordination.max(), 4)

    def test_lieb_hoppings_all_equal_j(self):
        bath = build_lieb_nnn(4, 4, J=1.0)
        magnitudes = np.abs(bath.hopping_arrays[2])
        assert_allclose(magnitudes, 1.0)
        assert_allclose(bath.frequencies, 0.0)

    def test_dimerized_chain_has_central_gap(self):
        bath = build_dimerized_chain(40, J1=1.0, J2=0.5)
        gaps = spectral_gaps(bath)
        self.assertTrue(any(lower < 0.0 < upper for lower, upper in gaps))


class PeriodicBlochUnionTests(SimpleTestCase):
    """Periodic finite lattices carry exactly the Bloch spectrum of their k set."""

    def assertBlochUnion(self, bath, spec, cells):
        finite = np.sort(diagonalize(bath).eigenvalues)
        bloch = np.sort(band_structure(spec, cells).energies.ravel())
        assert_allclose(finite, bloch, atol=1e-10)

    def test_chain(self):
        self.assertBlochUnion(build_chain(7, boundary=Boundary.PERIODIC), chain_cell(), 7)

    def test_square_two_by_two(self):
        self.assertBlochUnion(build_square(2, 2, boundary=Boundary.PERIODIC), square_cell(), 2)

    def test_square(self):
        self.assertBlochUnion(build_square(4, 4, boundary=Boundary.PERIODIC), square_cell(), 4)

    def test_graphene(self):
        self.assertBlochUnion(build_graphene(2, 2, boundary=Boundary.PERIODIC), graphene_cell(), 2)
        self.assertBlochUnion(build_graphene(3, 3, boundary=Boundary.PERIODIC), graphene_cell(), 3)

    def test_lieb(self):
        self.assertBlochUnion(build_lieb_nnn(3, 3, boundary=Boundary.PERIODIC), lieb_nnn_cell(), 3)


class BandStructureTests(SimpleTestCase):
    def test_chain_dispersion(self):
        bands = band_structure(chain_cell(J=1.0, omega_c=0.3), 64)
        assert_allclose(bands.energies[:, 0], 0.3 - 2 * np.cos(bands.k_grid[:, 0]), atol=1e-12)

    def test_square_dispersion(self):
        bands = band_structure(square_cell(J=1.0), 16)
        kx, ky = bands.k_grid.T
        assert_allclose(bands.energies[:, 0], -2 * (np.cos(kx) + np.cos(ky)), atol=1e-12)

    def test_graphene_dirac_point(self):
        energies = np.linalg.eigvalsh(graphene_cell().bloch_matrix([-2 * np.pi / 3, 2 * np.pi / 3]))
        assert_allclose(energies, [0.0, 0.0], atol=1e-12)

    def test_lieb_three_bands_touch_at_corner(self):
        bands = band_structure(lieb_nnn_cell(), 8)
        self.assertEqual(bands.band_count, 3)
        corner = np.flatnonzero(np.all(np.isclose(bands.k_grid, -np.pi), axis=1))
        assert_allclose(bands.energies[corner[0]], 0.0, atol=1e-12)

    def test_bloch_vectors_orthonormal_and_sorted(self):
        bands = band_structure(lieb_nnn_cell(), 6)
        gram = np.einsum('kbn,kbm->knm', bands.bloch_vectors.conj(), bands.bloch_vectors)
        assert_allclose(gram, np.broadcast_to(np.eye(3), gram.shape), atol=1e-10)
        self.assertTrue(np.all(np.diff(bands.energies, axis=1) >= 0))

    def test_non_hermitian_spec_rejected(self):
        with self.assertRaises(SpecError):
            BlochSpec(dimension=1, bravais_vectors=[[1.0]], sublattice_count=1, onsite=(np.nan,),
                      inter_cell=((0, 0, (1,), 1.0),))

    def test_resolution_too_small(self):
        with self.assertRaises(InvalidArgument):
            band_structure(chain_cell(), 1)


class VacancyTests(SimpleTestCase):
    def test_chain_middle_vacancy(self):
        bath = apply_vacancy(build_chain(3, omega_c=0.7), 1)
        self.assertEqual(bath.n_sites, 2)
        assert_allclose(diagonalize(bath).eigenvalues, [0.7, 0.7], atol=1e-12)

    def test_graphene_vacancy_leaves_zero_mode(self):
        bath = build_graphene(6, 6)
        bath = apply_vacancy(bath, bath.site_index([3, 3, 0]))
        eigenvalues = diagonalize(bath).eigenvalues
        self.assertLess(np.abs(eigenvalues).min(), 1e-10)

    def test_vacancies_commute(self):
        bath = build_square(4, 4)
        first, second = bath.site_labels[5], bath.site_labels[10]
        one = apply_vacancy(bath, 5)
        one = apply_vacancy(one, one.site_index(second))
        two = apply_vacancy(bath, 10)
        two = apply_vacancy(two, two.site_index(first))
        self.assertEqual(one.site_labels, two.site_labels)
        assert_allclose(hamiltonian_matrix(one), hamiltonian_matrix(two))

    def test_missing_site(self):
        with self.assertRaises(SiteIndexError):
            apply_vacancy(build_chain(3), 3)


class EnlargeTests(SimpleTestCase):
    def test_chain_is_centred(self):
        larger, site_map = enlarge(build_chain(11))
        self.assertEqual(larger.n_sites, 17)
        assert_allclose(site_map, np.arange(3, 14))

    def test_graphene_keeps_original_hoppings(self):
        bath = build_graphene(6, 5)
        larger, site_map = enlarge(bath)
        self.assertEqual(larger.cells, (9, 8))
        inner = hamiltonian_matrix(larger)[np.ix_(site_map, site_map)]
        assert_allclose(inner, hamiltonian_matrix(bath))
        self.assertEqual(larger.site_labels[site_map[0]], ((1, 1), 0))

    def test_vacancy_cannot_grow(self):
        with self.assertRaises(UnsupportedConfiguration):
            enlarge(apply_vacancy(build_chain(11), 5))


class DiagonalizeTests(SimpleTestCase):
    def test_chain_of_four(self):
        expected = np.sort(-2 * np.cos(np.arange(1, 5) * np.pi / 5))
        assert_allclose(diagonalize(build_chain(4)).eigenvalues, expected, atol=1e-12)

    def test_single_site(self):
        bath = BathGraph(site_labels=[0], frequencies=[1.5], hoppings=())
        assert_allclose(diagonalize(bath).eigenvalues, [1.5])

    def test_eigenvalue_sum_is_trace(self):
        bath = build_lieb_nnn(3, 3)
        decomposition = diagonalize(bath)
        self.assertAlmostEqual(decomposition.eigenvalues.sum(), np.trace(hamiltonian_matrix(bath)), places=10)
        vectors = decomposition.eigenvectors
        assert_allclose(vectors.conj().T @ vectors, np.eye(bath.n_sites), atol=1e-10)

    def test_dense_limit(self):
        with gla_settings.override(DENSE_LIMIT=10):
            with self.assertRaises(ResourceLimitError):
                diagonalize(build_chain(11))

    def test_decomposition_is_released_with_its_bath(self):
        bath = build_chain(31)
        decomposition = weakref.ref(diagonalize(bath))
        self.assertIs(diagonalize(bath), decomposition())
        self.assertIsNot(diagonalize(build_chain(31)), decomposition())
        del bath
        gc.collect()
        self.assertIsNone(decomposition())


class BathGraphTests(SimpleTestCase):
    def test_duplicate_and_self_hoppings(self):
        with self.assertRaises(InvalidGeometry):
            BathGraph(site_labels=[0, 1], frequencies=[0, 0], hoppings=((0, 1, 1.0), (1, 0, 1.0)))
        with self.assertRaises(InvalidGeometry):
            BathGraph(site_labels=[0, 1], frequencies=[0, 0], hoppings=((1, 1, 1.0),))

    def test_missing_site_in_hopping(self):
        with self.assertRaises(SiteIndexError):
            BathGraph(site_labels=[0, 1], frequencies=[0, 0], hoppings=((0, 2, 1.0),))

    def test_complex_hopping_gives_hermitian_matrix(self):
        bath = BathGraph(site_labels=[0, 1], frequencies=[0, 0], hoppings=((0, 1, 1j),))
        matrix = hamiltonian_matrix(bath)
        self.assertEqual(matrix[0, 1], 1j)
        self.assertEqual(matrix[1, 0], -1j)

    def test_coordinate_list_export(self):
        frame = hamiltonian_frame(build_chain(3))
        self.assertEqual(list(frame.columns), ['row', 'col', 're', 'im'])
        self.assertEqual(len(frame), 4)
        assert_allclose(frame['re'], -1.0)


class GapTests(SimpleTestCase):
    def test_chain_gaps_exclude_band(self):
        bath = build_chain(101)
        self.assertTrue(in_certified_gap(2.5, bath))
        self.assertTrue(in_certified_gap(-2.5, bath))
        self.assertFalse(in_certified_gap(0.3, bath))
        self.assertFalse(in_certified_gap(1.9999, bath))


class ShellTests(SimpleTestCase):
    def test_chain_boundary(self):
        bath = build_chain(9)
        self.assertEqual(list(boundary_sites(bath)), [0, 8])
        self.assertEqual(travel_distance(bath, [4]), 4)
        self.assertEqual(max_hopping_speed(bath), 2.0)

    def test_periodic_outer_region_is_far_from_support(self):
        bath = build_chain(10, boundary=Boundary.PERIODIC)
        self.assertEqual(boundary_sites(bath).size, 0)
        self.assertEqual(list(np.flatnonzero(outer_region(bath, [0]))), [5])

    def test_lieb_boundary_is_per_sublattice(self):
        bath = build_lieb_nnn(5, 5)
        centre = bath.site_index([2, 2, 0])
        self.assertNotIn(centre, boundary_sites(bath))


class LatticeSerializerTests(SimpleTestCase):
    def test_named_lattice(self):
        serializer = LatticeSerializer(data={'kind': 'chain', 'size': [5], 'boundary': 'periodic'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        bath = build_bath(serializer.validated_data)
        self.assertEqual(bath.n_sites, 5)
        self.assertEqual(bath.boundary, Boundary.PERIODIC)

    def test_wrong_dimension(self):
        serializer = LatticeSerializer(data={'kind': 'square', 'size': [5]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('size', serializer.errors)

    def test_custom_graph(self):
        serializer = LatticeSerializer(data={
            'kind': 'custom',
            'sites': [0, 1],
            'frequencies': [0.0, 0.0],
            'hoppings': [{'site': 0, 'site2': 1, 're': -1.0}],
        })
        self.assertTrue(serializer.is_valid(), serializer.errors)
        assert_allclose(diagonalize(build_bath(serializer.validated_data)).eigenvalues, [-1.0, 1.0])
