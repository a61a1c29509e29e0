import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.bath.builders import build_chain, build_graphene
from apps.bath.models import BathGraph
from apps.bath.spectra import hamiltonian_matrix
from apps.emitters.hamiltonians import site_state, total_hamiltonian_1ex
from apps.emitters.models import GiantAtom
from apps.greens.analytic import (
    bath_green_chain_analytic,
    bath_green_chain_gap,
    chain_green,
    chain_green_matrix,
    chain_wavevector,
    group_velocity,
)
from apps.greens.ldos import cross_ldos, ldos, self_energy_re_im
from apps.greens.limits import Methods, boundary_value, im_tolerance
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import bath_green_element, cross_green, self_energy, total_green
from utils.constants import Backend, Boundary
from utils.exceptions import (
    ConvergenceError,
    InvalidArgument,
    OutOfBand,
    PoleProximity,
    RegularizationRequired,
)

LONG_CHAIN = 2001
CENTRE = 1000


def two_site_graph(hopping):
    return BathGraph(site_labels=(0, 1), frequencies=(0.0, 0.0), hoppings=((0, 1, hopping),))


class AnalyticChainTests(SimpleTestCase):
    def test_diagonal_at_band_centre(self):
        self.assertAlmostEqual(bath_green_chain_analytic(5, 5, 0.0), -0.5j, places=15)

    def test_two_sites_apart_at_band_centre(self):
        self.assertAlmostEqual(bath_green_chain_analytic(0, 2, 0.0), 0.5j, places=15)

    def test_plane_wave_form(self):
        omega = -0.6
        k0 = chain_wavevector(omega)
        v = group_velocity(omega)
        self.assertAlmostEqual(v, 2 * np.sin(k0))
        expected = -1j / v * np.exp(1j * k0 * 3)
        self.assertAlmostEqual(bath_green_chain_analytic(7, 4, omega), expected, places=13)

    def test_out_of_band(self):
        for omega in (2.0, 2.5, -3.0):
            with self.assertRaises(OutOfBand):
                bath_green_chain_analytic(0, 0, omega)

    def test_gap_form(self):
        value = bath_green_chain_gap(0, 0, 10.0)
        self.assertIsInstance(value, float)
        self.assertAlmostEqual(value, 1 / np.sqrt(96), places=14)
        self.assertAlmostEqual(value, 1 / 10.0, delta=3e-3)
        with self.assertRaises(OutOfBand):
            bath_green_chain_gap(0, 0, 1.0)

    def test_matrix_rejects_band_edges(self):
        sites = np.arange(4)
        for z in (2.0, -2.0):
            with self.assertRaises(PoleProximity):
                chain_green_matrix(sites, sites, z)
        with self.assertRaises(PoleProximity):
            chain_green_matrix(sites, sites, 3.0, J=1.5, omega_c=0.0)

    def test_matrix_matches_elements_off_the_edge(self):
        sites = np.array([0, 1, 3])
        for z in (0.3 + 1e-3j, 2.0 + 1e-2j, 2.5):
            expected = [[chain_green(n - n2, z) for n2 in sites] for n in sites]
            assert_allclose(chain_green_matrix(sites, sites, z), expected, atol=1e-14)


class FiniteBackendTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.chain = build_chain(LONG_CHAIN)

    def test_two_site_graph_limit(self):
        for hopping, off_diagonal in ((-1.0, 1.0), (1.0, -1.0)):
            bath = two_site_graph(hopping)
            query = ResolventQuery(0.0)
            self.assertAlmostEqual(bath_green_element(bath, 0, 0, query), 0.0, places=14)
            self.assertAlmostEqual(bath_green_element(bath, 0, 1, query), off_diagonal, places=14)

    def test_large_energy_asymptotics(self):
        bath = build_chain(21)
        z = 1e4
        self.assertAlmostEqual((z * bath_green_element(bath, 10, 10, ResolventQuery(z))).real, 1.0, delta=1e-3)

    def test_gap_value_is_exact(self):
        bath = build_chain(201)
        for n2 in (100, 103):
            value = bath_green_element(bath, 100, n2, ResolventQuery(2.5))
            self.assertAlmostEqual(value, bath_green_chain_gap(100, n2, 2.5), places=12)

    def test_matched_broadening_agrees_with_analytic(self):
        for omega in np.linspace(-1.8, 1.8, 20):
            for delta in (0, 1, 5, 20):
                finite = bath_green_element(self.chain, CENTRE, CENTRE + delta, ResolventQuery(omega, 0.02))
                analytic = bath_green_element(
                    self.chain, CENTRE, CENTRE + delta,
                    ResolventQuery(omega, 0.02, Backend.ANALYTIC_CHAIN),
                )
                self.assertLess(abs(finite - analytic), 1e-2 * abs(analytic))

    def test_boundary_value_of_normal_atom(self):
        atom = GiantAtom(0.0, [(CENTRE, 0.05)])
        for omega in (-1.0, 0.3, 1.2):
            sample = self_energy(atom, self.chain, ResolventQuery(omega))
            self.assertEqual(sample.method, Methods.RICHARDSON)
            self.assertTrue(sample.converged)
            expected = -1j / np.sqrt(4 - omega ** 2)
            self.assertLess(abs(sample.value - expected), 1e-3 * abs(expected))

    def test_zero_broadening_inside_band(self):
        with self.assertRaises(RegularizationRequired):
            bath_green_element(self.chain, CENTRE, CENTRE, ResolventQuery(0.3, epsilon=0.0))

    def test_two_point_self_energy(self):
        omega, d = -0.6, 3
        k0 = chain_wavevector(omega)
        v = group_velocity(omega)
        atom = GiantAtom(omega, [(CENTRE, 0.05), (CENTRE + d, 0.05)])
        expected = -1j / v * (1 + np.exp(1j * k0 * d))
        analytic = self_energy(atom, self.chain, ResolventQuery(omega, backend=Backend.ANALYTIC_CHAIN))
        self.assertAlmostEqual(analytic.value, expected, places=12)
        finite = self_energy(atom, self.chain, ResolventQuery(omega))
        self.assertLess(abs(finite.value - expected), 1e-2 * abs(expected))

    def test_self_energy_vanishes_when_k0_d_is_pi(self):
        atom = GiantAtom(0.0, [(CENTRE, 0.05), (CENTRE + 2, 0.05)])
        analytic = self_energy(atom, self.chain, ResolventQuery(0.0, backend=Backend.ANALYTIC_CHAIN))
        self.assertAlmostEqual(abs(analytic.value), 0.0, places=15)
        finite = self_energy(atom, self.chain, ResolventQuery(0.0))
        self.assertEqual(finite.method, Methods.EXACT)
        self.assertLess(abs(finite.value), 1e-10)

    def test_normal_atom_is_single_element(self):
        atom = GiantAtom(0.0, [(CENTRE, 0.3j)])
        query = ResolventQuery(0.4, 0.05)
        self.assertAlmostEqual(
            self_energy(atom, self.chain, query).value,
            bath_green_element(self.chain, CENTRE, CENTRE, query),
            places=14,
        )

    def test_cross_green_is_hermitian_in_gap(self):
        bath = build_chain(101)
        chi_1 = site_state(GiantAtom(2.5, [(40, 0.1), (44, 0.2j)]))
        chi_2 = site_state(GiantAtom(2.5, [(42, 0.1), (47, -0.1)]))
        query = ResolventQuery(2.5)
        self.assertAlmostEqual(cross_green(chi_1, chi_2, bath, query),
                               np.conj(cross_green(chi_2, chi_1, bath, query)), places=14)
        atom = GiantAtom(2.5, [(40, 0.1), (44, 0.2j)])
        self.assertAlmostEqual(cross_green(chi_1, chi_1, bath, query), self_energy(atom, bath, query).value,
                               places=14)

    def test_self_energy_decreases_in_gap(self):
        bath = build_chain(201)
        atom = GiantAtom(2.5, [(95, 0.1), (100, 0.1)])
        step = 1e-6
        for omega in np.linspace(2.2, 4.0, 20):
            lower = self_energy(atom, bath, ResolventQuery(omega)).value.real
            upper = self_energy(atom, bath, ResolventQuery(omega + step)).value.real
            self.assertLessEqual(upper - lower, 0.0)

    def test_imaginary_part_non_positive_in_band(self):
        atom = GiantAtom(0.0, [(CENTRE, 0.05), (CENTRE + 3, 0.05)])
        for omega in np.linspace(-1.5, 1.5, 7):
            sample = self_energy(atom, self.chain, ResolventQuery(omega))
            self.assertLessEqual(sample.value.imag, im_tolerance(sample.epsilon))


class BoundaryValueTests(SimpleTestCase):
    def test_quadratic_function_is_extrapolated_exactly(self):
        result = boundary_value(lambda eps: 1.5 - 2j * eps + 0.7 * eps ** 2, 0.01, scale=4.0)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.value, 1.5, places=12)

    def test_divergent_function(self):
        with self.assertRaises(ConvergenceError) as context:
            boundary_value(lambda eps: 1 / eps, 0.01, scale=4.0)
        self.assertIn('discrepancy', context.exception.diagnostics)
        result = boundary_value(lambda eps: 1 / eps, 0.01, scale=4.0, strict=False)
        self.assertFalse(result.converged)

    def test_im_tolerance_floor(self):
        self.assertEqual(im_tolerance(0.0), 1e-8)
        self.assertAlmostEqual(im_tolerance(0.02), 10 * 0.02 ** 2)

    def test_negative_broadening_rejected(self):
        with self.assertRaises(InvalidArgument):
            ResolventQuery(0.0, -1e-3)


class TotalGreenTests(SimpleTestCase):
    def test_assembled_resolvent_matches_inverse(self):
        bath = build_chain(101)
        atom = GiantAtom(0.4, [(40, 0.3), (43, 0.2 - 0.1j), (47, 0.25)])
        hamiltonian = total_hamiltonian_1ex(bath, atom)
        rng = np.random.default_rng(7)
        energies = list(rng.uniform(-3, 3, 10) + 1j * rng.choice([-1, 1], 10) * rng.uniform(0.05, 1.0, 10))
        for z in energies + [3 + 0.1j]:
            assembled = total_green(bath, atom, z).assemble()
            direct = np.linalg.inv(z * np.eye(hamiltonian.shape[0]) - hamiltonian)
            self.assertLess(np.abs(assembled - direct).max(), 1e-10)

    def test_bath_eigenvalue_is_a_pole(self):
        bath = build_chain(3)
        with self.assertRaises(PoleProximity):
            total_green(bath, GiantAtom(0.0, [(0, 0.1)]), np.sqrt(2))

    def test_pieces(self):
        bath = build_chain(11)
        atom = GiantAtom(0.0, [(5, 0.2)])
        resolvent = total_green(bath, atom, 0.3 + 0.2j)
        self.assertEqual(resolvent.psi[0], 1.0)
        sigma = resolvent.bath_green[5, 5]
        self.assertAlmostEqual(resolvent.F, 0.3 + 0.2j - 0.04 * sigma, places=14)


class BlochBackendTests(SimpleTestCase):
    def test_periodic_chain_matches_finite(self):
        bath = build_chain(16, boundary=Boundary.PERIODIC)
        for x, x2 in ((0, 0), (0, 5), (3, 14)):
            finite = bath_green_element(bath, x, x2, ResolventQuery(0.3, 0.1))
            bloch = bath_green_element(bath, x, x2, ResolventQuery(0.3, 0.1, Backend.BLOCH_SUM))
            self.assertAlmostEqual(finite, bloch, places=10)

    def test_periodic_graphene_matches_finite(self):
        bath = build_graphene(4, 4, boundary=Boundary.PERIODIC)
        x, x2 = bath.site_index([0, 0, 0]), bath.site_index([1, 2, 1])
        for x_pair in ((x, x2), (x2, x2)):
            finite = bath_green_element(bath, *x_pair, ResolventQuery(0.2, 0.3))
            bloch = bath_green_element(bath, *x_pair, ResolventQuery(0.2, 0.3, Backend.BLOCH_SUM))
            self.assertAlmostEqual(finite, bloch, places=10)


class LDOSTests(SimpleTestCase):
    def test_normal_atom_on_chain(self):
        bath = build_chain(64)
        chi = site_state(GiantAtom(0.0, [(10, 1.0)]))
        grid = np.linspace(-1.5, 1.5, 31)
        curve = ldos(chi, bath, None, grid)
        assert_allclose(curve.density, 1 / (np.pi * np.sqrt(4 - grid ** 2)), rtol=1e-2)

    def test_total_weight(self):
        bath = build_chain(64)
        chi = site_state(GiantAtom(0.0, [(10, 1.0), (13, 0.5)]))
        curve = ldos(chi, bath, None, np.linspace(-2.5, 2.5, 5001))
        self.assertAlmostEqual(curve.total_weight, 1.0, delta=1e-3)

    def test_three_point_atom_decouples_at_dirac_energy(self):
        bath = build_graphene(8, 8)
        sites = [bath.site_index(label) for label in ([4, 4, 1], [4, 3, 1], [5, 3, 1])]
        three_point = site_state(GiantAtom(0.0, [(site, 0.05) for site in sites]))
        normal = site_state(GiantAtom(0.0, [(sites[0], 0.05)]))
        grid = np.array([0.0, 1.0])
        rho_three = ldos(three_point, bath, None, grid).density
        rho_normal = ldos(normal, bath, None, grid).density
        self.assertLess(rho_three[0], 5e-3)
        self.assertLess(rho_three[0], 0.2 * rho_normal[0])
        self.assertGreater(rho_three[1], 0.0)

    def test_cross_ldos_is_hermitian(self):
        bath = build_chain(64)
        chi_1 = site_state(GiantAtom(0.0, [(10, 1.0), (12, 1.0)]))
        chi_2 = site_state(GiantAtom(0.0, [(11, 1.0), (15, 1.0j)]))
        grid = np.linspace(-1.5, 1.5, 7)
        forward = cross_ldos(chi_1, chi_2, bath, None, grid).density
        backward = cross_ldos(chi_2, chi_1, bath, None, grid).density
        assert_allclose(forward, np.conj(backward), atol=1e-12)

    def test_invalid_arguments(self):
        bath = build_chain(64)
        chi = site_state(GiantAtom(0.0, [(10, 1.0)]))
        with self.assertRaises(InvalidArgument):
            ldos(chi, bath, None, [])
        with self.assertRaises(InvalidArgument):
            ldos(chi, bath, None, [0.0], kernel_width=1e-6)

    def test_spectral_pair_at_band_centre(self):
        atom = GiantAtom(0.0, [(10, 0.05)])
        re, im = self_energy_re_im(atom, build_chain(64), 0.0)
        self.assertAlmostEqual(re, 0.0, delta=5e-3)
        self.assertAlmostEqual(im, -0.5, delta=5e-3)

    def test_spectral_pair_in_gap(self):
        atom = GiantAtom(2.5, [(10, 0.05)])
        re, im = self_energy_re_im(atom, build_chain(64), 2.5)
        self.assertEqual(im, 0.0)
        self.assertAlmostEqual(re, 1 / 1.5, delta=1e-2)

    def test_spectral_pair_matches_finite_backend(self):
        atom = GiantAtom(0.7, [(CENTRE, 0.05)])
        chain = build_chain(LONG_CHAIN)
        re, im = self_energy_re_im(atom, chain, 0.7)
        finite = self_energy(atom, chain, ResolventQuery(0.7)).value
        self.assertLess(abs(complex(re, im) - finite), 1e-2)
