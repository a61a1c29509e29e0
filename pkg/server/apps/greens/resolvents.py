# apps/greens/resolvents.py
"""
Bath resolvent G_B(z) = (z - H_B)⁻¹ through three backends.

finite_spectral   Σ_m v_m v_m† / (z - λ_m) over the dense eigenpairs
bloch_sum         (1/N) Σ_nk φ_nk φ_nk† / (z - ω_nk) with the lattice's unit cell
analytic_chain    closed form of the infinite coupled-cavity array
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.bath.models import BandStructure, BathGraph
from apps.bath.spectra import bath_bands, diagonalize, in_certified_gap
from apps.emitters.hamiltonians import check_atom, site_state
from apps.emitters.models import GiantAtom, SiteState
from apps.greens.analytic import chain_green_matrix
from apps.greens.limits import (
    BoundaryValue,
    Methods,
    boundary_value,
    default_epsilon,
    exact_limit_vector,
)
from apps.greens.models import ResolventQuery, SelfEnergySample, TotalResolvent
from utils.conf import gla_settings
from utils.constants import Backend, Boundary, Lattices
from utils.exceptions import PoleProximity, RegularizationRequired, UnsupportedConfiguration

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralWeights:
    """
    Projected resolvent ⟨l_j|G_B(z)|r_j'⟩ = Σ_m W_m[j, j'] / (z - E_m).

    ``energies`` are bath eigenvalues or Bloch energies ω_nk, ``weights`` the
    matching products ⟨l_j|m⟩⟨m|r_j'⟩.
    """
    energies: np.ndarray
    weights: np.ndarray

    def evaluate(self, z) -> np.ndarray:
        return np.tensordot(1.0 / (z - self.energies), self.weights, axes=1)

    def nearest_pole(self, z) -> float:
        return float(np.min(np.abs(z - self.energies)))


def as_columns(states, n_sites) -> np.ndarray:
    """Stack SiteStates or dense site vectors into an (n_sites, k) array."""
    if isinstance(states, SiteState):
        states = [states]
    if isinstance(states, np.ndarray) and states.ndim == 2:
        return states.astype(complex)
    if isinstance(states, np.ndarray):
        return states.astype(complex).reshape(n_sites, 1)
    columns = [state.dense(n_sites) if isinstance(state, SiteState) else np.asarray(state, complex)
               for state in states]
    return np.column_stack(columns)


def basis_vectors(sites, n_sites) -> np.ndarray:
    columns = np.zeros((n_sites, len(sites)), dtype=complex)
    columns[np.asarray(sites, dtype=int), np.arange(len(sites))] = 1.0
    return columns


def resolve_bands(bath: BathGraph, bands: BandStructure = None) -> BandStructure:
    """Bands for the Bloch backend; a periodic lattice with equal sides uses its own k set."""
    if bands is not None:
        return bands
    if not bath.supports_bloch:
        raise UnsupportedConfiguration(
            f"The bloch_sum backend needs a vacancy-free lattice built from a unit cell, got '{bath.kind}'."
        )
    if bath.boundary == Boundary.PERIODIC and len(set(bath.cells)) == 1:
        return bath_bands(bath, bath.cells[0])
    return bath_bands(bath)


def bloch_overlaps(bath: BathGraph, bands: BandStructure, vectors) -> np.ndarray:
    """
    ⟨φ_nk|w⟩ for site vectors w, with φ_nk(R, β) = e^{ik·R} u_nβ(k) / √N.
    Shape (n_k, n_bands, k).
    """
    columns = as_columns(vectors, bath.n_sites)
    support = np.flatnonzero(np.any(columns != 0, axis=1))
    cells = bath.cell_indices[support]
    sublattices = bath.sublattices[support]
    n_k = bands.k_grid.shape[0]
    phases = np.exp(-1j * bands.k_grid @ cells.T)  # (n_k, s)
    # conj(u_nβ(k)) at the sublattice of every support site: (n_k, s, n_bands)
    u_conj = np.conj(bands.bloch_vectors[:, sublattices, :])
    weighted = phases[:, :, None] * u_conj
    return np.einsum('ksn,sj->knj', weighted, columns[support]) / np.sqrt(n_k)


def bloch_states(bath: BathGraph, bands: BandStructure, sites=None) -> np.ndarray:
    """φ_nk(x) for the requested sites, shape (n_sites_requested, n_k, n_bands)."""
    sites = np.arange(bath.n_sites) if sites is None else np.asarray(sites, dtype=int)
    phases = np.exp(1j * bath.cell_indices[sites] @ bands.k_grid.T)  # (s, n_k)
    u = np.transpose(bands.bloch_vectors[:, bath.sublattices[sites], :], (1, 0, 2))
    return phases[:, :, None] * u / np.sqrt(bands.k_grid.shape[0])


def spectral_weights(bath: BathGraph, left, right=None, backend=Backend.FINITE_SPECTRAL,
                     bands: BandStructure = None) -> SpectralWeights:
    left_columns = as_columns(left, bath.n_sites)
    right_columns = left_columns if right is None else as_columns(right, bath.n_sites)
    if backend == Backend.BLOCH_SUM:
        bands = resolve_bands(bath, bands)
        left_overlaps = bloch_overlaps(bath, bands, left_columns).reshape(-1, left_columns.shape[1])
        right_overlaps = (left_overlaps if right is None else
                          bloch_overlaps(bath, bands, right_columns).reshape(-1, right_columns.shape[1]))
        energies = bands.energies.reshape(-1)
    else:
        decomposition = diagonalize(bath)
        left_overlaps = decomposition.overlaps(left_columns)
        right_overlaps = left_overlaps if right is None else decomposition.overlaps(right_columns)
        energies = decomposition.eigenvalues
    weights = np.conj(left_overlaps)[:, :, None] * right_overlaps[:, None, :]
    return SpectralWeights(energies=np.asarray(energies), weights=weights)


def _chain_positions(bath: BathGraph):
    if bath.kind != Lattices.CHAIN:
        raise UnsupportedConfiguration(f"The analytic_chain backend only applies to chains, got '{bath.kind}'.")
    return bath.cell_indices[:, 0]


def resolvent_columns(bath: BathGraph, vectors, z, backend=Backend.FINITE_SPECTRAL,
                      bands: BandStructure = None) -> np.ndarray:
    """G_B(z) applied to site vectors at a fixed complex (or real gap) energy."""
    columns = as_columns(vectors, bath.n_sites)
    if backend == Backend.ANALYTIC_CHAIN:
        positions = _chain_positions(bath)
        support = np.flatnonzero(np.any(columns != 0, axis=1))
        params = bath.parameters
        matrix = chain_green_matrix(positions, positions[support], z, params.get('J', 1.0),
                                    params.get('omega_c', 0.0))
        return matrix @ columns[support]
    if backend == Backend.BLOCH_SUM:
        bands = resolve_bands(bath, bands)
        overlaps = bloch_overlaps(bath, bands, columns)
        states = bloch_states(bath, bands)
        return np.einsum('xkn,knj->xj', states, overlaps / (z - bands.energies)[:, :, None])
    decomposition = diagonalize(bath)
    return decomposition.eigenvectors @ (decomposition.overlaps(columns) / (z - decomposition.eigenvalues)[:, None])


def in_gap(bath: BathGraph, omega, backend=Backend.FINITE_SPECTRAL, bands: BandStructure = None) -> bool:
    if backend == Backend.ANALYTIC_CHAIN:
        params = bath.parameters
        return abs(omega - params.get('omega_c', 0.0)) > 2 * params.get('J', 1.0)
    if backend == Backend.BLOCH_SUM:
        return resolve_bands(bath, bands).excludes(omega, gla_settings.GAP_MARGIN)
    return in_certified_gap(omega, bath)


def green_limit(bath: BathGraph, right, query: ResolventQuery, left=None, bands: BandStructure = None,
                base_epsilon=None, strict=True) -> BoundaryValue:
    """
    G_B(ω⁺) applied to ``right`` (full site vectors) or, with ``left``, the
    projected matrix ⟨left_j|G_B(ω⁺)|right_j'⟩.
    """
    backend = query.backend
    omega = query.omega
    right_columns = as_columns(right, bath.n_sites)
    left_columns = None if left is None else as_columns(left, bath.n_sites)

    def project(columns):
        return columns if left_columns is None else left_columns.conj().T @ columns

    if backend == Backend.ANALYTIC_CHAIN:
        value = project(resolvent_columns(bath, right_columns, query.z, backend))
        return BoundaryValue(value=value, epsilon=query.epsilon or 0.0, method=Methods.ANALYTIC)

    if query.epsilon:
        value = project(resolvent_columns(bath, right_columns, query.z, backend, bands))
        return BoundaryValue(value=value, epsilon=query.epsilon, method=Methods.BROADENED)

    if in_gap(bath, omega, backend, bands):
        value = project(resolvent_columns(bath, right_columns, omega, backend, bands))
        return BoundaryValue(value=value, epsilon=0.0, method=Methods.GAP)

    if backend == Backend.FINITE_SPECTRAL:
        try:
            value = project(exact_limit_vector(bath, right_columns, omega))
            return BoundaryValue(value=value, epsilon=0.0, method=Methods.EXACT)
        except RegularizationRequired:
            if query.epsilon == 0:
                raise
            logger.debug('No exact limit at ω = %.6f, extrapolating in ε', omega)
    elif query.epsilon == 0:
        raise RegularizationRequired(diagnostics={'omega': omega, 'backend': backend})

    if backend == Backend.BLOCH_SUM:
        bands = resolve_bands(bath, bands)
        epsilon = base_epsilon or default_epsilon(bath, bands)
        scale = bands.span
    else:
        epsilon = base_epsilon or default_epsilon(bath)
        scale = diagonalize(bath).span

    if left_columns is not None:
        weights = spectral_weights(bath, left_columns, right_columns, backend, bands)
        return boundary_value(lambda eps: weights.evaluate(omega + 1j * eps), epsilon, scale, strict)
    return boundary_value(
        lambda eps: resolvent_columns(bath, right_columns, omega + 1j * eps, backend, bands),
        epsilon, scale, strict,
    )


def green_block(bath: BathGraph, rows, cols, query: ResolventQuery, bands=None, strict=True) -> np.ndarray:
    """Matrix of ⟨x|G_B(ω⁺)|x'⟩ for x in ``rows`` and x' in ``cols``."""
    for site in list(rows) + list(cols):
        bath.check_index(site)
    result = green_limit(
        bath, basis_vectors(cols, bath.n_sites), query,
        left=basis_vectors(rows, bath.n_sites), bands=bands, strict=strict,
    )
    return np.asarray(result.value)


def bath_green_element(bath: BathGraph, x, x2, query: ResolventQuery, bands=None) -> complex:
    return complex(green_block(bath, [x], [x2], query, bands)[0, 0])


def cross_green(chi_j: SiteState, chi_j2: SiteState, bath: BathGraph, query: ResolventQuery,
                bands=None, strict=True) -> complex:
    """⟨χ_j|G_B(ω⁺)|χ_j'⟩."""
    result = green_limit(bath, chi_j2, query, left=chi_j, bands=bands, strict=strict)
    return complex(np.asarray(result.value)[0, 0])


def self_energy(atom: GiantAtom, bath: BathGraph, query: ResolventQuery, bands=None,
                strict=True, base_epsilon=None) -> SelfEnergySample:
    """⟨χ|G_B(ω⁺)|χ⟩; consumers multiply by ḡ² themselves."""
    check_atom(atom, bath)
    chi = site_state(atom)
    result = green_limit(bath, chi, query, left=chi, bands=bands, strict=strict, base_epsilon=base_epsilon)
    return SelfEnergySample(
        omega=query.omega,
        value=complex(np.asarray(result.value)[0, 0]),
        epsilon=result.epsilon,
        method=result.method,
        converged=result.converged,
    )


def total_green(bath: BathGraph, atom: GiantAtom, z) -> TotalResolvent:
    """Structured single-atom resolvent at a complex (or real, off-spectrum) energy."""
    check_atom(atom, bath)
    z = complex(z)
    decomposition = diagonalize(bath)
    distance = float(np.min(np.abs(z - decomposition.eigenvalues)))
    if distance < gla_settings.POLE_DISTANCE:
        raise PoleProximity(diagnostics={'z': str(z), 'bath_pole_distance': distance})

    vectors = decomposition.eigenvectors
    bath_green = (vectors / (z - decomposition.eigenvalues)) @ vectors.conj().T
    chi = site_state(atom).dense(bath.n_sites)
    g_bar = atom.g_bar
    right = bath_green @ chi
    left = chi.conj() @ bath_green
    F = z - atom.omega0 - g_bar ** 2 * (chi.conj() @ right)
    if abs(F) < gla_settings.POLE_DISTANCE:
        raise PoleProximity(diagnostics={'z': str(z), 'F': [F.real, F.imag]})
    return TotalResolvent(
        z=z,
        bath_green=bath_green,
        psi=np.concatenate([[1.0], g_bar * right]),
        psi_left=np.concatenate([[1.0], g_bar * left]),
        F=complex(F),
    )
