# apps/boundstates/wavefunctions.py
import logging
from dataclasses import replace

import numpy as np

from apps.bath.models import BathGraph
from apps.boundstates.equations import RESIDUAL_TOL, pole_sample, sample_tolerance, state_residual
from apps.boundstates.models import BoundState
from apps.emitters.hamiltonians import site_state
from apps.emitters.models import GiantAtom
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import green_limit, in_gap
from utils.conf import gla_settings
from utils.constants import Backend, Classification
from utils.exceptions import RegularizationRequired, StaleRoot

logger = logging.getLogger(__name__)


def _vector_query(query: ResolventQuery) -> ResolventQuery:
    # Photon amplitudes live on the finite lattice: no Bloch sum over every
    # site, and no Richardson extrapolation of whole vectors.
    if query.backend == Backend.ANALYTIC_CHAIN:
        return query
    query = ResolventQuery(query.omega, query.epsilon, Backend.FINITE_SPECTRAL)
    return query.with_epsilon(0.0) if query.is_limit else query


def photon_amplitudes(atom: GiantAtom, bath: BathGraph, omega, query: ResolventQuery = None) -> np.ndarray:
    """ψ_BS = ḡ G_B(ω⁺)|χ⟩ = Σ_ℓ g_ℓ G_B(ω⁺)|x_ℓ⟩."""
    query = ResolventQuery(omega) if query is None else query.at(omega)
    result = green_limit(bath, site_state(atom), _vector_query(query))
    return atom.g_bar * np.asarray(result.value)[:, 0]


def _checked(bound_state: BoundState) -> BoundState:
    if bound_state.residual > RESIDUAL_TOL and bound_state.classification != Classification.WEAK_COUPLING:
        logger.warning(
            'Bound state at ω = %.12f misses the eigenvalue equation by %.3e',
            bound_state.omega_bs, bound_state.residual,
        )
        return replace(bound_state, flags=bound_state.flags + ('residual',))
    return bound_state


def bs_wavefunction(atom: GiantAtom, bath: BathGraph, omega_bs, query: ResolventQuery = None,
                    classification=None, bands=None) -> BoundState:
    """Dressed bound state at a certified root ω_BS of the pole function."""
    query = ResolventQuery(omega_bs) if query is None else query.at(omega_bs)
    J = bath.hopping_scale
    F, sample = pole_sample(atom, bath, omega_bs, query, bands)
    if abs(F) > gla_settings.F_TOL * J:
        raise StaleRoot(
            f'F({omega_bs}) = {F} is not a root.',
            diagnostics={'omega_bs': omega_bs, 'F': [np.real(F), np.imag(F)]},
        )
    if classification is None:
        classification = (Classification.IN_GAP if in_gap(bath, omega_bs, query.backend, bands)
                          else Classification.IN_BAND)

    psi = photon_amplitudes(atom, bath, omega_bs, query)
    bound_state = BoundState(omega_bs=float(omega_bs), photon_amplitudes=psi, classification=classification,
                             pole_residual=abs(F), im_residual=abs(sample.imag))
    residual = state_residual(bath, atom, omega_bs, bound_state.state_vector()) / J
    return _checked(replace(bound_state, residual=residual))


def weak_coupling_bs(atom: GiantAtom, bath: BathGraph, query: ResolventQuery = None, bands=None):
    """
    Bound state to lowest order in ḡ: ω_BS = ω₀, present iff
    Im⟨χ|G_B(ω₀⁺)|χ⟩ vanishes.
    """
    J = bath.hopping_scale
    flags = ()
    if atom.g_bar > gla_settings.WEAK_COUPLING_THRESHOLD * J:
        logger.warning(
            'ḡ = %.4g exceeds the weak-coupling threshold %.4g; result is only perturbatively valid',
            atom.g_bar, gla_settings.WEAK_COUPLING_THRESHOLD * J,
        )
        flags = ('perturbative_validity',)

    omega0 = atom.omega0
    query = ResolventQuery(omega0) if query is None else query.at(omega0)
    F, sample = pole_sample(atom, bath, omega0, query, bands)
    if abs(sample.imag) > sample_tolerance(sample):
        return None
    try:
        psi = photon_amplitudes(atom, bath, omega0, query)
    except RegularizationRequired as exc:
        logger.info('Im Σ(ω₀) vanishes but the ε = 0 amplitudes are not localized: %s', exc.diagnostics)
        return None

    bound_state = BoundState(omega_bs=omega0, photon_amplitudes=psi, classification=Classification.WEAK_COUPLING,
                             pole_residual=abs(F), im_residual=abs(sample.imag), flags=flags)
    residual = state_residual(bath, atom, omega0, bound_state.state_vector()) / J
    return replace(bound_state, residual=residual)
