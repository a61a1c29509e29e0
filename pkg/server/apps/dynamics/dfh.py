# apps/dynamics/dfh.py
"""
Decoherence-free Hamiltonians.

The ensemble evolves without dissipation exactly when γ vanishes, and γ
vanishes exactly when every atom seeds its own weak-coupling bound state.
Both sides are computed independently and compared; the coherent couplings
then follow from the bound states alone, K_jj' = ḡ_j⟨χ_j|ψ_BS^{j'}⟩.
"""
import logging

import numpy as np

from apps.bath.models import BathGraph
from apps.bath.shells import max_hopping_speed
from apps.boundstates.vds import vds_search
from apps.boundstates.wavefunctions import weak_coupling_bs
from apps.dynamics.models import DFHReport, RateMatrices
from apps.emitters.hamiltonians import as_ensemble, site_state
from apps.greens.models import ResolventQuery
from apps.greens.resolvents import in_gap
from utils.conf import gla_settings
from utils.exceptions import NotDecoherenceFree

logger = logging.getLogger(__name__)

RECIPROCITY_TOL = 1e-8
CROSS_CHECK_TOL = 1e-6


def dfh_tolerance(ensemble, bath: BathGraph, query: ResolventQuery = None, bands=None) -> float:
    """Absolute in a gap; a fraction of the free-waveguide rate 2ḡ²/v inside a band."""
    query = query or ResolventQuery(ensemble.omega0)
    J = bath.hopping_scale
    if in_gap(bath, ensemble.omega0, query.backend, bands):
        return gla_settings.DFH_TOL_GAP * J
    speed = max_hopping_speed(bath) or J
    return gla_settings.DFH_TOL_FACTOR * 2 * float(np.max(ensemble.g_bars)) ** 2 / speed


def zero_interaction_pairs(ensemble, bound_states) -> list:
    """Pairs where one atom's bound state vanishes on every coupling point of the other."""
    pairs = []
    for j, psi in enumerate(bound_states):
        if psi is None or psi.photon_amplitudes is None:
            continue
        amplitudes = np.abs(psi.photon_amplitudes)
        tol = gla_settings.C_TOL * max(float(amplitudes.max()), 1e-300)
        for j2, other in enumerate(ensemble):
            if j2 == j:
                continue
            pair = (min(j, j2), max(j, j2))
            if pair not in pairs and np.all(amplitudes[other.sites] <= tol):
                pairs.append(pair)
    return sorted(pairs)


def localized_representative(atom, bath: BathGraph, bound_state):
    """
    On a finite lattice with modes resonant at ω₀ the bound state is fixed only
    up to those modes; the ε → 0 limit drops them. When the atom has a VDS the
    localized member η ψ_VDS is returned instead, as on the infinite lattice.
    """
    if bound_state is None or bath.n_sites > gla_settings.DENSE_LIMIT:
        return bound_state
    found = vds_search(atom, bath)
    if not found:
        return bound_state
    return found[0].bound_state(atom.omega0, residual=bound_state.residual)


def heff_from_bs(ensemble, bound_states, rates: RateMatrices = None) -> np.ndarray:
    ensemble = as_ensemble(ensemble)
    missing = [label for label, bound_state in zip(ensemble.labels, bound_states)
               if bound_state is None or bound_state.photon_amplitudes is None]
    if missing:
        raise NotDecoherenceFree(
            f'No weak-coupling bound state for {", ".join(missing)}.',
            diagnostics={'missing': missing},
        )
    n_sites = len(bound_states[0].photon_amplitudes)
    chis = np.column_stack([site_state(atom).dense(n_sites) for atom in ensemble])
    psis = np.column_stack([bound_state.photon_amplitudes for bound_state in bound_states])
    K = ensemble.g_bars[:, None] * (chis.conj().T @ psis)

    scale = max(float(np.abs(K).max()), float(np.max(ensemble.g_bars)) ** 2, 1e-300)
    reciprocity = float(np.abs(K - K.conj().T).max())
    if reciprocity > RECIPROCITY_TOL * scale:
        logger.warning('⟨χ_j|ψ_BS^j\'⟩ breaks reciprocity by %.3e', reciprocity)
    if rates is not None:
        mismatch = float(np.abs(K - rates.K).max())
        if mismatch > CROSS_CHECK_TOL * scale:
            logger.warning('Bound-state couplings differ from the Green-route K by %.3e', mismatch)
    return 0.5 * (K + K.conj().T)


def dfh_check(rates: RateMatrices, ensemble, bath: BathGraph, query: ResolventQuery = None,
              bands=None) -> DFHReport:
    ensemble = as_ensemble(ensemble, bath)
    tol = dfh_tolerance(ensemble, bath, query, bands)
    max_eigenvalue = rates.max_gamma_eigenvalue
    is_dfh = max_eigenvalue <= tol

    bound_states = [weak_coupling_bs(atom, bath, query, bands) for atom in ensemble]
    exists = [bound_state is not None for bound_state in bound_states]
    consistent = is_dfh == all(exists)
    if not consistent:
        logger.warning(
            'DFH criteria disagree: max eig γ = %.3e (tol %.3e) but bound states exist for %s',
            max_eigenvalue, tol, exists,
        )

    K_effective = heff_from_bs(ensemble, bound_states, rates) if all(exists) else None
    localized = [localized_representative(atom, bath, bound_state)
                 for atom, bound_state in zip(ensemble, bound_states)]
    pairs = zero_interaction_pairs(ensemble, localized)
    logger.info('DFH check at ω₀ = %.6f: is_dfh=%s, zero-interaction pairs %s', rates.omega0, is_dfh, pairs)
    return DFHReport(
        is_dfh=is_dfh,
        max_gamma_eigenvalue=max_eigenvalue,
        per_atom_bs_exists=exists,
        K_effective=K_effective,
        zero_interaction_pairs=pairs,
        dfh_tol=tol,
        consistent=consistent,
    )
