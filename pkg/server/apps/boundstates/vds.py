# apps/boundstates/vds.py
"""
Vacancy-like dressed states.

A bound eigenstate ψ of the bath seen through the χ-projection,
P H_B P |ψ⟩ = ω₀|ψ⟩ with P = 1 - |χ⟩⟨χ|, satisfies
H_B|ψ⟩ = ω₀|ψ⟩ + c|χ⟩ with c = ⟨χ|H_B|ψ⟩. The dressed state
|e⟩ + η|ψ⟩ with η = -ḡ/c is then an eigenstate of the full Hamiltonian at
ω₀ for every coupling strength.
"""
import logging
from dataclasses import replace

import numpy as np
from scipy import linalg

from apps.bath.models import BathGraph
from apps.bath.shells import outer_region
from apps.bath.spectra import hamiltonian_matrix
from apps.boundstates.equations import RESIDUAL_TOL, state_residual
from apps.boundstates.localization import enlarged_retest, localization_check
from apps.boundstates.models import VDS
from apps.emitters.hamiltonians import chi_frame, site_state
from apps.emitters.models import ChiFrame, GiantAtom
from utils.conf import gla_settings
from utils.exceptions import ResourceLimitError

logger = logging.getLogger(__name__)


def projected_bath(atom: GiantAtom, bath: BathGraph, frame: ChiFrame = None):
    """H_{B_χ} on the orthogonal complement of |χ⟩, in χ-frame coordinates (sparse)."""
    frame = frame or chi_frame(atom, bath)
    return frame.transformed_bath[1:, 1:]


def _minimise_outer_weight(psi, dark, outer):
    if dark.shape[1] == 0 or not outer.any():
        return psi
    correction, *_ = np.linalg.lstsq(dark[outer], -psi[outer], rcond=None)
    psi = psi + dark @ correction
    return psi / np.linalg.norm(psi)

def _hermitian_dense(matrix):
    dense = matrix.toarray()
    if np.iscomplexobj(dense) and not np.any(dense.imag):
        return dense.real
    return dense


def _coupled_state(atom: GiantAtom, bath: BathGraph, shells):
    """
    The H_{B_χ} eigenvector at ω₀ that carries the whole coupling to |χ⟩,
    with dark directions mixed in to minimise the outer weight. Returns
    ``(psi, dark, eigenvalue)`` in site coordinates, or None.
    """
    limit = gla_settings.DENSE_LIMIT
    if bath.n_sites > limit:
        raise ResourceLimitError(diagnostics={'n_sites': bath.n_sites, 'dense_limit': limit})
    J = bath.hopping_scale
    omega0 = atom.omega0
    e_tol = gla_settings.E_TOL * J

    frame = chi_frame(atom, bath)
    projected = _hermitian_dense(projected_bath(atom, bath, frame))
    eigenvalues, vectors = linalg.eigh(projected, subset_by_value=(omega0 - e_tol, omega0 + e_tol))
    if eigenvalues.size == 0:
        logger.debug('No H_Bχ eigenvalue within %.1e of ω₀ = %.6f', e_tol, omega0)
        return None

    coupling_row = frame.transformed_bath[0, 1:].toarray().ravel()
    couplings = coupling_row @ vectors
    strength = float(np.linalg.norm(couplings))
    if strength <= gla_settings.C_TOL * J:
        logger.debug('%d H_Bχ eigenstate(s) at ω₀ all decouple from |χ⟩', eigenvalues.size)
        return None

    def to_sites(columns):
        padded = np.vstack([np.zeros((1, columns.shape[1]), dtype=complex), columns])
        return np.asarray(frame.basis @ padded)

    # The conj(c) combination carries the whole coupling, with c real and positive.
    coupled = to_sites((vectors @ np.conj(couplings) / strength)[:, None])[:, 0]
    dark = to_sites(vectors @ linalg.null_space(couplings[None, :]))
    psi = _minimise_outer_weight(coupled, dark, outer_region(bath, atom.sites, depth=shells))
    eigenvalue = float(eigenvalues[np.argmin(np.abs(eigenvalues - omega0))])
    return psi, dark, eigenvalue


def vds_search(atom: GiantAtom, bath: BathGraph, localization_tol=None, shells=1, pinning=None,
               resize=True) -> list:
    """
    The coupled VDS of ``atom`` at its bare frequency, as a list holding
    zero or one VDS. A degenerate H_{B_χ} eigenspace at ω₀ is reported
    through ``VDS.family``.

    With ``resize`` the candidate is solved again on a 1.5× larger lattice
    and must keep its weight on the original sites; extended standing waves
    that happen to vanish on the outer shell fail there.
    """
    found = _coupled_state(atom, bath, shells)
    if found is None:
        return []
    psi, dark, eigenvalue = found
    J = bath.hopping_scale
    omega0 = atom.omega0

    def solve_larger(larger, site_map):
        counterpart = _coupled_state(atom.relocated(site_map), larger, shells)
        return None if counterpart is None else counterpart[0]

    resized = enlarged_retest(bath, solve_larger) if resize else None
    localization = localization_check(psi, bath, shells, localization_tol, resized=resized)
    if not localization.localized:
        logger.debug('VDS candidate at ω₀ = %.6f is not bound (outer weight %.3e, size change %s)',
                     omega0, localization.boundary_weight, localization.size_change)
        return []

    h_bath = hamiltonian_matrix(bath, as_sparse=True)
    chi = site_state(atom).dense(bath.n_sites)
    coupling = complex(np.vdot(chi, h_bath @ psi))
    family, _ = np.linalg.qr(np.column_stack([psi, dark]))
    family[:, 0] = psi
    vds = VDS(
        psi_vds=psi,
        omega=eigenvalue,
        coupling_overlap=coupling,
        g_bar=atom.g_bar,
        family=family,
        localization=localization,
    )

    residuals = []
    for g in (pinning or gla_settings.PINNING_COUPLINGS):
        trial = atom.with_strength(g * J)
        residuals.append(state_residual(bath, trial, omega0, vds.dressed_state(trial.g_bar)) / J)
    if max(residuals) > RESIDUAL_TOL:
        logger.warning('VDS at ω₀ = %.6f is not pinned: residuals %s', omega0, residuals)
    if vds.degenerate:
        logger.info('H_Bχ eigenspace at ω₀ = %.6f is %d-fold degenerate', omega0, vds.degeneracy)
    return [replace(vds, pinning_residuals=tuple(residuals))]
