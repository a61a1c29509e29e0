# apps/emitters/hamiltonians.py
import logging

import numpy as np
from scipy import sparse

from apps.bath.models import BathGraph
from apps.bath.spectra import hamiltonian_matrix
from apps.emitters.models import ChiFrame, EmitterEnsemble, GiantAtom, SiteState
from utils.exceptions import SiteIndexError

logger = logging.getLogger(__name__)

GRAM_SCHMIDT_TOL = 1e-10


def site_state(atom: GiantAtom) -> SiteState:
    return SiteState(sites=atom.sites, amplitudes=atom.alpha)


def effective_strength(atom: GiantAtom) -> float:
    return atom.g_bar


def as_ensemble(atoms, bath: BathGraph = None) -> EmitterEnsemble:
    if isinstance(atoms, EmitterEnsemble):
        if bath is not None and atoms.n_sites != bath.n_sites:
            return EmitterEnsemble(atoms.atoms, n_sites=bath.n_sites)
        return atoms
    if isinstance(atoms, GiantAtom):
        atoms = (atoms,)
    return EmitterEnsemble(tuple(atoms), n_sites=bath.n_sites if bath is not None else None)


def check_atom(atom: GiantAtom, bath: BathGraph):
    if atom.sites.max() >= bath.n_sites:
        raise SiteIndexError(
            f'Atom couples to site {atom.sites.max()} outside a bath of {bath.n_sites} sites.'
        )


def _complete_basis(chi: SiteState):
    """Gram–Schmidt of the coupling-point unit vectors against χ, in coupling order."""
    n_points = len(chi.sites)
    frame = [np.asarray(chi.amplitudes)]
    for position in range(n_points):
        vector = np.zeros(n_points, dtype=complex)
        vector[position] = 1.0
        for basis_vector in frame:
            vector -= np.vdot(basis_vector, vector) * basis_vector
        norm = np.linalg.norm(vector)
        if norm > GRAM_SCHMIDT_TOL:
            frame.append(vector / norm)
        if len(frame) == n_points:
            break
    return frame[1:]


def chi_frame(atom: GiantAtom, bath: BathGraph) -> ChiFrame:
    check_atom(atom, bath)
    chi = site_state(atom)
    chi_perp = tuple(
        SiteState(sites=chi.sites, amplitudes=vector) for vector in _complete_basis(chi)
    )
    n = bath.n_sites
    other_sites = np.setdiff1d(np.arange(n), chi.sites)
    n_points = len(chi.sites)

    rows, cols, values = [], [], []
    for column, state in enumerate((chi,) + chi_perp):
        rows.append(state.sites)
        cols.append(np.full(n_points, column))
        values.append(state.amplitudes)
    rows.append(other_sites)
    cols.append(np.arange(n_points, n))
    values.append(np.ones(len(other_sites), dtype=complex))
    basis = sparse.csc_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    h_bath = hamiltonian_matrix(bath, as_sparse=True)
    transformed = (basis.conj().T @ h_bath @ basis).tocsr()
    transformed.eliminate_zeros()
    return ChiFrame(
        chi=chi,
        chi_perp=chi_perp,
        basis=basis,
        transformed_bath=transformed,
        other_sites=other_sites,
    )


def total_hamiltonian_1ex(bath: BathGraph, ensemble, as_sparse=False):
    """
    One-excitation Hamiltonian on {|e_1⟩, ..., |e_Na⟩} followed by the bath
    sites: H|e_j⟩ = ω₀_j|e_j⟩ + Σ_ℓ g_jℓ|x_jℓ⟩.
    """
    ensemble = as_ensemble(ensemble, bath)
    n_atoms = len(ensemble)
    n = bath.n_sites + n_atoms

    h_bath = hamiltonian_matrix(bath, as_sparse=True).tocoo()
    rows = [h_bath.row + n_atoms, np.arange(n_atoms)]
    cols = [h_bath.col + n_atoms, np.arange(n_atoms)]
    values = [h_bath.data.astype(complex), np.array([atom.omega0 for atom in ensemble], dtype=complex)]
    for j, atom in enumerate(ensemble):
        sites = atom.sites + n_atoms
        strengths = atom.strengths
        rows += [sites, np.full(len(sites), j)]
        cols += [np.full(len(sites), j), sites]
        values += [strengths, np.conj(strengths)]

    matrix = sparse.coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    if as_sparse:
        return matrix
    return matrix.toarray()
