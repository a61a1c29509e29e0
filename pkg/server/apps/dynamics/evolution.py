# apps/dynamics/evolution.py
"""Exact single-excitation evolution of atoms plus the finite lattice."""
import logging

import numpy as np
from scipy import linalg

from apps.bath.models import BathGraph
from apps.bath.shells import max_hopping_speed, travel_distance
from apps.dynamics.models import AmplitudeTrajectory
from apps.emitters.hamiltonians import as_ensemble, total_hamiltonian_1ex
from utils.conf import gla_settings
from utils.exceptions import InvalidState, ResourceLimitError

logger = logging.getLogger(__name__)


def _eigensystem(bath: BathGraph, ensemble):
    n = bath.n_sites + len(ensemble)
    limit = gla_settings.DENSE_LIMIT
    if n > limit:
        raise ResourceLimitError(diagnostics={'dimension': n, 'dense_limit': limit})
    return linalg.eigh(total_hamiltonian_1ex(bath, ensemble))


def _initial_state(initial, n_atoms, dimension) -> np.ndarray:
    if initial is None:
        state = np.zeros(dimension, dtype=complex)
        state[0] = 1.0
        return state
    state = np.asarray(initial, dtype=complex).ravel()
    if state.size != dimension:
        raise InvalidState(f'Initial amplitudes must have {dimension} entries ({n_atoms} atoms first).')
    norm = np.linalg.norm(state)
    if norm == 0:
        raise InvalidState('Initial amplitudes vanish.')
    return state / norm


def reflection_horizon(bath: BathGraph, ensemble) -> float:
    """Earliest time a photon emitted at the coupling points can come back from the lattice edge."""
    sources = np.unique(np.concatenate([atom.sites for atom in ensemble]))
    speed = max_hopping_speed(bath)
    if speed == 0:
        return np.inf
    return travel_distance(bath, sources) / speed


def exact_1ex_evolve(bath: BathGraph, ensemble, t_grid, initial=None) -> AmplitudeTrajectory:
    """
    |Ψ(t)⟩ = exp(-iHt)|Ψ(0)⟩ from the eigenpairs of the full one-excitation
    Hamiltonian. The default initial state excites the first atom.
    """
    ensemble = as_ensemble(ensemble, bath)
    n_atoms = len(ensemble)
    eigenvalues, vectors = _eigensystem(bath, ensemble)
    state = _initial_state(initial, n_atoms, vectors.shape[0])
    times = np.atleast_1d(np.asarray(t_grid, dtype=float))

    flags = ()
    horizon = reflection_horizon(bath, ensemble)
    if times.max() > horizon:
        logger.warning('t_max = %.3g exceeds the reflection time %.3g; boundary echoes may return',
                       times.max(), horizon)
        flags = ('reflection',)

    coefficients = vectors.conj().T @ state
    phases = np.exp(-1j * np.outer(times, eigenvalues))
    amplitudes = (phases * coefficients) @ vectors.T
    return AmplitudeTrajectory(times=times, amplitudes=amplitudes, n_atoms=n_atoms, horizon=horizon, flags=flags)


def eigenspace_weights(bath: BathGraph, ensemble, atom=0, initial=None, e_tol=None):
    """
    (energies, w) with w_λ = ⟨e_atom|P_λ|Ψ(0)⟩ for every distinct eigenvalue λ
    of the full Hamiltonian, eigenvalues closer than ``e_tol`` merged.
    """
    ensemble = as_ensemble(ensemble, bath)
    eigenvalues, vectors = _eigensystem(bath, ensemble)
    state = _initial_state(initial, len(ensemble), vectors.shape[0])
    e_tol = gla_settings.E_TOL * bath.hopping_scale if e_tol is None else e_tol

    contributions = vectors[atom, :] * (vectors.conj().T @ state)
    breaks = np.flatnonzero(np.diff(eigenvalues) > e_tol) + 1
    groups = np.split(np.arange(eigenvalues.size), breaks)
    energies = np.array([eigenvalues[group].mean() for group in groups])
    weights = np.array([contributions[group].sum() for group in groups])
    return energies, weights


def stationary_population(bath: BathGraph, ensemble, atom=0, initial=None) -> float:
    """Infinite-time average of |⟨e_atom|Ψ(t)⟩|², Σ_λ |⟨e|P_λ|Ψ(0)⟩|²."""
    _, weights = eigenspace_weights(bath, ensemble, atom, initial)
    return float(np.sum(np.abs(weights) ** 2))
