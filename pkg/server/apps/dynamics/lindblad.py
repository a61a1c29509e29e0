# apps/dynamics/lindblad.py
"""
Master equation of the emitters after tracing out the bath,

    dρ/dt = -i[H, ρ] + Σ_jj' γ_jj' (σ_j'⁻ ρ σ_j⁺ - ½{σ_j⁺σ_j'⁻, ρ}),
    H = Σ_jj' K_jj' σ_j⁺σ_j'⁻,

in the frame rotating at ω₀. Basis states of the 2^N space are bit strings
with atom 0 as the most significant bit and |g⟩ = 0.
"""
import logging
from functools import lru_cache

import numpy as np
from scipy import integrate, sparse

from apps.dynamics.models import DensityTrajectory, RateMatrices
from utils.conf import gla_settings
from utils.exceptions import ConvergenceError, InvalidState, ResourceLimitError

logger = logging.getLogger(__name__)

MAX_ATOMS = 10
MAX_STORED_DIMENSION = 64
STATE_TOL = 1e-8
STEP_FACTOR = 0.01

_LOWERING = sparse.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))


@lru_cache(maxsize=16)
def lowering_operators(n_atoms) -> tuple:
    """σ_j⁻ for every atom as sparse 2^N × 2^N matrices."""
    operators = []
    for j in range(n_atoms):
        left = sparse.identity(2 ** j, format='csr')
        right = sparse.identity(2 ** (n_atoms - j - 1), format='csr')
        operators.append(sparse.kron(sparse.kron(left, _LOWERING), right, format='csr'))
    return tuple(operators)


def excitation_numbers(n_atoms) -> np.ndarray:
    """Diagonal of σ_j⁺σ_j⁻ for each atom, shape (N, 2^N)."""
    states = np.arange(2 ** n_atoms)
    return np.array([(states >> (n_atoms - 1 - j)) & 1 for j in range(n_atoms)], dtype=float)


def product_state(excited, n_atoms) -> np.ndarray:
    """|ψ⟩⟨ψ| for the product state with the listed atoms excited."""
    index = 0
    for j in excited:
        if not 0 <= j < n_atoms:
            raise InvalidState(f'Atom index {j} outside an ensemble of {n_atoms}.')
        index |= 1 << (n_atoms - 1 - j)
    rho = np.zeros((2 ** n_atoms, 2 ** n_atoms), dtype=complex)
    rho[index, index] = 1.0
    return rho


def validate_density_matrix(rho, dimension) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dimension, dimension):
        raise InvalidState(f'Density matrix must be {dimension}×{dimension}, got {rho.shape}.')
    hermiticity = float(np.abs(rho - rho.conj().T).max())
    trace = complex(np.trace(rho))
    minimum = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if hermiticity > STATE_TOL or abs(trace - 1) > STATE_TOL or minimum < -STATE_TOL:
        raise InvalidState(
            'Initial state is not a density matrix.',
            diagnostics={'hermiticity': hermiticity, 'trace': [trace.real, trace.imag], 'min_eig': minimum},
        )
    return rho


class LindbladGenerator:
    """Effective non-Hermitian Hamiltonian plus jump operators from the eigenbasis of γ."""

    def __init__(self, rates: RateMatrices):
        n_atoms = rates.n_atoms
        lowering = lowering_operators(n_atoms)
        raising = [op.conj().T.tocsr() for op in lowering]
        dimension = 2 ** n_atoms

        hamiltonian = sparse.csr_matrix((dimension, dimension), dtype=complex)
        for j in range(n_atoms):
            for j2 in range(n_atoms):
                if rates.K[j, j2] != 0:
                    hamiltonian = hamiltonian + rates.K[j, j2] * (raising[j] @ lowering[j2])

        gamma = 0.5 * (rates.gamma + rates.gamma.conj().T)
        rates_k, modes = np.linalg.eigh(gamma)
        self.jumps = []
        anticommutator = sparse.csr_matrix((dimension, dimension), dtype=complex)
        for rate, mode in zip(rates_k, modes.T):
            if rate == 0:
                continue
            jump = sparse.csr_matrix((dimension, dimension), dtype=complex)
            for j in range(n_atoms):
                jump = jump + np.conj(mode[j]) * lowering[j]
            self.jumps.append((float(rate), jump, jump.conj().T.tocsr()))
            anticommutator = anticommutator + rate * (jump.conj().T @ jump)

        self.hamiltonian = hamiltonian.tocsr()
        self.effective = (hamiltonian - 0.5j * anticommutator).tocsr()
        self.effective_dagger = self.effective.conj().T.tocsr()
        self.dimension = dimension
        self.rate_scale = max(
            float(np.abs(rates.K).max()),
            float(np.abs(rates.gamma).max()),
            float(np.ptp(np.linalg.eigvalsh(0.5 * (rates.K + rates.K.conj().T)))) if n_atoms > 1 else 0.0,
        )

    def __call__(self, t, y):
        rho = y.reshape(self.dimension, self.dimension)
        drho = -1j * (self.effective @ rho - (self.effective_dagger.T @ rho.T).T)
        for rate, jump, jump_dagger in self.jumps:
            drho += rate * (jump @ (jump_dagger.T @ rho.T).T)
        return drho.ravel()


def lindblad_evolve(rho0, rates: RateMatrices, omega0=None, t_grid=None) -> DensityTrajectory:
    """
    Integrate the master equation over ``t_grid`` (ascending, starting at
    the initial time). Returns populations, traces and minimum eigenvalues
    at every grid time.
    """
    n_atoms = rates.n_atoms
    if n_atoms > MAX_ATOMS:
        raise ResourceLimitError(diagnostics={'n_atoms': n_atoms, 'max_atoms': MAX_ATOMS})
    dimension = 2 ** n_atoms
    rho0 = validate_density_matrix(rho0, dimension)
    omega0 = rates.omega0 if omega0 is None else float(omega0)
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) <= 0):
        raise InvalidState('Time grid must be a strictly increasing 1D array.')

    flags = tuple(rates.flags)
    if rates.min_gamma_eigenvalue < -gla_settings.PSD_TOL and 'non_psd_gamma' not in flags:
        logger.warning('Integrating with a non-PSD γ (min eigenvalue %.3e)', rates.min_gamma_eigenvalue)
        flags += ('non_psd_gamma',)

    generator = LindbladGenerator(rates)
    if generator.rate_scale == 0 or times.size == 1:
        states = np.repeat(rho0[None, :, :], times.size, axis=0)
    else:
        max_step = STEP_FACTOR / generator.rate_scale
        solution = integrate.solve_ivp(
            generator, (times[0], times[-1]), rho0.ravel(), method='RK45', t_eval=times,
            max_step=max_step, rtol=1e-10, atol=1e-12,
        )
        if not solution.success:
            raise ConvergenceError(f'Lindblad integration failed: {solution.message}')
        states = solution.y.T.reshape(times.size, dimension, dimension)

    numbers = excitation_numbers(n_atoms)
    diagonals = np.real(np.diagonal(states, axis1=1, axis2=2))
    populations = diagonals @ numbers.T
    traces = np.real(np.trace(states, axis1=1, axis2=2))
    hermitian = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
    min_eigenvalues = np.array([np.linalg.eigvalsh(rho).min() for rho in hermitian])

    if 'non_psd_gamma' not in flags and min_eigenvalues.min() < -STATE_TOL:
        logger.warning('ρ(t) lost positivity: min eigenvalue %.3e', min_eigenvalues.min())
        flags += ('positivity',)
    logger.debug('Lindblad run: N = %d, %d times, trace drift %.3e', n_atoms, times.size,
                 float(np.abs(traces - 1).max()))
    return DensityTrajectory(
        times=times,
        populations=populations,
        traces=traces,
        min_eigenvalues=min_eigenvalues,
        omega0=omega0,
        states=states if dimension <= MAX_STORED_DIMENSION else None,
        flags=flags,
    )
