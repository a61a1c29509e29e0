# apps/dynamics/models.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd


def complex_pairs(matrix) -> list:
    """Nested [re, im] lists for JSON output."""
    matrix = np.asarray(matrix, dtype=complex)
    return np.stack([matrix.real, matrix.imag], axis=-1).tolist()


@dataclass(frozen=True, eq=False)
class RateMatrices:
    """
    Coherent couplings K, collective dissipation γ and the raw
    B_jj' = iḡ_jḡ_j'⟨χ_j|G_B(ω₀⁺)|χ_j'⟩, tied by K = -i(B - B†)/2 and
    γ = B + B†. ω₀ is kept apart from K.
    """
    K: np.ndarray
    gamma: np.ndarray
    B: np.ndarray
    omega0: float
    method: str = ''
    epsilon: float = 0.0
    converged: bool = True
    flags: tuple = field(default_factory=tuple)

    @property
    def n_atoms(self):
        return self.K.shape[0]

    @property
    def min_gamma_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gamma).min())

    @property
    def max_gamma_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gamma).max())

    def hermiticity_residual(self) -> float:
        return float(max(np.abs(self.K - self.K.conj().T).max(), np.abs(self.gamma - self.gamma.conj().T).max()))

    def reconstruction_residual(self) -> float:
        B_dagger = self.B.conj().T
        return float(max(
            np.abs(self.K + 0.5j * (self.B - B_dagger)).max(),
            np.abs(self.gamma - (self.B + B_dagger)).max(),
        ))

    @property
    def non_hermitian_couplings(self) -> np.ndarray:
        """K - iγ/2, the one-excitation generator in the frame rotating at ω₀."""
        return self.K - 0.5j * self.gamma

    def to_dict(self) -> dict:
        return {
            'omega0': self.omega0,
            'method': self.method,
            'epsilon': self.epsilon,
            'converged': self.converged,
            'flags': list(self.flags),
            'K': complex_pairs(self.K),
            'gamma': complex_pairs(self.gamma),
            'B': complex_pairs(self.B),
        }


@dataclass(frozen=True, eq=False)
class DFHReport:
    is_dfh: bool
    max_gamma_eigenvalue: float
    per_atom_bs_exists: list
    K_effective: Optional[np.ndarray]
    zero_interaction_pairs: list
    dfh_tol: float
    consistent: bool = True

    def to_dict(self, labels=None) -> dict:
        def name(j):
            return labels[j] if labels else j + 1

        return {
            'is_dfh': self.is_dfh,
            'max_gamma_eigenvalue': self.max_gamma_eigenvalue,
            'dfh_tol': self.dfh_tol,
            'per_atom_bs_exists': list(self.per_atom_bs_exists),
            'consistent': self.consistent,
            'K_effective': None if self.K_effective is None else complex_pairs(self.K_effective),
            'zero_interaction_pairs': [[name(j), name(j2)] for j, j2 in self.zero_interaction_pairs],
        }


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    """
    Emitter density matrices in the frame rotating at ``omega0``. Full
    states are kept only for small ensembles; observables always are.
    """
    times: np.ndarray
    populations: np.ndarray
    traces: np.ndarray
    min_eigenvalues: np.ndarray
    omega0: float
    states: Optional[np.ndarray] = None
    flags: tuple = field(default_factory=tuple)

    @property
    def frame(self):
        return {'frame': 'rotating', 'omega0': self.omega0}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'t': self.times})
        for j in range(self.populations.shape[1]):
            frame[f'population_{j + 1}'] = self.populations[:, j]
        frame['trace'] = self.traces
        frame['min_eig'] = self.min_eigenvalues
        return frame


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    """Amplitudes on {|e_1⟩..|e_Na⟩, sites} at each time."""
    times: np.ndarray
    amplitudes: np.ndarray
    n_atoms: int
    horizon: float
    flags: tuple = field(default_factory=tuple)

    @property
    def atom_amplitudes(self) -> np.ndarray:
        return self.amplitudes[:, :self.n_atoms]

    @property
    def site_amplitudes(self) -> np.ndarray:
        return self.amplitudes[:, self.n_atoms:]

    def excited_population(self, j=0) -> np.ndarray:
        return np.abs(self.amplitudes[:, j]) ** 2

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'t': self.times})
        for j in range(self.n_atoms):
            frame[f'population_{j + 1}'] = self.excited_population(j)
        frame['photon_weight'] = np.sum(np.abs(self.site_amplitudes) ** 2, axis=1)
        return frame
