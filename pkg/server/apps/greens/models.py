# apps/greens/models.py
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd
from scipy import integrate

from utils.constants import Backend
from utils.exceptions import InvalidArgument


@dataclass(frozen=True)
class ResolventQuery:
    """
    Energy at which a resolvent is evaluated, z = ω + iε.

    ``epsilon=None`` asks for the ε → 0⁺ boundary value (exact in gaps and for
    admissible in-band vectors, Richardson-extrapolated otherwise); a positive
    value evaluates at that broadening as is; ``0`` demands the real-axis
    value and fails inside a band unless the exact limit exists.
    """
    omega: float
    epsilon: Optional[float] = None
    backend: str = Backend.FINITE_SPECTRAL

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon < 0:
            raise InvalidArgument(f'Broadening must be non-negative, got {self.epsilon}.')
        if self.backend not in dict(Backend.CHOICES):
            raise InvalidArgument(f"Unknown resolvent backend '{self.backend}'.")
        object.__setattr__(self, 'omega', float(self.omega))

    @property
    def z(self) -> complex:
        return complex(self.omega, self.epsilon or 0.0)

    @property
    def is_limit(self):
        return self.epsilon is None

    def with_epsilon(self, epsilon) -> 'ResolventQuery':
        return replace(self, epsilon=epsilon)

    def at(self, omega) -> 'ResolventQuery':
        return replace(self, omega=omega)


@dataclass(frozen=True)
class SelfEnergySample:
    """⟨χ|G_B(ω⁺)|χ⟩ without the ḡ² factor."""
    omega: float
    value: complex
    epsilon: float = 0.0
    method: str = ''
    converged: bool = True

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag


@dataclass(frozen=True, eq=False)
class LDOSCurve:
    omega_grid: np.ndarray
    density: np.ndarray
    kernel_width: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'omega_grid', np.asarray(self.omega_grid, dtype=float))
        object.__setattr__(self, 'density', np.asarray(self.density))

    @property
    def total_weight(self) -> float:
        return float(np.real(integrate.trapezoid(self.density, self.omega_grid)))

    def at(self, omega):
        return np.interp(omega, self.omega_grid, self.density.real) + (
            1j * np.interp(omega, self.omega_grid, self.density.imag) if np.iscomplexobj(self.density) else 0.0
        )

    def to_frame(self) -> pd.DataFrame:
        if np.iscomplexobj(self.density):
            return pd.DataFrame({'omega': self.omega_grid, 're': self.density.real, 'im': self.density.imag})
        return pd.DataFrame({'omega': self.omega_grid, 'rho': self.density})


@dataclass(frozen=True, eq=False)
class TotalResolvent:
    """
    Ingredients of the single-atom resolvent G(z) = (z - H)⁻¹ in the basis
    {|e⟩, sites}: G(z) = G_B(z) ⊕ 0 + |Ψ(z)⟩⟨Ψ̃(z)| / F(z) with
    |Ψ(z)⟩ = |e⟩ + ḡ G_B(z)|χ⟩, ⟨Ψ̃(z)| = ⟨e| + ḡ ⟨χ|G_B(z) and
    F(z) = z - ω₀ - ḡ²⟨χ|G_B(z)|χ⟩.
    """
    z: complex
    bath_green: np.ndarray
    psi: np.ndarray
    psi_left: np.ndarray
    F: complex

    def assemble(self) -> np.ndarray:
        n = self.bath_green.shape[0]
        matrix = np.zeros((n + 1, n + 1), dtype=complex)
        matrix[1:, 1:] = self.bath_green
        matrix += np.outer(self.psi, self.psi_left) / self.F
        return matrix
