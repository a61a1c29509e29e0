# apps/boundstates/models.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from apps.bath.models import BathGraph
from utils.constants import Classification


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    """
    ``profile[d]`` is the fraction of the weight d hops away from the
    reference shell (the lattice boundary, or the state's peak on a lattice
    without one).
    """
    localized: bool
    boundary_weight: float
    profile: np.ndarray
    inconclusive: bool = False
    size_change: Optional[float] = None

    def profile_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'shell': np.arange(len(self.profile)), 'weight': self.profile})


@dataclass(frozen=True, eq=False)
class BoundState:
    """
    Dressed state |Ψ⟩ = 𝒩(|e⟩ + |ψ_BS⟩) with ψ_BS = ḡ G_B(ω_BS⁺)|χ⟩ kept
    unnormalized. Quasi-bound candidates carry no photon amplitudes.
    """
    omega_bs: float
    photon_amplitudes: Optional[np.ndarray]
    classification: str
    residual: float = np.nan
    pole_residual: float = 0.0
    im_residual: float = 0.0
    flags: tuple = field(default_factory=tuple)

    @property
    def is_bound(self):
        return self.classification != Classification.QUASI_BOUND

    @property
    def normalization(self) -> float:
        if self.photon_amplitudes is None:
            return np.nan
        return float(1.0 / np.sqrt(1.0 + np.vdot(self.photon_amplitudes, self.photon_amplitudes).real))

    @property
    def atom_fraction(self) -> float:
        return self.normalization ** 2

    def state_vector(self) -> np.ndarray:
        """Normalized amplitudes on {|e⟩, sites}."""
        return self.normalization * np.concatenate([[1.0], self.photon_amplitudes])

    def to_frame(self, bath: BathGraph) -> pd.DataFrame:
        coordinates = bath.coordinates
        frame = pd.DataFrame({'site': np.arange(bath.n_sites)})
        for axis in range(coordinates.shape[1]):
            frame[f'x{axis + 1}'] = coordinates[:, axis]
        frame['re'] = self.photon_amplitudes.real
        frame['im'] = self.photon_amplitudes.imag
        return frame

    def header(self) -> dict:
        return {
            'omega_bs': self.omega_bs,
            'normalization': self.normalization,
            'atom_fraction': self.atom_fraction,
            'classification': self.classification,
            'residual': self.residual,
            'pole_residual': self.pole_residual,
            'im_residual': self.im_residual,
            'flags': list(self.flags),
        }


@dataclass(frozen=True, eq=False)
class VDS:
    """
    Bound eigenstate ψ_VDS of the χ-projected bath at ω₀ that couples to
    |χ⟩ through H_B. The phase of ψ_VDS is fixed so that
    ``coupling_overlap`` = ⟨χ|H_B|ψ_VDS⟩ is real and positive.

    ``family`` spans the whole H_{B_χ} eigenspace at ω₀ (ψ_VDS first); only
    ψ_VDS couples to the atom.
    """
    psi_vds: np.ndarray
    omega: float
    coupling_overlap: complex
    g_bar: float
    family: np.ndarray = None
    pinning_residuals: tuple = ()
    localization: Optional[LocalizationResult] = None

    @property
    def degeneracy(self) -> int:
        return 1 if self.family is None else self.family.shape[1]

    @property
    def degenerate(self) -> bool:
        return self.degeneracy > 1

    def eta_for(self, g_bar) -> complex:
        return complex(-g_bar / self.coupling_overlap)

    @property
    def eta(self) -> complex:
        return self.eta_for(self.g_bar)

    @property
    def theta(self) -> float:
        return float(np.arctan(abs(self.eta)))

    @property
    def phi(self) -> float:
        return float(np.angle(self.eta))

    def dressed_state(self, g_bar=None) -> np.ndarray:
        """cos θ |e⟩ + e^{iφ} sin θ |ψ_VDS⟩ on {|e⟩, sites}."""
        eta = self.eta if g_bar is None else self.eta_for(g_bar)
        theta = np.arctan(abs(eta))
        return np.concatenate([[np.cos(theta)], np.exp(1j * np.angle(eta)) * np.sin(theta) * self.psi_vds])

    def bound_state(self, omega0, residual=np.nan) -> BoundState:
        return BoundState(
            omega_bs=float(omega0),
            photon_amplitudes=self.eta * self.psi_vds,
            classification=Classification.VDS,
            residual=residual,
            flags=('degenerate',) if self.degenerate else (),
        )
